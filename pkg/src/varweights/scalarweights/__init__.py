"""Scalar weight constants, reverse Hoelder checks and grid operators."""
from .constants import (
    KINDS,
    CubeReport,
    KindError,
    NumericError,
    RefinementSweep,
    a1_cube_value,
    ainfty_cube_value,
    ap_cube_value,
    apinfty_cube_value,
    apinfty_star_cube_value,
    apvar_cube_value,
    classify_growth,
    cube_values,
    dagger_cube_value,
    family_constant,
    power_map,
    refinement_sweep,
)
from .metrics import LwFactor, bmo_seminorm, doubling_check, dual_value, lw_factor, q0_cube
from .operators import (
    cz_stopping_cubes,
    dyadic_maximal,
    hl_maximal,
    minimal_operator,
    minimal_ratio_report,
)
from .reverse_holder import (
    RHParameters,
    classical_rh_verify,
    default_tau,
    max_empirical_rh,
    rw_exponent,
    verify_reverse_holder,
)

__all__ = [
    "KINDS", "CubeReport", "KindError", "NumericError", "RefinementSweep",
    "a1_cube_value", "ainfty_cube_value", "ap_cube_value", "apinfty_cube_value",
    "apinfty_star_cube_value", "apvar_cube_value", "classify_growth", "cube_values",
    "dagger_cube_value", "family_constant", "power_map", "refinement_sweep",
    "LwFactor", "bmo_seminorm", "doubling_check", "dual_value", "lw_factor", "q0_cube",
    "cz_stopping_cubes", "dyadic_maximal", "hl_maximal", "minimal_operator",
    "minimal_ratio_report", "RHParameters", "classical_rh_verify", "default_tau",
    "max_empirical_rh", "rw_exponent", "verify_reverse_holder",
]
