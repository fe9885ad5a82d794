"""scikit-learn style wrappers over the functional core.

``X`` is a sampled weight (``SampledField`` or ``MatrixField``); the exponent
profile and cube family are hyperparameters or fitted from the weight's lattice.
"""
from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .dims import DEFAULT_LAMBDAS, default_base_cubes, estimate_dimensions
from .exponents import ExponentProfile, constant_profile
from .lattice import SampledField, dyadic_family
from .matrixweights import MatrixField, reducing_operator
from .scalarweights import family_constant


def _profile(profile: Optional[ExponentProfile], lattice) -> ExponentProfile:
    if profile is None:
        return constant_profile(lattice, 2.0)
    if profile.lattice != lattice:
        raise ValueError("exponent profile lives on a different lattice than the weight")
    return profile


class WeightConstant(BaseEstimator, TransformerMixin):
    """Family estimate of one scalar weight constant.

    After ``fit``: ``report_``, ``estimate_``, ``argmax_cube_``.  ``transform``
    returns the per-cube values of another weight on the fitted family.
    """

    def __init__(self, kind="apinfty", profile=None, j_min=0, j_max=6, translates=False,
                 p=None, dagger_sign=1):
        self.kind = kind
        self.profile = profile
        self.j_min = j_min
        self.j_max = j_max
        self.translates = translates
        self.p = p
        self.dagger_sign = dagger_sign

    def _compute(self, w: SampledField):
        return family_constant(self.kind, w, self.profile_, self.family_, p=self.p,
                               dagger_sign=self.dagger_sign)

    def fit(self, X: SampledField, y=None):
        self.profile_ = _profile(self.profile, X.lattice)
        self.family_ = dyadic_family(X.lattice, self.j_min, self.j_max, self.translates)
        self.report_ = self._compute(X)
        self.estimate_ = self.report_.estimate
        self.argmax_cube_ = self.report_.argmax_cube
        return self

    def transform(self, X: SampledField) -> np.ndarray:
        check_is_fitted(self, "report_")
        return self._compute(X).values[:, None]


class ReducingOperators(BaseEstimator, TransformerMixin):
    """Reducing operators ``A_Q`` of a matrix weight on every cube of a family.

    ``transform(Z)`` maps directions ``(k, m)`` to ``|A_Q z|`` with shape
    ``(k, n_cubes)``.
    """

    def __init__(self, profile=None, j_min=0, j_max=3, num_directions=None):
        self.profile = profile
        self.j_min = j_min
        self.j_max = j_max
        self.num_directions = num_directions

    def fit(self, X: MatrixField, y=None):
        self.profile_ = _profile(self.profile, X.lattice)
        self.cubes_ = list(dyadic_family(X.lattice, self.j_min, self.j_max))
        self.operators_ = [reducing_operator(X, self.profile_, c, self.num_directions)
                           for c in self.cubes_]
        self.matrices_ = np.stack([r.matrix for r in self.operators_])
        self.fit_ratios_ = np.array([r.fit_ratio for r in self.operators_])
        return self

    def transform(self, Z) -> np.ndarray:
        check_is_fitted(self, "matrices_")
        Z = check_array(Z)
        if Z.shape[1] != self.matrices_.shape[-1]:
            raise ValueError(f"directions must have {self.matrices_.shape[-1]} columns")
        return np.linalg.norm(np.einsum("cij,kj->kci", self.matrices_, Z), axis=-1)


class DimensionEstimator(BaseEstimator):
    """Lower and upper dimensions of a matrix weight from dilation slopes."""

    def __init__(self, profile=None, level=4, lambdas=DEFAULT_LAMBDAS):
        self.profile = profile
        self.level = level
        self.lambdas = lambdas

    def fit(self, X: MatrixField, y=None):
        self.profile_ = _profile(self.profile, X.lattice)
        base = default_base_cubes(X.lattice, self.level, max(self.lambdas))
        self.estimate_ = estimate_dimensions(X, self.profile_, base, tuple(self.lambdas))
        self.d_lower_ = self.estimate_.d_lower
        self.d_upper_ = self.estimate_.d_upper
        return self
