"""Variable-exponent Muckenhoupt weight constants on sampled grids."""

__version__ = "0.1.0"
