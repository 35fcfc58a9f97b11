"""Persistence probabilities of the Airy1 and Airy2 processes via Fredholm determinants."""
from .airy1 import persistence_airy1, f1_determinant
from .airy2 import persistence_airy2, f2_determinant
from .persistence import curve, fit_curve, fit_exponential, kappa_table, kappa_slope

__version__ = "0.1.0"

__all__ = [
    "persistence_airy1",
    "persistence_airy2",
    "f1_determinant",
    "f2_determinant",
    "curve",
    "fit_exponential",
    "fit_curve",
    "kappa_table",
    "kappa_slope",
]
