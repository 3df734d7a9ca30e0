"""Gaussian random fields on the sphere cross time by doubly truncated
Karhunen-Loeve expansion, with truncation-error bounds and kernel diagnostics."""

from . import bounds, kernel, simulator, specfun, spectra, verify
from .bounds import TruncationBound, error_bound, error_table, truncation_P, truncation_Q
from .kernel import KernelModel, kernel_eval, kernel_eval_hermite
from .simulator import CoefficientDraw, Realization, SphereTimeGrid, draw_coefficients, simulate, synthesize
from .spectra import PowerSpectrum, family_polyproduct, family_polysum, explicit_spectrum, normalize_unit_variance

__version__ = "0.1.0"
