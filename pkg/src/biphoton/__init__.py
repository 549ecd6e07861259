"""Doppler-broadened biphoton spectra from multiplexed thermal ensembles.

Frequencies are in units of the free-space decay rate gamma3 throughout.
"""

from .multiplex import (Evaluator, GeometryFamily, GeometrySpec, ShiftSet, f_multiplexed,
                        make_shifts)
from .params import DerivedParams, PhysicalParams, derive
from .schmidt import (FrequencyGrid, JointSpectralMatrix, Scenario, SchmidtResult, build_jsa,
                      convergence_check, entropy, schmidt_decompose, schmidt_number,
                      schmidt_via_kernels)
from .spectral import (PropagationScheme, f_cold, f_doppler_closed, f_doppler_quad,
                       faddeeva_w)

__version__ = "0.1.0"

__all__ = [
    "DerivedParams", "Evaluator", "FrequencyGrid", "GeometryFamily", "GeometrySpec",
    "JointSpectralMatrix", "PhysicalParams", "PropagationScheme", "Scenario", "SchmidtResult",
    "ShiftSet", "build_jsa", "convergence_check", "derive", "entropy", "f_cold",
    "f_doppler_closed", "f_doppler_quad", "f_multiplexed", "faddeeva_w", "make_shifts",
    "schmidt_decompose", "schmidt_number", "schmidt_via_kernels",
]
