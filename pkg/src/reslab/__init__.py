"""Resonance-zone geometry, resonance-lattice arithmetic, averaging normal
forms, and long-horizon symplectic experiments for nearly integrable
Hamiltonians.

Hot integration kernels live in a compiled extension when available, with a
pure-numpy fallback selected at import (`reslab.backend_name()` tells which).
"""

__version__ = "0.1.0"

from ._backend import backend_name
from .lattice import (IntVector, ResonanceModule, bounded_basis, gram_det,
                      is_K_lattice, module_volume, primitive_part, saturate,
                      sin_angle)
from .models import (ConvexityParams, HamiltonianSystem, IntegrableModel,
                     Perturbation, PerturbationTerm, check_quasi_convex,
                     eval_perturbation, frequency, grad_perturbation,
                     load_system, sup_norm_bound)
from .polynomials import ActionPolynomial, DegreeCapError
from .resonance import (ZoneLabel, ZoneParameters, classify, classify_many,
                        dist_to_resonance, enumerate_modes, is_nonresonant_mod,
                        make_zone_parameters, rational_in_interval, sup_norm)

__all__ = [
    "__version__", "backend_name",
    "IntVector", "ResonanceModule", "primitive_part", "module_volume",
    "gram_det", "saturate", "bounded_basis", "sin_angle", "is_K_lattice",
    "ZoneParameters", "ZoneLabel", "make_zone_parameters", "dist_to_resonance",
    "enumerate_modes", "classify", "classify_many", "is_nonresonant_mod",
    "rational_in_interval", "sup_norm",
    "IntegrableModel", "Perturbation", "PerturbationTerm", "ConvexityParams",
    "HamiltonianSystem", "frequency", "check_quasi_convex", "eval_perturbation",
    "grad_perturbation", "sup_norm_bound", "load_system",
    "ActionPolynomial", "DegreeCapError",
]
