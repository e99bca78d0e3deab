"""Computations with finite-dimensional C*-algebras through their commutative subalgebras."""

from .algebra import FdAlgebra, AlgElement, Hom
from .contexts import Context, SpatialDiagram, build_core_diagram, generate_context
from .ktheory import k0_standard, ktilde_f, eta_check
from .ideals import saturate_ideals, tilde_ct_limit, refute_noncentral
from .foundations import global_sections, ks_diagram, born_family

__all__ = [
    "AlgElement", "Context", "FdAlgebra", "Hom", "SpatialDiagram", "born_family",
    "build_core_diagram", "eta_check", "generate_context", "global_sections", "k0_standard",
    "ks_diagram", "ktilde_f", "refute_noncentral", "saturate_ideals", "tilde_ct_limit",
]

__version__ = "0.1.0"
