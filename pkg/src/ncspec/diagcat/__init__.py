"""Diagram machinery: integer matrices, abelian colimits, set and lattice limits."""

from .abelian import (
    AbGroup,
    AbPresentation,
    DiagMorphism,
    DiagramAb,
    colimit_ab,
    colimit_induced_map,
    grothendieck,
    kernel,
    mediating_map,
    present,
)
from .intmat import (
    det,
    integer_kernel,
    intmat,
    lattice_basis,
    row_hnf,
    smith_normal_form,
    solve_integer,
)
from .limits import (
    DiagramLat,
    DiagramSet,
    FinLattice,
    LimitLattice,
    check_meet_preserving,
    limit_meet_semilattice,
    limit_set,
)

__all__ = [
    "AbGroup", "AbPresentation", "DiagMorphism", "DiagramAb", "DiagramLat", "DiagramSet",
    "FinLattice", "LimitLattice", "check_meet_preserving", "colimit_ab", "colimit_induced_map",
    "det", "grothendieck", "integer_kernel", "intmat", "kernel", "lattice_basis",
    "limit_meet_semilattice", "limit_set", "mediating_map", "present", "row_hnf",
    "smith_normal_form", "solve_integer",
]
