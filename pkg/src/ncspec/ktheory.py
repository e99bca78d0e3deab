"""K-groups of finite-dimensional algebras by two routes, and the map between them.

``k0_standard`` presents the monoid of Murray-von Neumann classes by rank
tuples and completes it.  ``ktilde_f`` takes the colimit of ``K(Sigma(V))``
over a finite diagram of contexts.  ``eta_check`` builds the comparison map
between the two and checks that it is an isomorphism and natural in homs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    AlgElement,
    FdAlgebra,
    Hom,
    apply_hom,
    mvn_equivalent,
    rank_profile,
    unitalisation,
)
from .contexts import (
    Context,
    FinSpace,
    SpaceMap,
    SpatialDiagram,
    build_core_diagram,
    generate_context,
    rank_pattern_seeds,
    spectrum,
    trivial_context,
)
from .diagcat import AbGroup, DiagMorphism, DiagramAb, colimit_induced_map, intmat, kernel, present
from .diagcat.intmat import det, solve_integer, zeros
from .errors import ContextMissing, InvalidMorphism, IsoFailure, NaturalityFailure


@dataclass(frozen=True, eq=False)
class KClass:
    """Element of a computed group, in its canonical coordinates."""

    group: AbGroup
    coords: tuple

    def __post_init__(self):
        c = self.group.reduce(intmat([list(self.coords)]).T)[:, 0] if self.group.rank else []
        object.__setattr__(self, "coords", tuple(int(x) for x in c))

    def __add__(self, other: KClass) -> KClass:
        return KClass(self.group, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: KClass) -> KClass:
        return KClass(self.group, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __eq__(self, other):
        return isinstance(other, KClass) and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"KClass({list(self.coords)})"


def _as_class(group: AbGroup, column) -> KClass:
    return KClass(group, tuple(int(x) for x in column))


# topological K on finite discrete spaces ---------------------------------

def k_top(X: FinSpace) -> AbGroup:
    """``Z^|X|``, one copy per point."""
    return present(len(X), [])


def k_top_pullback(f: SpaceMap) -> np.ndarray:
    """Matrix of ``d -> d o f``: ``|source| x |target|`` with a single 1 per row."""
    out = zeros(len(f.source), len(f.target))
    for x, y in enumerate(f.assignment):
        out[x, y] = 1
    return out


# standard route ------------------------------------------------------------

class K0Standard:
    """``K_0`` via rank-tuple generators of the projection monoid.

    Generators are all rank tuples ``r <= m*n`` of the amplification
    ``M_m(A)`` (unit tuples first); relations are ``[r] + [s] = [r + s]``.
    """

    def __init__(self, A: FdAlgebra, amplification: int = 1):
        self.algebra = A
        self.amplification = amplification
        bounds = [amplification * n for n in A.block_sizes]
        units = [tuple(int(i == j) for j in range(A.k)) for i in range(A.k)]
        rest = [r for r in itertools.product(*(range(b + 1) for b in bounds)) if r not in units]
        self.tuples = units + rest
        self.index = {r: i for i, r in enumerate(self.tuples)}
        rels = []
        zero = self.index[(0,) * A.k]
        rels.append({zero: 1})
        for r in self.tuples:
            for s in self.tuples:
                if r > s:
                    continue
                t = tuple(a + b for a, b in zip(r, s))
                if t in self.index and any(r) and any(s):
                    row = {}
                    for g, c in ((self.index[r], 1), (self.index[s], 1), (self.index[t], -1)):
                        row[g] = row.get(g, 0) + c
                    rels.append({g: c for g, c in row.items() if c})
        self.group = present(len(self.tuples), rels)

    def class_of_tuple(self, r) -> KClass:
        return _as_class(self.group, self.group.generator_images[:, self.index[tuple(r)]])

    def class_of(self, p: AlgElement) -> KClass:
        """Class of a projection of ``A`` or of an amplification ``M_m(A)``."""
        r = rank_profile(p)
        if mvn_equivalent(p, p.parent.rank_pattern(r)) is None:
            raise IsoFailure("no partial isometry onto the rank pattern")
        return self.class_of_tuple(r)


def k0_standard(A: FdAlgebra, amplification: int = 1) -> tuple:
    """``(group, class_of)``."""
    k = K0Standard(A, amplification)
    return k.group, k.class_of


def _matrix_from_columns(cols, rows: int) -> np.ndarray:
    out = zeros(rows, len(cols))
    for j, c in enumerate(cols):
        for i, x in enumerate(c):
            out[i, j] = int(x)
    return out


def _unit_projections(A: FdAlgebra) -> list:
    return [A.rank_pattern([int(i == j) for j in range(A.k)]) for i in range(A.k)]


def k0_hom(phi: Hom) -> np.ndarray:
    """Matrix of ``K_0(phi)`` in canonical coordinates, read off images of rank-one patterns."""
    src, dst = K0Standard(phi.source), K0Standard(phi.target)
    basis = [src.class_of(p).coords for p in _unit_projections(phi.source)]
    images = [dst.class_of(apply_hom(phi, p)).coords for p in _unit_projections(phi.source)]
    b = _matrix_from_columns(basis, src.group.rank)
    im = _matrix_from_columns(images, dst.group.rank)
    return _solve_right(im, b)


def _solve_right(y: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``X`` with ``X @ b == y`` for unimodular square ``b``."""
    if b.shape[0] == 0:
        return zeros(y.shape[0], 0)
    xt = solve_integer(b.T, y.T)
    if xt is None:
        raise IsoFailure("basis matrix is not invertible over the integers")
    return intmat(xt.T)


# colimit route ---------------------------------------------------------------

class KTilde:
    """``K~_f`` of ``A`` over a diagram of contexts."""

    def __init__(self, A: FdAlgebra, D: SpatialDiagram):
        self.algebra = A
        self.diagram = D
        arrows = []
        for a in D.arrows:
            f = SpaceMap(spectrum(D.contexts[a.dst]), spectrum(D.contexts[a.src]), a.assignment)
            arrows.append((a.src, a.dst, k_top_pullback(f)))
        self.abdiagram = DiagramAb(tuple(len(c) for c in D.contexts), tuple(arrows))
        self.group, self.injections = self.abdiagram.colimit

    def class_of_atoms(self, ctx_index: int, mask: int) -> KClass:
        inj = self.injections[ctx_index]
        col = zeros(self.group.rank, 1)
        for a in range(inj.shape[1]):
            if mask >> a & 1:
                col[:, 0] += inj[:, a]
        return _as_class(self.group, col[:, 0])

    def locate(self, p: AlgElement) -> tuple:
        """``(context index, atom mask)`` of a context containing ``p``."""
        D = self.diagram
        if p.is_zero():
            return 0, 0
        own = D.index_of(generate_context(self.algebra, [p]))
        candidates = ([own] if own is not None else []) + list(range(len(D.contexts)))
        for i in candidates:
            mask = D.contexts[i].mask_of(p)
            if mask is not None:
                return i, mask
        raise ContextMissing("no context of the diagram contains the projection")

    def class_of_u(self, p: AlgElement) -> KClass:
        i, mask = self.locate(p)
        return self.class_of_atoms(i, mask)


def ktilde_f(A: FdAlgebra, D: SpatialDiagram) -> tuple:
    """``(group, class_of_u)``."""
    k = KTilde(A, D)
    return k.group, k.class_of_u


def core_diagram(A: FdAlgebra, extra_contexts=(), extra_unitaries=()) -> SpatialDiagram:
    """Core diagram seeded by all diagonal rank patterns of single blocks."""
    return build_core_diagram(A, rank_pattern_seeds(A), extra_unitaries, extra_contexts)


def small_core_diagram(A: FdAlgebra, extra_contexts=()) -> SpatialDiagram:
    """Core diagram seeded only by the rank-one patterns."""
    return build_core_diagram(A, _unit_projections(A), (), extra_contexts)


def image_context(phi: Hom, V: Context) -> Context:
    """``phi(V)``: atoms are the nonzero images of atoms of ``V``."""
    atoms = [apply_hom(phi, a) for a in V.atoms]
    return Context(phi.target, [b for b in atoms if b.trace().real > 0.5])


def ktilde_hom(phi: Hom, source: KTilde, target: KTilde) -> np.ndarray:
    """Matrix of ``K~_f(phi)``, induced by ``V -> phi(V)`` on the two diagrams."""
    D, E = source.diagram, target.diagram
    object_map, components = [], []
    for V in D.contexts:
        W = image_context(phi, V)
        j = E.index_of(W)
        if j is None:
            raise ContextMissing("image of a context is missing from the target diagram")
        W = E.contexts[j]
        comp = zeros(len(W), len(V))
        for a, atom in enumerate(V.atoms):
            image = apply_hom(phi, atom)
            if image.trace().real > 0.5:
                mask = W.mask_of(image)
                if mask is None:
                    raise InvalidMorphism("image of an atom is not a sum of target atoms")
                for b in range(len(W)):
                    if mask >> b & 1:
                        comp[b, a] = 1
        object_map.append(j)
        components.append(comp)
    m = DiagMorphism(source.abdiagram, target.abdiagram, tuple(object_map), tuple(components))
    return colimit_induced_map(m)


def ktilde_f_kernel(A: FdAlgebra) -> AbGroup:
    """Kernel of ``K~_f(pi): K~_f(A+) -> K~_f(C)`` for the character ``pi`` of the unitalisation."""
    U = unitalisation(A)
    plus = KTilde(U.algebra, core_diagram(U.algebra))
    C = U.pi.target
    ground = KTilde(C, SpatialDiagram(C, [trivial_context(C)], []))
    h = ktilde_hom(U.pi, plus, ground)
    group, _ = kernel(h, plus.group, ground.group)
    return group


# comparison map ------------------------------------------------------------

@dataclass
class EtaReport:
    algebra: str
    k0: AbGroup
    ktilde: AbGroup
    eta: np.ndarray
    iso: bool
    generator_table: list = field(default_factory=list)
    natural: bool | None = None
    k0_hom: np.ndarray | None = None
    ktilde_hom: np.ndarray | None = None
    eta_target: np.ndarray | None = None

    def to_json(self) -> dict:
        doc = {
            "algebra": self.algebra,
            "k0": str(self.k0),
            "ktilde_f": str(self.ktilde),
            "iso": self.iso,
            "eta": [[int(x) for x in row] for row in self.eta],
            "generator_table": self.generator_table,
        }
        if self.natural is not None:
            doc["natural"] = self.natural
        return doc


def eta_matrix(k0: K0Standard, kt: KTilde) -> tuple:
    """``eta`` from the rank-one patterns, checked on every atom of the diagram."""
    A = k0.algebra
    gens = _unit_projections(A)
    src = [k0.class_of(p).coords for p in gens]
    dst = [kt.class_of_u(p).coords for p in gens]
    b = _matrix_from_columns(src, k0.group.rank)
    if b.shape[0] != b.shape[1] or abs(det(b)) != 1:
        raise IsoFailure("rank-one patterns do not form a basis of K0", generator=0)
    eta = _solve_right(_matrix_from_columns(dst, kt.group.rank), b)
    if eta.shape[0] != eta.shape[1] or (eta.shape[0] and abs(det(eta)) != 1) \
            or kt.group.invariant_factors != k0.group.invariant_factors:
        raise IsoFailure("comparison map is not invertible", generator=0)
    table = []
    for i, V in enumerate(kt.diagram.contexts):
        for a in range(len(V)):
            lhs = eta.dot(intmat([list(k0.class_of_tuple(V.ranks[a]).coords)]).T)[:, 0] if eta.shape[0] else []
            rhs = kt.class_of_atoms(i, 1 << a).coords
            if tuple(int(x) for x in lhs) != rhs:
                raise IsoFailure(f"atom {a} of context {i} is sent to the wrong class",
                                 generator=(i, a))
    for j, p in enumerate(gens):
        table.append({"ranks": list(rank_profile(p)), "k0": list(src[j]), "ktilde_f": list(dst[j])})
    return eta, table


def eta_check(A: FdAlgebra, phi: Hom | None = None, D_A: SpatialDiagram | None = None,
              D_B: SpatialDiagram | None = None) -> EtaReport:
    """Build ``eta_A`` and, given ``phi``, test ``K~_f(phi) eta_A = eta_B K_0(phi)``."""
    D_A = D_A if D_A is not None else core_diagram(A)
    k0_a, kt_a = K0Standard(A), KTilde(A, D_A)
    eta_a, table = eta_matrix(k0_a, kt_a)
    report = EtaReport(A.spec, k0_a.group, kt_a.group, eta_a, True, table)
    if phi is None:
        return report
    B = phi.target
    if D_B is None:
        D_B = small_core_diagram(B, [image_context(phi, V) for V in D_A.contexts])
    k0_b, kt_b = K0Standard(B), KTilde(B, D_B)
    eta_b, _ = eta_matrix(k0_b, kt_b)
    kh = k0_hom(phi)
    th = ktilde_hom(phi, kt_a, kt_b)
    lhs, rhs = th.dot(eta_a), eta_b.dot(kh)
    report.k0_hom, report.ktilde_hom, report.eta_target = kh, th, eta_b
    for g in range(lhs.shape[1]):
        if any(int(x) != int(y) for x, y in zip(lhs[:, g], rhs[:, g])):
            report.natural = False
            raise NaturalityFailure("naturality square fails", generator=g)
    report.natural = True
    return report


def pushforward_diagram(phi: Hom, D_A: SpatialDiagram) -> SpatialDiagram:
    """Small core diagram of the target containing ``phi(V)`` for every context of ``D_A``."""
    return small_core_diagram(phi.target, [image_context(phi, V) for V in D_A.contexts])
