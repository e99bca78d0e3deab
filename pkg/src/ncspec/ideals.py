"""Ideal lattices, partial ideals as families of projections, and their invariance.

In finite dimension an ideal of a context is the span of a set of its atoms,
so a partial ideal is a choice of atom subset (a bitmask) per context.
Invariant families are computed as a limit of powerset lattices; the
refutation step enriches a diagram until only the families coming from
central projections survive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    AlgElement,
    CoverOrbit,
    FdAlgebra,
    Hom,
    _bits,
    central_carrier,
    cover_orbit,
    is_central,
    rank_profile,
    unitary_equiv_certificate,
)
from .contexts import (
    Context,
    DiagramBuilder,
    SpatialDiagram,
    atom_key,
    center_context,
    conjugate_rows,
    generate_context,
)
from .diagcat import DiagramLat, FinLattice, limit_meet_semilattice
from .errors import AlreadyCentral, SaturationCapExceeded, UnresolvableContext


# ideals of the whole algebra ---------------------------------------------

@dataclass(frozen=True)
class IdealLattice:
    """Ideals of a multi-matrix algebra: bitmasks of summands, ordered by inclusion."""

    algebra: FdAlgebra

    @property
    def elements(self) -> list:
        return list(range(2 ** self.algebra.k))

    def __len__(self):
        return 2 ** self.algebra.k

    def lattice(self) -> FinLattice:
        return FinLattice.powerset(self.algebra.k)

    def projection(self, mask: int) -> AlgElement:
        """Central projection ``z`` with ideal ``zA``."""
        return self.algebra.central_projection(_bits(mask, self.algebra.k))


def ideal_lattice(A: FdAlgebra) -> IdealLattice:
    return IdealLattice(A)


def ideal_preimage(phi: Hom) -> np.ndarray:
    """Table of ``I -> phi^{-1}(I)`` on summand bitmasks (target size ``2^k_B``)."""
    mult = np.asarray(phi.multiplicity)
    kb, ka = mult.shape
    table = np.zeros(2 ** kb, dtype=np.int64)
    for s in range(2 ** kb):
        out = 0
        for j in range(ka):
            if all(s >> i & 1 for i in range(kb) if mult[i, j] > 0):
                out |= 1 << j
        table[s] = out
    return table


# families ----------------------------------------------------------------

class FamilyOfProjections:
    """One projection per context, stored as an atom bitmask."""

    def __init__(self, diagram: SpatialDiagram, masks, source: AlgElement | None = None):
        self.diagram = diagram
        self.masks = tuple(int(m) for m in masks)
        self.source = source
        if len(self.masks) != len(diagram.contexts):
            raise ValueError("one mask per context expected")

    def __eq__(self, other):
        return isinstance(other, FamilyOfProjections) and self.diagram is other.diagram \
            and self.masks == other.masks

    def __hash__(self):
        return hash(self.masks)

    def __repr__(self):
        return f"FamilyOfProjections({list(self.masks)})"

    def value(self, i: int) -> AlgElement:
        return self.diagram.contexts[i].projection(self.masks[i])

    def leq(self, other: FamilyOfProjections) -> bool:
        return all(a & b == a for a, b in zip(self.masks, other.masks))

    def is_consistent(self) -> tuple:
        """Check ``pi(V) = largest projection of V below pi(V')`` on every inclusion."""
        D = self.diagram
        for idx, arrow in enumerate(D.arrows):
            if arrow.kind != "incl":
                continue
            expected = arrow_table(D.contexts[arrow.src], D.contexts[arrow.dst], arrow.assignment)
            want = int(expected[self.masks[arrow.dst]])
            if want != self.masks[arrow.src]:
                return False, Witness("arrow", arrow.src, arrow.dst, None,
                                      D.contexts[arrow.src].projection(want), self.value(arrow.src),
                                      arrow_index=idx)
        return True, None

    def to_json(self) -> list:
        return list(self.masks)


def family_from_projection(p: AlgElement, D: SpatialDiagram) -> FamilyOfProjections:
    """``Pi_p``: in each context, the sum of the atoms below ``p``."""
    return FamilyOfProjections(D, [c.mask_below(p) for c in D.contexts], source=p)


def arrow_table(src: Context, dst: Context, assignment) -> np.ndarray:
    """Lattice map ``S' -> {a : every piece of u a u* lies in S'}`` on atom bitmasks."""
    fibers = [0] * len(src)
    for j, a in enumerate(assignment):
        fibers[a] |= 1 << j
    s = np.arange(2 ** len(dst), dtype=np.int64)
    out = np.zeros_like(s)
    for a, f in enumerate(fibers):
        out |= ((s & f) == f).astype(np.int64) << a
    return out


# witnesses and invariance ------------------------------------------------

@dataclass
class Witness:
    """Evidence that a family violates a condition, or a refutation record."""

    kind: str
    src: int | None = None
    dst: int | None = None
    unitary: AlgElement | None = None
    expected: AlgElement | None = None
    actual: AlgElement | None = None
    arrow_index: int | None = None
    q: AlgElement | None = None
    orbit: CoverOrbit | None = None
    chain: dict = field(default_factory=dict)
    unitaries: tuple = ()

    def replay(self, fam: FamilyOfProjections) -> bool:
        """True when the violation is reproduced on ``fam``."""
        if self.kind == "refutation":
            ok, _ = is_invariant(fam, self.unitaries)
            return not ok
        if self.kind == "arrow":
            D = fam.diagram
            a = D.arrows[self.arrow_index]
            table = arrow_table(D.contexts[a.src], D.contexts[a.dst], a.assignment)
            return int(table[fam.masks[a.dst]]) != fam.masks[a.src]
        got = fam.value(self.src).conj_by(self.unitary)
        return not got.close_to(self.expected, 10 * fam.diagram.algebra.tolerance)

    def to_json(self) -> dict:
        doc = {"kind": self.kind}
        for name in ("src", "dst", "arrow_index"):
            if getattr(self, name) is not None:
                doc[name] = getattr(self, name)
        if self.q is not None:
            doc["q_ranks"] = list(rank_profile(self.q))
        if self.chain:
            doc["chain"] = dict(self.chain)
        if self.orbit is not None:
            doc["orbit_size"] = len(self.orbit.members)
            doc["sup_ranks"] = list(rank_profile(self.orbit.sup))
            doc["remainder_ranks"] = list(rank_profile(self.orbit.remainder))
        return doc


def is_invariant(fam: FamilyOfProjections, extra_unitaries=()) -> tuple:
    """``(True, None)`` or ``(False, Witness)``.

    Every ``Ad`` arrow of the diagram must satisfy ``pi(V) = u* pi(V') u ^ V``,
    and every supplied unitary must satisfy ``u pi(V) u* = pi(u V u*)``.  The
    conjugated context is looked up in the diagram; failing that, it is
    evaluated by the defining rule of ``Pi_p`` when the family came from ``p``.
    """
    D = fam.diagram
    A = D.algebra
    tol = 10 * A.tolerance
    for idx, arrow in enumerate(D.arrows):
        if arrow.kind != "Ad":
            continue
        table = arrow_table(D.contexts[arrow.src], D.contexts[arrow.dst], arrow.assignment)
        want = int(table[fam.masks[arrow.dst]])
        if want != fam.masks[arrow.src]:
            return False, Witness("arrow", arrow.src, arrow.dst, arrow.u,
                                  D.contexts[arrow.src].projection(want), fam.value(arrow.src),
                                  arrow_index=idx)
    for u in extra_unitaries:
        for i, V in enumerate(D.contexts):
            x = conjugate_rows(A, V.matrix, u)
            W = Context(A, [AlgElement(A, _unvec(A, row)) for row in x], validate=False)
            j = D.index_of(W)
            moved = fam.value(i).conj_by(u)
            if j is not None:
                target = fam.value(j)
            elif fam.source is not None:
                target = W.projection(W.mask_below(fam.source))
            else:
                raise UnresolvableContext("conjugated context is not in the diagram")
            if not moved.close_to(target, tol):
                return False, Witness("unitary", i, j, u, moved, target)
    return True, None


def _unvec(A: FdAlgebra, row: np.ndarray) -> list:
    blocks, start = [], 0
    for n in A.block_sizes:
        blocks.append(row[start:start + n * n].reshape(n, n))
        start += n * n
    return blocks


# limit of partial ideals ------------------------------------------------

@dataclass
class TildeCt:
    diagram: SpatialDiagram
    lattice: object
    families: list

    def __len__(self):
        return len(self.families)


def ideal_diagram(D: SpatialDiagram) -> DiagramLat:
    """Powerset lattice of atoms per context; each arrow ``V -> V'`` gives ``I(V') -> I(V)``."""
    objects = tuple(FinLattice.powerset(len(c)) for c in D.contexts)
    arrows = tuple((a.dst, a.src, arrow_table(D.contexts[a.src], D.contexts[a.dst], a.assignment))
                   for a in D.arrows)
    return DiagramLat(objects, arrows)


def tilde_ct_limit(A: FdAlgebra, D: SpatialDiagram, validate: bool = True) -> TildeCt:
    """All families consistent on inclusions and invariant on the ``Ad`` arrows of ``D``."""
    if not D.algebra.same_shape(A):
        raise ValueError("diagram lives over another algebra")
    lim = limit_meet_semilattice(ideal_diagram(D), validate=validate)
    return TildeCt(D, lim, [FamilyOfProjections(D, e) for e in lim.elements])


def central_families(D: SpatialDiagram) -> dict:
    """``Pi_z`` for every central projection ``z``, keyed by the summand bitmask."""
    A = D.algebra
    return {m: family_from_projection(A.central_projection(_bits(m, A.k)), D) for m in range(2 ** A.k)}


# refutation ---------------------------------------------------------------

def _refute_into(b: DiagramBuilder, q: AlgElement) -> Witness:
    A = q.parent
    orb = cover_orbit(q)
    uq = q.conj_by(orb.unitary).hermitian_part()

    def ctx(*gens) -> int:
        return b.add_context(generate_context(A, list(gens), include_center=True))

    iq = ctx(q)
    ims = [ctx(m) for m in orb.members]
    i_all = ctx(*orb.members)
    i_s = ctx(orb.sup)
    i_uq = ctx(uq)
    i_join = ctx(orb.sup, uq)
    i_z = b.add_context(center_context(A))
    used = []
    for m, im in zip(orb.members, ims):
        w = unitary_equiv_certificate(m, q)
        if b.add_arrow(iq, im, w):
            used.append(w)
    if b.add_arrow(iq, i_uq, orb.unitary):
        used.append(orb.unitary)
    chain = {"q": iq, "members": ims, "members_join": i_all, "sup": i_s, "moved": i_uq,
             "sup_and_moved": i_join, "center": i_z}
    return Witness("refutation", q=q, orbit=orb, chain=chain, unitaries=tuple(used))


def refute_noncentral(q: AlgElement, D: SpatialDiagram) -> tuple:
    """Enrich ``D`` so that no invariant consistent family can take the value ``q`` at ``V<q>``.

    Adds ``V<m>`` for the cover orbit ``M`` of ``q``, ``V<M>``, ``V<s>``,
    ``V<uqu*>`` and ``V<s, uqu*>`` (all containing the center), the ``Ad``
    arrows ``V<q> -> V<m>`` and ``V<q> -> V<uqu*>``, and every inclusion.
    Then ``Pi(V<s, uqu*>) >= s + sR = C(q)``, which reaches ``V<q>`` through
    the center.  Returns ``(enriched diagram, witness)``.
    """
    if is_central(q):
        raise AlreadyCentral("projection is central")
    b = D.builder()
    w = _refute_into(b, q)
    b.add_inclusions()
    return b.freeze(), w


def sup_covers_orbit(fam: FamilyOfProjections, w: Witness) -> bool:
    """If ``fam(V<m>) >= m`` for every orbit member then ``fam(V<s>) >= s``."""
    tol = 10 * fam.diagram.algebra.tolerance
    for m, i in zip(w.orbit.members, w.chain["members"]):
        v = fam.value(i)
        if not (v @ m).close_to(m, tol):
            return True
    v = fam.value(w.chain["sup"])
    return (v @ w.orbit.sup).close_to(w.orbit.sup, tol)


def chain_forces_carrier(fam: FamilyOfProjections, w: Witness) -> bool:
    """If ``fam(V<q>) >= q`` then ``fam(V<q>) >= C(q)``; holds for every limit family."""
    tol = 10 * fam.diagram.algebra.tolerance
    v = fam.value(w.chain["q"])
    if not (v @ w.q).close_to(w.q, tol):
        return True
    c = central_carrier(w.q)
    return (v @ c).close_to(c, tol)


# saturation ---------------------------------------------------------------

def ideal_seed_diagram(A: FdAlgebra) -> SpatialDiagram:
    """The center and ``V<P>`` for a rank-one diagonal ``P`` in each non-scalar block."""
    b = DiagramBuilder(A)
    b.add_context(center_context(A))
    for i, n in enumerate(A.block_sizes):
        if n >= 2:
            p = A.rank_pattern([int(i == j) for j in range(A.k)])
            b.add_context(generate_context(A, [p], include_center=True))
    b.add_inclusions()
    return b.freeze()


def _candidate(fam: FamilyOfProjections) -> AlgElement | None:
    """A non-central value of the family, with its full blocks cut away."""
    D = fam.diagram
    order = sorted(range(len(D.contexts)), key=lambda i: not D.contexts[i].contains_center())
    for i in order:
        q = fam.value(i)
        if is_central(q):
            continue
        ranks = rank_profile(q)
        keep = [int(0 < r < n) for r, n in zip(ranks, D.algebra.block_sizes)]
        return q @ D.algebra.central_projection(keep)
    return None


@dataclass
class SaturationReport:
    algebra: FdAlgebra
    rounds: int
    diagram: SpatialDiagram
    families: list
    central: dict
    bijection: bool
    witnesses: list

    def to_json(self) -> dict:
        k = self.algebra.k
        return {
            "algebra": self.algebra.spec,
            "central_projections": ["".join(map(str, _bits(m, k))) for m in sorted(self.central)],
            "invariant_families": len(self.families),
            "bijection": self.bijection,
            "rounds": self.rounds,
            "contexts": len(self.diagram.contexts),
            "witnesses": [w.to_json() for w in self.witnesses],
        }


def check_bijection(families, central: dict) -> bool:
    """``z -> Pi_z`` is onto the families and an order isomorphism."""
    masks = {f.masks for f in families}
    if len(masks) != len(families) or masks != {f.masks for f in central.values()}:
        return False
    for z1, f1 in central.items():
        for z2, f2 in central.items():
            if (z1 & z2 == z1) != f1.leq(f2):
                return False
    return True


def saturate_ideals(A: FdAlgebra, D: SpatialDiagram | None = None, max_rounds: int = 16) -> SaturationReport:
    """Alternate limit computation and refutation until only central families remain."""
    if max_rounds < 1:
        raise ValueError("max_rounds must be at least 1")
    D = D if D is not None else ideal_seed_diagram(A)
    refuted, witnesses = set(), []
    survivors, rnd = [], 0
    for rnd in range(1, max_rounds + 1):
        lim = tilde_ct_limit(A, D)
        central = central_families(D)
        masks = {f.masks for f in central.values()}
        survivors = [f for f in lim.families if f.masks not in masks]
        if not survivors:
            return SaturationReport(A, rnd, D, lim.families, central,
                                    check_bijection(lim.families, central), witnesses)
        fresh = []
        for fam in survivors:
            q = _candidate(fam)
            if q is None:
                continue
            key = atom_key(q)
            if key not in refuted:
                refuted.add(key)
                fresh.append(q)
        if not fresh:
            break
        b = D.builder()
        for q in fresh:
            witnesses.append(_refute_into(b, q))
        b.add_inclusions()
        D = b.freeze()
    raise SaturationCapExceeded(
        f"{len(survivors)} non-central families survive after {rnd} rounds",
        rounds=rnd, survivors=len(survivors))
