"""Contexts (commutative subalgebras), their spectra, and spatial diagrams.

A commutative subalgebra of a finite-dimensional algebra is determined by
its atoms, the minimal projections partitioning the identity.  Its Gel'fand
spectrum has one point per atom.  Morphisms are restrictions of inner
automorphisms ``Ad_u`` with ``u V u*`` contained in the target; plain
inclusions are the case ``u = 1``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import (
    AlgElement,
    FdAlgebra,
    commute,
    decode_matrix,
    encode_matrix,
    is_projection,
    is_unitary,
    rank_profile,
    unitary_equiv_certificate,
)
from .errors import InvalidMorphism, NoDominatingAtom, NonCommutingGenerators

_ROUND = 6
_GRAM_TOL = 1e-6


def _rounded(vec: np.ndarray) -> np.ndarray:
    r = np.round(np.concatenate([vec.real, vec.imag]), _ROUND) + 0.0
    return r


def atom_key(a: AlgElement) -> bytes:
    return _rounded(a.vec()).tobytes()


def atom_id(a: AlgElement) -> str:
    """Stable identifier of a projection: hash of its entries rounded to 6 decimals."""
    return hashlib.sha1(atom_key(a)).hexdigest()[:12]


def _sort_key(a: AlgElement, ranks: tuple):
    v = a.vec()
    entries = np.round(np.stack([v.real, v.imag], axis=1), _ROUND) + 0.0
    return ranks, tuple(map(tuple, entries.tolist()))


class Context:
    """Commutative subalgebra given by its atoms, kept in canonical order.

    Atoms are sorted by descending (rank tuple, rounded entries), so atoms of
    earlier blocks and earlier diagonal positions come first.
    """

    def __init__(self, parent: FdAlgebra, atoms: Sequence[AlgElement], validate: bool = True):
        atoms = [a.hermitian_part() for a in atoms]
        ranks = [rank_profile(a) if validate else tuple(int(round(b.trace().real)) for b in a.blocks)
                 for a in atoms]
        if validate:
            tol = parent.tolerance
            if not atoms:
                raise ValueError("a context needs at least one atom")
            for a, r in zip(atoms, ranks):
                if not a.parent.same_shape(parent):
                    raise ValueError("atom lives in another algebra")
                if not any(r):
                    raise ValueError("atoms must be nonzero")
            total = atoms[0]
            for a in atoms[1:]:
                total = total + a
            if not total.close_to(parent.identity(), 10 * tol * len(atoms)):
                raise ValueError("atoms do not sum to the identity")
            if tuple(map(sum, zip(*ranks))) != parent.block_sizes:
                raise ValueError("atoms are not pairwise orthogonal")
        order = sorted(range(len(atoms)), key=lambda i: _sort_key(atoms[i], ranks[i]), reverse=True)
        self.parent = parent
        self.atoms = tuple(atoms[i] for i in order)
        self.ranks = tuple(ranks[i] for i in order)
        self.keys = tuple(atom_key(a) for a in self.atoms)
        self.key = frozenset(self.keys)
        self._matrix = None

    def __len__(self):
        return len(self.atoms)

    def __repr__(self):
        return f"Context({self.parent.spec}, ranks={list(self.ranks)})"

    @property
    def ids(self) -> tuple:
        return tuple(hashlib.sha1(k).hexdigest()[:12] for k in self.keys)

    @property
    def matrix(self) -> np.ndarray:
        """Atoms as rows of flattened block vectors."""
        if self._matrix is None:
            self._matrix = np.stack([a.vec() for a in self.atoms])
        return self._matrix

    def same_as(self, other: Context) -> bool:
        if self.key == other.key:
            return True
        if len(self) != len(other) or sorted(self.ranks) != sorted(other.ranks):
            return False
        g = gram(self.matrix, other.matrix)
        return all(np.any(np.abs(g[i] - sum(r)) < _GRAM_TOL) for i, r in enumerate(self.ranks))

    def contains_center(self) -> bool:
        """True when every atom sits inside a single block."""
        return all(sum(1 for x in r if x) == 1 for r in self.ranks)

    def projection(self, mask: int) -> AlgElement:
        """Sum of the atoms selected by the bitmask."""
        out = self.parent.zero()
        for i, a in enumerate(self.atoms):
            if mask >> i & 1:
                out = out + a
        return out

    def mask_below(self, p: AlgElement) -> int:
        """Bitmask of the atoms dominated by the projection ``p``."""
        t = gram(self.matrix, p.vec()[None, :])[:, 0]
        mask = 0
        for i, r in enumerate(self.ranks):
            if abs(t[i] - sum(r)) < _GRAM_TOL:
                mask |= 1 << i
        return mask

    def mask_of(self, p: AlgElement) -> int | None:
        """Bitmask whose atoms sum to ``p``, or None when ``p`` is not in the context."""
        mask = self.mask_below(p)
        return mask if self.projection(mask).close_to(p, 10 * self.parent.tolerance) else None

    def conjugate(self, u: AlgElement) -> Context:
        return Context(self.parent, [a.conj_by(u) for a in self.atoms], validate=False)

    def conjugated_matrix(self, u: AlgElement) -> np.ndarray:
        """Rows ``vec(u a u*)`` for the atoms, computed blockwise in one batch."""
        return conjugate_rows(self.parent, self.matrix, u)

    def to_json(self) -> list:
        return [[encode_matrix(b) for b in a.blocks] for a in self.atoms]


def conjugate_rows(A: FdAlgebra, x: np.ndarray, u: AlgElement) -> np.ndarray:
    out = np.empty_like(x)
    start = 0
    for n, w in zip(A.block_sizes, u.blocks):
        stop = start + n * n
        blk = x[:, start:stop].reshape(-1, n, n)
        out[:, start:stop] = (w @ blk @ w.conj().T).reshape(-1, n * n)
        start = stop
    return out


def gram(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``tr(a b)`` for Hermitian rows ``a`` of x and ``b`` of y."""
    return np.real(x.conj() @ y.T)


def generate_context(A: FdAlgebra, S: Sequence[AlgElement], include_center: bool = False) -> Context:
    """Context generated by commuting projections (and optionally the center)."""
    S = list(S)
    for i, p in enumerate(S):
        if not is_projection(p):
            raise ValueError("generators must be projections")
        for q in S[:i]:
            if not commute(p, q):
                raise NonCommutingGenerators("generators do not commute")
    gens = S + (center_units(A) if include_center else [])
    atoms = [A.identity()]
    for p in gens:
        refined = []
        for a in atoms:
            x = (a @ p).hermitian_part()
            for z in (x, a - x):
                if z.trace().real > 0.5:
                    refined.append(z)
        atoms = refined
    return Context(A, atoms)


def center_units(A: FdAlgebra) -> list:
    return [A.central_projection([int(i == j) for j in range(A.k)]) for i in range(A.k)]


def center_context(A: FdAlgebra) -> Context:
    return Context(A, center_units(A))


def diagonal_context(A: FdAlgebra) -> Context:
    """Maximal context of diagonal matrix units."""
    atoms = []
    for i, n in enumerate(A.block_sizes):
        for j in range(n):
            atoms.append(A.matrix_unit(i, j, j))
    return Context(A, atoms)


def trivial_context(A: FdAlgebra) -> Context:
    return Context(A, [A.identity()])


# spectra ------------------------------------------------------------------

@dataclass(frozen=True)
class FinSpace:
    points: tuple

    def __post_init__(self):
        if len(set(self.points)) != len(self.points):
            raise ValueError("points must be distinct")

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class SpaceMap:
    source: FinSpace
    target: FinSpace
    assignment: tuple

    def __post_init__(self):
        if len(self.assignment) != len(self.source) or \
                any(not 0 <= x < len(self.target) for x in self.assignment):
            raise ValueError("space map must be total")

    def __call__(self, i: int) -> int:
        return self.assignment[i]

    def then(self, other: SpaceMap) -> SpaceMap:
        """``other o self``."""
        return SpaceMap(self.source, other.target, tuple(other.assignment[x] for x in self.assignment))

    def is_surjective(self) -> bool:
        return set(self.assignment) == set(range(len(self.target)))


def spectrum(V: Context) -> FinSpace:
    return FinSpace(V.ids)


def _dominance(src: Context, dst: Context, u: AlgElement | None) -> tuple:
    """For each dst atom, the src atom whose conjugate dominates it."""
    x = src.matrix if u is None else np.stack([a.conj_by(u).vec() for a in src.atoms])
    g = gram(x, dst.matrix)
    out = []
    for j, r in enumerate(dst.ranks):
        hits = np.flatnonzero(np.abs(g[:, j] - sum(r)) < _GRAM_TOL)
        if len(hits) != 1:
            raise NoDominatingAtom(f"atom {j} of the target has no unique dominating atom")
        out.append(int(hits[0]))
    return tuple(out)


class ContextMorphism:
    """``Ad_u`` restricted to ``src`` with ``u src u*`` inside ``dst``."""

    def __init__(self, src: Context, dst: Context, u: AlgElement | None = None,
                 validate: bool = True, assignment: tuple | None = None):
        A = src.parent
        if u is None:
            u = A.identity()
        self.src, self.dst, self.u = src, dst, u
        self.is_inclusion = u.close_to(A.identity())
        if assignment is None:
            try:
                assignment = _dominance(src, dst, None if self.is_inclusion else u)
            except NoDominatingAtom as exc:
                raise InvalidMorphism(str(exc)) from exc
        self.assignment = tuple(assignment)
        if validate:
            self.validate()

    @property
    def kind(self) -> str:
        return "incl" if self.is_inclusion else "Ad"

    def validate(self):
        if not is_unitary(self.u):
            raise InvalidMorphism("morphism unitary is not unitary")
        tol = self.src.parent.tolerance
        for i, a in enumerate(self.src.atoms):
            image = a if self.is_inclusion else a.conj_by(self.u)
            total = self.src.parent.zero()
            for j, b in enumerate(self.dst.atoms):
                if self.assignment[j] == i:
                    total = total + b
            if not total.close_to(image, 10 * tol * len(self.dst)):
                raise InvalidMorphism(f"conjugate of atom {i} is not a sum of target atoms")

    def compose(self, after: ContextMorphism) -> ContextMorphism:
        """``after o self``."""
        return ContextMorphism(self.src, after.dst, after.u @ self.u)


def spectrum_map(phi: ContextMorphism) -> SpaceMap:
    """``Sigma(dst) -> Sigma(src)``: a dst atom goes to the src atom dominating it."""
    assignment = _dominance(phi.src, phi.dst, None if phi.is_inclusion else phi.u)
    return SpaceMap(spectrum(phi.dst), spectrum(phi.src), assignment)


# diagrams -----------------------------------------------------------------

@dataclass(frozen=True)
class Arrow:
    src: int
    dst: int
    u: AlgElement
    kind: str
    assignment: tuple


class SpatialDiagram:
    """Finite diagram of contexts; identity arrows are implicit."""

    def __init__(self, algebra: FdAlgebra, contexts, arrows, composition_closed: bool = False):
        self.algebra = algebra
        self.contexts = tuple(contexts)
        self.arrows = tuple(arrows)
        self.composition_closed = composition_closed
        self._index = {c.key: i for i, c in enumerate(self.contexts)}
        for a in self.arrows:
            if not (0 <= a.src < len(self.contexts) and 0 <= a.dst < len(self.contexts)):
                raise ValueError("arrow endpoint out of range")

    def __repr__(self):
        return f"SpatialDiagram({self.algebra.spec}, {len(self.contexts)} contexts, {len(self.arrows)} arrows)"

    def index_of(self, ctx: Context) -> int | None:
        i = self._index.get(ctx.key)
        if i is not None:
            return i
        for j, c in enumerate(self.contexts):
            if c.same_as(ctx):
                return j
        return None

    def morphism(self, i: int) -> ContextMorphism:
        a = self.arrows[i]
        return ContextMorphism(self.contexts[a.src], self.contexts[a.dst], a.u,
                               validate=False, assignment=a.assignment)

    def all_arrows(self) -> list:
        """Arrows including the identity on every context."""
        ident = [Arrow(i, i, self.algebra.identity(), "id", tuple(range(len(c))))
                 for i, c in enumerate(self.contexts)]
        return ident + list(self.arrows)

    def inclusions(self) -> list:
        return [a for a in self.arrows if a.kind == "incl"]

    def ad_arrows(self) -> list:
        return [a for a in self.arrows if a.kind == "Ad"]

    def builder(self) -> DiagramBuilder:
        b = DiagramBuilder(self.algebra)
        for c in self.contexts:
            b.add_context(c)
        for a in self.arrows:
            b._arrows.append(a)
            b._seen.add((a.src, a.dst, a.assignment, a.kind))
        return b

    def validate(self):
        for i in range(len(self.arrows)):
            self.morphism(i).validate()

    # serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "algebra": self.algebra.spec,
            "contexts": [c.to_json() for c in self.contexts],
            "morphisms": [{"src": a.src, "dst": a.dst, "u": [encode_matrix(b) for b in a.u.blocks]}
                          for a in self.arrows],
        }

    @classmethod
    def from_json(cls, doc, tolerance: float = 1e-9) -> SpatialDiagram:
        if isinstance(doc, str):
            doc = json.loads(doc)
        A = FdAlgebra.parse(doc["algebra"], tolerance)
        contexts = [Context(A, [AlgElement(A, [decode_matrix(b) for b in atom]) for atom in ctx])
                    for ctx in doc["contexts"]]
        arrows = []
        for m in doc.get("morphisms", []):
            s, d = int(m["src"]), int(m["dst"])
            u = AlgElement(A, [decode_matrix(b) for b in m["u"]])
            phi = ContextMorphism(contexts[s], contexts[d], u)
            arrows.append(Arrow(s, d, u, phi.kind, phi.assignment))
        return cls(A, contexts, arrows)

    def to_dot(self) -> str:
        lines = ["digraph spatial {"]
        for i, c in enumerate(self.contexts):
            label = " ".join("(" + ",".join(map(str, r)) + ")" for r in c.ranks)
            lines.append(f'  c{i} [label="{label}"];')
        for a in self.arrows:
            lines.append(f'  c{a.src} -> c{a.dst} [label="{a.kind}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


class DiagramBuilder:
    """Mutable accumulator used to assemble a :class:`SpatialDiagram`."""

    def __init__(self, algebra: FdAlgebra):
        self.algebra = algebra
        self._contexts = []
        self._index = {}
        self._by_shape = {}
        self._arrows = []
        self._seen = set()

    @property
    def contexts(self) -> list:
        return self._contexts

    def find(self, ctx: Context) -> int | None:
        i = self._index.get(ctx.key)
        if i is not None:
            return i
        return self._find_numeric(ctx.matrix, ctx.ranks)

    def _find_numeric(self, x: np.ndarray, ranks) -> int | None:
        """Fallback when rounding put equal atoms on different sides of a boundary."""
        for j in self._by_shape.get(tuple(sorted(ranks)), ()):
            c = self._contexts[j]
            g = gram(x, c.matrix)
            if all(np.any(np.abs(g[i] - sum(r)) < _GRAM_TOL) for i, r in enumerate(ranks)):
                return j
        return None

    def add_context(self, ctx: Context) -> int:
        i = self.find(ctx)
        if i is None:
            i = len(self._contexts)
            self._contexts.append(ctx)
            self._index[ctx.key] = i
            self._by_shape.setdefault(tuple(sorted(ctx.ranks)), []).append(i)
        return i

    def add_arrow(self, src: int, dst: int, u: AlgElement | None = None, validate: bool = True) -> bool:
        """Add ``Ad_u: src -> dst``; returns False when it is trivial or already present."""
        phi = ContextMorphism(self._contexts[src], self._contexts[dst], u, validate=validate)
        if src == dst and phi.assignment == tuple(range(len(phi.dst))):
            return False
        kind = phi.kind
        sig = (src, dst, phi.assignment, kind)
        if sig in self._seen or (kind == "Ad" and (src, dst, phi.assignment, "incl") in self._seen):
            return False
        self._seen.add(sig)
        self._arrows.append(Arrow(src, dst, phi.u, kind, phi.assignment))
        return True

    def add_inclusions(self):
        """Add every inclusion between distinct contexts."""
        ctxs = self._contexts
        if len(ctxs) < 2:
            return
        atoms, where = [], {}
        for c in ctxs:
            for key, a, r in zip(c.keys, c.matrix, c.ranks):
                if key not in where:
                    where[key] = len(atoms)
                    atoms.append((a, sum(r)))
        x = np.stack([a for a, _ in atoms])
        ranks = np.array([r for _, r in atoms], dtype=float)
        g = gram(x, x)
        le = np.abs(g - ranks[None, :]) < _GRAM_TOL          # le[a, b]: b <= a
        inc = np.zeros((len(ctxs), len(atoms)), dtype=np.int64)
        for i, c in enumerate(ctxs):
            inc[i, [where[k] for k in c.keys]] = 1
        below = (inc @ le.astype(np.int64)) > 0              # below[V, b]
        incl = (inc @ (~below).T.astype(np.int64)) == 0     # incl[V', V]: V subset of V'
        one = self.algebra.identity()
        tol = 10 * self.algebra.tolerance
        for dst, src in zip(*np.nonzero(incl)):
            if src == dst:
                continue
            s_idx = [where[k] for k in ctxs[src].keys]
            assignment = []
            for k in ctxs[dst].keys:
                b = where[k]
                hits = [i for i, a in enumerate(s_idx) if le[a, b]]
                assignment.append(hits[0])
            sig = (int(src), int(dst), tuple(assignment), "incl")
            if sig in self._seen:
                continue
            # every source atom must be the sum of the target atoms assigned to it
            fibers = np.zeros((len(ctxs[src]), len(ctxs[dst])))
            fibers[assignment, range(len(assignment))] = 1
            if np.max(np.abs(fibers @ ctxs[dst].matrix - ctxs[src].matrix)) > tol * len(ctxs[dst]):
                raise InvalidMorphism("inclusion does not reconstruct the source atoms")
            self._seen.add(sig)
            self._arrows.append(Arrow(int(src), int(dst), one, "incl", tuple(assignment)))

    def add_conjugations(self, u: AlgElement):
        """Add ``Ad_u: V -> uVu*`` whenever the conjugate is a context of the diagram."""
        is_one = u.close_to(self.algebra.identity())
        tol = 10 * self.algebra.tolerance
        for i, c in enumerate(list(self._contexts)):
            x = c.conjugated_matrix(u)
            keys = [_rounded(row).tobytes() for row in x]
            j = self._index.get(frozenset(keys))
            if j is None:
                j = self._find_numeric(x, c.ranks)
                if j is None:
                    continue
                self.add_arrow(i, j, u)
                continue
            dst = self._contexts[j]
            pos = {k: n for n, k in enumerate(keys)}
            assignment = tuple(pos[k] for k in dst.keys)
            if i == j and assignment == tuple(range(len(c))):
                continue
            if np.max(np.abs(x[list(assignment)] - dst.matrix)) > tol:
                self.add_arrow(i, j, u)
                continue
            kind = "incl" if is_one else "Ad"
            sig = (i, j, assignment, kind)
            if sig in self._seen or (i, j, assignment, "incl") in self._seen:
                continue
            self._seen.add(sig)
            self._arrows.append(Arrow(i, j, u, kind, assignment))

    def freeze(self) -> SpatialDiagram:
        return SpatialDiagram(self.algebra, self._contexts, self._arrows)


def adjacent_transpositions(A: FdAlgebra) -> list:
    """Permutation unitaries swapping neighbouring diagonal positions inside one block."""
    out = []
    for i, n in enumerate(A.block_sizes):
        for j in range(n - 1):
            blocks = [np.eye(m) for m in A.block_sizes]
            p = np.eye(n)
            p[[j, j + 1]] = p[[j + 1, j]]
            blocks[i] = p
            out.append(AlgElement(A, blocks))
    return out


def rank_pattern_seeds(A: FdAlgebra) -> list:
    """Diagonal projections of rank ``r`` in a single block, for ``1 <= r <= n_i``."""
    seeds = []
    for i, n in enumerate(A.block_sizes):
        for r in range(1, n + 1):
            seeds.append(A.rank_pattern([r if j == i else 0 for j in range(A.k)]))
    return seeds


def build_core_diagram(A: FdAlgebra, seed_projections=(), extra_unitaries=(),
                       extra_contexts=()) -> SpatialDiagram:
    """Finite stand-in for the category of all contexts of ``A``.

    Contexts: the center, the context of each seed, each join of two commuting
    seeds, the maximal diagonal context, and any ``extra_contexts`` together
    with the contexts of their atoms.  Arrows: all inclusions; ``Ad`` by the
    adjacent transpositions of diagonal positions and by ``extra_unitaries``
    wherever the conjugate context is present; and for every seed (or extra
    atom) ``p`` a unitary carrying ``p`` onto the diagonal projection of the
    same rank tuple, as an arrow into the diagonal context.
    """
    b = DiagramBuilder(A)
    b.add_context(center_context(A))
    seeds = list(seed_projections)
    seed_idx = [b.add_context(generate_context(A, [p])) for p in seeds]
    for i, p in enumerate(seeds):
        for q in seeds[:i]:
            if commute(p, q):
                b.add_context(generate_context(A, [q, p]))
    diag = b.add_context(diagonal_context(A))
    for ctx in extra_contexts:
        b.add_context(ctx)
        for atom in ctx.atoms:
            seeds.append(atom)
            seed_idx.append(b.add_context(generate_context(A, [atom])))
    b.add_inclusions()
    for u in adjacent_transpositions(A):
        b.add_conjugations(u)
    for p, i in zip(seeds, seed_idx):
        target = A.rank_pattern(rank_profile(p))
        if p.close_to(target):
            continue
        b.add_arrow(i, diag, unitary_equiv_certificate(target, p))
    for u in extra_unitaries:
        b.add_conjugations(u)
    return b.freeze()


def _set_partitions(items: list):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1:]


def commutative_diagram(A: FdAlgebra) -> SpatialDiagram:
    """Every unital subalgebra of ``C^k`` (one per set partition of the summands) with all
    inclusions; the algebra itself is the terminal context."""
    if any(n != 1 for n in A.block_sizes):
        raise ValueError("algebra is not commutative")
    b = DiagramBuilder(A)
    for part in _set_partitions(list(range(A.k))):
        atoms = [A.central_projection([int(i in block) for i in range(A.k)]) for block in part]
        b.add_context(Context(A, atoms))
    b.add_inclusions()
    return b.freeze()
