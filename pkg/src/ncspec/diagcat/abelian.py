"""Finitely presented abelian groups, Grothendieck completion and colimits.

A group is kept in canonical form: invariant factors (finite ones first, a 0
standing for a copy of Z) together with the images of the original
generators in the canonical coordinates and a section picking a preimage of
every coordinate vector.  With both matrices at hand, homomorphisms between
colimits of diagrams of different shapes become plain integer matrices.
"""

from __future__ import annotations

from collections import defaultdict, deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..errors import NotWellDefined
from .intmat import intmat, lattice_basis, row_hnf, snf_with_inverse, solve_integer, zeros


@dataclass(frozen=True)
class AbPresentation:
    """Generators ``0..n-1`` subject to one relation per row."""

    num_generators: int
    relations: tuple = ()

    def __post_init__(self):
        rels = tuple(tuple(int(x) for x in row) for row in self.relations)
        if any(len(r) != self.num_generators for r in rels):
            raise ValueError("relation width differs from the generator count")
        object.__setattr__(self, "relations", rels)

    @classmethod
    def free(cls, n: int) -> AbPresentation:
        return cls(n, ())

    @cached_property
    def group(self) -> AbGroup:
        return present(self.num_generators, self.relations)

    def to_json(self) -> dict:
        return {"generators": self.num_generators, "relations": [list(r) for r in self.relations]}

    @classmethod
    def from_json(cls, doc) -> AbPresentation:
        return cls(int(doc["generators"]), tuple(tuple(r) for r in doc.get("relations", [])))


@dataclass(frozen=True, eq=False)
class AbGroup:
    """``Z/d_1 + ... + Z/d_s + Z^r`` with generator images and a section.

    ``generator_images`` has one column per original generator;
    ``section`` has one column per canonical coordinate, giving an integer
    combination of generators mapping onto that coordinate.
    """

    invariant_factors: tuple
    generator_images: np.ndarray
    section: np.ndarray

    @property
    def rank(self) -> int:
        """Number of canonical coordinates."""
        return len(self.invariant_factors)

    @property
    def free_rank(self) -> int:
        return sum(1 for d in self.invariant_factors if d == 0)

    @property
    def torsion(self) -> tuple:
        return tuple(d for d in self.invariant_factors if d != 0)

    @property
    def num_generators(self) -> int:
        return self.generator_images.shape[1]

    def reduce(self, coords) -> np.ndarray:
        """Reduce a coordinate vector (or matrix of column vectors) mod the finite factors."""
        arr = np.asarray(coords, dtype=object)
        if self.rank == 0:
            return zeros(0, arr.shape[1] if arr.ndim == 2 else 0) if arr.ndim == 2 else zeros(0, 1)[:, 0]
        c = intmat(arr.reshape(self.rank, -1))
        for i, d in enumerate(self.invariant_factors):
            if d:
                for j in range(c.shape[1]):
                    c[i, j] = int(c[i, j]) % d
        return c if np.ndim(coords) == 2 else c[:, 0]

    def image(self, combination) -> np.ndarray:
        """Canonical coordinates of an integer combination of generators."""
        vec = intmat(np.asarray(combination, dtype=object).reshape(-1, 1))
        return self.reduce(self.generator_images.dot(vec)[:, 0])

    def is_zero(self, coords) -> bool:
        return all(int(x) == 0 for x in self.reduce(coords))

    def isomorphic(self, other: AbGroup) -> bool:
        return tuple(self.invariant_factors) == tuple(other.invariant_factors)

    def __str__(self):
        parts = []
        r = self.free_rank
        if r == 1:
            parts.append("Z")
        elif r > 1:
            parts.append(f"Z^{r}")
        parts.extend(f"Z/{d}" for d in self.torsion)
        return " (+) ".join(parts) if parts else "0"

    def __repr__(self):
        return f"AbGroup({self})"


def present(n: int, relations) -> AbGroup:
    """Canonical form of the group with ``n`` generators and the given relation rows.

    Relations with a unit coefficient are used first to eliminate generators
    (sparse Gaussian elimination); the remaining dense block goes through
    Smith normal form.  The free coordinates are finally put in Hermite form
    so that the result does not depend on elimination order.
    """
    rows = []
    for r in relations:
        if isinstance(r, dict):
            row = {int(g): int(c) for g, c in r.items() if c}
        else:
            row = {g: int(c) for g, c in enumerate(r) if c}
        if row:
            rows.append(row)
    alive = dict(enumerate(rows))
    occ = defaultdict(set)
    for rid, row in alive.items():
        for g in row:
            occ[g].add(rid)
    eliminated = []
    queue = deque(alive)
    while queue:
        rid = queue.popleft()
        row = alive.get(rid)
        if row is None:
            continue
        if not row:
            del alive[rid]
            continue
        units = [g for g, c in row.items() if c == 1 or c == -1]
        if not units:
            continue
        g = min(units, key=lambda h: (len(occ[h]), h))
        c = row[g]
        expr = {h: -c * v for h, v in row.items() if h != g}
        del alive[rid]
        for h in row:
            occ[h].discard(rid)
        for other in list(occ[g]):
            orow = alive[other]
            f = orow.pop(g)
            for h, v in expr.items():
                new = orow.get(h, 0) + f * v
                if new:
                    orow[h] = new
                    occ[h].add(other)
                else:
                    orow.pop(h, None)
                    occ[h].discard(other)
            queue.append(other)
        occ[g].clear()
        eliminated.append((g, expr))

    gone = {g for g, _ in eliminated}
    remaining = [g for g in range(n) if g not in gone]
    pos = {g: i for i, g in enumerate(remaining)}
    dense = [[row.get(g, 0) for g in remaining] for row in alive.values() if row]
    m = len(remaining)
    if dense:
        _, d, v, vi = snf_with_inverse(intmat(dense))
        diag = [int(d[i, i]) for i in range(min(d.shape))]
    else:
        from .intmat import identity
        v = vi = identity(m)
        diag = []
    factors_all = [diag[i] if i < len(diag) else 0 for i in range(m)]
    keep = [i for i, x in enumerate(factors_all) if x != 1]
    factors = tuple(factors_all[i] for i in keep)
    rank = len(keep)

    # x = y V^{-1} has coordinates y = x V; coordinate i lifts to row i of V^{-1}
    g_rem = v.T[keep, :] if m else zeros(0, 0)
    s_rem = vi.T[:, keep] if m else zeros(0, 0)

    images = zeros(rank, n)
    for g in remaining:
        images[:, g] = g_rem[:, pos[g]]
    full = {}
    for g, expr in reversed(eliminated):
        col = {}
        for h, c in expr.items():
            sub = full.get(h)
            if sub is None:
                col[h] = col.get(h, 0) + c
            else:
                for hh, cc in sub.items():
                    col[hh] = col.get(hh, 0) + c * cc
        full[g] = {h: c for h, c in col.items() if c}
        vec = zeros(rank, 1)
        for h, c in full[g].items():
            vec[:, 0] += c * g_rem[:, pos[h]]
        images[:, g] = vec[:, 0]
    section = zeros(n, rank)
    for g in remaining:
        section[g, :] = s_rem[pos[g], :]

    free = [i for i, d in enumerate(factors) if d == 0]
    if free:
        h, w, wi = row_hnf(images[free, :])
        images[free, :] = h
        section[:, free] = section[:, free].dot(wi)
    for i, d in enumerate(factors):
        if d:
            images[i, :] = [int(x) % d for x in images[i, :]]
    return AbGroup(factors, images, section)


def grothendieck(generators: int, monoid_relations=()) -> AbGroup:
    """Group completion of the commutative monoid ``<generators | lhs = rhs>``."""
    rows = []
    for lhs, rhs in monoid_relations:
        if len(lhs) != generators or len(rhs) != generators:
            raise ValueError("relation sides must have one entry per generator")
        if any(int(x) < 0 for x in list(lhs) + list(rhs)):
            raise ValueError("monoid relations use nonnegative combinations")
        rows.append([int(a) - int(b) for a, b in zip(lhs, rhs)])
    return present(generators, rows)


def mediating_map(group: AbGroup, images) -> np.ndarray:
    """The unique hom ``group -> Z^n`` sending generator ``g`` to column ``g`` of ``images``.

    Raises NotWellDefined when the generator images do not factor.
    """
    arr = np.asarray(images, dtype=object)
    f = intmat(arr if arr.ndim == 2 else arr.reshape(-1, group.num_generators))
    if f.shape[1] != group.num_generators:
        raise ValueError("one image column per generator expected")
    x = f.dot(group.section) if group.rank else zeros(f.shape[0], 0)
    for i, d in enumerate(group.invariant_factors):
        if d and any(int(v) for v in x[:, i]):
            raise NotWellDefined("torsion coordinate cannot map to a free group")
    if group.rank:
        back = x.dot(group.generator_images)
    else:
        back = zeros(f.shape[0], group.num_generators)
    if not np.array_equal(back.astype(object), f):
        raise NotWellDefined("generator images do not respect the relations")
    return x


# diagrams ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DiagramAb:
    """Finite diagram of presented abelian groups.

    ``arrows`` holds ``(src, dst, matrix)`` with ``matrix`` of shape
    ``(generators of dst) x (generators of src)``.
    """

    objects: tuple
    arrows: tuple = ()

    def __post_init__(self):
        objs = tuple(o if isinstance(o, AbPresentation) else AbPresentation.free(int(o))
                     for o in self.objects)
        arrows = []
        for a in self.arrows:
            s, d, mat = a
            if not (0 <= s < len(objs) and 0 <= d < len(objs)):
                raise ValueError("arrow endpoint out of range")
            mat = intmat(np.asarray(mat, dtype=object).reshape(objs[d].num_generators,
                                                               objs[s].num_generators))
            arrows.append((int(s), int(d), mat))
        object.__setattr__(self, "objects", objs)
        object.__setattr__(self, "arrows", tuple(arrows))
        for s, d, mat in self.arrows:
            src, dst = objs[s], objs[d]
            for rel in src.relations:
                img = mat.dot(intmat([rel]).T)[:, 0]
                if not dst.group.is_zero(dst.group.image(img)):
                    raise ValueError("arrow does not respect the source relations")

    @cached_property
    def offsets(self) -> tuple:
        out, acc = [], 0
        for o in self.objects:
            out.append(acc)
            acc += o.num_generators
        return tuple(out) + (acc,)

    @property
    def num_generators(self) -> int:
        return self.offsets[-1]

    def relation_rows(self) -> list:
        """Sparse relation rows of the colimit presentation."""
        rows = []
        off = self.offsets
        for a, o in enumerate(self.objects):
            for rel in o.relations:
                rows.append({off[a] + g: c for g, c in enumerate(rel) if c})
        for s, d, mat in self.arrows:
            for g in range(self.objects[s].num_generators):
                row = {off[s] + g: 1}
                for h in range(self.objects[d].num_generators):
                    c = int(mat[h, g])
                    if c:
                        key = off[d] + h
                        row[key] = row.get(key, 0) - c
                row = {x: y for x, y in row.items() if y}
                if row:
                    rows.append(row)
        return rows

    @cached_property
    def colimit(self) -> tuple:
        group = present(self.num_generators, self.relation_rows())
        off = self.offsets
        injections = tuple(group.generator_images[:, off[a]:off[a + 1]]
                           for a in range(len(self.objects)))
        return group, injections

    def to_json(self) -> dict:
        return {
            "objects": [o.to_json() for o in self.objects],
            "arrows": [{"src": s, "dst": d, "matrix": [[int(x) for x in r] for r in m]}
                       for s, d, m in self.arrows],
        }

    @classmethod
    def from_json(cls, doc) -> DiagramAb:
        objs = tuple(AbPresentation.from_json(o) for o in doc["objects"])
        arrows = tuple((a["src"], a["dst"], a["matrix"]) for a in doc.get("arrows", []))
        return cls(objs, arrows)


def colimit_ab(diagram: DiagramAb) -> tuple:
    """``(group, injections)`` for the colimit: direct sum modulo ``g_a - D(h)(g)_{a'}``."""
    return diagram.colimit


@dataclass(frozen=True, eq=False)
class DiagMorphism:
    """Morphism ``(f, eta)`` from ``source`` to ``target``.

    ``object_map[a]`` is ``f(a)`` and ``components[a]`` the matrix of
    ``eta_a: D(a) -> E(f(a))``.  ``arrow_map`` optionally sends each source
    arrow to a target arrow index (or None when ``f`` collapses it to an
    identity); when present, naturality squares are checked.
    """

    source: DiagramAb
    target: DiagramAb
    object_map: tuple
    components: tuple
    arrow_map: tuple | None = None

    def __post_init__(self):
        f = tuple(int(x) for x in self.object_map)
        if len(f) != len(self.source.objects):
            raise ValueError("object map must cover every source object")
        comps = []
        for a, (fa, mat) in enumerate(zip(f, self.components)):
            shape = (self.target.objects[fa].num_generators, self.source.objects[a].num_generators)
            comps.append(intmat(np.asarray(mat, dtype=object).reshape(shape)))
        if len(comps) != len(f):
            raise ValueError("one component per source object expected")
        object.__setattr__(self, "object_map", f)
        object.__setattr__(self, "components", tuple(comps))
        if self.arrow_map is not None:
            self.check_naturality()

    def check_naturality(self):
        for idx, (s, d, mat) in enumerate(self.source.arrows):
            h = self.arrow_map[idx]
            if h is None:
                if self.object_map[s] != self.object_map[d]:
                    raise NotWellDefined(f"arrow {idx} collapsed between distinct objects")
                lhs = self.components[s]
            else:
                ts, td, tmat = self.target.arrows[h]
                if (ts, td) != (self.object_map[s], self.object_map[d]):
                    raise NotWellDefined(f"arrow {idx} is sent to an arrow with wrong endpoints")
                lhs = tmat.dot(self.components[s])
            rhs = self.components[d].dot(mat)
            grp = self.target.objects[self.object_map[d]].group
            for g in range(lhs.shape[1]):
                if not grp.is_zero(grp.image(lhs[:, g] - rhs[:, g])):
                    raise NotWellDefined(f"naturality square fails on arrow {idx}, generator {g}")

    @classmethod
    def identity(cls, diagram: DiagramAb) -> DiagMorphism:
        from .intmat import identity
        comps = tuple(identity(o.num_generators) for o in diagram.objects)
        return cls(diagram, diagram, tuple(range(len(diagram.objects))), comps,
                   tuple(range(len(diagram.arrows))))

    def then(self, other: DiagMorphism) -> DiagMorphism:
        """``other o self``."""
        if other.source is not self.target:
            raise ValueError("morphisms are not composable")
        f = tuple(other.object_map[x] for x in self.object_map)
        comps = tuple(other.components[fa].dot(c) for fa, c in zip(self.object_map, self.components))
        amap = None
        if self.arrow_map is not None and other.arrow_map is not None:
            amap = tuple(None if h is None else other.arrow_map[h] for h in self.arrow_map)
        return DiagMorphism(self.source, other.target, f, comps, amap)


def generator_images_under(m: DiagMorphism) -> np.ndarray:
    """Coordinates in colim E of the image of every generator of colim D."""
    g_e, inj_e = m.target.colimit
    cols = []
    for a, (fa, comp) in enumerate(zip(m.object_map, m.components)):
        img = inj_e[fa].dot(comp)
        cols.extend(img[:, g] for g in range(img.shape[1]))
    out = zeros(g_e.rank, len(cols))
    for j, c in enumerate(cols):
        out[:, j] = c
    return g_e.reduce(out)


def colimit_induced_map(m: DiagMorphism) -> np.ndarray:
    """Matrix of ``[(g)_a] -> [(eta_a g)_{f(a)}]`` from colim D to colim E.

    Every relation of colim D must land in the relation lattice of colim E;
    otherwise NotWellDefined is raised.
    """
    g_d, _ = m.source.colimit
    g_e, _ = m.target.colimit
    img = generator_images_under(m)
    for row in m.source.relation_rows():
        vec = zeros(g_e.rank, 1)
        for g, c in row.items():
            vec[:, 0] += c * img[:, g]
        if not g_e.is_zero(vec[:, 0]):
            raise NotWellDefined("a relation of the source colimit maps to a nonzero element")
    if g_d.rank == 0:
        return zeros(g_e.rank, 0)
    h = g_e.reduce(img.dot(g_d.section)) if g_e.rank else zeros(0, g_d.rank)
    if g_e.rank:
        check = g_e.reduce(h.dot(g_d.generator_images))
        if not np.array_equal(check, img):
            raise NotWellDefined("induced map does not reproduce generator images")
    return h


def kernel(h, source: AbGroup, target: AbGroup) -> tuple:
    """Kernel of a hom between groups in canonical coordinates.

    Returns ``(K, embedding)`` where ``embedding`` sends K's coordinates to
    the source's.
    """
    hm = intmat(np.asarray(h, dtype=object).reshape(target.rank, source.rank))
    n, n2 = source.rank, target.rank
    big = zeros(n2, n + n2)
    big[:, :n] = hm
    for i, d in enumerate(target.invariant_factors):
        big[i, n + i] = -d
    from .intmat import integer_kernel
    ker = integer_kernel(big)[:n, :]
    basis = lattice_basis(ker)
    t = basis.shape[1]
    rels = []
    for i, d in enumerate(source.invariant_factors):
        if d:
            e = zeros(n, 1)
            e[i, 0] = d
            c = solve_integer(basis, e)
            if c is None:
                raise NotWellDefined("source torsion escapes the kernel lattice")
            rels.append([int(x) for x in c[:, 0]])
    k = present(t, rels)
    emb = basis.dot(k.section) if k.rank else zeros(n, 0)
    return k, source.reduce(emb) if n else emb
