"""Limits of finite diagrams of sets and of finite meet-semilattices.

Set limits are enumerated by backtracking over objects, always branching on
the object with the fewest remaining candidates, with arc-consistency
propagation along every arrow constraint ``D(h)(x_src) = x_dst``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..errors import NotMeetPreserving


@dataclass(frozen=True, eq=False)
class DiagramSet:
    """Objects are the finite sets ``range(size)``; arrows are ``(src, dst, table)``."""

    sizes: tuple
    arrows: tuple = ()

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        arrows = []
        for s, d, table in self.arrows:
            table = tuple(int(x) for x in table)
            if not (0 <= s < len(sizes) and 0 <= d < len(sizes)):
                raise ValueError("arrow endpoint out of range")
            if len(table) != sizes[s] or any(not 0 <= x < sizes[d] for x in table):
                raise ValueError("arrow is not a total map between the object sets")
            arrows.append((int(s), int(d), table))
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "arrows", tuple(arrows))

    def satisfies(self, tup) -> bool:
        return all(table[tup[s]] == tup[d] for s, d, table in self.arrows)


def _revise(doms, arrow, pre):
    """Shrink both ends of one arrow; returns the set of changed objects or None on wipe-out."""
    s, d, table = arrow
    changed = set()
    if s == d:
        new = {x for x in doms[s] if table[x] == x}
        if new != doms[s]:
            doms[s] = new
            changed.add(s)
        return None if not new else changed
    image = {table[x] for x in doms[s]}
    new_d = doms[d] & image
    if new_d != doms[d]:
        doms[d] = new_d
        changed.add(d)
    new_s = {x for x in doms[s] if table[x] in new_d}
    if new_s != doms[s]:
        doms[s] = new_s
        changed.add(s)
    if not new_d or not new_s:
        return None
    return changed


def _propagate(doms, arrows, touching, start) -> bool:
    queue = list(start)
    queued = set(queue)
    while queue:
        idx = queue.pop()
        queued.discard(idx)
        changed = _revise(doms, arrows[idx], None)
        if changed is None:
            return False
        for obj in changed:
            for j in touching[obj]:
                if j not in queued:
                    queued.add(j)
                    queue.append(j)
    return True


def limit_set(diagram: DiagramSet) -> list:
    """All tuples ``(x_a)`` with ``D(h)(x_src) = x_dst`` for every arrow, sorted."""
    n = len(diagram.sizes)
    if n == 0:
        return [()]
    arrows = diagram.arrows
    touching = defaultdict(list)
    for i, (s, d, _) in enumerate(arrows):
        touching[s].append(i)
        if d != s:
            touching[d].append(i)
    doms = [set(range(size)) for size in diagram.sizes]
    if any(not d for d in doms):
        return []
    if not _propagate(doms, arrows, touching, range(len(arrows))):
        return []
    out = []
    stack = [doms]
    while stack:
        doms = stack.pop()
        pick, best = -1, None
        for i, d in enumerate(doms):
            if len(d) > 1 and (best is None or len(d) < best):
                pick, best = i, len(d)
        if pick < 0:
            out.append(tuple(next(iter(d)) for d in doms))
            continue
        for v in sorted(doms[pick], reverse=True):
            nd = [set(d) for d in doms]
            nd[pick] = {v}
            if _propagate(nd, arrows, touching, touching[pick]):
                stack.append(nd)
    out.sort()
    return out


class FinLattice:
    """Finite meet-semilattice on ``range(size)`` with a vectorized meet and a top."""

    def __init__(self, size: int, meet: Callable, top: int, labels=None):
        self.size = int(size)
        self._meet = meet
        self.top = int(top)
        self.labels = labels

    @classmethod
    def powerset(cls, m: int) -> FinLattice:
        """Subsets of ``m`` points as bitmasks, meet = intersection."""
        return cls(2 ** m, np.bitwise_and, 2 ** m - 1)

    @classmethod
    def from_table(cls, table, top: int | None = None, labels=None) -> FinLattice:
        t = np.asarray(table, dtype=np.int64)
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise ValueError("meet table must be square")
        if top is None:
            tops = [x for x in range(len(t)) if np.all(t[x] == np.arange(len(t)))]
            if len(tops) != 1:
                raise ValueError("meet table has no unique top")
            top = tops[0]
        return cls(len(t), lambda a, b: t[a, b], top, labels)

    def meet(self, a, b):
        return self._meet(np.asarray(a), np.asarray(b))

    def leq(self, a, b) -> bool:
        return int(self.meet(a, b)) == int(a)

    def is_semilattice(self) -> bool:
        """Idempotent, commutative, associative, with ``top`` as unit (exhaustive)."""
        x = np.arange(self.size)
        if not np.array_equal(self.meet(x, x), x):
            return False
        if not np.array_equal(self.meet(x, np.full_like(x, self.top)), x):
            return False
        a, b = np.meshgrid(x, x, indexing="ij")
        ab = self.meet(a, b)
        if not np.array_equal(ab, ab.T):
            return False
        for c in range(self.size):
            if not np.array_equal(self.meet(ab, c), self.meet(a, self.meet(b, c))):
                return False
        return True


@dataclass(frozen=True, eq=False)
class DiagramLat:
    """Finite meet-semilattices with meet-preserving maps ``(src, dst, table)``."""

    objects: tuple
    arrows: tuple = ()

    def __post_init__(self):
        arrows = []
        for s, d, table in self.arrows:
            t = np.asarray(table, dtype=np.int64)
            if t.shape != (self.objects[s].size,) or t.min(initial=0) < 0 or \
                    t.max(initial=0) >= self.objects[d].size:
                raise ValueError("lattice arrow is not a total map")
            arrows.append((int(s), int(d), t))
        object.__setattr__(self, "objects", tuple(self.objects))
        object.__setattr__(self, "arrows", tuple(arrows))

    def underlying(self) -> DiagramSet:
        return DiagramSet(tuple(o.size for o in self.objects),
                          tuple((s, d, t.tolist()) for s, d, t in self.arrows))


def check_meet_preserving(src: FinLattice, dst: FinLattice, table, chunk: int = 512) -> bool:
    """Exhaustive test of ``f(a ^ b) = f(a) ^ f(b)`` and ``f(top) = top``."""
    t = np.asarray(table)
    if int(t[src.top]) != dst.top:
        return False
    x = np.arange(src.size)
    for start in range(0, src.size, chunk):
        a = x[start:start + chunk, None]
        lhs = t[src.meet(a, x[None, :])]
        rhs = dst.meet(t[a], t[None, :])
        if not np.array_equal(lhs, rhs):
            return False
    return True


class LimitLattice(FinLattice):
    """Lattice of compatible tuples, with componentwise meet."""

    def __init__(self, diagram: DiagramLat, elements: list):
        self.diagram = diagram
        self.elements = elements
        self.index = {e: i for i, e in enumerate(elements)}
        top = tuple(o.top for o in diagram.objects)
        super().__init__(len(elements), self._meet_idx, self.index[top], elements)

    def meet_tuples(self, a: tuple, b: tuple) -> tuple:
        return tuple(int(o.meet(x, y)) for o, x, y in zip(self.diagram.objects, a, b))

    def _meet_idx(self, a, b):
        a, b = np.broadcast_arrays(np.asarray(a), np.asarray(b))
        out = np.empty(a.shape, dtype=np.int64)
        for idx in np.ndindex(a.shape):
            out[idx] = self.index[self.meet_tuples(self.elements[a[idx]], self.elements[b[idx]])]
        return out

    def leq_tuples(self, a: tuple, b: tuple) -> bool:
        return self.meet_tuples(a, b) == tuple(a)


def limit_meet_semilattice(diagram: DiagramLat, validate: bool = True) -> LimitLattice:
    """Limit computed on underlying sets with componentwise order and meets."""
    if validate:
        for i, (s, d, t) in enumerate(diagram.arrows):
            if not check_meet_preserving(diagram.objects[s], diagram.objects[d], t):
                raise NotMeetPreserving(f"arrow {i} does not preserve meets")
    elements = limit_set(diagram.underlying())
    return LimitLattice(diagram, elements)
