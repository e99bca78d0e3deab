"""Finite-dimensional C*-algebras as direct sums of full matrix algebras.

An algebra ``M_{n1} + ... + M_{nk}`` is stored by its block sizes and its
elements by one dense complex block per summand.  Every structural decision
(ranks, centrality, equivalence of projections) is reduced to integer data
by thresholding eigenvalues at 0.5, so floating point noise never leaks into
a yes/no answer.

Examples
--------
>>> A = FdAlgebra.parse("M2+M3")
>>> p = A.diagonal([[1, 0], [1, 1, 0]])
>>> rank_profile(p)
(1, 2)
>>> central_pattern(comparison(p, A.identity()))
(0, 0)
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import block_diag

from .errors import NotAProjection, ParseError, ShapeMismatch, ZeroProjection

RankTuple = tuple

_TERM = re.compile(r"^\s*(?:M\s*(\d+)|C)\s*$")


@dataclass(frozen=True)
class FdAlgebra:
    """Direct sum of matrix algebras with block sizes ``(n1, ..., nk)``."""

    block_sizes: tuple
    tolerance: float = 1e-9

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.block_sizes)
        if not sizes:
            raise ValueError("an algebra needs at least one summand")
        if any(n < 1 for n in sizes):
            raise ValueError(f"block sizes must be positive, got {sizes}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        object.__setattr__(self, "block_sizes", sizes)

    @classmethod
    def parse(cls, spec: str, tolerance: float = 1e-9) -> FdAlgebra:
        """Parse ``"M2+M3+M1"``; ``C`` is accepted for ``M1``."""
        if not isinstance(spec, str) or not spec.strip():
            raise ParseError("empty algebra spec")
        sizes = []
        for term in spec.split("+"):
            m = _TERM.match(term)
            if m is None:
                raise ParseError(f"cannot parse summand {term!r} in {spec!r}")
            n = 1 if m.group(1) is None else int(m.group(1))
            if n < 1:
                raise ParseError(f"matrix size must be positive in {spec!r}")
            sizes.append(n)
        return cls(tuple(sizes), tolerance)

    @property
    def spec(self) -> str:
        return "+".join(f"M{n}" for n in self.block_sizes)

    @property
    def k(self) -> int:
        return len(self.block_sizes)

    @property
    def dim(self) -> int:
        return sum(self.block_sizes)

    def same_shape(self, other: FdAlgebra) -> bool:
        return self.block_sizes == other.block_sizes

    def with_tolerance(self, tolerance: float) -> FdAlgebra:
        return FdAlgebra(self.block_sizes, tolerance)

    def amplify(self, m: int) -> FdAlgebra:
        """The matrix amplification M_m(A), again a multi-matrix algebra."""
        return FdAlgebra(tuple(m * n for n in self.block_sizes), self.tolerance)

    # constructors -----------------------------------------------------

    def element(self, blocks) -> AlgElement:
        return AlgElement(self, blocks)

    def zero(self) -> AlgElement:
        return AlgElement(self, [np.zeros((n, n)) for n in self.block_sizes])

    def identity(self) -> AlgElement:
        return AlgElement(self, [np.eye(n) for n in self.block_sizes])

    def scalar(self, c) -> AlgElement:
        return AlgElement(self, [c * np.eye(n) for n in self.block_sizes])

    def diagonal(self, entries) -> AlgElement:
        """Diagonal element from one list of entries per block."""
        if len(entries) != self.k:
            raise ShapeMismatch("one diagonal per block expected")
        return AlgElement(self, [np.diag(np.asarray(d, dtype=complex)) for d in entries])

    def matrix_unit(self, block: int, i: int, j: int) -> AlgElement:
        blocks = [np.zeros((n, n)) for n in self.block_sizes]
        blocks[block][i, j] = 1.0
        return AlgElement(self, blocks)

    def central_projection(self, bits) -> AlgElement:
        """Sum of the block units selected by ``bits`` (sequence of 0/1)."""
        if len(bits) != self.k:
            raise ShapeMismatch("one bit per block expected")
        return AlgElement(self, [float(b) * np.eye(n) for b, n in zip(bits, self.block_sizes)])

    def central_projections(self) -> list:
        """All 2^k central projections, indexed by the integer whose bit i is block i."""
        return [self.central_projection(_bits(mask, self.k)) for mask in range(2 ** self.k)]

    def rank_pattern(self, ranks) -> AlgElement:
        """Canonical diagonal projection with the first ``ranks[i]`` entries of block i set."""
        if len(ranks) != self.k or any(not 0 <= r <= n for r, n in zip(ranks, self.block_sizes)):
            raise ShapeMismatch(f"rank tuple {tuple(ranks)} does not fit {self.spec}")
        return self.diagonal([[1.0] * r + [0.0] * (n - r) for r, n in zip(ranks, self.block_sizes)])

    # randomness -------------------------------------------------------

    def random_unitary(self, rng: np.random.Generator) -> AlgElement:
        return AlgElement(self, [haar_unitary(n, rng) for n in self.block_sizes])

    def random_projection(self, rng: np.random.Generator, ranks=None) -> AlgElement:
        if ranks is None:
            ranks = tuple(int(rng.integers(0, n + 1)) for n in self.block_sizes)
        u = self.random_unitary(rng)
        return self.rank_pattern(ranks).conj_by(u)

    def random_element(self, rng: np.random.Generator) -> AlgElement:
        return AlgElement(self, [rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
                                 for n in self.block_sizes])


def _bits(mask: int, k: int) -> tuple:
    return tuple((mask >> i) & 1 for i in range(k))


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n x n unitary from the QR decomposition of a Gaussian matrix."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


class AlgElement:
    """Block-diagonal element of an :class:`FdAlgebra`.  Immutable."""

    __slots__ = ("parent", "blocks")

    def __init__(self, parent: FdAlgebra, blocks):
        blocks = tuple(np.array(b, dtype=complex) for b in blocks)
        if len(blocks) != parent.k:
            raise ShapeMismatch(f"{len(blocks)} blocks given for {parent.spec}")
        for b, n in zip(blocks, parent.block_sizes):
            if b.shape != (n, n):
                raise ShapeMismatch(f"block of shape {b.shape} where {(n, n)} expected")
            b.setflags(write=False)
        object.__setattr__(self, "parent", parent)
        object.__setattr__(self, "blocks", blocks)

    def __setattr__(self, name, value):
        raise AttributeError("AlgElement is immutable")

    def __repr__(self):
        return f"AlgElement({self.parent.spec}, {[b.round(6).tolist() for b in self.blocks]})"

    def _check(self, other):
        if not isinstance(other, AlgElement) or not self.parent.same_shape(other.parent):
            raise ShapeMismatch("elements live in different algebras")

    def __add__(self, other):
        self._check(other)
        return AlgElement(self.parent, [a + b for a, b in zip(self.blocks, other.blocks)])

    def __sub__(self, other):
        self._check(other)
        return AlgElement(self.parent, [a - b for a, b in zip(self.blocks, other.blocks)])

    def __neg__(self):
        return AlgElement(self.parent, [-a for a in self.blocks])

    def __mul__(self, c):
        if isinstance(c, AlgElement):
            return NotImplemented
        return AlgElement(self.parent, [c * a for a in self.blocks])

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check(other)
        return AlgElement(self.parent, [a @ b for a, b in zip(self.blocks, other.blocks)])

    def adj(self) -> AlgElement:
        return AlgElement(self.parent, [a.conj().T for a in self.blocks])

    def conj_by(self, u: AlgElement) -> AlgElement:
        """``u a u*``."""
        self._check(u)
        return AlgElement(self.parent, [w @ a @ w.conj().T for a, w in zip(self.blocks, u.blocks)])

    def hermitian_part(self) -> AlgElement:
        return AlgElement(self.parent, [(a + a.conj().T) / 2 for a in self.blocks])

    def block_unit(self, i: int) -> AlgElement:
        """This element cut down to block i."""
        blocks = [b if j == i else np.zeros_like(b) for j, b in enumerate(self.blocks)]
        return AlgElement(self.parent, blocks)

    def max_norm(self) -> float:
        return max(float(np.max(np.abs(b))) for b in self.blocks)

    def distance(self, other: AlgElement) -> float:
        return (self - other).max_norm()

    def close_to(self, other: AlgElement, tol: float | None = None) -> bool:
        tol = self.parent.tolerance if tol is None else tol
        return self.distance(other) <= tol

    def is_zero(self, tol: float | None = None) -> bool:
        tol = self.parent.tolerance if tol is None else tol
        return self.max_norm() <= tol

    def trace(self) -> complex:
        return complex(sum(np.trace(b) for b in self.blocks))

    def dense(self) -> np.ndarray:
        return block_diag(*self.blocks)

    def vec(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks])

    def to_json(self) -> dict:
        return {
            "algebra": self.parent.spec,
            "blocks": [[[[float(z.real), float(z.imag)] for z in row] for row in b] for b in self.blocks],
        }

    @classmethod
    def from_json(cls, doc, algebra: FdAlgebra | None = None) -> AlgElement:
        if isinstance(doc, str):
            doc = json.loads(doc)
        parent = algebra if algebra is not None else FdAlgebra.parse(doc["algebra"])
        return cls(parent, [decode_matrix(b) for b in doc["blocks"]])


def decode_vector(entries) -> np.ndarray:
    """List of ``[re, im]`` pairs (plain numbers also accepted) to a complex vector."""
    line = []
    for z in entries:
        if isinstance(z, (list, tuple)):
            if len(z) != 2:
                raise ValueError("complex entries are [re, im] pairs")
            line.append(complex(float(z[0]), float(z[1])))
        else:
            line.append(complex(float(z)))
    return np.array(line, dtype=complex)


def decode_matrix(rows) -> np.ndarray:
    """Nested rows of ``[re, im]`` pairs (plain numbers also accepted) to a complex array."""
    out = [decode_vector(row) for row in rows]
    if any(len(r) != len(out) for r in out):
        raise ValueError("blocks must be square matrices")
    arr = np.array(out, dtype=complex).reshape(len(out), len(out))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError("blocks must be square matrices")
    return arr


def encode_matrix(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


# predicates ------------------------------------------------------------

def is_projection(p: AlgElement, tol: float | None = None) -> bool:
    tol = p.parent.tolerance if tol is None else tol
    for b in p.blocks:
        if b.size and (np.max(np.abs(b @ b - b)) > tol or np.max(np.abs(b.conj().T - b)) > tol):
            return False
    return True


def is_unitary(u: AlgElement, tol: float | None = None) -> bool:
    tol = u.parent.tolerance if tol is None else tol
    return all(np.max(np.abs(b @ b.conj().T - np.eye(len(b)))) <= tol for b in u.blocks)


def is_central(a: AlgElement, tol: float | None = None) -> bool:
    """Central elements are scalar on every block."""
    tol = a.parent.tolerance if tol is None else tol
    for b in a.blocks:
        c = np.trace(b) / len(b)
        if np.max(np.abs(b - c * np.eye(len(b)))) > tol:
            return False
    return True


def commute(a: AlgElement, b: AlgElement, tol: float | None = None) -> bool:
    tol = a.parent.tolerance if tol is None else tol
    return ((a @ b) - (b @ a)).max_norm() <= tol


def _require_projection(p: AlgElement):
    if not isinstance(p, AlgElement):
        raise TypeError("expected an AlgElement")
    if not is_projection(p):
        raise NotAProjection("element is not a projection within tolerance")


def rank_profile(p: AlgElement) -> RankTuple:
    """Rank of each block of a projection."""
    _require_projection(p)
    return tuple(_block_rank(b) for b in p.blocks)


def _block_rank(b: np.ndarray) -> int:
    if b.size == 0:
        return 0
    return int(np.sum(np.linalg.eigvalsh((b + b.conj().T) / 2) > 0.5))


def _range_basis(b: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the range of a projection block.

    Diagonal blocks get standard basis vectors in increasing order; otherwise
    eigenvectors with their largest entry made real positive.
    """
    n = len(b)
    off = b - np.diag(np.diagonal(b))
    if n == 0 or np.max(np.abs(off)) <= 1e-12:
        idx = [i for i in range(n) if b[i, i].real > 0.5]
        return np.eye(n, dtype=complex)[:, idx]
    w, v = np.linalg.eigh((b + b.conj().T) / 2)
    v = v[:, w > 0.5]
    for c in range(v.shape[1]):
        j = int(np.argmax(np.abs(v[:, c]) - 1e-12 * np.arange(n)))
        v[:, c] *= np.conj(v[j, c]) / abs(v[j, c])
    return v


def _complement_basis(b: np.ndarray) -> np.ndarray:
    return _range_basis(np.eye(len(b)) - b)


def mvn_equivalent(p: AlgElement, q: AlgElement) -> AlgElement | None:
    """Partial isometry ``v`` with ``p = v v*`` and ``q = v* v``, or None."""
    _require_projection(p)
    _require_projection(q)
    p._check(q)
    if rank_profile(p) != rank_profile(q):
        return None
    blocks = []
    for pb, qb in zip(p.blocks, q.blocks):
        e, f = _range_basis(pb), _range_basis(qb)
        blocks.append(e @ f.conj().T)
    return AlgElement(p.parent, blocks)


def unitary_equiv_certificate(p: AlgElement, q: AlgElement) -> AlgElement | None:
    """Unitary ``u`` with ``p = u q u*``, or None when rank profiles differ."""
    _require_projection(p)
    _require_projection(q)
    p._check(q)
    if rank_profile(p) != rank_profile(q):
        return None
    if p.close_to(q):
        return p.parent.identity()
    blocks = []
    for pb, qb in zip(p.blocks, q.blocks):
        e = np.hstack([_range_basis(pb), _complement_basis(pb)])
        f = np.hstack([_range_basis(qb), _complement_basis(qb)])
        blocks.append(e @ f.conj().T)
    return AlgElement(p.parent, blocks)


def central_carrier(p: AlgElement) -> AlgElement:
    """Smallest central projection above ``p``."""
    return p.parent.central_projection([int(r > 0) for r in rank_profile(p)])


def central_pattern(z: AlgElement) -> tuple:
    """Block pattern (0/1 per block) of a central projection."""
    if not is_central(z):
        raise ValueError("element is not central")
    return tuple(int(r > 0) for r in rank_profile(z))


def comparison(p: AlgElement, q: AlgElement) -> AlgElement:
    """Central ``z`` with ``zp`` dominating ``zq`` and ``(1-z)p`` dominated by ``(1-z)q``."""
    p._check(q)
    rp, rq = rank_profile(p), rank_profile(q)
    return p.parent.central_projection([int(a >= b) for a, b in zip(rp, rq)])


def partially_orthogonal(p: AlgElement, q: AlgElement) -> AlgElement | None:
    """Central ``z`` with ``zp = zq`` and ``(1-z)p`` orthogonal to ``(1-z)q``, or None."""
    _require_projection(p)
    _require_projection(q)
    p._check(q)
    tol = p.parent.tolerance
    bits = []
    for pb, qb in zip(p.blocks, q.blocks):
        if np.max(np.abs(pb - qb)) <= tol:
            bits.append(1)
        elif np.max(np.abs(pb @ qb)) <= tol:
            bits.append(0)
        else:
            return None
    return p.parent.central_projection(bits)


class CoverOrbit(NamedTuple):
    members: list
    sup: AlgElement
    remainder: AlgElement
    unitary: AlgElement


def cover_orbit(q: AlgElement) -> CoverOrbit:
    """Maximal partially orthogonal family of unitary conjugates of ``q``.

    Block i holds ``n_i // r_i`` orthogonal copies of ``q_i``; members that run
    past a block's room reuse ``q_i`` there.  The remainder ``C(q) - sup`` has
    rank below ``r_i`` in each block and is moved under ``u q u*`` by the
    returned unitary.
    """
    _require_projection(q)
    A = q.parent
    ranks = rank_profile(q)
    if not any(ranks):
        raise ZeroProjection("cover_orbit needs a nonzero projection")
    copies, sups, rems, us = [], [], [], []
    for qb, n, r in zip(q.blocks, A.block_sizes, ranks):
        if r == 0:
            z = np.zeros((n, n), dtype=complex)
            copies.append([z])
            sups.append(z)
            rems.append(z)
            us.append(np.eye(n, dtype=complex))
            continue
        e = _range_basis(qb)
        c = _complement_basis(qb)
        k = n // r
        block_copies = [(qb + qb.conj().T) / 2]
        for j in range(1, k):
            w = c[:, (j - 1) * r:j * r]
            block_copies.append(w @ w.conj().T)
        used = (k - 1) * r
        left = c[:, used:]
        extra = r - left.shape[1]
        t = np.hstack([left, e[:, :extra]])
        rest = np.hstack([e[:, extra:], c[:, :used]])
        copies.append(block_copies)
        s = sum(block_copies)
        sups.append(s)
        rems.append(left @ left.conj().T)
        us.append(np.hstack([t, rest]) @ np.hstack([e, c]).conj().T)
    size = max(len(cs) for cs, r in zip(copies, ranks) if r > 0)
    members = []
    for m in range(size):
        members.append(AlgElement(A, [cs[m] if m < len(cs) else cs[0] for cs in copies]))
    return CoverOrbit(members, AlgElement(A, sups), AlgElement(A, rems), AlgElement(A, us))


# homomorphisms ---------------------------------------------------------

class Hom:
    """*-homomorphism given by a multiplicity matrix and an intertwining unitary.

    Block i of the image of ``a`` is ``U_i (a_1^{m_i1} + ... + a_k^{m_ik} + 0) U_i*``
    where ``a_j^{m}`` is ``m`` diagonal copies of block j.
    """

    __slots__ = ("source", "target", "multiplicity", "intertwiner")

    def __init__(self, source: FdAlgebra, target: FdAlgebra, multiplicity, intertwiner=None,
                 unital: bool = True):
        mult = np.array(multiplicity, dtype=np.int64).reshape(target.k, source.k)
        if np.any(mult < 0):
            raise ValueError("multiplicities must be nonnegative")
        used = mult @ np.array(source.block_sizes)
        cap = np.array(target.block_sizes)
        if np.any(used > cap):
            raise ShapeMismatch("multiplicities overflow the target blocks")
        if unital and np.any(used != cap):
            raise ShapeMismatch("multiplicities do not give a unital map")
        if intertwiner is None:
            intertwiner = target.identity()
        if not target.same_shape(intertwiner.parent) or not is_unitary(intertwiner):
            raise ValueError("intertwiner must be a unitary of the target")
        mult.setflags(write=False)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "multiplicity", mult)
        object.__setattr__(self, "intertwiner", intertwiner)

    def __setattr__(self, name, value):
        raise AttributeError("Hom is immutable")

    def __repr__(self):
        return f"Hom({self.source.spec} -> {self.target.spec}, {self.multiplicity.tolist()})"

    @property
    def is_unital(self) -> bool:
        used = self.multiplicity @ np.array(self.source.block_sizes)
        return bool(np.all(used == np.array(self.target.block_sizes)))

    @classmethod
    def identity(cls, A: FdAlgebra) -> Hom:
        return cls(A, A, np.eye(A.k, dtype=np.int64))

    def __call__(self, a: AlgElement) -> AlgElement:
        return apply_hom(self, a)

    def compose(self, inner: Hom) -> Hom:
        """``self o inner``."""
        if not inner.target.same_shape(self.source):
            raise ShapeMismatch("homs are not composable")
        mult = self.multiplicity @ inner.multiplicity
        n_in = inner.source.block_sizes
        blocks = []
        for i, size in enumerate(self.target.block_sizes):
            w_parts, nested = [], []
            for j, nb in enumerate(self.source.block_sizes):
                for _ in range(self.multiplicity[i, j]):
                    w_parts.append(inner.intertwiner.blocks[j])
                    for l, nl in enumerate(n_in):
                        nested.extend([("a", l, nl)] * int(inner.multiplicity[j, l]))
                    pad = nb - int(inner.multiplicity[j] @ np.array(n_in))
                    if pad:
                        nested.append(("z", None, pad))
            pad = size - sum(p.shape[0] for p in w_parts)
            if pad:
                w_parts.append(np.eye(pad))
                nested.append(("z", None, pad))
            w = block_diag(*w_parts) if w_parts else np.zeros((0, 0))
            # positions of every segment in nested order
            starts, pos = [], 0
            for seg in nested:
                starts.append(pos)
                pos += seg[2]
            order = [idx for l in range(len(n_in)) for idx, seg in enumerate(nested)
                     if seg[0] == "a" and seg[1] == l]
            order += [idx for idx, seg in enumerate(nested) if seg[0] == "z"]
            perm = np.zeros((size, size))
            col = 0
            for idx in order:
                for t in range(nested[idx][2]):
                    perm[starts[idx] + t, col] = 1.0
                    col += 1
            blocks.append(self.intertwiner.blocks[i] @ w @ perm)
        return Hom(inner.source, self.target, mult, AlgElement(self.target, blocks),
                   unital=self.is_unital and inner.is_unital)


def apply_hom(phi: Hom, a: AlgElement) -> AlgElement:
    if not isinstance(a, AlgElement) or not a.parent.same_shape(phi.source):
        raise ShapeMismatch("element does not live in the source algebra")
    blocks = []
    for i, n in enumerate(phi.target.block_sizes):
        parts = []
        for j, m in enumerate(phi.multiplicity[i]):
            parts.extend([a.blocks[j]] * int(m))
        filled = sum(p.shape[0] for p in parts)
        if filled < n:
            parts.append(np.zeros((n - filled, n - filled)))
        x = block_diag(*parts)
        w = phi.intertwiner.blocks[i]
        blocks.append(w @ x @ w.conj().T)
    return AlgElement(phi.target, blocks)


def random_hom(source: FdAlgebra, rng: np.random.Generator, max_block: int = 8,
               max_blocks: int = 3) -> Hom:
    """Random unital hom out of ``source`` with target blocks of size at most ``max_block``."""
    sizes = np.array(source.block_sizes)
    if sizes.min() > max_block:
        raise ValueError("max_block is smaller than every source block")
    t = int(rng.integers(1, max_blocks + 1))
    rows = []
    while len(rows) < t:
        row = rng.integers(0, 3, size=source.k)
        total = int(row @ sizes)
        if 0 < total <= max_block:
            rows.append(row)
    mult = np.array(rows)
    target = FdAlgebra(tuple(int(x) for x in mult @ sizes), source.tolerance)
    return Hom(source, target, mult, target.random_unitary(rng))


class Unitalisation(NamedTuple):
    algebra: FdAlgebra
    iota: Hom
    pi: Hom

    def from_pair(self, a: AlgElement, z: complex) -> AlgElement:
        """Image of the formal pair ``(a, z)`` under ``(a, z) -> (a + z 1, z)``."""
        blocks = [b + z * np.eye(len(b)) for b in a.blocks]
        return AlgElement(self.algebra, blocks + [np.array([[z]])])


def unitalisation(A: FdAlgebra) -> Unitalisation:
    """``A+ = A + C`` with the (non-unital) inclusion and the character onto ``C``."""
    plus = FdAlgebra(A.block_sizes + (1,), A.tolerance)
    iota = Hom(A, plus, np.vstack([np.eye(A.k, dtype=np.int64), np.zeros((1, A.k), dtype=np.int64)]),
               unital=False)
    one = FdAlgebra((1,), A.tolerance)
    pi = Hom(plus, one, [[0] * A.k + [1]])
    return Unitalisation(plus, iota, pi)
