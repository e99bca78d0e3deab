"""Valuations and probability assignments over diagrams of contexts.

A global section picks one atom per context, compatibly with every arrow;
Kochen-Specker sets are exactly the diagrams without one.  A density
matrix gives a probability vector per context through the Born rule, and
these vectors are compatible with coarse-graining along inclusions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from .algebra import AlgElement, FdAlgebra, decode_vector, encode_matrix
from .contexts import Context, DiagramBuilder, SpatialDiagram
from .diagcat import DiagramSet, limit_set
from .errors import AlgebraMismatch, NotOrthonormal


# Kochen-Specker diagrams ------------------------------------------------

def _projector(A: FdAlgebra, v: np.ndarray) -> AlgElement:
    return AlgElement(A, [np.outer(v, v.conj())])


def _check_basis(dim: int, basis: np.ndarray, tol: float):
    if basis.ndim != 2 or basis.shape[1] != dim:
        raise NotOrthonormal(f"vectors must have length {dim}")
    gram = basis.conj() @ basis.T
    if np.max(np.abs(gram - np.eye(len(basis)))) > tol:
        raise NotOrthonormal("basis vectors are not orthonormal")


def ks_diagram(dim: int, bases: Sequence, tolerance: float = 1e-9) -> SpatialDiagram:
    """One maximal context per basis, plus a shared context for each pair of bases with
    common projectors (those projectors and their complement), included in both."""
    if dim < 1:
        raise NotOrthonormal("dimension must be positive")
    A = FdAlgebra((dim,), tolerance)
    arrays = []
    for basis in bases:
        arr = np.array([np.asarray(v, dtype=complex) for v in basis])
        _check_basis(dim, arr, max(tolerance, 1e-9))
        if len(arr) != dim:
            raise NotOrthonormal("each basis must span the space")
        arrays.append(arr)
    b = DiagramBuilder(A)
    maximal = [b.add_context(Context(A, [_projector(A, v) for v in arr])) for arr in arrays]
    for i in range(len(maximal)):
        for j in range(i + 1, len(maximal)):
            ci, cj = b.contexts[maximal[i]], b.contexts[maximal[j]]
            shared = [a for k, a in zip(ci.keys, ci.atoms) if k in cj.key]
            if not shared or len(shared) == dim or maximal[i] == maximal[j]:
                continue
            rest = A.identity()
            for a in shared:
                rest = rest - a
            s = b.add_context(Context(A, shared + [rest]))
            b.add_arrow(s, maximal[i])
            b.add_arrow(s, maximal[j])
    return b.freeze()


def load_ks(path=None) -> tuple:
    """``(dim, bases)`` from a KS file; defaults to the shipped 18-vector fixture."""
    if path is None:
        text = resources.files("ncspec.data").joinpath("ks18.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    doc = json.loads(text)
    try:
        dim = int(doc["dim"])
        bases = [[decode_vector(v) for v in basis] for basis in doc["bases"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise NotOrthonormal(f"malformed KS file: {exc}") from exc
    return dim, bases


def dump_ks(dim: int, bases) -> dict:
    return {"dim": dim, "bases": [[encode_matrix(np.asarray([v]))[0] for v in b] for b in bases]}


# global sections -----------------------------------------------------------

@dataclass(frozen=True)
class ValuationSection:
    """Chosen atom index per context, with the atom identifiers."""

    choices: tuple
    ids: tuple

    def to_json(self) -> list:
        return list(self.choices)


def spectra_diagram(D: SpatialDiagram) -> DiagramSet:
    """Spectra of the contexts; an arrow ``V -> V'`` gives ``Sigma(V') -> Sigma(V)``."""
    return DiagramSet(tuple(len(c) for c in D.contexts),
                      tuple((a.dst, a.src, a.assignment) for a in D.arrows))


def global_sections(D: SpatialDiagram) -> list:
    """All restriction-compatible choices of one atom per context, in canonical order."""
    out = []
    for tup in limit_set(spectra_diagram(D)):
        ids = tuple(D.contexts[i].ids[x] for i, x in enumerate(tup))
        out.append(ValuationSection(tup, ids))
    return out


# Born rule ---------------------------------------------------------------

class DensityMatrix:
    """Positive element of trace one."""

    def __init__(self, parent: FdAlgebra, blocks):
        self.element = AlgElement(parent, blocks)
        self.parent = parent
        tol = parent.tolerance
        for b in self.element.blocks:
            if np.max(np.abs(b - b.conj().T)) > tol:
                raise ValueError("density matrix must be Hermitian")
            if len(b) and np.linalg.eigvalsh((b + b.conj().T) / 2).min() < -tol:
                raise ValueError("density matrix must be positive")
        if abs(self.element.trace() - 1) > tol:
            raise ValueError("density matrix must have trace one")

    @classmethod
    def random(cls, A: FdAlgebra, rng: np.random.Generator) -> DensityMatrix:
        blocks = []
        for n in A.block_sizes:
            g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            blocks.append(g @ g.conj().T)
        total = sum(np.trace(b).real for b in blocks)
        blocks = [b / total for b in blocks]
        return cls(A, [(b + b.conj().T) / 2 for b in blocks])

    @classmethod
    def maximally_mixed(cls, A: FdAlgebra) -> DensityMatrix:
        return cls(A, [np.eye(n) / A.dim for n in A.block_sizes])

    def mix(self, other: DensityMatrix, lam: float) -> DensityMatrix:
        e = self.element * lam + other.element * (1 - lam)
        return DensityMatrix(self.parent, e.blocks)

    def conj_by(self, u: AlgElement) -> DensityMatrix:
        return DensityMatrix(self.parent, self.element.conj_by(u).blocks)

    def expectation(self, a: AlgElement) -> float:
        return float(sum(np.trace(r @ b) for r, b in zip(self.element.blocks, a.blocks)).real)


@dataclass
class DistributionFamily:
    diagram: SpatialDiagram
    probabilities: list
    state: DensityMatrix | None = None

    def to_json(self) -> list:
        return [[float(x) for x in p] for p in self.probabilities]


def _born(rho: DensityMatrix, V: Context) -> np.ndarray:
    r = rho.element.vec()
    return np.real(V.matrix @ r.conj()) if len(V) else np.zeros(0)


def born_family(rho: DensityMatrix, D: SpatialDiagram) -> DistributionFamily:
    """``Re tr(rho a)`` for every atom ``a`` of every context."""
    if not rho.parent.same_shape(D.algebra):
        raise AlgebraMismatch("state and diagram live over different algebras")
    return DistributionFamily(D, [_born(rho, V) for V in D.contexts], rho)


def pushforward(mu: np.ndarray, assignment, size: int) -> np.ndarray:
    out = np.zeros(size)
    np.add.at(out, list(assignment), mu)
    return out


def check_compatibility(fam: DistributionFamily, tol: float = 1e-9) -> tuple:
    """``(True, None)`` or ``(False, violation)``.

    Along every inclusion ``V -> V'`` the fine distribution must push forward
    to the coarse one.  Along ``Ad_u`` the pushforward of ``fam(V')`` must
    equal the distribution of the conjugated state ``u* rho u`` on ``V``
    (covariance); without a recorded state the plain pushforward is required.
    """
    D = fam.diagram
    for idx, a in enumerate(D.arrows):
        pushed = pushforward(fam.probabilities[a.dst], a.assignment, len(D.contexts[a.src]))
        if a.kind == "Ad" and fam.state is not None:
            want = _born(fam.state.conj_by(a.u.adj()), D.contexts[a.src])
        else:
            want = fam.probabilities[a.src]
        err = float(np.max(np.abs(pushed - want))) if len(want) else 0.0
        if err > tol:
            return False, {"kind": a.kind, "arrow": idx, "src": a.src, "dst": a.dst, "error": err}
    for i, p in enumerate(fam.probabilities):
        if len(p) and (np.min(p) < -tol or abs(np.sum(p) - 1) > tol):
            return False, {"kind": "normalisation", "context": i}
    return True, None
