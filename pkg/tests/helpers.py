"""Shared generators and oracles for the test suite."""

import itertools

import numpy as np
import sympy

from ncspec.algebra import FdAlgebra

# filled by the acceptance suite, printed in the terminal summary
ACCEPTANCE_LINES = []


def all_small_algebras(max_summands=3, max_block=4):
    """Every ordered tuple of block sizes within the bounds."""
    out = []
    for k in range(1, max_summands + 1):
        for sizes in itertools.product(range(1, max_block + 1), repeat=k):
            out.append(FdAlgebra(sizes))
    return out


def random_algebra(rng, max_summands=3, max_block=4):
    k = int(rng.integers(1, max_summands + 1))
    return FdAlgebra(tuple(int(x) for x in rng.integers(1, max_block + 1, size=k)))


def random_diagram_ab(rng, max_objects=5, max_arrows=8, max_gens=3, bound=2):
    """Random diagram of free abelian groups with small integer arrow matrices."""
    from ncspec.diagcat import DiagramAb
    n = int(rng.integers(1, max_objects + 1))
    gens = [int(rng.integers(0, max_gens + 1)) for _ in range(n)]
    arrows = []
    for _ in range(int(rng.integers(0, max_arrows + 1))):
        s, d = (int(x) for x in rng.integers(0, n, size=2))
        arrows.append((s, d, rng.integers(-bound, bound + 1, size=(gens[d], gens[s])).tolist()))
    return DiagramAb(tuple(gens), tuple(arrows))


def cocone_space(diagram, width):
    """Rational basis of all cocones into Z^width, as integer vectors.

    A cocone is one block ``c_a`` per object with ``c_dst @ M = c_src`` per
    arrow; the unknowns are the entries of the concatenated ``width x N`` matrix.
    """
    off = diagram.offsets
    N = off[-1]
    rows = []
    for s, d, mat in diagram.arrows:
        m = np.array(mat.tolist(), dtype=int).reshape(diagram.objects[d].num_generators,
                                                       diagram.objects[s].num_generators)
        for r in range(width):
            for g in range(m.shape[1]):
                row = [0] * (width * N)
                row[r * N + off[s] + g] += 1
                for h in range(m.shape[0]):
                    row[r * N + off[d] + h] -= int(m[h, g])
                rows.append(row)
    if not rows:
        return [np.eye(width * N, dtype=object)[i] for i in range(width * N)]
    basis = sympy.Matrix(rows).nullspace()
    out = []
    for v in basis:
        den = sympy.ilcm(*[sympy.fraction(x)[1] for x in v]) if len(v) else 1
        out.append(np.array([int(x * den) for x in v], dtype=object))
    return out


def random_cocone(diagram, rng, width=2, bound=3):
    """Integer combination of cocone basis vectors, reshaped to ``width x N``."""
    N = diagram.offsets[-1]
    basis = cocone_space(diagram, width)
    vec = np.zeros(width * N, dtype=object)
    for b in basis:
        vec = vec + int(rng.integers(-bound, bound + 1)) * b
    return vec.reshape(width, N)
