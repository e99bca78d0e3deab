import numpy as np
import pytest
import sympy
from sympy.matrices.normalforms import invariant_factors

from helpers import random_algebra
from ncspec.algebra import FdAlgebra, Hom, random_hom, rank_profile
from ncspec.contexts import FinSpace, SpaceMap, diagonal_context, generate_context
from ncspec.errors import ContextMissing
from ncspec.ktheory import (
    K0Standard,
    KTilde,
    core_diagram,
    eta_check,
    k0_hom,
    k0_standard,
    k_top,
    k_top_pullback,
    ktilde_f,
    ktilde_f_kernel,
    small_core_diagram,
)


def colimit_invariants(D):
    """Group of the context diagram from a sympy Smith form of the coarse-graining relations."""
    sizes = [len(c) for c in D.contexts]
    off = np.concatenate([[0], np.cumsum(sizes)])
    rows = []
    for a in D.arrows:
        for i in range(sizes[a.src]):
            row = [0] * int(off[-1])
            row[off[a.src] + i] += 1
            for j, x in enumerate(a.assignment):
                if x == i:
                    row[off[a.dst] + j] -= 1
            if any(row):
                rows.append(row)
    if not rows:
        return (), int(off[-1])
    M = sympy.Matrix(rows)
    facs = [abs(int(x)) for x in invariant_factors(M, domain=sympy.ZZ)]
    return tuple(sorted(d for d in facs if d > 1)), int(off[-1]) - M.rank()


def test_k_top():
    assert str(k_top(FinSpace(("a", "b", "c")))) == "Z^3"
    assert str(k_top(FinSpace(()))) == "0"


def test_k_top_pullback_is_contravariant(rng):
    for _ in range(20):
        nx, ny, nz = (int(x) for x in rng.integers(1, 5, size=3))
        X, Y, Z = (FinSpace(tuple(range(n))) for n in (nx, ny, nz))
        f = SpaceMap(X, Y, tuple(int(x) for x in rng.integers(0, ny, size=nx)))
        g = SpaceMap(Y, Z, tuple(int(x) for x in rng.integers(0, nz, size=ny)))
        assert np.array_equal(k_top_pullback(f.then(g)), k_top_pullback(f).dot(k_top_pullback(g)))


@pytest.mark.parametrize("spec, expected", [
    ("C", "Z"), ("M2", "Z"), ("M2+M3", "Z^2"), ("C+C+C", "Z^3"), ("M4+M4+M4", "Z^3"),
])
def test_k0_standard(spec, expected):
    G, class_of = k0_standard(FdAlgebra.parse(spec))
    assert str(G) == expected


def test_k0_classes_add():
    A = FdAlgebra.parse("M2+M3")
    k0 = K0Standard(A)
    assert k0.class_of_tuple((1, 2)) == k0.class_of_tuple((1, 0)) + k0.class_of_tuple((0, 2))
    assert k0.class_of_tuple((0, 0)).coords == (0, 0)


def test_k0_of_amplification():
    A = FdAlgebra.parse("M2")
    k0 = K0Standard(A, amplification=2)
    assert str(k0.group) == "Z"
    p = A.amplify(2).rank_pattern([3])
    assert k0.class_of(p) == k0.class_of_tuple((3,))
    assert k0.class_of_tuple((3,)).coords == (3,)


@pytest.mark.parametrize("spec", ["C", "M2", "M3", "M2+M3", "C+C", "M2+C+M2", "M4"])
def test_ktilde_matches_independent_colimit(spec):
    A = FdAlgebra.parse(spec)
    D = core_diagram(A)
    G, _ = ktilde_f(A, D)
    torsion, free = colimit_invariants(D)
    assert tuple(sorted(G.torsion)) == torsion and G.free_rank == free
    assert free == A.k and not torsion


@pytest.mark.parametrize("spec", ["C", "M2", "M2+M3", "C+C+C", "M4+M4+M4"])
def test_eta_identity_on_generators(spec):
    report = eta_check(FdAlgebra.parse(spec))
    assert report.iso
    assert [[int(x) for x in r] for r in report.eta] == np.eye(FdAlgebra.parse(spec).k, dtype=int).tolist()
    for row in report.generator_table:
        assert row["k0"] == row["ktilde_f"] == list(row["ranks"])


def test_ktilde_additive_on_orthogonal_projections():
    A = FdAlgebra.parse("M2+M3")
    kt = KTilde(A, core_diagram(A))
    p = A.diagonal([[1, 0], [1, 0, 0]])
    q = A.diagonal([[0, 0], [0, 1, 1]])
    assert kt.class_of_u(p + q) == kt.class_of_u(p) + kt.class_of_u(q)
    assert kt.class_of_u(A.zero()).coords == (0, 0)


def test_ktilde_unitary_invariance(rng):
    A = FdAlgebra.parse("M3+M2")
    for _ in range(10):
        p = A.random_projection(rng)
        extra = [generate_context(A, [p])]
        kt = KTilde(A, core_diagram(A, extra_contexts=extra))
        assert kt.class_of_u(p) == kt.class_of_u(A.rank_pattern(rank_profile(p)))
        assert kt.class_of_u(p).coords == rank_profile(p)


def test_missing_context():
    A = FdAlgebra.parse("M2")
    kt = KTilde(A, core_diagram(A))
    p = A.random_projection(np.random.default_rng(3), (1,))
    with pytest.raises(ContextMissing):
        kt.class_of_u(p)


def test_random_enrichments_keep_the_group(rng):
    for _ in range(20):
        A = random_algebra(rng, max_summands=2, max_block=3)
        extra = [generate_context(A, [A.random_projection(rng)]) for _ in range(2)]
        D = core_diagram(A, extra_contexts=extra)
        report = eta_check(A, D_A=D)
        assert report.iso and str(report.ktilde) == str(report.k0)
        torsion, free = colimit_invariants(D)
        assert (torsion, free) == ((), A.k)


def test_k0_hom_is_multiplicity_matrix():
    A, B = FdAlgebra.parse("M2+C"), FdAlgebra.parse("M5+M2")
    phi = Hom(A, B, [[2, 1], [1, 0]])
    assert [[int(x) for x in r] for r in k0_hom(phi)] == [[2, 1], [1, 0]]


def test_naturality_for_doubling_embedding():
    A, B = FdAlgebra.parse("M2"), FdAlgebra.parse("M4")
    report = eta_check(A, Hom(A, B, [[2]]))
    assert report.natural
    assert report.ktilde_hom.tolist() == [[2]]


def test_naturality_random(rng):
    for _ in range(10):
        A = random_algebra(rng, max_summands=2, max_block=3)
        phi = random_hom(A, rng, max_block=6)
        assert eta_check(A, phi).natural


def test_kernel_route_agrees():
    for spec in ("C", "M2", "M2+M3", "C+C"):
        A = FdAlgebra.parse(spec)
        assert ktilde_f_kernel(A).isomorphic(eta_check(A).ktilde)


def test_small_core_diagram_suffices_for_diagonal():
    A = FdAlgebra.parse("M3+M2")
    D = small_core_diagram(A)
    assert D.index_of(diagonal_context(A)) is not None
    assert str(KTilde(A, D).group) == "Z^2"
