import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncspec.algebra import AlgElement, FdAlgebra, rank_profile
from ncspec.contexts import (
    Context,
    ContextMorphism,
    DiagramBuilder,
    SpatialDiagram,
    adjacent_transpositions,
    atom_id,
    build_core_diagram,
    center_context,
    diagonal_context,
    generate_context,
    rank_pattern_seeds,
    spectrum_map,
    trivial_context,
)
from ncspec.errors import InvalidMorphism, NonCommutingGenerators


def diagonal_partition(V):
    """A diagonal context as a set partition of the global diagonal positions."""
    parts = []
    for a in V.atoms:
        d = np.concatenate([np.diag(b) for b in a.blocks])
        off = sum(np.abs(b - np.diag(np.diag(b))).sum() for b in a.blocks)
        assert off < 1e-9, "context is not diagonal"
        parts.append(frozenset(int(i) for i in np.flatnonzero(np.abs(d - 1) < 1e-9)))
    return frozenset(parts)


def refines(fine, coarse):
    return all(any(f <= c for c in coarse) for f in fine)


def transposition_perms(A):
    out, pos = [], 0
    for n in A.block_sizes:
        for j in range(n - 1):
            perm = list(range(sum(A.block_sizes)))
            perm[pos + j], perm[pos + j + 1] = perm[pos + j + 1], perm[pos + j]
            out.append(perm)
        pos += n
    return out


def oracle_arrow_counts(A, partitions):
    """Refinement pairs and nontrivial transposition images among the given partitions."""
    incl = sum(1 for p in partitions for q in partitions if p != q and refines(q, p))
    ad = 0
    pset = set(partitions)
    for perm in transposition_perms(A):
        for p in partitions:
            image = frozenset(frozenset(perm[i] for i in part) for part in p)
            if image in pset and any(frozenset(perm[i] for i in part) != part for part in p):
                ad += 1
    return incl, ad


# contexts -------------------------------------------------------------------

def test_center_and_diagonal_contexts():
    A = FdAlgebra.parse("M2+M3")
    assert len(center_context(A)) == 2
    assert len(diagonal_context(A)) == 5
    assert len(trivial_context(A)) == 1
    assert center_context(A).contains_center()
    assert not trivial_context(A).contains_center()


def test_generated_context_of_matrix_unit():
    A = FdAlgebra.parse("M2")
    V = generate_context(A, [A.matrix_unit(0, 0, 0)])
    assert V.ranks == ((1,), (1,))
    assert V.same_as(diagonal_context(A))


def test_generated_context_is_canonical(rng):
    A = FdAlgebra.parse("M3+M2")
    p = A.random_projection(rng)
    q = A.identity() - p
    assert generate_context(A, [p]).key == generate_context(A, [q]).key


def test_noncommuting_generators_rejected(rng):
    A = FdAlgebra.parse("M2")
    with pytest.raises(NonCommutingGenerators):
        generate_context(A, [A.rank_pattern([1]), A.random_projection(rng, (1,))])


def test_context_validation():
    A = FdAlgebra.parse("M2")
    e11 = A.matrix_unit(0, 0, 0)
    with pytest.raises(ValueError):
        Context(A, [e11])
    with pytest.raises(ValueError):
        Context(A, [e11, A.zero(), A.matrix_unit(0, 1, 1)])
    with pytest.raises(ValueError):
        Context(A, [])


def test_atom_ids_are_stable():
    A = FdAlgebra.parse("M2")
    e11 = A.matrix_unit(0, 0, 0)
    assert atom_id(e11) == atom_id(A.diagonal([[1, 0]]))
    assert len(atom_id(e11)) == 12
    assert atom_id(e11) != atom_id(A.matrix_unit(0, 1, 1))


def test_masks():
    A = FdAlgebra.parse("M3")
    V = diagonal_context(A)
    p = A.diagonal([[1, 1, 0]])
    mask = V.mask_of(p)
    assert V.projection(mask).close_to(p)
    assert V.mask_below(A.rank_pattern([2])) == mask
    assert V.mask_of(A.matrix_unit(0, 0, 1) + A.matrix_unit(0, 1, 0)) is None


# morphisms and spectra --------------------------------------------------------

def test_swap_morphism_on_m2():
    A = FdAlgebra.parse("M2")
    V = diagonal_context(A)
    swap = AlgElement(A, [np.array([[0, 1], [1, 0]])])
    phi = ContextMorphism(V, V, swap)
    assert phi.kind == "Ad"
    assert spectrum_map(phi).assignment == (1, 0)
    assert spectrum_map(ContextMorphism(V, V)).assignment == (0, 1)


def test_inclusion_spectrum_map_is_surjective(rng):
    for _ in range(20):
        A = FdAlgebra(tuple(int(x) for x in rng.integers(1, 4, size=int(rng.integers(1, 3)))))
        u = A.random_unitary(rng)
        fine = Context(A, [a.conj_by(u) for a in diagonal_context(A).atoms])
        coarse_atoms = {}
        for a in fine.atoms:
            key = int(rng.integers(0, 2))
            coarse_atoms[key] = coarse_atoms.get(key, A.zero()) + a
        coarse = Context(A, list(coarse_atoms.values()))
        f = spectrum_map(ContextMorphism(coarse, fine))
        assert f.is_surjective()
        # each fine atom lies under the coarse atom it is sent to
        for j, a in enumerate(fine.atoms):
            assert (coarse.atoms[f(j)] @ a).close_to(a, 1e-8)


def test_invalid_morphism():
    A = FdAlgebra.parse("M2")
    V = diagonal_context(A)
    with pytest.raises(InvalidMorphism):
        ContextMorphism(V, center_context(A))


def test_spectrum_is_contravariant(rng):
    for _ in range(20):
        A = FdAlgebra.parse("M3")
        D = diagonal_context(A)
        u, v = A.random_unitary(rng), A.random_unitary(rng)
        V1 = generate_context(A, [A.rank_pattern([1])])
        V2 = D.conjugate(u)
        V3 = V2.conjugate(v)
        phi = ContextMorphism(V1, V2, u)
        psi = ContextMorphism(V2, V3, v)
        lhs = spectrum_map(phi.compose(psi))
        rhs = spectrum_map(psi).then(spectrum_map(phi))
        assert lhs.assignment == rhs.assignment


def test_identity_has_identity_spectrum(rng):
    A = FdAlgebra.parse("M2+M2")
    V = generate_context(A, [A.random_projection(rng)])
    assert spectrum_map(ContextMorphism(V, V)).assignment == tuple(range(len(V)))


# core diagrams --------------------------------------------------------------

def test_core_diagram_swap_example():
    A = FdAlgebra.parse("M2")
    D = build_core_diagram(A, [A.matrix_unit(0, 0, 0)])
    assert len(D.contexts) == 2
    arrows = [(a.src, a.dst, a.kind, a.assignment) for a in D.arrows]
    assert arrows == [(0, 1, "incl", (0, 0)), (1, 1, "Ad", (1, 0))]


def test_core_diagram_of_c():
    D = build_core_diagram(FdAlgebra.parse("C"), rank_pattern_seeds(FdAlgebra.parse("C")))
    assert len(D.contexts) == 1 and not D.arrows


@pytest.mark.parametrize("spec, contexts, arrows", [
    ("M2", 2, 2),
    ("M2+M3", 11, 27),
    ("C+C", 1, 0),
    ("M3", 4, 7),
])
def test_core_diagram_against_partition_oracle(spec, contexts, arrows):
    A = FdAlgebra.parse(spec)
    D = build_core_diagram(A, rank_pattern_seeds(A))
    parts = [diagonal_partition(V) for V in D.contexts]
    assert len(set(parts)) == len(parts)
    assert frozenset(frozenset([i]) for i in range(sum(A.block_sizes))) in parts
    incl, ad = oracle_arrow_counts(A, parts)
    assert len(D.inclusions()) == incl
    assert len(D.ad_arrows()) == ad
    assert (len(D.contexts), len(D.arrows)) == (contexts, arrows)


def test_core_diagram_is_idempotent():
    A = FdAlgebra.parse("M2+M3")
    D1 = build_core_diagram(A, rank_pattern_seeds(A))
    D2 = build_core_diagram(A, rank_pattern_seeds(A) + rank_pattern_seeds(A))
    assert [c.key for c in D1.contexts] == [c.key for c in D2.contexts]
    assert len(D1.arrows) == len(D2.arrows)


def test_core_diagram_arrows_validate(rng):
    A = FdAlgebra.parse("M2+M2")
    extra = [generate_context(A, [A.random_projection(rng)])]
    D = build_core_diagram(A, rank_pattern_seeds(A), extra_contexts=extra)
    D.validate()
    assert D.index_of(extra[0]) is not None


def test_builder_rejects_duplicates():
    A = FdAlgebra.parse("M2")
    b = DiagramBuilder(A)
    i = b.add_context(center_context(A))
    j = b.add_context(diagonal_context(A))
    assert b.add_context(diagonal_context(A)) == j
    assert b.add_arrow(i, j)
    assert not b.add_arrow(i, j)
    assert not b.add_arrow(j, j)


def test_adjacent_transpositions_are_unitary():
    A = FdAlgebra.parse("M3+C+M2")
    us = adjacent_transpositions(A)
    assert len(us) == 3
    for u in us:
        assert (u @ u.adj()).close_to(A.identity())


# serialization ---------------------------------------------------------------

def test_json_roundtrip():
    A = FdAlgebra.parse("M2+M3")
    D = build_core_diagram(A, rank_pattern_seeds(A))
    doc = json.loads(json.dumps(D.to_json()))
    E = SpatialDiagram.from_json(doc)
    assert [c.key for c in E.contexts] == [c.key for c in D.contexts]
    assert [(a.src, a.dst, a.kind, a.assignment) for a in E.arrows] == \
        [(a.src, a.dst, a.kind, a.assignment) for a in D.arrows]
    assert E.to_json() == D.to_json()


def test_dot_output():
    A = FdAlgebra.parse("M2")
    D = build_core_diagram(A, [A.matrix_unit(0, 0, 0)])
    assert D.to_dot() == (
        "digraph spatial {\n"
        '  c0 [label="(2)"];\n'
        '  c1 [label="(1) (1)"];\n'
        '  c0 -> c1 [label="incl"];\n'
        '  c1 -> c1 [label="Ad"];\n'
        "}\n"
    )


def test_from_json_rejects_bad_unitary():
    A = FdAlgebra.parse("M2")
    D = build_core_diagram(A, [A.matrix_unit(0, 0, 0)])
    doc = D.to_json()
    doc["morphisms"][1]["u"] = [[[[1, 0], [1, 0]], [[0, 0], [1, 0]]]]
    with pytest.raises((InvalidMorphism, ValueError)):
        SpatialDiagram.from_json(doc)


@given(st.lists(st.integers(1, 3), min_size=1, max_size=2), st.integers(0, 2 ** 32 - 1))
def test_generated_context_ranks_sum_to_blocks(sizes, seed):
    rng = np.random.default_rng(seed)
    A = FdAlgebra(tuple(sizes))
    V = generate_context(A, [A.random_projection(rng)], include_center=True)
    totals = np.sum([r for r in V.ranks], axis=0)
    assert tuple(totals) == A.block_sizes
    assert all(rank_profile(a) == r for a, r in zip(V.atoms, V.ranks))
