import random

import pytest

from eppakit.errors import InputError
from eppakit.structure import Morphism, check_morphism, is_irreducible, make_graph
from eppakit.verify import verify_coherence, verify_eppa_witness, verify_faithfulness
from eppakit.witness.graph import build_graph_witness
from eppakit.witness.pipeline import (EDGE, amalgamate_via_eppa, build_pipeline_witness,
                                      unwinding_rounds)
from eppakit.witness.tree import check_tree_amalgamation


@pytest.fixture(scope="module")
def k2_pipeline():
    K2 = make_graph([1, 2], [(1, 2)])
    return K2, build_pipeline_witness(K2, build_graph_witness(K2), 2)


@pytest.mark.parametrize("n,rounds", [(1, 1), (2, 2), (3, 7), (4, 19)])
def test_round_count(n, rounds):
    assert unwinding_rounds(n) == rounds


def test_round_count_needs_positive_n():
    with pytest.raises(InputError):
        unwinding_rounds(0)


def test_stages_and_language(k2_pipeline):
    K2, P = k2_pipeline
    assert P.rounds == 2 and len(P.stages) == 3
    assert P.stages[0].kind == "faithful"
    assert [W.kind for W in P.stages[1:]] == ["unwind", "unwind"]
    assert P.structure.language == K2.language
    assert all(EDGE in W.structure.language.symbols for W in P.stages)


def test_output_is_a_faithful_coherent_witness(k2_pipeline):
    K2, P = k2_pipeline
    assert verify_eppa_witness(K2, P.structure, P.psi, P.extend)
    assert verify_coherence(K2, P.structure, P.psi, P.extend)
    assert verify_faithfulness(K2, P.structure, P.psi)


def test_stage_maps_are_homomorphism_embeddings(k2_pipeline):
    _, P = k2_pipeline
    for i in range(1, len(P.stages)):
        f = P.stage_map(i)
        assert check_morphism(f, P.stages[i].structure, P.stages[i - 1].structure,
                              "homomorphism-embedding")
    assert check_morphism(P.to_base(), P.structure, P.B0.structure, "homomorphism-embedding")


def test_edge_relation_is_complete_on_the_expanded_base(k2_pipeline):
    _, P = k2_pipeline
    base = P.stages[0].base_structure
    assert len(base.rel(EDGE)) == len(base) * (len(base) - 1)


def test_tree_certificates_on_seeded_pairs(k2_pipeline):
    _, P = k2_pipeline
    rng = random.Random(0)
    for _ in range(20):
        X = rng.sample(P.structure.vertices, 2)
        cert = P.tree_certificate(X)
        assert set(X) <= set(cert.vertices)
        assert set(cert.chase.image) <= set(cert.image)
        assert 0 <= cert.stage < len(P.stages)
        assert check_tree_amalgamation(cert.trace) == []


def test_reserved_symbol_is_rejected():
    K2 = make_graph([1, 2], [(1, 2)])
    with pytest.raises(InputError, match="reserved"):
        build_pipeline_witness(K2, build_graph_witness(K2), 2, edge="E")


def test_reducible_input_is_rejected():
    A = make_graph([1, 2], [])
    assert not is_irreducible(A)
    with pytest.raises(InputError, match="irreducible"):
        build_pipeline_witness(A, build_graph_witness(A), 2)


def test_base_must_match_the_structure(K2, P3):
    with pytest.raises(InputError):
        build_pipeline_witness(K2, build_graph_witness(P3), 2)


def _check_square(C, b1, b2, B1, B2, A, a1, a2):
    assert check_morphism(b1, B1, C, "embedding")
    assert check_morphism(b2, B2, C, "embedding")
    assert all(b1(a1(a)) == b2(a2(a)) for a in A.vertices)


def test_amalgamation_over_the_empty_structure(K2):
    E = make_graph([], [])
    e = Morphism(K2.language.identity, {})
    C, b1, b2 = amalgamate_via_eppa(K2, K2, E, e, e, build_graph_witness)
    _check_square(C, b1, b2, K2, K2, E, e, e)
    assert set(b1.image).isdisjoint(b2.image)


def test_two_edges_over_a_shared_vertex(K2):
    A = make_graph([1], [])
    a1 = Morphism(K2.language.identity, {1: 2})
    a2 = Morphism(K2.language.identity, {1: 1})
    C, b1, b2 = amalgamate_via_eppa(K2, K2, A, a1, a2, build_graph_witness)
    _check_square(C, b1, b2, K2, K2, A, a1, a2)
    assert len(set(b1.image) | set(b2.image)) == 3


def test_three_vertex_graphs_over_an_edge(P3):
    K3 = make_graph([1, 2, 3], [(1, 2), (2, 3), (1, 3)])
    A = make_graph([1, 2], [(1, 2)])
    a1 = Morphism(A.language.identity, {1: 1, 2: 2})
    a2 = Morphism(A.language.identity, {1: 3, 2: 1})
    C, b1, b2 = amalgamate_via_eppa(P3, K3, A, a1, a2, build_graph_witness)
    _check_square(C, b1, b2, P3, K3, A, a1, a2)


def test_amalgamation_maps_must_embed(K2, P3):
    A = make_graph([1, 2], [])
    bad = Morphism(A.language.identity, {1: 1, 2: 2})
    with pytest.raises(InputError):
        amalgamate_via_eppa(K2, P3, A, bad, bad, build_graph_witness)
