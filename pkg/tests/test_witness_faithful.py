import networkx as nx
import pytest

from eppakit.errors import InputError, PreconditionError
from eppakit.search import enumerate_partial_automorphisms
from eppakit.structure import (Morphism, check_morphism, irreducible_substructures,
                               make_graph)
from eppakit.verify import audit_witness_size, verify_coherence, verify_eppa_witness, verify_faithfulness
from eppakit.witness.base import identity_witness
from eppakit.witness.faithful import (build_faithful_witness, certify_faithfulness,
                                      enumerate_bad_irreducibles, extend_faithful_pa)
from eppakit.witness.graph import build_graph_witness


def _triangles(S):
    G = nx.Graph()
    G.add_edges_from(S.rel("E"))
    return {frozenset(c) for c in nx.enumerate_all_cliques(G) if len(c) == 3}


@pytest.fixture(scope="module")
def p3_layer():
    P3 = make_graph([1, 2, 3], [(1, 2), (2, 3)])
    return P3, build_faithful_witness(P3, build_graph_witness(P3))


def test_base_equal_to_a_has_nothing_bad(P3):
    assert enumerate_bad_irreducibles(P3, P3.vertices) == []


def test_triangles_of_the_p3_graph_witness_are_exactly_the_bad_sets(P3):
    W0 = build_graph_witness(P3)
    bad = enumerate_bad_irreducibles(W0.structure, W0.psi_image)
    assert set(bad) == _triangles(W0.structure)
    assert len(bad) == 8


def test_singletons_of_a_vertex_transitive_base_are_never_bad():
    A = make_graph([1], [])
    B0 = make_graph([1, 2, 3, 4], [(1, 2), (2, 3), (3, 4), (4, 1)])
    psi = Morphism(A.language.identity, {1: 1})
    assert all(len(I) > 1 for I in enumerate_bad_irreducibles(B0, psi.image))


def test_no_bad_sets_gives_a_copy_of_the_base(K2):
    W0 = build_graph_witness(K2)
    W = build_faithful_witness(K2, W0)
    assert W.bad == []
    proj = Morphism(K2.language.identity, {v: v[0] for v in W.structure.vertices})
    assert check_morphism(proj, W.structure, W0.structure, "isomorphism")


def test_edgeless_pair_loses_every_edge():
    A = make_graph([1, 2], [])
    W0 = build_graph_witness(A)
    W = build_faithful_witness(A, W0)
    assert len(W.bad) == len(W0.structure.rel("E")) // 2
    assert W.structure.rel("E") == frozenset()
    assert verify_faithfulness(A, W.structure, W.psi)


def test_p3_layer_is_a_faithful_coherent_witness(p3_layer):
    P3, W = p3_layer
    assert len(W.structure) == 48
    assert verify_faithfulness(P3, W.structure, W.psi)
    assert verify_eppa_witness(P3, W.structure, W.psi, W.extend)
    assert verify_coherence(P3, W.structure, W.psi, W.extend)
    assert not _triangles(W.structure)


def test_projection_is_a_homomorphism_embedding_and_inverts_psi(p3_layer):
    P3, W = p3_layer
    proj = Morphism(P3.language.identity, {v: v[0] for v in W.structure.vertices})
    assert check_morphism(proj, W.structure, W.base_structure, "homomorphism-embedding")
    assert all(W.project(W.psi(a)) == W.B0.psi(a) for a in P3.vertices)


def test_injections_number_the_copy_in_vertex_order(p3_layer):
    _, W = p3_layer
    for I in W.bad:
        inside = W.base_structure.sort(I & W.A_image)
        assert [W.f_index[I][y] for y in inside] == list(range(1, len(inside) + 1))
        assert len(inside) < len(I)


def test_size_bound_uses_only_base_and_copy(p3_layer):
    P3, W = p3_layer
    assert audit_witness_size("faithful", P3, W.structure, W.base_structure)


def test_every_irreducible_set_is_generic(p3_layer):
    _, W = p3_layer
    irr = irreducible_substructures(W.structure)
    assert irr
    assert all(W.is_generic(W.pairs_of(D)) for D in irr)


def test_certificates_move_every_edge_into_the_copy(p3_layer):
    _, W = p3_layer
    cert = certify_faithfulness(W)
    assert cert.ok and cert.checked == len(cert.certificates)
    for D, theta in cert.certificates:
        assert all(theta(v) in W.psi_image for v in D)


def test_degenerate_layer_certifies_with_identities(K2):
    W = build_faithful_witness(K2, identity_witness(K2))
    assert len(W.structure) == len(K2)
    cert = certify_faithfulness(W)
    assert cert.ok
    assert all(all(theta(v) == v for v in theta.domain) for _, theta in cert.certificates)


def test_empty_map_extends_to_identity(p3_layer):
    P3, W = p3_layer
    theta = extend_faithful_pa(W, Morphism(P3.language.identity, {}))
    assert all(theta(v) == v for v in W.structure.vertices)


def test_partial_automorphisms_of_the_copy_extend(p3_layer):
    _, W = p3_layer
    for phi in enumerate_partial_automorphisms(W.copy_of_base()):
        theta = extend_faithful_pa(W, phi)
        assert check_morphism(theta, W.structure, W.structure, "automorphism")
        assert all(theta(v) == w for v, w in phi.mapping.items())


def test_maps_outside_the_copy_need_a_base_automorphism(p3_layer):
    P3, W = p3_layer
    v = next(v for v in W.structure.vertices if v not in W.psi_image)
    with pytest.raises(InputError):
        extend_faithful_pa(W, Morphism(P3.language.identity, {v: v}))


def test_base_automorphism_must_extend_the_projection(p3_layer):
    P3, W = p3_layer
    a, b = W.psi(1), W.psi(3)
    phi = Morphism(P3.language.identity, {a: b, b: a})
    ident = Morphism(P3.language.identity, {x: x for x in W.base_structure.vertices})
    with pytest.raises(PreconditionError):
        extend_faithful_pa(W, phi, ident)


def test_reachable_mode_matches_full_on_p3(p3_layer):
    P3, W = p3_layer
    R = build_faithful_witness(P3, W.B0, mode="reachable")
    assert verify_eppa_witness(P3, R.structure, R.psi, R.extend)
    assert len(R.structure) <= len(W.structure)


def test_rejects_smaller_base(P3, K2):
    with pytest.raises(InputError):
        build_faithful_witness(P3, identity_witness(K2))
