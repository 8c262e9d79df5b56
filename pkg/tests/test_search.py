import itertools

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eppakit import kernels
from eppakit.caps import Caps
from eppakit.errors import ResourceLimit
from eppakit.search import (automorphisms, embeddings, enumerate_partial_automorphisms,
                            exists_homomorphism_embedding, extend_to_automorphism,
                            find_automorphism_with_image, find_isomorphism, search_maps)
from eppakit.structure import Language, Morphism, Structure, check_morphism, make_graph
from eppakit.witness.graph import build_graph_witness

from conftest import structure
from strategies import REL_FUN, graphs, structures

ENGINES = ["kernel", "python-kernel", "generic"]


def _nx(S):
    G = nx.Graph()
    G.add_nodes_from(S.vertices)
    G.add_edges_from(e for e in S.rel("E"))
    return G


def _nx_automorphism_count(S):
    G = _nx(S)
    return sum(1 for _ in nx.algorithms.isomorphism.GraphMatcher(G, G).isomorphisms_iter())


def test_kernel_implementation_is_reported():
    assert kernels.IMPLEMENTATION in ("cython", "python")


@pytest.mark.parametrize("engine", ENGINES)
@pytest.mark.parametrize("edges,count", [
    ([], 24), ([(0, 1), (1, 2), (2, 3), (3, 0)], 8), ([(0, 1), (1, 2), (2, 3)], 2),
    ([(0, 1), (0, 2), (0, 3)], 6), ([(0, 1), (1, 2), (2, 0), (0, 3)], 2),
])
def test_automorphism_counts_of_four_vertex_graphs(engine, edges, count):
    S = make_graph(range(4), edges)
    found = search_maps(S, S, S.language.identity, mode="iso", limit=10**6, engine=engine)
    assert len(found) == count == _nx_automorphism_count(S)


@pytest.mark.parametrize("A", [make_graph([1, 2, 3], [(1, 2), (2, 3)]),
                               make_graph([1, 2], [(1, 2)])])
def test_automorphism_count_of_graph_witness_matches_networkx(A):
    B = build_graph_witness(A).structure
    assert len(automorphisms(B)) == _nx_automorphism_count(B)


@settings(max_examples=60, deadline=None)
@given(graphs(max_vertices=6))
def test_engines_agree_with_networkx_on_graphs(S):
    expected = _nx_automorphism_count(S)
    for engine in ENGINES:
        found = search_maps(S, S, S.language.identity, mode="iso", limit=10**6, engine=engine)
        assert len(found) == expected
        for m in found:
            assert check_morphism(Morphism(S.language.identity, m), S, S, "automorphism")


@settings(max_examples=60, deadline=None)
@given(structures(max_vertices=4), structures(max_vertices=5))
def test_engines_agree_on_embeddings(S, T):
    results = []
    for engine in ENGINES:
        found = search_maps(S, T, S.language.identity, mode="emb", limit=10**6, engine=engine)
        for m in found:
            assert check_morphism(Morphism(S.language.identity, m), S, T, "embedding")
        results.append(sorted(tuple(sorted((T.pos(v), T.pos(w)) for v, w in m.items())) for m in found))
    assert results[0] == results[1] == results[2]


def _brute_embeddings(S, T):
    out = 0
    for img in itertools.permutations(T.vertices, len(S)):
        m = Morphism(S.language.identity, dict(zip(S.vertices, img)))
        out += bool(check_morphism(m, S, T, "embedding"))
    return out


@settings(max_examples=60, deadline=None)
@given(structures(max_vertices=3), structures(max_vertices=4))
def test_embedding_count_matches_brute_force(S, T):
    assert len(embeddings(S, T)) == _brute_embeddings(S, T)


def test_ternary_relations_use_the_generic_engine():
    L = Language([("T", 3)])
    S = structure(L, [1, 2, 3], {"T": [(1, 2, 3), (2, 3, 1), (3, 1, 2)]})
    assert len(automorphisms(S)) == 3


def test_extend_to_automorphism_respects_partial_map(C4):
    pa = Morphism(C4.language.identity, {0: 1})
    theta = extend_to_automorphism(C4, pa)
    assert theta(0) == 1 and check_morphism(theta, C4, C4, "automorphism")


def test_extend_to_automorphism_can_fail(P3):
    assert extend_to_automorphism(P3, Morphism(P3.language.identity, {2: 1})) is None


def test_find_automorphism_with_image_examples(P3, C4):
    ident = find_automorphism_with_image(P3, {1}, {1, 2})
    assert ident.mapping == {v: v for v in P3.vertices}
    assert find_automorphism_with_image(P3, {2}, {1}) is None
    g = find_automorphism_with_image(C4, {0}, {2})
    assert g(0) == 2 and check_morphism(g, C4, C4, "automorphism")


def test_find_automorphism_with_image_uses_symbol_group():
    L = Language([("U", 1), ("V", 1)], group=[{"U": "V", "V": "U"}])
    S = structure(L, [1, 2], {"U": [(1,)], "V": [(2,)]})
    g = find_automorphism_with_image(S, {1}, {2})
    assert g is not None and g.perm != L.identity


def test_find_isomorphism(P3):
    Q = make_graph(["a", "b", "c"], [("a", "c"), ("c", "b")])
    m = find_isomorphism(P3, Q)
    assert m.mapping[2] == "c"
    assert find_isomorphism(P3, make_graph(["a", "b", "c"], [("a", "b")])) is None


def test_homomorphism_embedding_examples(P3):
    K3 = make_graph([1, 2, 3], [(1, 2), (2, 3), (1, 3)])
    assert exists_homomorphism_embedding(make_graph([1], []), P3)
    assert exists_homomorphism_embedding(P3, P3)
    assert not exists_homomorphism_embedding(K3, P3)
    C5 = make_graph(range(5), [(i, (i + 1) % 5) for i in range(5)])
    assert exists_homomorphism_embedding(C5, K3)


def _brute_he(F, B):
    for img in itertools.product(B.vertices, repeat=len(F)):
        for g in F.language.group:
            m = Morphism(g, dict(zip(F.vertices, img)))
            if check_morphism(m, F, B, "homomorphism-embedding"):
                return True
    return False


@settings(max_examples=60, deadline=None)
@given(structures(max_vertices=3), structures(max_vertices=3))
def test_homomorphism_embedding_matches_brute_force(F, B):
    assert exists_homomorphism_embedding(F, B) == _brute_he(F, B)


def test_search_node_budget():
    S = make_graph(range(7), [])
    with pytest.raises(ResourceLimit):
        search_maps(S, S, S.language.identity, mode="iso", limit=10**6,
                    caps=Caps(max_search_nodes=50), engine="generic")


def test_partial_automorphism_order_is_deterministic(P3):
    first = enumerate_partial_automorphisms(P3)
    second = enumerate_partial_automorphisms(make_graph([1, 2, 3], [(2, 3), (1, 2)]))
    assert first == second
    sizes = [len(p.mapping) for p in first]
    assert sizes == sorted(sizes)


@settings(max_examples=40, deadline=None)
@given(structures(REL_FUN, max_vertices=4), st.data())
def test_engines_agree_on_extension(S, data):
    pas = enumerate_partial_automorphisms(S)
    phi = data.draw(st.sampled_from(pas))
    got = {extend_to_automorphism(S, phi, engine=e) is not None for e in ENGINES}
    assert len(got) == 1
