import itertools

import networkx as nx
import pytest

from eppakit.caps import Caps
from eppakit.errors import InputError, ResourceLimit
from eppakit.structure import Language, Morphism, Structure, check_morphism, make_graph
from eppakit.verify import (audit_witness_size, generic_lifts, unwind_outcome, verify_coherence,
                            verify_eppa_witness, verify_unwind_property)
from eppakit.witness.base import SearchWitness
from eppakit.witness.unwind import (build_unwound_witness, check_edge_relation, cycle_sequences,
                                    edge_graph, extend_unwound_pa, induced_cycles)

C4_EDGES = [(1, 2), (2, 3), (3, 4), (4, 1)]


def _base(A, B0):
    return SearchWitness(A, B0, Morphism.identity(A.language, A.vertices))


def _projection(W):
    return Morphism(W.A.language.identity, {v: v[0] for v in W.structure.vertices})


@pytest.fixture(scope="module")
def c4_layer():
    K2 = make_graph([1, 2], [(1, 2)])
    C4 = make_graph([1, 2, 3, 4], C4_EDGES)
    return K2, C4, build_unwound_witness(K2, _base(K2, C4))


def test_induced_cycles_match_networkx():
    S = make_graph(range(1, 7), [(1, 2), (2, 3), (3, 4), (4, 1), (4, 5), (5, 6), (6, 3)])
    got = induced_cycles(S, "E")
    assert got == [[1, 2, 3, 4], [3, 4, 5, 6]]
    G = edge_graph(S, "E")
    assert len(got) == sum(1 for c in nx.chordless_cycles(G) if len(c) >= 4)


def test_triangles_are_not_long_cycles(P3):
    K3 = make_graph([1, 2, 3], [(1, 2), (2, 3), (1, 3)])
    assert induced_cycles(K3, "E") == []


def test_each_cycle_has_two_sequences_per_vertex():
    seqs = cycle_sequences([1, 2, 3, 4])
    assert len(seqs) == 8 == len(set(seqs))
    assert (1, 2, 3, 4) in seqs and (1, 4, 3, 2) in seqs and (3, 2, 1, 4) in seqs


def test_edge_relation_checks():
    L = Language([("E", 2)])
    with pytest.raises(InputError):
        check_edge_relation(Structure(L, [1], {"E": [(1, 1)]}), "E")
    with pytest.raises(InputError):
        check_edge_relation(Structure(L, [1, 2], {"E": [(1, 2)]}), "E")
    with pytest.raises(InputError):
        check_edge_relation(Structure(Language([("E", 1)]), [1]), "E")
    swap = Language([("E", 2), ("F", 2)], group=[{"E": "F", "F": "E"}])
    with pytest.raises(InputError):
        check_edge_relation(Structure(swap, [1]), "E")


def test_edge_must_be_complete_on_the_copy():
    A = make_graph([1, 2], [])
    with pytest.raises(InputError):
        build_unwound_witness(A, _base(A, make_graph([1, 2], [])))


def test_base_without_long_cycles_is_copied():
    K2 = make_graph([1, 2], [(1, 2)])
    P4 = make_graph([1, 2, 3, 4], [(1, 2), (2, 3), (3, 4)])
    W = build_unwound_witness(K2, _base(K2, P4))
    assert W.cycles == []
    assert check_morphism(_projection(W), W.structure, P4, "isomorphism")


def test_c4_layer_shape(c4_layer):
    _, C4, W = c4_layer
    assert W.cycles == [[1, 2, 3, 4]]
    assert len(W.sequences) == 8
    assert len(W.structure) == 4 * 2 ** 8
    assert audit_witness_size("unwind", W.A, W.structure, C4)
    assert check_morphism(_projection(W), W.structure, C4, "homomorphism-embedding")


def test_long_induced_cycles_wrap_the_base_cycle_twice(c4_layer):
    _, _, W = c4_layer
    G = edge_graph(W.structure, "E")
    assert {len(c) for c in nx.connected_components(G)} == {8}
    cycles = induced_cycles(W.structure, "E")
    assert cycles and all(len(c) == 8 and len({v[0] for v in c}) == 4 for c in cycles)


def test_no_compatible_lift_of_the_cycle(c4_layer):
    _, _, W = c4_layer
    for cyc in W.cycles:
        assert generic_lifts(W, cyc) == []
    assert generic_lifts(W, [1, 2])
    # two vertices of a cycle that are not neighbours on it are never compatible
    assert generic_lifts(W, [1, 3]) == []


def test_trichotomy_on_one_component(c4_layer):
    _, C4, W = c4_layer
    G = edge_graph(W.structure, "E")
    comp = sorted(next(iter(nx.connected_components(G))), key=W.structure.pos)
    f = _projection(W)
    for r in range(len(comp) + 1):
        for X in itertools.combinations(comp, r):
            assert unwind_outcome(W.structure, C4, f, "E", X) is not None


def test_unwind_property_report(c4_layer):
    _, C4, W = c4_layer
    report = verify_unwind_property(W.structure, C4, _projection(W), samples=500)
    assert report and report.stats["mode"] == "cycles+samples"


def test_unwind_property_fails_on_the_base_itself():
    C4 = make_graph([1, 2, 3, 4], C4_EDGES)
    report = verify_unwind_property(C4, C4, Morphism.identity(C4.language, C4.vertices))
    assert not report
    assert sorted(report.counterexample["subset"]) == [1, 2, 3, 4]


def test_eppa_and_coherence(c4_layer):
    K2, _, W = c4_layer
    assert verify_eppa_witness(K2, W.structure, W.psi, W.extend)
    assert verify_coherence(K2, W.structure, W.psi, W.extend)


def test_identity_and_empty_maps_extend_to_identity(c4_layer):
    K2, _, W = c4_layer
    for phi in (Morphism(K2.language.identity, {}),
                Morphism(K2.language.identity, {W.psi(a): W.psi(a) for a in K2.vertices})):
        theta = extend_unwound_pa(W, phi)
        assert all(theta(v) == v for v in W.structure.vertices)


def test_swapping_the_ends_of_a_cycle_edge(c4_layer):
    K2, C4, W = c4_layer
    a, b = W.psi(1), W.psi(2)
    phi = Morphism(K2.language.identity, {a: b, b: a})
    reflection = Morphism(K2.language.identity, {1: 2, 2: 1, 3: 4, 4: 3})
    assert check_morphism(reflection, C4, C4, "automorphism")
    theta = extend_unwound_pa(W, phi, reflection)
    assert check_morphism(theta, W.structure, W.structure, "automorphism")
    assert theta(a) == b and theta(b) == a
    # the shared edge forces one decision per cycle sequence
    assert W.flip_set(phi, reflection) <= set(W.sequences)


def test_reachable_mode_keeps_only_the_copy(c4_layer):
    K2, _, W = c4_layer
    R = build_unwound_witness(K2, W.B0, mode="reachable")
    assert set(R.structure.vertices) == set(R.psi_image)
    assert verify_eppa_witness(K2, R.structure, R.psi, R.extend)


def test_cycle_cap():
    K2 = make_graph([1, 2], [(1, 2)])
    C4 = make_graph([1, 2, 3, 4], C4_EDGES)
    with pytest.raises(ResourceLimit):
        build_unwound_witness(K2, _base(K2, C4), caps=Caps(max_cycles=0))
    assert len(induced_cycles(C4, "E", limit=1)) == 1
