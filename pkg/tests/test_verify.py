import random

from eppakit.search import automorphisms, enumerate_partial_automorphisms
from eppakit.structure import Morphism, induced_substructure, make_graph
from eppakit.verify import (audit_witness_size, extendable, subset_count, verify_coherence,
                            verify_eppa_witness, verify_faithfulness, verify_unwind_property)
from eppakit.witness.faithful import build_faithful_witness
from eppakit.witness.graph import build_graph_witness
from eppakit.witness.relational import build_relational_witness

from conftest import structure


def _identity(S):
    return Morphism.identity(S.language, S.vertices)


def _replay_map(S, payload):
    return Morphism(S.language.identity, {a: b for a, b in payload["map"]})


def test_graph_witness_of_k2_passes(K2):
    W = build_graph_witness(K2)
    assert verify_eppa_witness(K2, W.structure, W.psi, W.extend)
    assert verify_eppa_witness(K2, W.structure, W.psi)


def test_path_is_not_its_own_witness(P3):
    report = verify_eppa_witness(P3, P3, _identity(P3))
    assert not report
    pairs = report.counterexample["in_A"]
    assert len(pairs) == 1 and 2 in pairs[0] and set(pairs[0]) & {1, 3}
    phi = _replay_map(P3, report.counterexample["partial_automorphism"])
    assert not extendable(P3, phi)


def test_empty_structure_passes_vacuously():
    E = make_graph([], [])
    report = verify_eppa_witness(E, E, _identity(E))
    assert report and report.stats["partial_automorphisms"] == 1


def test_constructive_and_search_verdicts_agree(P3, K2, C4):
    for A in (K2, P3, C4, make_graph([1, 2, 3], [])):
        W = build_graph_witness(A)
        assert bool(verify_eppa_witness(A, W.structure, W.psi, W.extend)) == \
            bool(verify_eppa_witness(A, W.structure, W.psi)) is True
    assert verify_eppa_witness(C4, C4, _identity(C4))
    P4 = make_graph([1, 2, 3, 4], [(1, 2), (2, 3), (3, 4)])
    for A in (P3, P4):
        assert bool(verify_eppa_witness(A, A, _identity(A))) is False
        assert bool(verify_eppa_witness(A, A, _identity(A), lambda p: _identity(A))) is False


def test_extender_output_must_contain_the_map(K2):
    W = build_graph_witness(K2)
    report = verify_eppa_witness(K2, W.structure, W.psi, lambda p: _identity(W.structure))
    assert not report
    assert report.counterexample["reason"] == "extension does not contain the partial map"


def test_constructive_graph_extension_is_coherent(P3):
    W = build_graph_witness(P3)
    report = verify_coherence(P3, W.structure, W.psi, W.extend)
    assert report and report.stats["triples"] > 0


def test_randomised_extender_is_not_coherent(K2):
    W = build_graph_witness(K2)
    B = W.structure
    auts = automorphisms(B)
    rng = random.Random(3)

    def scatter(phi):
        options = [g for g in auts if all(g(v) == w for v, w in phi.mapping.items())]
        return rng.choice(options)

    report = verify_coherence(K2, B, W.psi, scatter)
    assert not report
    assert set(report.counterexample) == {"f", "g", "h"}


def test_single_vertex_is_coherent():
    A = make_graph([1], [])
    W = build_graph_witness(A)
    report = verify_coherence(A, W.structure, W.psi, W.extend)
    assert report and report.stats["partial_automorphisms"] == 2


def test_copy_itself_is_faithful(K2):
    assert verify_faithfulness(K2, K2, _identity(K2))


def test_faithful_witness_passes_and_plain_witness_fails(P3):
    W0 = build_graph_witness(P3)
    report = verify_faithfulness(P3, W0.structure, W0.psi)
    assert not report
    tri = report.counterexample["substructure"]
    assert len(tri) == 3
    W = build_faithful_witness(P3, W0)
    assert verify_faithfulness(P3, W.structure, W.psi)


def test_acyclic_base_gives_outcome_a(P3):
    report = verify_unwind_property(P3, P3, _identity(P3))
    assert report and set(report.stats["outcomes"]) == {"a"}


def test_unwind_violation_and_replay(C4):
    report = verify_unwind_property(C4, C4, _identity(C4))
    assert not report
    X = report.counterexample["subset"]
    sub = induced_substructure(C4, X)
    again = verify_unwind_property(sub, C4, Morphism(C4.language.identity, {v: v for v in X}))
    assert not again


def test_unwind_non_homomorphism_is_rejected(C4, K2):
    bad = Morphism(C4.language.identity, {v: 1 for v in C4.vertices})
    report = verify_unwind_property(C4, K2, bad)
    assert not report and "reason" in report.counterexample


def test_reports_are_stable_under_rerun(C4):
    W = build_graph_witness(make_graph([1, 2], [(1, 2)]))
    a = verify_unwind_property(W.structure, W.structure, _identity(W.structure), cap=2, seed=7, samples=50)
    b = verify_unwind_property(W.structure, W.structure, _identity(W.structure), cap=2, seed=7, samples=50)
    assert a.stats["outcomes"] == b.stats["outcomes"] and a.instance == b.instance


def test_size_audits(P3, K2):
    assert audit_witness_size("graph", P3, build_graph_witness(P3).structure).stats["expected"] == 12
    one = make_graph([1], [])
    assert audit_witness_size("graph", one, build_graph_witness(one).structure).stats["expected"] == 1
    A = structure(K2.language, [1, 2], {"E": [(1, 2)]})
    report = audit_witness_size("relational", A, build_relational_witness(A).structure)
    assert report and report.stats["expected"] == 16
    assert not audit_witness_size("graph", P3, P3)


def test_failed_reports_serialise_with_version(P3):
    report = verify_eppa_witness(P3, P3, _identity(P3))
    data = report.to_json()
    assert data["passed"] is False and data["version"] and data["counterexample"]


def test_subset_count():
    assert subset_count(4, 2) == 1 + 4 + 6
    assert subset_count(3, 10) == 8


def test_partial_automorphism_count_of_the_k2_copy(K2):
    W = build_graph_witness(K2)
    assert len(enumerate_partial_automorphisms(W.copy_of_base())) == 7
