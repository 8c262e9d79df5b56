"""Brute-force checks for the claims the constructions make.

Every check returns a :class:`VerifyReport`; a failing report carries a
counterexample that reproduces the failure when fed back.
"""

from __future__ import annotations

import itertools
import random
import time
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from math import comb

import networkx as nx

from . import __version__
from .caps import Caps, resolve
from .errors import InputError
from .search import (enumerate_partial_automorphisms, extend_to_automorphism,
                     find_automorphism_with_image)
from .structure import (Morphism, Structure, check_morphism, induced_substructure,
                        irreducible_substructures, vertex_closures)


@dataclass
class VerifyReport:
    check: str
    passed: bool
    instance: dict = field(default_factory=dict)
    counterexample: dict | None = None
    stats: dict = field(default_factory=dict)

    def __bool__(self):
        return self.passed

    def to_json(self) -> dict:
        out = asdict(self)
        out["version"] = __version__
        return out


def _show(v):
    return v if isinstance(v, (int, str)) else repr(v)


def morphism_payload(m: Morphism, L=None) -> dict:
    return {"perm": L.perm_str(m.perm) if L is not None else list(m.perm),
            "map": [[_show(a), _show(b)] for a, b in m.mapping.items()]}


def _copy_of_A(B: Structure, psi: Morphism) -> Structure:
    return induced_substructure(B, psi.mapping.values())


def _instance(A: Structure, B: Structure) -> dict:
    return {"A_vertices": len(A), "B_vertices": len(B), "language": repr(A.language)}


def verify_eppa_witness(A: Structure, B: Structure, psi: Morphism, extender=None,
                        caps: Caps | None = None) -> VerifyReport:
    """Every partial automorphism of ``psi(A)`` extends to an automorphism of ``B``.

    With ``extender`` its output is checked; without it a backtracking search
    decides extendability.
    """
    caps = resolve(caps)
    start = time.perf_counter()
    ok = check_morphism(psi, A, B, "embedding")
    if not ok:
        return VerifyReport("eppa", False, _instance(A, B), {"reason": f"psi: {ok.violation}"})
    pas = enumerate_partial_automorphisms(_copy_of_A(B, psi), caps)
    back = {w: a for a, w in psi.mapping.items()}
    L = B.language
    for phi in pas:
        if extender is not None:
            theta = extender(phi)
            good = check_morphism(theta, B, B, "automorphism")
            reason = None if good else good.violation
            if good and (theta.perm != phi.perm or any(theta(v) != w for v, w in phi.mapping.items())):
                good, reason = False, "extension does not contain the partial map"
        else:
            theta = extend_to_automorphism(B, phi, caps)
            good = theta is not None
            reason = None if good else "no automorphism contains the partial map"
        if not good:
            ce = {"reason": reason, "partial_automorphism": morphism_payload(phi, L),
                  "in_A": [[_show(back[v]), _show(back[w])] for v, w in phi.mapping.items()]}
            return VerifyReport("eppa", False, _instance(A, B), ce,
                                {"partial_automorphisms": len(pas), "seconds": time.perf_counter() - start})
    return VerifyReport("eppa", True, _instance(A, B), None,
                        {"partial_automorphisms": len(pas), "extender": extender is not None,
                         "seconds": time.perf_counter() - start})


def extendable(B: Structure, phi: Morphism, extender=None, caps: Caps | None = None) -> bool:
    """Whether ``phi`` extends: via the extender's checked output, or by search."""
    if extender is None:
        return extend_to_automorphism(B, phi, caps) is not None
    try:
        theta = extender(phi)
    except InputError:
        return False
    return bool(check_morphism(theta, B, B, "automorphism")) and all(
        theta(v) == w for v, w in phi.mapping.items())


def coherent_triples(pas: list[Morphism], L):
    """Triples ``(f, g, g o f)`` with the range of ``f`` equal to the domain of ``g``."""
    by_domain = defaultdict(list)
    for p in pas:
        by_domain[p.domain].append(p)
    for f in pas:
        for g in by_domain[f.image]:
            h = Morphism(L.compose(g.perm, f.perm), {v: g(f(v)) for v in f.mapping})
            yield f, g, h


def verify_coherence(A: Structure, B: Structure, psi: Morphism, extender,
                     caps: Caps | None = None) -> VerifyReport:
    """``extender(g o f) = extender(g) o extender(f)`` on every coherent triple."""
    caps = resolve(caps)
    start = time.perf_counter()
    L = B.language
    pas = enumerate_partial_automorphisms(_copy_of_A(B, psi), caps)
    count = 0
    for f, g, h in coherent_triples(pas, L):
        count += 1
        tf, tg, th = extender(f), extender(g), extender(h)
        if th != tg.compose(tf):
            ce = {"f": morphism_payload(f, L), "g": morphism_payload(g, L), "h": morphism_payload(h, L)}
            return VerifyReport("coherence", False, _instance(A, B), ce,
                                {"triples": count, "seconds": time.perf_counter() - start})
    return VerifyReport("coherence", True, _instance(A, B), None,
                        {"triples": count, "partial_automorphisms": len(pas),
                         "seconds": time.perf_counter() - start})


def verify_faithfulness(A: Structure, B: Structure, psi: Morphism,
                        caps: Caps | None = None) -> VerifyReport:
    """Every irreducible substructure of ``B`` is moved into ``psi(A)`` by an automorphism."""
    caps = resolve(caps)
    start = time.perf_counter()
    target = frozenset(psi.mapping.values())
    irr = irreducible_substructures(B, caps=caps)
    for C in irr:
        if find_automorphism_with_image(B, C, target, caps) is None:
            ce = {"substructure": [_show(v) for v in B.sort(C)]}
            return VerifyReport("faithful", False, _instance(A, B), ce,
                                {"irreducible": len(irr), "seconds": time.perf_counter() - start})
    return VerifyReport("faithful", True, _instance(A, B), None,
                        {"irreducible": len(irr), "seconds": time.perf_counter() - start})


# -- unwinding ---------------------------------------------------------------


def _edge_count(S: Structure, edge: str, X) -> int:
    X = set(X)
    return sum(1 for a, b in S.rel(edge) if a in X and b in X and a != b) // 2


def _has_long_induced_cycle(S: Structure, edge: str, X) -> bool:
    G = nx.Graph()
    G.add_nodes_from(X)
    G.add_edges_from((a, b) for a, b in S.rel(edge) if a in G and b in G and a != b)
    if G.number_of_nodes() < 4:
        return False
    if nx.is_chordal(G):
        return False
    return True


def unwind_outcome(B: Structure, B0: Structure, f: Morphism, edge: str, X) -> str | None:
    """Which of the three alternatives holds for ``X`` (``a``, ``b``, ``c``), or None."""
    if not _has_long_induced_cycle(B, edge, X):
        return "a"
    img = {f(v) for v in X}
    if len(img) < len(X):
        return "b"
    if _edge_count(B0, edge, img) > _edge_count(B, edge, X):
        return "c"
    return None


def verify_unwind_property(B: Structure, B0: Structure, f: Morphism, edge: str = "E",
                           cap: int = 12, seed: int = 0, samples: int = 10_000,
                           caps: Caps | None = None) -> VerifyReport:
    """For every vertex set ``C`` of ``B``: no induced edge cycle of length at least four
    in ``C``, or ``f`` is not injective on ``C``, or ``f(C)`` has more edges than ``C``.

    Up to ``cap`` vertices every subset is checked.  Beyond it every induced
    cycle of length at least four is checked (a set containing such a cycle
    inherits the alternative of the cycle, so this covers all sets) and
    ``samples`` seeded random sets are checked as well.
    """
    caps = resolve(caps)
    start = time.perf_counter()
    ok = check_morphism(f, B, B0, "homomorphism")
    inst = {"B_vertices": len(B), "B0_vertices": len(B0), "edge": edge, "cap": cap, "seed": seed}
    if not ok:
        return VerifyReport("unwind", False, inst, {"reason": f"f: {ok.violation}"})
    dist = Counter()
    verts = B.vertices

    def fail(X, how):
        return VerifyReport("unwind", False, inst,
                            {"subset": [_show(v) for v in B.sort(X)], "found_in": how},
                            {"outcomes": dict(dist), "seconds": time.perf_counter() - start})

    if len(B) <= cap:
        for r in range(len(B) + 1):
            for X in itertools.combinations(verts, r):
                o = unwind_outcome(B, B0, f, edge, X)
                if o is None:
                    return fail(X, "exhaustive")
                dist[o] += 1
        return VerifyReport("unwind", True, inst, None,
                            {"mode": "exhaustive", "outcomes": dict(dist),
                             "seconds": time.perf_counter() - start})
    G = nx.Graph()
    G.add_nodes_from(verts)
    G.add_edges_from((a, b) for a, b in B.rel(edge) if a != b)
    cycles = 0
    for cyc in nx.chordless_cycles(G):
        if len(cyc) < 4:
            continue
        cycles += 1
        if cycles > caps.max_subsets:
            break
        img = {f(v) for v in cyc}
        if len(img) < len(cyc):
            dist["cycle:b"] += 1
        elif _edge_count(B0, edge, img) > len(cyc):
            dist["cycle:c"] += 1
        else:
            return fail(cyc, "induced-cycle certificate")
    rng = random.Random(seed)
    cyc_list = None
    for i in range(samples):
        if i % 2 == 0:
            k = rng.randint(1, min(cap, len(verts)))
            X = rng.sample(verts, k)
        else:
            if cyc_list is None:
                cyc_list = [c for _, c in zip(range(1000), (c for c in nx.chordless_cycles(G) if len(c) >= 4))]
            if cyc_list:
                X = list(rng.choice(cyc_list))
                near = sorted({w for v in X for w in G[v]} - set(X), key=B.pos)
                X += rng.sample(near, rng.randint(0, min(len(near), cap)))
            else:
                X = rng.sample(verts, rng.randint(1, min(cap, len(verts))))
        o = unwind_outcome(B, B0, f, edge, X)
        if o is None:
            return fail(X, f"sample {i}")
        dist[o] += 1
    return VerifyReport("unwind", True, inst, None,
                        {"mode": "cycles+samples", "induced_cycles": cycles, "samples": samples,
                         "outcomes": dict(dist), "seconds": time.perf_counter() - start})


def generic_lifts(W, X, limit: int = 1) -> list[tuple]:
    """Sets of pairwise compatible witness vertices of a valuation layer projecting onto ``X``.

    ``X`` is a sequence of distinct base vertices; the search is exhaustive.
    """
    X = list(X)
    out = []
    chosen = []

    def rec(i):
        if len(out) >= limit:
            return
        if i == len(X):
            out.append(tuple(chosen))
            return
        for v in W.fibers[X[i]]:
            if all(W._compatible(v, w) for w in chosen):
                chosen.append(v)
                rec(i + 1)
                chosen.pop()

    rec(0)
    return out


# -- sizes -------------------------------------------------------------------


def graph_witness_size(n: int) -> int:
    return n * 2 ** (n - 1) if n else 0


def relational_size(A: Structure) -> int:
    n = len(A)
    return n * 2 ** sum(n ** a - (n - 1) ** a for _, a in A.language.relations)


def function_size_bound(A: Structure, B0: Structure) -> int:
    cl = vertex_closures(A)
    per = len(A.language.group) * sum(len(B0) ** (len(cl[y]) - 1) for y in A.vertices)
    return len(B0) * per


def faithful_size_bound(B0: Structure, caps: Caps | None = None) -> int:
    """Every irreducible set of size at least two counted as bad."""
    through = defaultdict(lambda: 1)
    for I in irreducible_substructures(B0, caps=caps):
        for y in I:
            through[y] *= max(1, len(I) - 1)
    cl = vertex_closures(B0)
    total = 0
    for x in B0.vertices:
        p = 1
        for y in cl[x]:
            p *= through[y]
        total += p
    return total


def unwind_size_bound(B0: Structure, edge: str) -> int:
    G = nx.Graph()
    G.add_nodes_from(B0.vertices)
    G.add_edges_from((a, b) for a, b in B0.rel(edge) if a != b)
    through = Counter()
    for cyc in nx.chordless_cycles(G):
        if len(cyc) >= 4:
            for y in cyc:
                through[y] += 2 * len(cyc)
    cl = vertex_closures(B0)
    return sum(2 ** sum(through[y] for y in cl[x]) for x in B0.vertices)


def audit_witness_size(kind: str, A: Structure, B: Structure, B0: Structure | None = None,
                       edge: str = "E", caps: Caps | None = None) -> VerifyReport:
    """Compare ``|B|`` with the exact graph formula or the upper bound for ``kind``."""
    inst = {"kind": kind, "A_vertices": len(A), "B_vertices": len(B)}
    if kind == "graph":
        expected = graph_witness_size(len(A))
        passed = len(B) == expected
        return VerifyReport("size", passed, inst, None if passed else {"expected": expected},
                            {"expected": expected, "exact": True})
    if kind == "relational":
        bound = relational_size(A)
        passed = len(B) == bound
        return VerifyReport("size", passed, inst, None if passed else {"expected": bound},
                            {"expected": bound, "exact": True})
    if B0 is None:
        raise InputError(f"size audit of {kind!r} witnesses needs the base witness")
    inst["B0_vertices"] = len(B0)
    if kind == "functions":
        bound = function_size_bound(A, B0)
    elif kind == "faithful":
        bound = faithful_size_bound(B0, caps)
    elif kind == "unwind":
        bound = unwind_size_bound(B0, edge)
    else:
        raise InputError(f"unknown witness kind {kind!r}")
    passed = len(B) <= bound
    return VerifyReport("size", passed, inst, None if passed else {"bound": bound},
                        {"bound": bound, "exact": False})


def subset_count(n: int, cap: int) -> int:
    return sum(comb(n, k) for k in range(min(n, cap) + 1))
