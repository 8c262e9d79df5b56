"""Integer-valued metric spaces without unit cliques, and free amalgamation classes.

An edge-labelled graph is encoded as a structure with one symmetric binary
relation ``d<k>`` per distance ``k``.  Witnesses are built by the tree-like
pipeline over a small base witness and then completed by shortest paths.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

from .caps import Caps, resolve
from .errors import InputError
from .search import embeddings, enumerate_partial_automorphisms, extend_to_automorphism
from .structure import (Language, Morphism, Structure, check_morphism, free_amalgamation,
                        induced_substructure)
from .witness.base import SearchWitness, Witness
from .witness.pipeline import PipelineWitness, build_pipeline_witness, unwinding_rounds


@dataclass(frozen=True)
class EdgeLabelledGraph:
    vertices: tuple
    labels: dict          # frozenset({x, y}) -> positive integer

    def __post_init__(self):
        vs = set(self.vertices)
        if len(vs) != len(self.vertices):
            raise InputError("duplicate vertices")
        for e, d in self.labels.items():
            if len(e) != 2 or not e <= vs:
                raise InputError(f"bad edge {set(e)!r}")
            if not isinstance(d, int) or d < 1:
                raise InputError(f"labels must be positive integers, got {d!r}")

    @classmethod
    def from_pairs(cls, vertices, pairs) -> "EdgeLabelledGraph":
        """Build from ``(x, y, d)`` triples; a pair may appear once."""
        labels = {}
        for x, y, d in pairs:
            e = frozenset((x, y))
            if e in labels and labels[e] != d:
                raise InputError(f"pair {x!r},{y!r} has two labels")
            labels[e] = d
        return cls(tuple(vertices), labels)

    def label(self, x, y):
        return self.labels.get(frozenset((x, y)))

    def distance_set(self) -> frozenset:
        return frozenset(self.labels.values())

    def neighbours(self) -> dict:
        adj = {v: [] for v in self.vertices}
        for e, d in self.labels.items():
            x, y = tuple(e)
            adj[x].append((y, d))
            adj[y].append((x, d))
        return adj

    def is_complete(self) -> bool:
        n = len(self.vertices)
        return len(self.labels) == n * (n - 1) // 2


@dataclass(frozen=True)
class NonMetricCycle:
    vertices: tuple       # c1, ..., cn; the long edge is {c1, cn}
    labels: tuple         # d(c_i, c_{i+1}) for i < n, then d(c1, cn)

    @property
    def long_edge(self) -> int:
        return self.labels[-1]

    @property
    def path_length(self) -> int:
        return sum(self.labels[:-1])


def metric_language(m: int) -> Language:
    return Language([(f"d{k}", 2) for k in range(1, m + 1)])


def to_structure(G: EdgeLabelledGraph, m: int | None = None) -> Structure:
    m = m or max(G.distance_set(), default=1)
    L = metric_language(m)
    rel = {f"d{k}": set() for k in range(1, m + 1)}
    for e, d in G.labels.items():
        if d > m:
            raise InputError(f"label {d} exceeds {m}")
        x, y = tuple(e)
        rel[f"d{d}"].update({(x, y), (y, x)})
    return Structure(L, G.vertices, rel)


def from_structure(S: Structure) -> EdgeLabelledGraph:
    pairs = []
    for r in S.language.relation_names:
        if not r.startswith("d"):
            raise InputError(f"unexpected relation {r!r} in a distance structure")
        d = int(r[1:])
        for x, y in S.rel(r):
            if x == y:
                raise InputError("distance relations must be irreflexive")
            if (y, x) not in S.rel(r):
                raise InputError("distance relations must be symmetric")
            pairs.append((x, y, d))
    return EdgeLabelledGraph.from_pairs(S.vertices, pairs)


def _shortest(G: EdgeLabelledGraph, src, skip=None) -> tuple[dict, dict]:
    """Dijkstra from ``src``, optionally ignoring one edge; distances and parents."""
    adj = G.neighbours()
    pos = {v: i for i, v in enumerate(G.vertices)}
    dist = {src: 0}
    parent = {}
    heap = [(0, pos[src], src)]
    while heap:
        d, _, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for w, c in adj[v]:
            if skip is not None and frozenset((v, w)) == skip:
                continue
            nd = d + c
            if nd < dist.get(w, nd + 1):
                dist[w] = nd
                parent[w] = v
                heapq.heappush(heap, (nd, pos[w], w))
    return dist, parent


def detect_non_metric_cycle(G: EdgeLabelledGraph) -> NonMetricCycle | None:
    """A cycle whose longest edge exceeds the sum of the others, if any.

    An edge ``{x, y}`` lies on such a cycle exactly when some other path from
    ``x`` to ``y`` is shorter than its label.  Edges are tried longest first.
    """
    pos = {v: i for i, v in enumerate(G.vertices)}
    edges = sorted(G.labels.items(), key=lambda kv: (-kv[1], sorted(pos[v] for v in kv[0])))
    for e, d in edges:
        x, y = sorted(e, key=pos.get)
        dist, parent = _shortest(G, x, skip=e)
        if dist.get(y, d) < d:
            path = [y]
            while path[-1] != x:
                path.append(parent[path[-1]])
            path.reverse()
            labels = tuple(G.label(a, b) for a, b in zip(path, path[1:])) + (d,)
            return NonMetricCycle(tuple(path), labels)
    return None


def shortest_path_completion(G: EdgeLabelledGraph, m: int | None = None) -> EdgeLabelledGraph:
    """Complete labelled graph with ``d'(x, y) = min(m, shortest path)``.

    ``m`` defaults to ``max(2, max label)``; pairs joined by no path get ``m``.
    """
    if m is None:
        m = max(2, max(G.distance_set(), default=1))
    labels = {}
    for i, x in enumerate(G.vertices):
        dist, _ = _shortest(G, x)
        for y in G.vertices[i + 1:]:
            labels[frozenset((x, y))] = min(m, dist.get(y, m))
    return EdgeLabelledGraph(G.vertices, labels)


def is_metric(G: EdgeLabelledGraph) -> bool:
    if not G.is_complete():
        return False
    for x, y, z in itertools.permutations(G.vertices, 3):
        if G.label(x, z) > G.label(x, y) + G.label(y, z):
            return False
    return True


def unit_cliques(G: EdgeLabelledGraph, n: int) -> list[tuple]:
    """All ``n``-sets with every pair at distance 1 (brute force)."""
    unit = {e for e, d in G.labels.items() if d == 1}
    out = []
    for combo in itertools.combinations(G.vertices, n):
        if all(frozenset(p) in unit for p in itertools.combinations(combo, 2)):
            out.append(combo)
    return out


def longest_non_metric_cycle(S) -> int:
    """Most vertices on a non-metric cycle with labels in ``S``.

    With ``k`` vertices the long edge exceeds ``k-1`` labels of at least 1, so
    ``k <= max(S)``; a cycle with unit short edges attains it.  Zero when no
    such cycle exists.
    """
    top = max(S, default=0)
    return top if top >= 3 else 0


def metric_amalgamation(m: int):
    """Amalgamation inside metric spaces with distances at most ``m``.

    Free amalgamation followed by shortest-path completion; distances inside
    either side are kept because both sides are metric and agree on the
    overlap.  The returned callable has the signature expected by
    :func:`completion_of_tree_amalgamation`.
    """
    def amalgamate(D: Structure, C: Structure, sub: Structure, inc_D: Morphism, inc_C: Morphism):
        for S in (D, C):
            cyc = detect_non_metric_cycle(from_structure(S))
            if cyc is not None:
                raise InputError(f"amalgamation side has a non-metric cycle {cyc.vertices!r}")
        E, bD, bC = free_amalgamation(D, C, sub, inc_D, inc_C)
        done = to_structure(shortest_path_completion(from_structure(E), m), m)
        return done, bD, bC
    return amalgamate


def check_free_amalgamation_membership(forbidden, B: Structure, caps: Caps | None = None) -> bool:
    """True when no forbidden structure embeds into ``B``."""
    for F in forbidden:
        if F.language != B.language:
            raise InputError("forbidden structure uses a different language")
        if embeddings(F, B, limit=1, caps=caps):
            return False
    return True


def _is_witness(A: Structure, B: Structure, psi: Morphism, caps: Caps) -> bool:
    copy = induced_substructure(B, psi.mapping.values())
    for phi in enumerate_partial_automorphisms(copy, caps):
        if extend_to_automorphism(B, phi, caps) is None:
            return False
    return True


def small_metric_base(A: EdgeLabelledGraph, n: int, extra: int = 2,
                      caps: Caps | None = None) -> SearchWitness:
    """Smallest metric space found on ``|A| + k`` points (``k <= extra``) that is a witness for ``A``.

    Candidates add points one at a time with every labelling in ``1..m``;
    each must be metric and free of unit ``n``-cliques.
    """
    caps = resolve(caps)
    S = A.distance_set()
    m = max(2, max(S, default=1))
    SA = to_structure(A, m)
    frontier = [A]
    for k in range(extra + 1):
        nxt = []
        for C in frontier:
            SC = to_structure(C, m)
            psi = Morphism(SA.language.identity, {v: v for v in A.vertices})
            if is_metric(C) and not unit_cliques(C, n) and _is_witness(SA, SC, psi, caps):
                return SearchWitness(SA, SC, psi, caps)
            if k < extra:
                new = ("extra", k)
                for labels in itertools.product(range(1, m + 1), repeat=len(C.vertices)):
                    pairs = [(v, new, d) for v, d in zip(C.vertices, labels)]
                    D = EdgeLabelledGraph(C.vertices + (new,),
                                          {**C.labels, **EdgeLabelledGraph.from_pairs(
                                              C.vertices + (new,), pairs).labels})
                    if is_metric(D) and not unit_cliques(D, n):
                        nxt.append(D)
        frontier = nxt
    raise InputError(f"no metric witness base on at most {len(A.vertices) + extra} points")


class MetricWitness(Witness):
    """Shortest-path completion of a pipeline witness; automorphisms carry over unchanged."""

    kind = "metric"

    def __init__(self, A: Structure, pipeline: PipelineWitness, m: int):
        self.pipeline = pipeline
        self.m = m
        raw = from_structure(pipeline.structure)
        self.graph = shortest_path_completion(raw, m)
        B = to_structure(self.graph, m)
        super().__init__(A, B, pipeline.psi)

    def project(self, v):
        return v

    def extend(self, phi: Morphism) -> Morphism:
        return self.pipeline.extend(phi)


def validate_metric_input(A: EdgeLabelledGraph, n: int) -> None:
    if not is_metric(A):
        raise InputError("A is not a metric space (complete with triangle inequalities)")
    if n >= 2 and unit_cliques(A, n):
        raise InputError(f"A contains {n} points at mutual distance 1")


def metric_unwinding_rounds(S) -> int:
    """Unwinding rounds the completion needs for distances in ``S``.

    Only non-metric cycles have to become tree-like; unit cliques are already
    excluded by the faithful layer because the class is a free amalgamation
    class.  Without non-metric cycles no round is needed.
    """
    k = longest_non_metric_cycle(S)
    return unwinding_rounds(k) if k else 0


def build_metric_witness(A: EdgeLabelledGraph, n: int, base: Witness | None = None,
                         mode: str = "auto", caps: Caps | None = None,
                         rounds: int | None = None) -> MetricWitness:
    """Extension witness for ``A`` that is again a metric space without unit ``n``-cliques.

    Without ``base`` a small witness is searched with :func:`small_metric_base`.
    ``rounds`` defaults to :func:`metric_unwinding_rounds`; pass
    ``unwinding_rounds(max(n, longest_non_metric_cycle(S)))`` for the
    clique-driven count.
    """
    caps = resolve(caps)
    validate_metric_input(A, n)
    S = A.distance_set()
    m = max(2, max(S, default=1))
    SA = to_structure(A, m)
    if base is None:
        base = small_metric_base(A, n, caps=caps)
    if base.base.language != SA.language:
        raise InputError(f"base witness must use the language {SA.language!r}")
    if rounds is None:
        rounds = metric_unwinding_rounds(S)
    bound = max(n, longest_non_metric_cycle(S))
    P = build_pipeline_witness(SA, base, bound, mode, caps=caps, rounds=rounds)
    W = MetricWitness(SA, P, m)
    ok = check_morphism(W.psi, SA, W.structure, "embedding")
    if not ok:
        raise InputError(f"completion changed the copy of A: {ok.violation}")
    return W
