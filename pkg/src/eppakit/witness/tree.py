"""Tree amalgamations of copies of a structure ``A``.

A tree amalgamation starts from a copy of ``A`` and repeatedly glues a new
copy of ``A`` over a set that already lies inside one copy.  A structure whose
edge graph is chordal and whose irreducible parts embed into ``A`` is a
substructure of such an amalgamation: split along a minimal vertex cut (a
clique), recurse on both sides, and glue the pieces back.
"""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx

from ..caps import Caps, resolve
from ..errors import InputError, PreconditionError
from ..search import embeddings
from ..structure import (Morphism, Structure, check_morphism, closure, free_amalgamation,
                         image_structure, induced_substructure, irreducible_substructures,
                         is_irreducible, relabel_vertices)


@dataclass
class GlueStep:
    piece: frozenset          # vertices of the source structure covered by this copy
    overlap: frozenset        # vertices shared with the copies glued before
    embedding: Morphism       # piece -> A


@dataclass
class TreeAmalgamation:
    A: Structure
    source: Structure
    steps: list
    structure: Structure | None = None

    def copy_of_A(self, i: int) -> Structure:
        """Copy ``i`` of ``A``: piece vertices keep their names, the rest are fresh."""
        step = self.steps[i]
        e = step.embedding
        back = {a: v for v, a in e.mapping.items()}
        names = {a: back.get(a, ("copy", i, a)) for a in self.A.vertices}
        L = self.A.language
        return image_structure(Morphism(L.inverse(e.perm), names), self.A,
                               [names[a] for a in self.A.vertices])

    def replay(self) -> Structure:
        """Glue the copies in order; the result contains ``source`` as a substructure."""
        if not self.steps:
            return Structure(self.A.language, [])
        D = self.copy_of_A(0)
        for i in range(1, len(self.steps)):
            C = self.copy_of_A(i)
            ov = self.steps[i].overlap
            sub = induced_substructure(D, ov)
            inc = Morphism(sub.language.identity, {v: v for v in ov})
            D, b1, b2 = free_amalgamation(D, C, sub, inc, inc)
            names = {}
            for v in b1.mapping:
                names[b1(v)] = v
            for v in b2.mapping:
                names.setdefault(b2(v), v)
            D = relabel_vertices(D, names)
        self.structure = D
        return D

    def contains_source(self) -> bool:
        D = self.structure or self.replay()
        if not all(v in D for v in self.source.vertices):
            return False
        return induced_substructure(D, self.source.vertices).same_content(self.source)


def _edge_graph(S: Structure, edge: str | None) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(S.vertices)
    if edge is not None:
        G.add_edges_from((a, b) for a, b in S.rel(edge) if a != b)
    else:
        from ..structure import gaifman_adjacency
        adj = gaifman_adjacency(S)
        G.add_edges_from((a, b) for a in adj for b in adj[a])
    return G


def _minimal_cut(G: nx.Graph, S: Structure):
    """First inclusion-minimal separator between non-adjacent vertices, by positions."""
    order = sorted(G.nodes, key=S.pos)
    for i, u in enumerate(order):
        for v in order[i + 1:]:
            if not G.has_edge(u, v):
                cut = nx.minimum_node_cut(G, u, v)
                return u, v, frozenset(cut)
    return None


def _decompose(S: Structure, X: frozenset, G: nx.Graph, edge, pieces: list, tree: list):
    """Append the pieces of ``S[X]`` and tree edges between them; return their index range."""
    H = G.subgraph(X)
    if len(X) and not nx.is_connected(H):
        comps = sorted((frozenset(c) for c in nx.connected_components(H)),
                       key=lambda c: min(S.pos(v) for v in c))
        first = None
        for c in comps:
            lo = _decompose(S, c, G, edge, pieces, tree)
            if first is None:
                first = lo
            else:
                tree.append((first, lo))
        return first
    if all(H.has_edge(a, b) for a in X for b in X if a != b):
        if not is_irreducible(S, X):
            raise PreconditionError(f"clique {sorted(X, key=S.pos)!r} is not irreducible")
        pieces.append(X)
        return len(pieces) - 1
    u, _, cut = _minimal_cut(H, S)
    if not all(H.has_edge(a, b) for a in cut for b in cut if a != b):
        cyc = _find_long_induced_cycle(H)
        raise PreconditionError(f"minimal cut is not a clique; induced cycle {cyc!r}")
    rest = H.subgraph(X - cut)
    side = frozenset(nx.node_connected_component(rest, u))
    left = side | cut
    right = X - side
    i = _decompose(S, left, G, edge, pieces, tree)
    j = _decompose(S, right, G, edge, pieces, tree)
    a = next(k for k in range(i, j) if cut <= pieces[k])
    b = next(k for k in range(j, len(pieces)) if cut <= pieces[k])
    tree.append((a, b))
    return i


def _find_long_induced_cycle(G: nx.Graph):
    for cyc in nx.chordless_cycles(G):
        if len(cyc) >= 4:
            return cyc
    return None


def decompose_tree_amalgamation(B: Structure, A: Structure, edge: str | None = None,
                                caps: Caps | None = None) -> TreeAmalgamation:
    """A tree amalgamation of copies of ``A`` containing ``B`` as a substructure.

    ``edge`` names the symmetric relation whose graph is cut; without it the
    Gaifman graph is used.  Raises :class:`PreconditionError` naming an induced
    cycle of length at least four or an irreducible part that does not embed
    into ``A``.
    """
    caps = resolve(caps)
    if B.language != A.language:
        raise InputError("languages differ")
    for I in irreducible_substructures(B, caps=caps):
        sub = induced_substructure(B, I)
        if not embeddings(sub, A, limit=1, caps=caps):
            raise PreconditionError(f"irreducible {sorted(I, key=B.pos)!r} does not embed into A")
    G = _edge_graph(B, edge)
    cyc = _find_long_induced_cycle(G)
    if cyc is not None:
        raise PreconditionError(f"induced cycle of length {len(cyc)}: {cyc!r}")
    pieces, tree = [], []
    if len(B):
        _decompose(B, frozenset(B.vertices), G, edge, pieces, tree)
    # walk the tree from the first piece; each overlap lies inside its parent
    adj = {i: [] for i in range(len(pieces))}
    for a, b in tree:
        adj[a].append(b)
        adj[b].append(a)
    order = [0] if pieces else []
    seen = set(order)
    for i in order:
        for j in sorted(adj[i]):
            if j not in seen:
                seen.add(j)
                order.append(j)
    steps = []
    covered = set()
    for i in order:
        P = pieces[i]
        P = closure(B, P)
        sub = induced_substructure(B, P)
        e = embeddings(sub, A, limit=1, caps=caps)[0]
        overlap = frozenset(P & covered)
        steps.append(GlueStep(frozenset(P), overlap, e))
        covered |= P
    trace = TreeAmalgamation(A, B, steps)
    trace.replay()
    return trace


def check_tree_amalgamation(trace: TreeAmalgamation) -> list[str]:
    """Problems with a trace; empty when every property holds."""
    problems = []
    D = trace.replay()
    if not trace.contains_source():
        problems.append("replay does not contain the source structure")
    covered = set()
    for i, step in enumerate(trace.steps):
        sub = induced_substructure(trace.source, step.piece)
        if not check_morphism(step.embedding, sub, trace.A, "embedding"):
            problems.append(f"step {i}: piece does not embed into A")
        if i and not any(step.overlap <= s.piece for s in trace.steps[:i]):
            problems.append(f"step {i}: overlap is not inside one earlier copy")
        if step.overlap != step.piece & covered:
            problems.append(f"step {i}: overlap differs from the shared vertices")
        covered |= step.piece
    copies = [frozenset(trace.copy_of_A(i).vertices) for i in range(len(trace.steps))]
    for I in irreducible_substructures(D):
        if not any(I <= c for c in copies):
            problems.append(f"irreducible {sorted(I, key=D.pos)!r} is not inside one copy")
    return problems


def completion_of_tree_amalgamation(trace: TreeAmalgamation, amalgamate) -> tuple[Structure, Morphism]:
    """Amalgamate along the trace inside a class and map the tree amalgamation into the result.

    ``amalgamate(D, C, overlap_structure, inc_D, inc_C)`` returns
    ``(E, beta_D, beta_C)`` for a member ``E`` of the class.  The returned
    morphism sends the replayed tree amalgamation to the final ``E`` and is
    checked to be a homomorphism-embedding.
    """
    D = trace.replay()
    L = trace.A.language
    if not trace.steps:
        return D, Morphism(L.identity, {})
    E = trace.copy_of_A(0)
    to_E = {v: v for v in E.vertices}
    for i in range(1, len(trace.steps)):
        C = trace.copy_of_A(i)
        ov = trace.steps[i].overlap
        sub = induced_substructure(C, ov)
        inc_E = Morphism(L.identity, {v: to_E[v] for v in ov})
        inc_C = Morphism(L.identity, {v: v for v in ov})
        try:
            E, bE, bC = amalgamate(E, C, sub, inc_E, inc_C)
        except InputError as exc:
            raise InputError(f"amalgamation failed at step {i}: {exc}") from exc
        to_E = {v: bE(w) for v, w in to_E.items()}
        for v in C.vertices:
            to_E.setdefault(v, bC(v))
    e = Morphism(L.identity, {v: to_E[v] for v in D.vertices})
    ok = check_morphism(e, D, E, "homomorphism-embedding")
    if not ok:
        raise InputError(f"completion map is not a homomorphism-embedding: {ok.violation}")
    return E, e
