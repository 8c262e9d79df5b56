"""Cycle unwinding: kill induced cycles of length at least four in a symmetric relation.

Every induced cycle of ``B0``'s edge relation with ``k >= 4`` vertices gives
``2k`` *bad cycle sequences* (each start vertex, each direction).  Valuations
put one bit on each sequence through a vertex.  Neighbours along a sequence
must agree on its bit, except the closing pair (first and last vertex) which
must disagree; vertices of a sequence that are not neighbours on it are never
compatible.  Going round a cycle would need an odd number of disagreements
out of one, so no related copy of the cycle survives.
"""

from __future__ import annotations

import networkx as nx

from ..caps import Caps
from ..errors import InputError, PreconditionError, ResourceLimit
from ..structure import Morphism, Structure
from .base import Witness
from .layered import EQ, NE, NEVER, ValuationLayer


def edge_graph(S: Structure, edge: str) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(S.vertices)
    G.add_edges_from((a, b) for a, b in S.rel(edge) if a != b)
    return G


def induced_cycles(S: Structure, edge: str, min_length: int = 4,
                   limit: int | None = None) -> list[list]:
    """Chordless cycles of the edge relation with at least ``min_length`` vertices.

    Each cycle is listed once, rotated to start at its first vertex in ``S``'s
    order and oriented towards the smaller neighbour.  More than ``limit``
    cycles raise :class:`ResourceLimit`.
    """
    G = edge_graph(S, edge)
    out = []
    for cyc in nx.chordless_cycles(G):
        if len(cyc) < min_length:
            continue
        if limit is not None and len(out) >= limit:
            raise ResourceLimit(f"more than {limit} induced cycles of length at least {min_length}")
        i = min(range(len(cyc)), key=lambda j: S.pos(cyc[j]))
        cyc = cyc[i:] + cyc[:i]
        if S.pos(cyc[-1]) < S.pos(cyc[1]):
            cyc = [cyc[0]] + cyc[:0:-1]
        out.append(cyc)
    out.sort(key=lambda c: (len(c), [S.pos(v) for v in c]))
    return out


def cycle_sequences(cycle: list) -> list[tuple]:
    k = len(cycle)
    out = []
    for r in range(k):
        rot = cycle[r:] + cycle[:r]
        out.append(tuple(rot))
        out.append(tuple([rot[0]] + rot[:0:-1]))
    return out


def check_edge_relation(S: Structure, edge: str) -> None:
    L = S.language
    if L.arity(edge) != 2 or L.is_function(edge):
        raise InputError(f"{edge} must be a binary relation")
    for g in L.group:
        if L.act(g, edge) != edge:
            raise InputError(f"{edge} must be fixed by every group element")
    E = S.rel(edge)
    for a, b in E:
        if a == b:
            raise InputError(f"{edge} has a loop at {a!r}")
        if (b, a) not in E:
            raise InputError(f"{edge} is not symmetric")


class UnwoundWitness(ValuationLayer):
    kind = "unwind"

    def __init__(self, A: Structure, B0: Witness, edge: str = "E", mode: str = "full",
                 caps: Caps | None = None, materialise: bool = True):
        self.edge = edge
        super().__init__(A, B0, mode, caps, materialise)

    def _setup_keys(self):
        base = self.base_structure
        check_edge_relation(base, self.edge)
        E = base.rel(self.edge)
        img = sorted(self.A_image, key=base.pos)
        for a in img:
            for b in img:
                if a != b and (a, b) not in E:
                    raise InputError(f"{self.edge} must be complete on the copy of A")
        self.cycles = induced_cycles(base, self.edge, limit=self.caps.max_cycles)
        self.keys_at = {x: [] for x in base.vertices}
        self.values = {}
        seqs = []
        for cyc in self.cycles:
            seqs.extend(cycle_sequences(cyc))
        seqs.sort(key=lambda c: (len(c), [base.pos(v) for v in c]))
        self.sequences = seqs
        for c in seqs:
            self.values[c] = (0, 1)
            for x in c:
                self.keys_at[x].append(c)

    def _rule(self, c, x, y):
        i = c.index(x)
        j = c.index(y)
        if abs(i - j) == 1:
            return EQ
        if {i, j} == {0, len(c) - 1}:
            return NE
        return NEVER

    def psi_value(self, c, y):
        return int(y == c[0] and c[-1] in self.A_image)

    def key_image(self, c, phi_hat):
        return tuple(phi_hat(v) for v in c)

    def local_maps(self, q, phi_hat):
        decided = {}
        for (y, chi), (ny, chi2) in q.items():
            dst = self.key_index[ny]
            for i, c in enumerate(self.keys_at[y]):
                flip = chi[i] != chi2[dst[self.key_image(c, phi_hat)]]
                if decided.setdefault(c, flip) != flip:
                    raise PreconditionError("domain is not generic: inconsistent flips on a cycle")
        swap = {0: 1, 1: 0}
        return {c: swap for c, flip in decided.items() if flip}

    def flip_set(self, phi: Morphism, phi_hat: Morphism | None = None) -> frozenset:
        ext = self._extension_data(phi, phi_hat)
        return frozenset(ext.local)


def build_unwound_witness(A: Structure, B0: Witness, edge: str = "E", mode: str = "full",
                          caps: Caps | None = None) -> UnwoundWitness:
    return UnwoundWitness(A, B0, edge, mode, caps)


def extend_unwound_pa(W: UnwoundWitness, phi: Morphism, phi_hat: Morphism | None = None) -> Morphism:
    return W.extension(phi, phi_hat).theta


__all__ = ["UnwoundWitness", "build_unwound_witness", "extend_unwound_pa", "induced_cycles",
           "cycle_sequences", "edge_graph", "check_edge_relation", "NEVER"]
