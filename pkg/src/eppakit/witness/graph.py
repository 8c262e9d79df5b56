"""Coherent witnesses for finite graphs.

A vertex of ``B`` is a pair ``(x, bits)`` where ``bits`` assigns 0 or 1 to
every other vertex of ``A`` (listed in ``A``'s order).  Two pairs are adjacent
when their first coordinates differ and each one's bit at the other's first
coordinate disagrees.  Extensions complete the projected map order-preservingly
and then flip the bits of the pairs the partial map forces to change.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..caps import Caps, resolve
from ..errors import InputError, ResourceLimit
from ..structure import Morphism, Structure, order_preserving_extension
from .base import Witness


def _check_graph(A: Structure) -> str:
    L = A.language
    if len(L.relations) != 1 or L.relations[0][1] != 2 or L.functions or len(L.group) != 1:
        raise InputError("expected a graph: one binary relation, no functions, trivial group")
    name = L.relations[0][0]
    E = A.rel(name)
    for a, b in E:
        if a == b:
            raise InputError("graph has a loop")
        if (b, a) not in E:
            raise InputError("graph relation is not symmetric")
    return name


@dataclass(frozen=True)
class GraphExtension:
    theta: Morphism
    flips: frozenset       # unordered pairs of A, as frozensets
    phi_hat: dict          # permutation of A


class GraphWitness(Witness):
    kind = "graph"

    def __init__(self, A: Structure, caps: Caps | None = None):
        self.edge = _check_graph(A)
        caps = resolve(caps)
        n = len(A)
        size = n * 2 ** (n - 1) if n else 0
        if size > caps.max_vertices:
            raise ResourceLimit(f"graph witness would have {size} vertices")
        self.order = A.vertices
        self.base = A
        verts = [(x, bits) for x in A.vertices for bits in itertools.product((0, 1), repeat=n - 1)]
        E = set()
        for u, v in itertools.combinations(verts, 2):
            if u[0] != v[0] and self.bit(u, v[0]) != self.bit(v, u[0]):
                E.add((u, v))
                E.add((v, u))
        B = Structure(A.language, verts, {self.edge: E})
        EA = A.rel(self.edge)
        psi = {}
        for x in A.vertices:
            px = A.pos(x)
            bits = tuple(int(A.pos(y) < px and (x, y) in EA) for y in A.vertices if y != x)
            psi[x] = (x, bits)
        super().__init__(A, B, Morphism(A.language.identity, psi))
        self._memo = {}

    def bit(self, v, y) -> int:
        """Value at ``y`` of the valuation of witness vertex ``v``."""
        x, bits = v
        A = self.base
        i = A.pos(y)
        j = A.pos(x)
        if i == j:
            raise InputError("a valuation is not defined at its own vertex")
        return bits[i - (i > j)]

    def _bits_for(self, x, values: dict) -> tuple:
        return tuple(values[y] for y in self.order if y != x)

    def project(self, v):
        return v[0]

    def extension(self, phi: Morphism) -> GraphExtension:
        self.validate_partial_automorphism(phi)
        A = self.base
        proj = {v[0]: w[0] for v, w in phi.mapping.items()}
        phi_hat = order_preserving_extension(proj, A.vertices)
        flips = set()
        for v, w in phi.mapping.items():
            x = v[0]
            for y in A.vertices:
                if y != x and self.bit(v, y) != self.bit(w, phi_hat[y]):
                    flips.add(frozenset((x, y)))
        flips = frozenset(flips)
        theta = {}
        for v in self.structure.vertices:
            theta[v] = self._apply(v, phi_hat, flips)
        return GraphExtension(Morphism(phi.perm, theta), flips, phi_hat)

    def _apply(self, v, phi_hat, flips):
        x = v[0]
        vals = {}
        for y in self.order:
            if y != x:
                vals[phi_hat[y]] = self.bit(v, y) ^ (frozenset((x, y)) in flips)
        nx = phi_hat[x]
        return (nx, self._bits_for(nx, vals))

    def apply_inverse(self, ext: GraphExtension, v):
        """Preimage of ``v`` under the extension, computed directly from the flip set."""
        back = {b: a for a, b in ext.phi_hat.items()}
        nx, _ = v
        x = back[nx]
        vals = {}
        for y in self.order:
            if y != x:
                vals[y] = self.bit(v, ext.phi_hat[y]) ^ (frozenset((x, y)) in ext.flips)
        return (x, self._bits_for(x, vals))

    def extend(self, phi: Morphism) -> Morphism:
        try:
            return self._memo[phi]
        except KeyError:
            theta = self._memo[phi] = self.extension(phi).theta
            return theta


def build_graph_witness(A: Structure, caps: Caps | None = None) -> GraphWitness:
    return GraphWitness(A, caps)


def extend_graph_pa(W: GraphWitness, phi: Morphism) -> GraphExtension:
    return W.extension(phi)
