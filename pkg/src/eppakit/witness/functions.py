"""Witnesses for languages with unary (set-valued) functions.

Start from a witness ``B0`` of the relational reduct of ``A``.  A vertex of
``B`` stands for a pair ``(x, V)`` where ``V`` is a structure in the full language on a
subset of ``B0`` containing ``x``: its relational part is induced from ``B0``
and, through some isomorphism sending ``x`` to ``y``, it is a copy of the
closure of ``y`` in ``A``.  Relations of ``B`` follow the projection to
``B0``; functions are read off the decorations ``V``.
"""

from __future__ import annotations

import itertools
import math

from ..caps import Caps, resolve
from ..errors import InputError, ResourceLimit
from ..search import embeddings
from ..structure import (Morphism, Structure, closure, image_structure, induced_substructure,
                         reduct)
from .base import Witness
from .relational import build_relational_witness


class FunctionWitness(Witness):
    """Vertices are ``(x, i)``: the ``i``-th valuation structure over the base vertex ``x``.

    ``decoration((x, i))`` returns that valuation structure.
    """

    kind = "functions"

    def __init__(self, A: Structure, B0: Witness | None = None, caps: Caps | None = None):
        L = A.language
        self.caps = resolve(caps)
        self.reduct_language = L.relational_reduct()
        A_minus = reduct(A, self.reduct_language)
        if B0 is None:
            B0 = build_relational_witness(A_minus, self.caps)
        if B0.structure.language != self.reduct_language:
            raise InputError("base witness must be over the relational reduct of the language")
        if not B0.base.same_content(A_minus):
            raise InputError("base witness was built for a different structure")
        self.B0 = B0
        self.A = A
        base = B0.structure
        fibers = self._valuation_structures(A, base)
        n_tuples = sum(math.prod(len(fibers[x]) for x in t)
                       for r in self.reduct_language.relation_names for t in base.rel(r))
        if n_tuples > self.caps.max_tuples:
            raise ResourceLimit(f"function witness would have {n_tuples} relation tuples")
        self.fibers = {x: [(x, i) for i in range(len(vs))] for x, vs in fibers.items()}
        self._decoration = {(x, i): V for x, vs in fibers.items() for i, V in enumerate(vs)}
        self._vertex_of = {(x, V): (x, i) for x, vs in fibers.items() for i, V in enumerate(vs)}
        verts = [v for x in base.vertices for v in self.fibers[x]]
        rel = {}
        for r in self.reduct_language.relation_names:
            tuples = []
            for t in base.rel(r):
                tuples.extend(itertools.product(*(self.fibers[x] for x in t)))
            rel[r] = tuples
        fun = {}
        for f in L.functions:
            vals = {}
            for v in verts:
                V = self._decoration[v]
                img = V.func(f, v[0])
                if img:
                    vals[v] = {self._vertex_of[y, self._sub(V, y)] for y in img}
            fun[f] = vals
        B = Structure(L, verts, rel, fun)
        psi = {}
        for a in A.vertices:
            x = B0.psi(a)
            C = induced_substructure(A, closure(A, (a,)))
            V = self._copy(C, Morphism(L.identity, {c: B0.psi(c) for c in C.vertices}), base)
            psi[a] = self._vertex_of[x, V]
        super().__init__(A, B, Morphism(L.identity, psi))
        self._memo = {}

    def decoration(self, v) -> Structure:
        return self._decoration[v]

    def _sub(self, V: Structure, y) -> Structure:
        return induced_substructure(V, closure(V, (y,)))

    @staticmethod
    def _copy(C: Structure, m: Morphism, base: Structure) -> Structure:
        """Image of ``C`` under ``m``, vertices in ``base`` order."""
        img = image_structure(m, C)
        return Structure(img.language, base.sort(img.vertices),
                         {r: img.rel(r) for r in img.language.relation_names},
                         {f: dict(img.functions[f]) for f in img.language.functions})

    def _valuation_structures(self, A: Structure, base: Structure) -> dict:
        """``x -> sorted list of valuation structures for x``."""
        L = A.language
        small = self.reduct_language
        found = {x: set() for x in base.vertices}
        total = 0
        for y in A.vertices:
            C = induced_substructure(A, closure(A, (y,)))
            C_minus = reduct(C, small)
            for g in L.group:
                g_minus = L.restrict_perm(g, small)
                for x in base.vertices:
                    for j in embeddings(C_minus, base, g_minus, {y: x}, caps=self.caps):
                        V = self._copy(C, Morphism(g, j.mapping), base)
                        if V not in found[x]:
                            found[x].add(V)
                            total += 1
                            if total > self.caps.max_vertices:
                                raise ResourceLimit(f"function witness would exceed "
                                                    f"{self.caps.max_vertices} vertices")
        return {x: sorted(vs, key=lambda V: _vkey(V, base)) for x, vs in found.items()}

    def project(self, v):
        return v[0]

    def extension_parts(self, phi: Morphism):
        self.validate_partial_automorphism(phi)
        L = self.A.language
        small = self.reduct_language
        proj = Morphism(L.restrict_perm(phi.perm, small), {v[0]: w[0] for v, w in phi.mapping.items()})
        phi_hat = self.B0.extend(proj)
        return phi_hat

    def extension(self, phi: Morphism) -> Morphism:
        phi_hat = self.extension_parts(phi)
        base = self.B0.structure
        theta = {}
        for v in self.structure.vertices:
            V = self._decoration[v]
            m = Morphism(phi.perm, {u: phi_hat(u) for u in V.vertices})
            theta[v] = self._vertex_of[phi_hat(v[0]), self._copy(V, m, base)]
        return Morphism(phi.perm, theta)

    def extend(self, phi: Morphism) -> Morphism:
        try:
            return self._memo[phi]
        except KeyError:
            theta = self._memo[phi] = self.extension(phi)
            return theta


def closure_violations(W: FunctionWitness) -> list:
    """Vertices whose closure in ``B`` leaves their own valuation structure.

    For ``(x, V)`` every vertex ``(y, U)`` of its closure must have ``y`` in
    ``V`` and ``U`` equal to the closure of ``y`` inside ``V``.
    """
    B = W.structure
    bad = []
    for v in B.vertices:
        V = W.decoration(v)
        for w in closure(B, (v,)):
            y = w[0]
            if y not in V or W.decoration(w) != W._sub(V, y):
                bad.append(v)
                break
    return bad


def _vkey(V: Structure, base: Structure):
    funcs = tuple(
        tuple(sorted((base.pos(v), tuple(sorted(base.pos(w) for w in img)))
                     for v, img in V.functions[f].items()))
        for f in V.language.functions)
    return (tuple(base.pos(v) for v in V.vertices), funcs)


def build_function_witness(A: Structure, B0: Witness | None = None,
                           caps: Caps | None = None) -> FunctionWitness:
    return FunctionWitness(A, B0, caps)


def extend_function_pa(W: FunctionWitness, phi: Morphism) -> Morphism:
    return W.extend(phi)
