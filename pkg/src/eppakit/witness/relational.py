"""Coherent witnesses for structures in a finite relational language.

For a vertex ``x`` of ``A`` and arity ``n`` let ``U(x, n)`` be the ``n``-tuples
over ``A`` that contain ``x`` (repeats allowed), in lexicographic order of
positions.  A witness vertex is ``(x, chi)`` where ``chi`` gives, for each
relation symbol, a bit per tuple of ``U(x, arity)``.  A tuple of witness
vertices is related when entries over the same vertex of ``A`` agree and the
bits the distinct entries assign to the projected tuple have odd sum.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from ..caps import Caps, resolve
from ..errors import InputError, ResourceLimit
from ..structure import Morphism, Structure, order_preserving_extension
from .base import Witness


def tuple_universe(A: Structure, x, n: int) -> list[tuple]:
    """All ``n``-tuples over ``A`` containing ``x``, lexicographic in positions."""
    return [t for t in itertools.product(A.vertices, repeat=n) if x in t]


def relational_witness_size(A: Structure) -> int:
    n = len(A)
    bits = sum(n ** a - (n - 1) ** a for _, a in A.language.relations)
    return n * 2 ** bits


@dataclass(frozen=True)
class RelationalExtension:
    theta: Morphism
    flips: dict            # relation -> {tuple of A: tuple of 0/1 entries}
    phi_hat: dict


class RelationalWitness(Witness):
    kind = "relational"

    def __init__(self, A: Structure, caps: Caps | None = None):
        L = A.language
        if L.functions:
            raise InputError("relational witnesses need a language without functions")
        caps = resolve(caps)
        size = relational_witness_size(A)
        if size > caps.max_vertices:
            raise ResourceLimit(f"relational witness would have {size} vertices")
        self.rels = L.relations
        self.universe = {}     # (x, arity) -> list of tuples
        self.slot = {}         # (x, arity) -> {tuple: index}
        for x in A.vertices:
            for a in {a for _, a in L.relations}:
                U = tuple_universe(A, x, a)
                self.universe[x, a] = U
                self.slot[x, a] = {t: i for i, t in enumerate(U)}
        fibers = {}
        verts = []
        for x in A.vertices:
            shapes = [len(self.universe[x, a]) for _, a in L.relations]
            total = sum(shapes)
            fib = []
            for flat in itertools.product((0, 1), repeat=total):
                chi = []
                k = 0
                for s in shapes:
                    chi.append(flat[k:k + s])
                    k += s
                fib.append((x, tuple(chi)))
            fibers[x] = fib
            verts.extend(fib)
        self.fibers = fibers
        rel = {r: self._materialise(A, ri, a) for ri, (r, a) in enumerate(L.relations)}
        B = Structure(L, verts, rel)
        psi = {}
        for x in A.vertices:
            chi = []
            for r, a in L.relations:
                RA = A.rel(r)
                chi.append(tuple(int(t in RA and t[0] == x) for t in self.universe[x, a]))
            psi[x] = (x, tuple(chi))
        super().__init__(A, B, Morphism(L.identity, psi))
        self._memo = {}

    def value(self, v, ri: int, t: tuple) -> int:
        x, chi = v
        return chi[ri][self.slot[x, self.rels[ri][1]][t]]

    def _materialise(self, A, ri, a):
        out = []
        for xs in itertools.product(A.vertices, repeat=a):
            distinct = list(dict.fromkeys(xs))
            # choose one witness vertex per distinct entry; parity must be odd
            for choice in itertools.product(*(self.fibers[x] for x in distinct)):
                s = 0
                for v in choice:
                    s ^= self.value(v, ri, xs)
                if s:
                    pick = dict(zip(distinct, choice))
                    out.append(tuple(pick[x] for x in xs))
        return out

    def project(self, v):
        return v[0]

    def flip_functions(self, phi: Morphism, phi_hat: dict) -> dict:
        A = self.base
        L = A.language
        top = {v[0]: w for v, w in phi.mapping.items()}
        psi = self.psi.mapping
        flips = {}
        for ri, (r, a) in enumerate(self.rels):
            gri = L.index(L.act(phi.perm, r))
            F = {}
            for xs in itertools.product(A.vertices, repeat=a):
                inside = [x in top for x in xs]
                entry = [0] * a
                if any(inside):
                    image = tuple(phi_hat[x] for x in xs)
                    for i, x in enumerate(xs):
                        if inside[i]:
                            entry[i] = self.value(psi[x], ri, xs) ^ self.value(top[x], gri, image)
                    if not all(inside):
                        m = inside.index(False)
                        ones = len({x for i, x in enumerate(xs) if inside[i] and entry[i]})
                        fix = ones % 2
                        for i, x in enumerate(xs):
                            if x == xs[m]:
                                entry[i] = fix
                F[xs] = tuple(entry)
            flips[r] = F
        return flips

    def extension(self, phi: Morphism) -> RelationalExtension:
        self.validate_partial_automorphism(phi)
        A = self.base
        proj = {v[0]: w[0] for v, w in phi.mapping.items()}
        phi_hat = order_preserving_extension(proj, A.vertices)
        flips = self.flip_functions(phi, phi_hat)
        plan = self._plan(phi.perm, phi_hat, flips)
        theta = {v: self._apply(v, phi_hat, plan) for v in self.structure.vertices}
        return RelationalExtension(Morphism(phi.perm, theta), flips, phi_hat)

    def _plan(self, perm, phi_hat, flips):
        """Per vertex of ``A`` and target relation: (source relation, source slot, flip) per slot."""
        A = self.base
        L = A.language
        plan = {}
        for x in A.vertices:
            nx = phi_hat[x]
            rows = [None] * len(self.rels)
            for ri, (r, a) in enumerate(self.rels):
                gri = L.index(L.act(perm, r))
                row = [None] * len(self.universe[nx, a])
                for k, t in enumerate(self.universe[x, a]):
                    image = tuple(phi_hat[y] for y in t)
                    i = t.index(x)
                    row[self.slot[nx, a][image]] = (k, flips[r][t][i])
                rows[gri] = (ri, row)
            plan[x] = (nx, rows)
        return plan

    @staticmethod
    def _apply(v, phi_hat, plan):
        x, chi = v
        nx, rows = plan[x]
        return (nx, tuple(tuple(chi[ri][k] ^ f for k, f in row) for ri, row in rows))

    def extend(self, phi: Morphism) -> Morphism:
        try:
            return self._memo[phi]
        except KeyError:
            theta = self._memo[phi] = self.extension(phi).theta
            return theta


def build_relational_witness(A: Structure, caps: Caps | None = None) -> RelationalWitness:
    return RelationalWitness(A, caps)


def extend_relational_pa(W: RelationalWitness, phi: Morphism) -> RelationalExtension:
    return W.extension(phi)


def flip_parity_ok(F: dict) -> bool:
    """Repeated vertices carry equal entries and the distinct vertices with entry 1 are even."""
    for xs, entry in F.items():
        seen = {}
        for x, e in zip(xs, entry):
            if seen.setdefault(x, e) != e:
                return False
        if sum(seen.values()) % 2:
            return False
    return True
