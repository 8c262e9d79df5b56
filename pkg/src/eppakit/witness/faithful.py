"""Witnesses in which every irreducible substructure can be moved into the copy of ``A``.

An irreducible closed set ``I`` of ``B0`` is *bad* when no automorphism of
``B0`` maps it into ``psi0(A)``.  Valuations give each bad set through a vertex
a value in ``1..|I|-1``; distinct vertices sharing a bad set must take
different values there, so a bad set can never be fully related in the new
witness.
"""

from __future__ import annotations

from collections import defaultdict

from ..caps import Caps, resolve
from ..errors import InputError, PreconditionError
from ..search import find_automorphism_with_image
from ..structure import Morphism, Structure, irreducible_substructures, order_preserving_extension
from .base import Witness
from .layered import NE, FaithfulnessCertificate, ValuationLayer


def enumerate_bad_irreducibles(B0: Structure, A_image, caps: Caps | None = None) -> list[frozenset]:
    """Closed irreducible sets of ``B0`` no automorphism sends into ``A_image``.

    Sorted by (size, positions).  The automorphism searches are exhaustive,
    so an entry in the list is a proof of badness.
    """
    caps = resolve(caps)
    A_image = frozenset(A_image)
    memo = {}
    bad = []
    for I in irreducible_substructures(B0, caps=caps):
        if I <= A_image:
            continue
        if I not in memo:
            memo[I] = find_automorphism_with_image(B0, I, A_image, caps) is None
        if memo[I]:
            bad.append(I)
    return bad


class FaithfulWitness(ValuationLayer):
    kind = "faithful"

    def _setup_keys(self):
        base = self.base_structure
        if len(base) < len(self.A):
            raise InputError("base witness is smaller than the structure")
        self.bad = enumerate_bad_irreducibles(base, self.A_image, self.caps)
        self.keys_at = {x: [] for x in base.vertices}
        self.values = {}
        self.f_index = {}
        for I in self.bad:
            self.values[I] = tuple(range(1, len(I)))
            inside = base.sort(I & self.A_image)
            self.f_index[I] = {y: i + 1 for i, y in enumerate(inside)}
            for x in I:
                self.keys_at[x].append(I)

    def _rule(self, key, x, y):
        return NE

    def psi_value(self, key, y):
        return self.f_index[key][y]

    def key_image(self, key, phi_hat):
        return frozenset(phi_hat(v) for v in key)

    def local_maps(self, q, phi_hat):
        tau = defaultdict(dict)
        for (y, chi), (ny, chi2) in q.items():
            dst = self.key_index[ny]
            for i, I in enumerate(self.keys_at[y]):
                a = chi[i]
                b = chi2[dst[self.key_image(I, phi_hat)]]
                if tau[I].setdefault(a, b) != b:
                    raise PreconditionError("domain is not generic: a bad set receives two values")
        local = {}
        for I, t in tau.items():
            if len(set(t.values())) != len(t):
                raise PreconditionError("range is not generic: a bad set receives a repeated value")
            local[I] = order_preserving_extension(t, self.values[I])
        return local


def build_faithful_witness(A: Structure, B0: Witness, mode: str = "full",
                           caps: Caps | None = None) -> FaithfulWitness:
    return FaithfulWitness(A, B0, mode, caps)


def extend_faithful_pa(W: FaithfulWitness, phi: Morphism, phi_hat: Morphism | None = None) -> Morphism:
    return W.extension(phi, phi_hat).theta


def certify_faithfulness(W: ValuationLayer, caps: Caps | None = None) -> FaithfulnessCertificate:
    return W.certify_faithfulness(caps)
