"""Witnesses whose small substructures are tree-like.

The language gets a fresh symmetric edge relation, complete on ``A`` and on
the base witness.  One faithful layer and then ``N = (n-1)*C(n,2)+1`` rounds of
cycle unwinding follow; dropping the edge relation gives the result.  The
projections of the layers compose to a homomorphism-embedding into the base.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

from ..caps import Caps, resolve
from ..errors import InputError
from ..structure import (Morphism, Structure, check_morphism, closure, disjoint_union, expand,
                         induced_substructure, is_irreducible, reduct)
from .base import Witness
from .faithful import FaithfulWitness
from .tree import TreeAmalgamation, decompose_tree_amalgamation
from .unwind import UnwoundWitness, induced_cycles

EDGE = "_E"


def unwinding_rounds(n: int) -> int:
    """Rounds needed so that every substructure on at most ``n`` vertices becomes tree-like."""
    if n < 1:
        raise InputError("n must be positive")
    return (n - 1) * comb(n, 2) + 1


def complete_edges(vertices) -> set:
    vs = list(vertices)
    return {(a, b) for a in vs for b in vs if a != b}


class ExpandedWitness(Witness):
    """A witness in a language with one extra relation, complete on the structure."""

    kind = "expanded"

    def __init__(self, inner: Witness, language, edge: str):
        self.inner = inner
        self.language = language
        self.edge = edge
        A = expand(inner.base, language, {edge: complete_edges(inner.base.vertices)})
        B = expand(inner.structure, language, {edge: complete_edges(inner.structure.vertices)})
        small = inner.structure.language
        super().__init__(A, B, Morphism(small.extend_perm(inner.psi.perm, language), inner.psi.mapping))
        self._small = small

    def project(self, v):
        return v

    def extend(self, phi: Morphism) -> Morphism:
        L = self.language
        inner = Morphism(L.restrict_perm(phi.perm, self._small), phi.mapping)
        theta = self.inner.extend(inner)
        return Morphism(phi.perm, theta.mapping)


class ReductWitness(Witness):
    """Forget the extra relation of a witness built in an expanded language."""

    kind = "reduct"

    def __init__(self, inner: Witness, A: Structure):
        self.inner = inner
        L = A.language
        self._big = inner.structure.language
        B = reduct(inner.structure, L)
        super().__init__(A, B, Morphism(L.identity, inner.psi.mapping))

    def project(self, v):
        return v

    def extend(self, phi: Morphism) -> Morphism:
        L = self.base.language
        big = Morphism(L.extend_perm(phi.perm, self._big), phi.mapping)
        theta = self.inner.extend(big)
        return Morphism(phi.perm, theta.mapping)


@dataclass
class TreeCertificate:
    vertices: tuple
    stage: int                      # index into PipelineWitness.stages (0 = faithful layer)
    image: tuple
    chase: Morphism                 # substructure -> image, a homomorphism-embedding
    trace: TreeAmalgamation


@dataclass
class PipelineWitness:
    A: Structure
    B0: Witness
    n: int
    rounds: int
    edge: str
    stages: list = field(default_factory=list)   # faithful layer, then each unwinding layer
    witness: Witness | None = None

    @property
    def structure(self) -> Structure:
        return self.witness.structure

    @property
    def psi(self) -> Morphism:
        return self.witness.psi

    def extend(self, phi: Morphism) -> Morphism:
        return self.witness.extend(phi)

    def stage_map(self, i: int) -> Morphism:
        """Projection from stage ``i`` to stage ``i-1`` (stage ``-1`` is the expanded base)."""
        W = self.stages[i]
        L = W.structure.language
        return Morphism(L.identity, {v: W.project(v) for v in W.structure.vertices})

    def to_base(self) -> Morphism:
        """Composite projection from the result to the base witness."""
        L = self.A.language
        mapping = {}
        for v in self.structure.vertices:
            w = v
            for W in reversed(self.stages):
                w = W.project(w)
            mapping[v] = w
        return Morphism(L.identity, mapping)

    def chase(self, X) -> list[tuple]:
        """Images of ``X`` under the stage projections, from the last stage down to the first."""
        out = []
        cur = {v: v for v in X}
        for i in range(len(self.stages) - 1, -1, -1):
            out.append((i, dict(cur)))
            W = self.stages[i]
            cur = {v: W.project(w) for v, w in cur.items()}
        return out

    def tree_certificate(self, X, caps: Caps | None = None) -> TreeCertificate:
        """Certify that the substructure on ``X`` maps into a tree amalgamation of copies of ``A``.

        The stage projections are followed until the image has no induced edge
        cycle of length at least four; that image is then decomposed.
        """
        caps = resolve(caps)
        top = self.stages[-1].structure
        X = closure(top, X)
        sub = induced_substructure(top, X)
        A_big = self.stages[0].A
        for stage, m in self.chase(X):
            S = self.stages[stage].structure
            img = frozenset(m.values())
            Y = induced_substructure(S, closure(S, img))
            if induced_cycles(Y, self.edge):
                continue
            chase = Morphism(S.language.identity, m)
            ok = check_morphism(chase, sub, Y, "homomorphism-embedding", caps)
            if not ok:
                raise InputError(f"stage map is not a homomorphism-embedding: {ok.violation}")
            trace = decompose_tree_amalgamation(Y, A_big, self.edge, caps)
            return TreeCertificate(tuple(top.sort(X)), stage, tuple(S.sort(Y.vertices)), chase, trace)
        raise InputError("no stage image is free of long induced cycles")


def build_pipeline_witness(A: Structure, B0: Witness, n: int, mode: str = "auto",
                           edge: str = EDGE, caps: Caps | None = None,
                           rounds: int | None = None) -> PipelineWitness:
    """Faithful layer plus ``N`` unwinding rounds over ``B0``, in ``A``'s language.

    ``mode`` is ``full``, ``reachable`` or ``auto`` (full when the layer's
    size bound fits ``max_vertices``).  ``rounds`` overrides ``N`` for
    experiments; by default it follows ``n``.
    """
    caps = resolve(caps)
    L = A.language
    if edge in L.symbols:
        raise InputError(f"symbol {edge!r} is reserved for the pipeline's edge relation")
    if not is_irreducible(A):
        raise InputError("A must be irreducible")
    if B0.base.language != L or not B0.base.same_content(A):
        raise InputError("base witness was built for a different structure")
    big = L.with_relation(edge, 2)
    base = ExpandedWitness(B0, big, edge)
    A_big = base.base
    N = unwinding_rounds(n) if rounds is None else rounds
    out = PipelineWitness(A, B0, n, N, edge)
    W = FaithfulWitness(A_big, base, "full", caps, materialise=False)
    _materialise(W, mode, caps)
    out.stages.append(W)
    for _ in range(N):
        W = UnwoundWitness(A_big, W, edge, "full", caps, materialise=False)
        _materialise(W, mode, caps)
        out.stages.append(W)
    out.witness = ReductWitness(W, A)
    return out


def _materialise(layer, mode: str, caps: Caps) -> None:
    if mode == "auto":
        mode = "full" if layer.size_bound() <= caps.max_vertices else "reachable"
    layer.mode = mode
    layer.materialise()


def amalgamate_via_eppa(B1: Structure, B2: Structure, A: Structure, alpha1: Morphism,
                        alpha2: Morphism, provider) -> tuple[Structure, Morphism, Morphism]:
    """Amalgamate ``B1`` and ``B2`` over ``A`` inside an extension witness.

    ``provider(D)`` returns a witness for ``D``; here ``D`` is the disjoint union
    of ``B1`` and ``B2``.  The partial automorphism sending the copy of ``A``
    in ``B1`` onto the copy in ``B2`` extends to an automorphism ``theta`` of
    the witness, and ``theta`` moves ``B1`` over ``B2``.
    """
    L = A.language
    for alpha, B in ((alpha1, B1), (alpha2, B2)):
        ok = check_morphism(alpha, A, B, "embedding")
        if not ok:
            raise InputError(f"not an embedding: {ok.violation}")
    D, m1, m2 = disjoint_union(B1, B2, (1, 2))
    W = provider(D)
    if W.base.language != L or not W.base.same_content(D):
        raise InputError("provider returned a witness for a different structure")
    psi = W.psi
    phi = {}
    for a in A.vertices:
        phi[psi(m1(alpha1(a)))] = psi(m2(alpha2(a)))
    # the symbol part must carry alpha1's copy onto alpha2's
    perm = L.compose(alpha2.perm, L.inverse(alpha1.perm))
    phi = Morphism(perm, phi)
    if len(phi):
        theta = W.extend(phi)
    else:
        theta = Morphism(L.identity, {v: v for v in W.structure.vertices})
    C = W.structure
    beta1 = Morphism(L.compose(theta.perm, m1.perm), {b: theta(psi(m1(b))) for b in B1.vertices})
    beta2 = Morphism(m2.perm, {b: psi(m2(b)) for b in B2.vertices})
    for beta, B in ((beta1, B1), (beta2, B2)):
        ok = check_morphism(beta, B, C, "embedding")
        if not ok:
            raise InputError(f"amalgam map is not an embedding: {ok.violation}")
    if any(beta1(alpha1(a)) != beta2(alpha2(a)) for a in A.vertices):
        raise InputError("amalgam square does not commute")
    return C, beta1, beta2
