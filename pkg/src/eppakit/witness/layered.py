"""Shared machinery of the faithful and cycle-unwinding layers.

Both layers decorate a vertex ``x`` of the previous witness ``B0`` with a
valuation: a value for each *key* through ``x`` (bad irreducible sets for the
faithful layer, bad cycle sequences for the unwinding layer).  A pair
``(x, chi)`` is compatible with ``(y, chi')`` according to per-key rules.  A
vertex of the new witness is ``(x, V)`` where ``V`` picks one pair for every
vertex of the closure of ``x`` in ``B0``, all pairwise compatible.  A tuple
is related when its projection is related in ``B0`` and all pairs involved
are compatible.

Extensions move keys with an automorphism of ``B0`` extending the projected
partial map and permute values key by key (the *local maps*).

With ``mode="reachable"`` only the orbit of ``psi(A)`` under the constructed
extensions of partial automorphisms of ``psi(A)`` is materialised.  That
substructure is invariant under every constructed extension, so it is again
an extension witness with the same (restricted) extender.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field

from ..caps import Caps, resolve
from ..errors import InputError, PreconditionError, ResourceLimit
from ..search import enumerate_partial_automorphisms, find_automorphism_with_image
from ..structure import (Morphism, Structure, check_morphism, irreducible_substructures,
                         vertex_closures)
from .base import Witness

NE, EQ, NEVER = "ne", "eq", "never"


@dataclass
class LayerExtension:
    theta: Morphism
    phi_hat: Morphism
    local: dict                        # key -> {value: value}; missing keys act as identity
    plans: dict = field(default_factory=dict, repr=False)


@dataclass
class FaithfulnessCertificate:
    ok: bool
    checked: int = 0
    failure: str | None = None
    subset: tuple | None = None
    certificates: list = field(default_factory=list, repr=False)


class ValuationLayer(Witness):
    """Base class; subclasses supply keys, value ranges, rules and local maps."""

    kind = "layer"

    def __init__(self, A: Structure, B0: Witness, mode: str = "full", caps: Caps | None = None,
                 materialise: bool = True):
        if mode not in ("full", "reachable"):
            raise InputError("mode must be 'full' or 'reachable'")
        self.caps = resolve(caps)
        self.mode = mode
        self.A = A
        self.B0 = B0
        base = B0.structure
        if base.language != A.language:
            raise InputError("base witness and structure use different languages")
        self.base_structure = base
        self.A_image = frozenset(B0.psi.mapping.values())
        self.cl = vertex_closures(base)
        self._setup_keys()
        self.key_index = {x: {k: i for i, k in enumerate(ks)} for x, ks in self.keys_at.items()}
        self.rules = self._pair_rules()
        psi = {}
        for a in A.vertices:
            x = B0.psi(a)
            psi[a] = (x, tuple(self._psi_pair(y) for y in base.sort(self.cl[x])))
        self._psi_map = psi
        self._memo = {}
        if materialise:
            self.materialise()

    # -- hooks ----------------------------------------------------------------

    def _setup_keys(self) -> None:
        """Set ``self.keys_at[x]`` (ordered keys through x) and ``self.values[key]``."""
        raise NotImplementedError

    def _rule(self, key, x, y) -> str:
        raise NotImplementedError

    def psi_value(self, key, y):
        raise NotImplementedError

    def key_image(self, key, phi_hat: Morphism):
        raise NotImplementedError

    def local_maps(self, q: dict, phi_hat: Morphism) -> dict:
        raise NotImplementedError

    # -- pairs and genericity -------------------------------------------------

    def _pair_rules(self) -> dict:
        by_key = defaultdict(list)
        for x, ks in self.keys_at.items():
            for i, k in enumerate(ks):
                by_key[k].append((x, i))
        rules = defaultdict(list)
        for k, owners in by_key.items():
            for (x, ix), (y, iy) in itertools.permutations(owners, 2):
                rules[x, y].append((ix, iy, self._rule(k, x, y)))
        return dict(rules)

    def _psi_pair(self, y):
        return (y, tuple(self.psi_value(k, y) for k in self.keys_at[y]))

    def pairs_generic(self, p, q) -> bool:
        if p == q:
            return True
        x, chi = p
        y, chi2 = q
        if x == y:
            return False
        for ix, iy, kind in self.rules.get((x, y), ()):
            a = chi[ix]
            b = chi2[iy]
            if kind == NE:
                if a == b:
                    return False
            elif kind == EQ:
                if a != b:
                    return False
            else:
                return False
        return True

    def is_generic(self, pairs) -> bool:
        pairs = list(set(pairs))
        return all(self.pairs_generic(p, q) for p, q in itertools.combinations(pairs, 2))

    def pairs_of(self, vertices) -> set:
        out = set()
        for _, V in vertices:
            out.update(V)
        return out

    # -- materialisation ------------------------------------------------------

    def _pairs_over(self, y):
        ks = self.keys_at[y]
        for chi in itertools.product(*(self.values[k] for k in ks)):
            yield (y, chi)

    def _fiber_size_bound(self, x) -> int:
        size = 1
        for y in self.cl[x]:
            for k in self.keys_at[y]:
                size *= len(self.values[k])
        return size

    def _full_fiber(self, x) -> list:
        base = self.base_structure
        ys = [x] + [y for y in base.sort(self.cl[x]) if y != x]
        out = []
        chosen = []

        def rec(i):
            if i == len(ys):
                out.append((x, tuple(sorted(chosen, key=lambda p: base.pos(p[0])))))
                return
            for p in self._pairs_over(ys[i]):
                if all(self.pairs_generic(p, q) for q in chosen):
                    chosen.append(p)
                    rec(i + 1)
                    chosen.pop()

        rec(0)
        return out

    def size_bound(self) -> int:
        """Upper bound on the number of vertices of the full layer."""
        return sum(self._fiber_size_bound(x) for x in self.base_structure.vertices)

    def materialise(self) -> None:
        base = self.base_structure
        if self.mode == "full":
            total = self.size_bound()
            if total > self.caps.max_vertices:
                raise ResourceLimit(f"{self.kind} witness could have up to {total} vertices; "
                                    "use mode='reachable' or raise max_vertices")
            fibers = {x: self._full_fiber(x) for x in base.vertices}
        else:
            fibers = self._reachable_fibers()
        self.fibers = fibers
        verts = [v for x in base.vertices for v in fibers[x]]
        rel = {}
        for r in base.language.relation_names:
            tuples = []
            for t in base.rel(r):
                tuples.extend(self._lift_tuple(t))
            rel[r] = tuples
        fun = {}
        for f in base.language.functions:
            vals = {}
            for v in verts:
                x, V = v
                img = base.func(f, x)
                if img:
                    vals[v] = {self.restrict_vertex(V, y) for y in img}
            fun[f] = vals
        B = Structure(base.language, verts, rel, fun)
        Witness.__init__(self, self.A, B, Morphism(self.A.language.identity, self._psi_map))

    def restrict_vertex(self, V, y):
        """The vertex ``(y, V restricted to Cl(y))``."""
        cl = self.cl[y]
        return (y, tuple(p for p in V if p[0] in cl))

    def _lift_tuple(self, t):
        """Witness tuples over the base tuple ``t`` whose pairs are jointly generic."""
        if len(t) == 1:
            return [(v,) for v in self.fibers[t[0]]]
        if len(t) == 2:
            return self._lift_pair(t[0], t[1])
        out = [()]
        for x in t:
            nxt = []
            for acc in out:
                for v in self.fibers[x]:
                    if all(self._compatible(v, w) for w in acc):
                        nxt.append(acc + (v,))
            out = nxt
        return out

    def _compatible(self, v, w) -> bool:
        if v == w:
            return True
        for p in v[1]:
            for q in w[1]:
                if not self.pairs_generic(p, q):
                    return False
        return True

    def _lift_pair(self, a, b):
        """Join the fibers over ``a`` and ``b`` after grouping by the data the rules read."""
        if a == b:
            return [(v, v) for v in self.fibers[a]]
        cla, clb = self.cl[a], self.cl[b]
        shared = cla & clb
        # positions read by rules between the two closures
        read_a = defaultdict(set)
        read_b = defaultdict(set)
        for y1 in cla:
            for y2 in clb:
                if y1 == y2:
                    continue
                for ix, iy, _ in self.rules.get((y1, y2), ()):
                    read_a[y1].add(ix)
                    read_b[y2].add(iy)

        def sig(v, read):
            out = []
            for y, chi in v[1]:
                if y in shared:
                    out.append((y, chi))
                elif y in read:
                    out.append((y, tuple(chi[i] for i in sorted(read[y]))))
            return tuple(out)

        ga = defaultdict(list)
        gb = defaultdict(list)
        for v in self.fibers[a]:
            ga[sig(v, read_a)].append(v)
        for w in self.fibers[b]:
            gb[sig(w, read_b)].append(w)
        out = []
        for va in ga.values():
            for wb in gb.values():
                if self._compatible(va[0], wb[0]):
                    out.extend((v, w) for v in va for w in wb)
        return out

    def _reachable_fibers(self):
        base = self.base_structure
        start = list(self._psi_map.values())
        copy = self._psi_substructure()
        gens = []
        for phi in enumerate_partial_automorphisms(copy, self.caps):
            gens.append(self._extension_data(phi))
        seen = set(start)
        frontier = list(start)
        while frontier:
            nxt = []
            for v in frontier:
                for ext in gens:
                    w = self._apply(ext, v)
                    if w not in seen:
                        seen.add(w)
                        nxt.append(w)
                        if len(seen) > self.caps.max_vertices:
                            raise ResourceLimit("reachable part exceeded max_vertices")
            frontier = nxt
        fibers = {x: [] for x in base.vertices}
        for v in seen:
            fibers[v[0]].append(v)
        for x in fibers:
            fibers[x].sort(key=self._vertex_key)
        return fibers

    def _vertex_key(self, v):
        return tuple((self.base_structure.pos(y), chi) for y, chi in v[1])

    def _psi_substructure(self) -> Structure:
        """``psi(A)`` as a structure, computed directly from the construction rules."""
        base = self.base_structure
        verts = [self._psi_map[a] for a in self.A.vertices]
        over = {v[0]: v for v in verts}
        rel = {r: [tuple(over[x] for x in t) for t in base.rel(r) if all(x in over for x in t)]
               for r in base.language.relation_names}
        fun = {}
        for f in base.language.functions:
            fun[f] = {v: {over[y] for y in base.func(f, v[0])} for v in verts if base.func(f, v[0])}
        return Structure(base.language, verts, rel, fun)

    # -- extension ------------------------------------------------------------

    def project(self, v):
        return v[0]

    def _extension_data(self, phi: Morphism, phi_hat: Morphism | None = None) -> LayerExtension:
        base = self.base_structure
        proj = Morphism(phi.perm, {v[0]: w[0] for v, w in phi.mapping.items()})
        if phi_hat is None:
            if not (proj.domain <= self.A_image and proj.image <= self.A_image):
                raise InputError("an automorphism of the base extending the projection is required "
                                 "for maps outside the copy of A")
            phi_hat = self.B0.extend(proj)
        for x, y in proj.mapping.items():
            if phi_hat(x) != y:
                raise PreconditionError("base automorphism does not extend the projected map")
        q = {}
        for v, w in phi.mapping.items():
            top_v = next(p for p in v[1] if p[0] == v[0])
            top_w = next(p for p in w[1] if p[0] == w[0])
            q[top_v] = top_w
        local = self.local_maps(q, phi_hat)
        ext = LayerExtension(None, phi_hat, local)
        return ext

    def _plan(self, ext: LayerExtension, y):
        try:
            return ext.plans[y]
        except KeyError:
            pass
        ny = ext.phi_hat(y)
        dst = self.key_index[ny]
        row = [None] * len(self.keys_at[ny])
        for i, k in enumerate(self.keys_at[y]):
            j = dst[self.key_image(k, ext.phi_hat)]
            row[j] = (i, ext.local.get(k))
        plan = ext.plans[y] = (ny, row)
        return plan

    def _apply_pair(self, ext, p):
        y, chi = p
        ny, row = self._plan(ext, y)
        return (ny, tuple(chi[i] if m is None else m[chi[i]] for i, m in row))

    def _apply(self, ext: LayerExtension, v):
        base = self.base_structure
        pairs = sorted((self._apply_pair(ext, p) for p in v[1]), key=lambda p: base.pos(p[0]))
        return (ext.phi_hat(v[0]), tuple(pairs))

    def validate_domain(self, phi: Morphism) -> None:
        B = self.structure
        ok = check_morphism(phi, B, B, "partial-automorphism")
        if not ok:
            raise InputError(f"not a partial automorphism: {ok.violation}")
        if not self.is_generic(self.pairs_of(phi.domain)):
            raise PreconditionError("domain is not generic")
        if not self.is_generic(self.pairs_of(phi.image)):
            raise PreconditionError("range is not generic")

    def extension(self, phi: Morphism, phi_hat: Morphism | None = None) -> LayerExtension:
        """Extend a partial automorphism with generic domain and range.

        Without ``phi_hat`` the map must live inside ``psi(A)`` and the base
        witness's extender supplies the automorphism of ``B0``.
        """
        if phi_hat is None:
            self.validate_partial_automorphism(phi)
        self.validate_domain(phi)
        ext = self._extension_data(phi, phi_hat)
        theta = {v: self._apply(ext, v) for v in self.structure.vertices}
        ext.theta = Morphism(phi.perm, theta)
        return ext

    def extend(self, phi: Morphism) -> Morphism:
        try:
            return self._memo[phi]
        except KeyError:
            theta = self._memo[phi] = self.extension(phi).theta
            return theta

    # -- faithfulness ---------------------------------------------------------

    def certify_faithfulness(self, caps: Caps | None = None) -> FaithfulnessCertificate:
        """Send every irreducible substructure into ``psi(A)`` by a constructed automorphism."""
        caps = resolve(caps or self.caps)
        B = self.structure
        base = self.base_structure
        over = {v[0]: v for v in self.psi_image}
        cert = FaithfulnessCertificate(True)
        for D in irreducible_substructures(B, caps=caps):
            cert.checked += 1
            if not self.is_generic(self.pairs_of(D)):
                return FaithfulnessCertificate(False, cert.checked, "irreducible set is not generic",
                                               tuple(B.sort(D)))
            proj = {v[0] for v in D}
            g0 = find_automorphism_with_image(base, proj, self.A_image, caps)
            if g0 is None:
                return FaithfulnessCertificate(False, cert.checked, "projection is bad",
                                               tuple(B.sort(D)))
            phi = Morphism(g0.perm, {v: over[g0(v[0])] for v in D})
            try:
                theta = self.extension(phi, g0).theta
            except (InputError, KeyError) as exc:
                return FaithfulnessCertificate(False, cert.checked, f"extension failed: {exc}",
                                               tuple(B.sort(D)))
            if not all(theta(v) in self.psi_image for v in D):
                return FaithfulnessCertificate(False, cert.checked, "image leaves psi(A)",
                                               tuple(B.sort(D)))
            if not check_morphism(theta, B, B, "automorphism"):
                return FaithfulnessCertificate(False, cert.checked, "constructed map is not an automorphism",
                                               tuple(B.sort(D)))
            cert.certificates.append((tuple(B.sort(D)), theta))
        return cert
