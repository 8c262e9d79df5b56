"""Backtracking searches for embeddings, automorphisms and homomorphism-embeddings.

Structures whose relations have arity at most two are encoded as layered
digraphs (one layer per symbol: unary relations become loops, a function
``F`` becomes edges ``v -> w`` for ``w`` in ``F(v)``) and handed to the
kernel in :mod:`eppakit.kernels`.  Higher arities use :func:`_generic_search`,
which works on tuples directly.
"""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Mapping

import numpy as np

from . import kernels
from .caps import Caps, resolve
from .errors import InputError, ResourceLimit
from .structure import (Morphism, Structure, _check_embedding_on, closed_subsets,
                        induced_substructure, irreducible_substructures)


class Encoded:
    """CSR layers of a structure, in both numpy and list form."""

    __slots__ = ("n", "nlayers", "out_ptr", "out_idx", "in_ptr", "in_idx",
                 "lists", "outdeg", "indeg", "loops", "adj", "outs", "ins")

    def __init__(self, S: Structure):
        L = S.language
        n = len(S)
        pos = S.pos
        nl = L.size
        outs = [[[] for _ in range(n)] for _ in range(nl)]
        for li, (r, a) in enumerate(L.relations):
            if a > 2:
                raise InputError("layer encoding needs arities <= 2")
            for t in S.rel(r):
                if a == 1:
                    outs[li][pos(t[0])].append(pos(t[0]))
                else:
                    outs[li][pos(t[0])].append(pos(t[1]))
        for fi, f in enumerate(L.functions):
            li = len(L.relations) + fi
            for v, img in S.functions[f].items():
                outs[li][pos(v)].extend(pos(w) for w in img)
        ins = [[[] for _ in range(n)] for _ in range(nl)]
        for li in range(nl):
            for v in range(n):
                outs[li][v].sort()
                for w in outs[li][v]:
                    ins[li][w].append(v)
        self.n = n
        self.nlayers = nl
        self.out_ptr, self.out_idx = _csr(outs, n)
        self.in_ptr, self.in_idx = _csr(ins, n)
        self.lists = (self.out_ptr.tolist(), self.out_idx.tolist(),
                      self.in_ptr.tolist(), self.in_idx.tolist())
        self.outdeg = [[len(outs[li][v]) for v in range(n)] for li in range(nl)]
        self.indeg = [[len(ins[li][v]) for v in range(n)] for li in range(nl)]
        self.loops = [[int(v in set(outs[li][v])) for v in range(n)] for li in range(nl)]
        adj = [set() for _ in range(n)]
        for li in range(nl):
            for v in range(n):
                for w in outs[li][v]:
                    if w != v:
                        adj[v].add(w)
                        adj[w].add(v)
        self.adj = [sorted(a) for a in adj]
        self.outs = outs
        self.ins = ins


def _csr(rows, n):
    """Concatenate per-layer adjacency; layer ``l`` owns ``ptr[l*(n+1) : (l+1)*(n+1)]``."""
    ptr = []
    idx = []
    for layer in rows:
        ptr.append(len(idx))
        for v in range(n):
            idx.extend(layer[v])
            ptr.append(len(idx))
    return np.asarray(ptr, dtype=np.intp), np.asarray(idx, dtype=np.intp)


def encodable(S: Structure) -> bool:
    return S.language.max_arity <= 2


def encode(S: Structure) -> Encoded:
    return S.cached("encoded", lambda: Encoded(S))


def _signatures(es: Encoded, et: Encoded, perm, mode, L):
    """Integer classes such that matched vertices must share a class."""
    nl = es.nlayers
    inv = [0] * nl
    for l, t in enumerate(perm):
        inv[t] = l
    nrel = len(L.relations)
    table = {}

    def feats(e, v, layer_of):
        out = []
        for t in range(nl):
            l = layer_of(t)
            if mode == "iso":
                out.append((e.outdeg[l][v], e.indeg[l][v], e.loops[l][v]))
            elif t >= nrel:
                out.append(e.outdeg[l][v])
            else:
                out.append(e.loops[l][v])
        return tuple(out)

    sig_t = [table.setdefault(feats(et, v, lambda t: t), len(table)) for v in range(et.n)]
    sig_s = []
    for v in range(es.n):
        key = feats(es, v, lambda t: inv[t])
        sig_s.append(table.get(key, -1))
    return sig_s, sig_t


def _layer_sums(ptr, idx, n, layer, col, h):
    """Per vertex, the wrapping sum of ``h[col[w]]`` over its neighbours in one layer."""
    p = ptr[layer * (n + 1):(layer + 1) * (n + 1)]
    vals = h[col[idx[p[0]:p[-1]]]]
    cs = np.zeros(len(vals) + 1, dtype=np.uint64)
    np.cumsum(vals, dtype=np.uint64, out=cs[1:])
    return cs[p[1:] - p[0]] - cs[p[:-1] - p[0]]


def _refine(es: Encoded, et: Encoded, perm, sig_s, sig_t, forced):
    """Joint colour refinement of source and target for bijective searches.

    Forced pairs get a private colour.  Each round hashes a vertex's colour
    together with, per layer and direction, the sum of seeded random hashes
    of its neighbours' colours.  Equal neighbourhoods always hash equally, so
    a collision can only merge classes and the colouring stays a valid
    necessary condition.  Returns refined classes, or None when the class
    sizes already rule out a bijection.
    """
    nl = es.nlayers
    n_s, n_t = es.n, et.n
    col_s = np.asarray(sig_s, dtype=np.int64)
    col_t = np.asarray(sig_t, dtype=np.int64)
    k = int(col_t.max(initial=-1)) + 1
    for u, w in enumerate(forced):
        if w >= 0:
            col_s[u] = col_t[w] = k + u
    if (col_s < 0).any():
        return None
    if n_s == 0:
        return [], []
    inv = [0] * nl
    for l, t in enumerate(perm):
        inv[t] = l
    rng = np.random.default_rng(0x5EED)
    top = np.iinfo(np.uint64).max
    classes = len(np.unique(np.concatenate([col_s, col_t])))
    for _ in range(n_s + 1):
        m = int(max(col_s.max(), col_t.max())) + 1
        own = rng.integers(0, top, size=m, dtype=np.uint64, endpoint=True)
        acc_s = own[col_s]
        acc_t = own[col_t]
        for t in range(nl):
            for ps, xs, pt, xt in ((es.out_ptr, es.out_idx, et.out_ptr, et.out_idx),
                                   (es.in_ptr, es.in_idx, et.in_ptr, et.in_idx)):
                h = rng.integers(0, top, size=m, dtype=np.uint64, endpoint=True)
                acc_s = acc_s + _layer_sums(ps, xs, n_s, inv[t], col_s, h)
                acc_t = acc_t + _layer_sums(pt, xt, n_t, t, col_t, h)
        _, joint = np.unique(np.concatenate([acc_s, acc_t]), return_inverse=True)
        ns, nt = joint[:n_s], joint[n_s:]
        if not np.array_equal(np.sort(ns), np.sort(nt)):
            return None
        col_s, col_t = ns, nt
        now = int(joint.max()) + 1
        if now <= classes:
            break
        classes = now
    return col_s.tolist(), col_t.tolist()


def _plan(es: Encoded, forced, constrained):
    """Search order (forced, then BFS) and an anchor for every unforced vertex."""
    n = es.n
    rank = [-1] * n
    order = []
    for u in range(n):
        if forced[u] >= 0:
            rank[u] = len(order)
            order.append(u)
    queue = deque(order)

    def bfs():
        while queue:
            v = queue.popleft()
            for w in es.adj[v]:
                if rank[w] < 0:
                    rank[w] = len(order)
                    order.append(w)
                    queue.append(w)

    bfs()
    roots = sorted(range(n), key=lambda v: (not constrained[v], -len(es.adj[v]), v))
    for r in roots:
        if rank[r] < 0:
            rank[r] = len(order)
            order.append(r)
            queue.append(r)
            bfs()
    a_layer = [-1] * n
    a_dir = [0] * n
    a_vert = [-1] * n
    for u in range(n):
        if forced[u] >= 0:
            continue
        best = None
        for l in range(es.nlayers):
            for a in es.ins[l][u]:          # a -> u: candidates are out-neighbours of image(a)
                if a != u and rank[a] < rank[u]:
                    key = (es.outdeg[l][a], rank[a])
                    if best is None or key < best[0]:
                        best = (key, l, 0, a)
            for a in es.outs[l][u]:         # u -> a: candidates are in-neighbours of image(a)
                if a != u and rank[a] < rank[u]:
                    key = (es.indeg[l][a], rank[a])
                    if best is None or key < best[0]:
                        best = (key, l, 1, a)
        if best is not None:
            _, a_layer[u], a_dir[u], a_vert[u] = best
    return order, a_layer, a_dir, a_vert


def _kernel_search(S, T, perm, mode, forced_map, constrained_set, targets, limit, caps, impl=None):
    es = encode(S)
    et = encode(T)
    n_s, n_t = es.n, et.n
    forced = [-1] * n_s
    for v, w in forced_map.items():
        forced[S.pos(v)] = T.pos(w)
    constrained = [0] * n_s
    for v in constrained_set:
        constrained[S.pos(v)] = 1
    target_ok = [0] * n_t
    for w in targets:
        target_ok[T.pos(w)] = 1
    sig_s, sig_t = _signatures(es, et, perm, mode, S.language)
    if mode == "iso":
        if n_s != n_t:
            return []
        refined = _refine(es, et, perm, sig_s, sig_t, forced)
        if refined is None:
            return []
        sig_s, sig_t = refined
    order, a_layer, a_dir, a_vert = _plan(es, forced, constrained)
    fn = impl or kernels.extend_search
    if fn is kernels.python_extend_search:
        s_lists, t_lists = es.lists, et.lists
        conv = list
    else:
        s_lists = (es.out_ptr, es.out_idx, es.in_ptr, es.in_idx)
        t_lists = (et.out_ptr, et.out_idx, et.in_ptr, et.in_idx)

        def conv(x):
            return np.asarray(x, dtype=np.intp)
    status, sols, nodes = fn(
        n_s, n_t, es.nlayers, *s_lists, *t_lists,
        conv(perm), conv(order), conv(a_layer), conv(a_dir), conv(a_vert),
        conv(forced), conv(sig_s), conv(sig_t), conv(constrained), conv(target_ok),
        limit, caps.max_search_nodes)
    if status < 0:
        raise ResourceLimit(f"search exceeded {caps.max_search_nodes} nodes")
    tv = T.vertices
    sv = S.vertices
    return [{sv[i]: tv[j] for i, j in enumerate(sol)} for sol in sols]


def _generic_search(S, T, perm, mode, forced_map, constrained_set, targets, limit, caps):
    """Tuple-level backtracking for any arity; same contract as the kernel."""
    L = S.language
    names = L.symbols
    gname = {s: names[perm[L.index(s)]] for s in names}
    tat_s = S.tuples_at()
    tat_t = T.tuples_at()
    fin_s = _function_preimages(S)
    fin_t = _function_preimages(T)

    def sig(X, v, tat, fin, rename):
        counts = {}
        for r, t in tat[v]:
            key = (rename(r), tuple(i for i, x in enumerate(t) if x == v))
            counts[key] = counts.get(key, 0) + 1
        fo = tuple(sorted((rename(f), len(X.func(f, v))) for f in L.functions))
        if mode != "iso":
            loops = tuple(sorted(k for k in counts if len(k[1]) == L.arity(k[0])))
            return loops, fo
        fi = tuple(sorted((rename(f), len(fin[f].get(v, ()))) for f in L.functions))
        return tuple(sorted(counts.items())), fo, fi

    sig_t = {w: sig(T, w, tat_t, fin_t, lambda s: s) for w in T.vertices}
    sig_s = {v: sig(S, v, tat_s, fin_s, gname.__getitem__) for v in S.vertices}
    adj = {v: set() for v in S.vertices}
    for v in S.vertices:
        for _, t in tat_s[v]:
            adj[v].update(t)
        for f in L.functions:
            adj[v].update(S.func(f, v))
            adj[v].update(fin_s[f].get(v, ()))
        adj[v].discard(v)
    order = [v for v in S.vertices if v in forced_map]
    seen = set(order)
    queue = deque(order)
    roots = sorted(S.vertices, key=lambda v: (v not in constrained_set, -len(adj[v]), S.pos(v)))
    ri = 0
    while len(order) < len(S):
        if not queue:
            while roots[ri] in seen:
                ri += 1
            seen.add(roots[ri])
            order.append(roots[ri])
            queue.append(roots[ri])
        v = queue.popleft()
        for w in S.sort(adj[v]):
            if w not in seen:
                seen.add(w)
                order.append(w)
                queue.append(w)
    mapping = {}
    inv = {}
    targets = set(targets)
    out = []
    nodes = [0]

    def consistent(u, w):
        mapping[u] = w
        inv[w] = u
        try:
            for r, t in tat_s[u]:
                if all(x in mapping for x in t):
                    if tuple(mapping[x] for x in t) not in T.rel(gname[r]):
                        return False
            ginv = {gname[s]: s for s in names}
            for r, t in tat_t[w]:
                if all(x in inv for x in t):
                    if tuple(inv[x] for x in t) not in S.rel(ginv[r]):
                        return False
            for f in L.functions:
                gf = gname[f]
                for a in S.func(f, u):
                    if a in mapping and mapping[a] not in T.func(gf, w):
                        return False
                if sum(1 for a in S.func(f, u) if a in mapping) != sum(1 for b in T.func(gf, w) if b in inv):
                    return False
                for a in fin_s[f].get(u, ()):
                    if a in mapping and w not in T.func(gf, mapping[a]):
                        return False
                if (sum(1 for a in fin_s[f].get(u, ()) if a in mapping)
                        != sum(1 for b in fin_t[gf].get(w, ()) if b in inv)):
                    return False
            return True
        finally:
            del mapping[u]
            del inv[w]

    def rec(i):
        if i == len(order):
            out.append(dict(mapping))
            return len(out) >= limit
        u = order[i]
        cands = [forced_map[u]] if u in forced_map else T.vertices
        for w in cands:
            nodes[0] += 1
            if nodes[0] > caps.max_search_nodes:
                raise ResourceLimit(f"search exceeded {caps.max_search_nodes} nodes")
            if w in inv or sig_s[u] != sig_t[w]:
                continue
            if u in constrained_set and w not in targets:
                continue
            if consistent(u, w):
                mapping[u] = w
                inv[w] = u
                stop = rec(i + 1)
                del mapping[u]
                del inv[w]
                if stop:
                    return True
        return False

    rec(0)
    return out


def _function_preimages(S):
    def compute():
        out = {}
        for f in S.language.functions:
            d = {}
            for v, img in S.functions[f].items():
                for w in img:
                    d.setdefault(w, set()).add(v)
            out[f] = d
        return out
    return S.cached("fun_pre", compute)


def search_maps(S: Structure, T: Structure, perm, *, mode: str = "iso",
                partial: Mapping | None = None, constrained: Iterable = (),
                targets: Iterable = (), limit: int = 1, caps: Caps | None = None,
                engine: str = "auto") -> list[dict]:
    """Induced embeddings (``mode='emb'``) or isomorphisms (``mode='iso'``) of S into T.

    Only maps extending ``partial`` and sending every vertex of ``constrained``
    into ``targets`` are returned, at most ``limit`` of them.  ``engine`` is
    ``auto``, ``kernel``, ``python-kernel`` or ``generic``.
    """
    caps = resolve(caps)
    perm = tuple(perm)
    partial = dict(partial or {})
    if S.language != T.language:
        raise InputError("languages differ")
    if mode == "iso" and len(S) != len(T):
        return []
    if len(S) > len(T):
        return []
    constrained = set(constrained)
    for v, w in partial.items():
        if v not in S or w not in T:
            raise InputError(f"partial map entry {v!r} -> {w!r} is not between the structures")
    if len(set(partial.values())) != len(partial):
        return []
    if engine == "auto":
        engine = "kernel" if encodable(S) else "generic"
    if engine == "generic":
        return _generic_search(S, T, perm, mode, partial, constrained, targets, limit, caps)
    impl = kernels.python_extend_search if engine == "python-kernel" else None
    return _kernel_search(S, T, perm, mode, partial, constrained, targets, limit, caps, impl)


# ---------------------------------------------------------------------------
# derived searches


def extend_to_automorphism(S: Structure, pa: Morphism, caps: Caps | None = None,
                           engine: str = "auto") -> Morphism | None:
    """Some automorphism of ``S`` containing the partial map ``pa`` (same symbol part)."""
    if not S.language.in_group(pa.perm):
        raise InputError("symbol permutation is not in the group")
    sols = search_maps(S, S, pa.perm, mode="iso", partial=pa.mapping, caps=caps, engine=engine)
    return Morphism(pa.perm, sols[0]) if sols else None


def find_automorphism_with_image(S: Structure, X: Iterable, targets: Iterable,
                                 caps: Caps | None = None) -> Morphism | None:
    """An automorphism ``g`` of ``S`` with ``g(X)`` inside ``targets``; None proves there is none."""
    X = set(X)
    targets = set(targets)
    for v in X | targets:
        if v not in S:
            raise InputError(f"unknown vertex {v!r}")
    if X <= targets:
        return Morphism.identity(S.language, S.vertices)
    for g in S.language.group:
        sols = search_maps(S, S, g, mode="iso", constrained=X, targets=targets, caps=caps)
        if sols:
            return Morphism(g, sols[0])
    return None


def automorphisms(S: Structure, limit: int = 10**9, caps: Caps | None = None) -> list[Morphism]:
    out = []
    for g in S.language.group:
        for m in search_maps(S, S, g, mode="iso", limit=limit - len(out), caps=caps):
            out.append(Morphism(g, m))
        if len(out) >= limit:
            break
    return out


def find_isomorphism(S: Structure, T: Structure, caps: Caps | None = None) -> Morphism | None:
    for g in S.language.group:
        sols = search_maps(S, T, g, mode="iso", caps=caps)
        if sols:
            return Morphism(g, sols[0])
    return None


def embeddings(S: Structure, T: Structure, perm=None, partial: Mapping | None = None,
               limit: int = 10**9, caps: Caps | None = None) -> list[Morphism]:
    """Embeddings of ``S`` into ``T``; every group element when ``perm`` is None."""
    perms = S.language.group if perm is None else (tuple(perm),)
    out = []
    for g in perms:
        for m in search_maps(S, T, g, mode="emb", partial=partial, limit=limit - len(out), caps=caps):
            out.append(Morphism(g, m))
        if len(out) >= limit:
            break
    return out


def enumerate_partial_automorphisms(S: Structure, caps: Caps | None = None) -> list[Morphism]:
    """All isomorphisms between closed substructures, with a group element.

    Ordered by group element, then domain (size, then positions), then the
    tuple of image positions.
    """
    caps = resolve(caps)
    out = []
    domains = closed_subsets(S, caps)
    subs = {D: induced_substructure(S, D) for D in domains}
    for g in S.language.group:
        for D in domains:
            sub = subs[D]
            found = search_maps(sub, S, g, mode="emb", limit=caps.max_partial_automorphisms + 1,
                                caps=caps)
            dom_order = sub.vertices
            found.sort(key=lambda m: tuple(S.pos(m[v]) for v in dom_order))
            out.extend(Morphism(g, {v: m[v] for v in dom_order}) for m in found)
            if len(out) > caps.max_partial_automorphisms:
                raise ResourceLimit("too many partial automorphisms")
    return out


def find_homomorphism_embedding(F: Structure, B: Structure, caps: Caps | None = None) -> Morphism | None:
    """A homomorphism ``F -> B`` that embeds every irreducible substructure of ``F``."""
    caps = resolve(caps)
    if F.language != B.language:
        raise InputError("languages differ")
    L = F.language
    if len(F) == 0:
        return Morphism(L.identity, {})
    irr = irreducible_substructures(F, caps=caps)
    order = list(F.vertices)
    rank = {v: i for i, v in enumerate(order)}
    # checks become available when their last vertex is assigned
    rel_at = [[] for _ in order]
    for r in L.relation_names:
        for t in F.rel(r):
            rel_at[max(rank[v] for v in t)].append((r, t))
    fun_at = [[] for _ in order]
    for f in L.functions:
        for v, img in F.functions[f].items():
            for w in img:
                fun_at[max(rank[v], rank[w])].append((f, v, w))
    irr_at = [[] for _ in order]
    for I in irr:
        irr_at[max(rank[v] for v in I)].append(I)
    nodes = [0]
    for g in L.group:
        gr = {s: L.act(g, s) for s in L.symbols}
        mapping = {}

        def ok(i):
            for r, t in rel_at[i]:
                if tuple(mapping[v] for v in t) not in B.rel(gr[r]):
                    return False
            for f, v, w in fun_at[i]:
                if mapping[w] not in B.func(gr[f], mapping[v]):
                    return False
            for I in irr_at[i]:
                m = Morphism(g, {v: mapping[v] for v in I})
                if not _check_embedding_on(m, F, B, I):
                    return False
            return True

        def rec(i):
            if i == len(order):
                return True
            v = order[i]
            for w in B.vertices:
                nodes[0] += 1
                if nodes[0] > caps.max_search_nodes:
                    raise ResourceLimit("homomorphism-embedding search exceeded the node budget")
                mapping[v] = w
                if ok(i) and rec(i + 1):
                    return True
                del mapping[v]
            return False

        if rec(0):
            return Morphism(g, mapping)
    return None


def exists_homomorphism_embedding(F: Structure, B: Structure, caps: Caps | None = None) -> bool:
    return find_homomorphism_embedding(F, B, caps) is not None
