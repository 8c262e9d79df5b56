# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ``_kernels_py``; same algorithm, typed arrays."""

import numpy as np
cimport numpy as cnp

IMPLEMENTATION = "cython"

ctypedef Py_ssize_t idx_t


cdef inline bint _has_edge(const idx_t[::1] ptr, const idx_t[::1] idx, idx_t base,
                           idx_t a, idx_t b) noexcept:
    cdef idx_t lo = ptr[base + a]
    cdef idx_t hi = ptr[base + a + 1]
    cdef idx_t mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if idx[mid] < b:
            lo = mid + 1
        else:
            hi = mid
    return lo < ptr[base + a + 1] and idx[lo] == b


cdef bint _consistent(idx_t u, idx_t w, idx_t n_s, idx_t n_t, idx_t nlayers,
                      const idx_t[::1] s_out_ptr, const idx_t[::1] s_out_idx,
                      const idx_t[::1] s_in_ptr, const idx_t[::1] s_in_idx,
                      const idx_t[::1] t_out_ptr, const idx_t[::1] t_out_idx,
                      const idx_t[::1] t_in_ptr, const idx_t[::1] t_in_idx,
                      const idx_t[::1] perm, idx_t[::1] mapping, idx_t[::1] inv) noexcept:
    cdef idx_t l, tl, bs, bt, k, a, b, cnt, cnt2
    for l in range(nlayers):
        tl = perm[l]
        bs = l * (n_s + 1)
        bt = tl * (n_t + 1)
        cnt = 0
        for k in range(s_out_ptr[bs + u], s_out_ptr[bs + u + 1]):
            a = s_out_idx[k]
            if a == u:
                b = w
            else:
                b = mapping[a]
                if b < 0:
                    continue
            if not _has_edge(t_out_ptr, t_out_idx, bt, w, b):
                return False
            cnt += 1
        cnt2 = 0
        for k in range(t_out_ptr[bt + w], t_out_ptr[bt + w + 1]):
            b = t_out_idx[k]
            if b == w or inv[b] >= 0:
                cnt2 += 1
        if cnt != cnt2:
            return False
        cnt = 0
        for k in range(s_in_ptr[bs + u], s_in_ptr[bs + u + 1]):
            a = s_in_idx[k]
            if a == u:
                continue
            b = mapping[a]
            if b < 0:
                continue
            if not _has_edge(t_out_ptr, t_out_idx, bt, b, w):
                return False
            cnt += 1
        cnt2 = 0
        for k in range(t_in_ptr[bt + w], t_in_ptr[bt + w + 1]):
            b = t_in_idx[k]
            if b != w and inv[b] >= 0:
                cnt2 += 1
        if cnt != cnt2:
            return False
    return True


def extend_search(idx_t n_s, idx_t n_t, idx_t nlayers,
                  const idx_t[::1] s_out_ptr, const idx_t[::1] s_out_idx,
                  const idx_t[::1] s_in_ptr, const idx_t[::1] s_in_idx,
                  const idx_t[::1] t_out_ptr, const idx_t[::1] t_out_idx,
                  const idx_t[::1] t_in_ptr, const idx_t[::1] t_in_idx,
                  const idx_t[::1] perm, const idx_t[::1] order,
                  const idx_t[::1] anchor_layer, const idx_t[::1] anchor_dir,
                  const idx_t[::1] anchor_vertex, const idx_t[::1] forced,
                  const idx_t[::1] sig_s, const idx_t[::1] sig_t,
                  const idx_t[::1] constrained, const idx_t[::1] target_ok,
                  idx_t max_solutions, idx_t max_nodes):
    cdef idx_t[::1] mapping = np.full(n_s, -1, dtype=np.intp)
    cdef idx_t[::1] inv = np.full(max(n_t, 1), -1, dtype=np.intp)
    # candidate window per depth: [lo, hi) into a source array chosen by kind
    cdef idx_t[::1] c_lo = np.zeros(max(n_s, 1), dtype=np.intp)
    cdef idx_t[::1] c_hi = np.zeros(max(n_s, 1), dtype=np.intp)
    cdef idx_t[::1] c_kind = np.full(max(n_s, 1), -1, dtype=np.intp)  # -1 unset, 0 out, 1 in, 2 range, 3 forced
    cdef idx_t[::1] c_pos = np.zeros(max(n_s, 1), dtype=np.intp)
    cdef idx_t depth = 0, u, w, tl, base, nodes = 0, kind
    cdef bint advanced
    solutions = []
    if n_s == 0:
        return (1 if max_solutions <= 1 else 0), [[]], 0
    while depth >= 0:
        if depth == n_s:
            solutions.append(list(mapping))
            if len(solutions) >= max_solutions:
                return 1, solutions, nodes
            depth -= 1
            continue
        u = order[depth]
        if mapping[u] >= 0:
            inv[mapping[u]] = -1
            mapping[u] = -1
        if c_kind[depth] < 0:
            if forced[u] >= 0:
                c_kind[depth] = 3
                c_lo[depth] = forced[u]
                c_hi[depth] = forced[u] + 1
            elif anchor_vertex[u] >= 0:
                tl = perm[anchor_layer[u]]
                base = tl * (n_t + 1) + mapping[anchor_vertex[u]]
                if anchor_dir[u] == 0:
                    c_kind[depth] = 0
                    c_lo[depth] = t_out_ptr[base]
                    c_hi[depth] = t_out_ptr[base + 1]
                else:
                    c_kind[depth] = 1
                    c_lo[depth] = t_in_ptr[base]
                    c_hi[depth] = t_in_ptr[base + 1]
            else:
                c_kind[depth] = 2
                c_lo[depth] = 0
                c_hi[depth] = n_t
            c_pos[depth] = c_lo[depth]
        kind = c_kind[depth]
        advanced = False
        while c_pos[depth] < c_hi[depth]:
            if kind == 0:
                w = t_out_idx[c_pos[depth]]
            elif kind == 1:
                w = t_in_idx[c_pos[depth]]
            else:
                w = c_pos[depth]
            c_pos[depth] += 1
            nodes += 1
            if nodes > max_nodes:
                return -1, solutions, nodes
            if inv[w] >= 0 or sig_s[u] != sig_t[w]:
                continue
            if constrained[u] and not target_ok[w]:
                continue
            if _consistent(u, w, n_s, n_t, nlayers, s_out_ptr, s_out_idx, s_in_ptr, s_in_idx,
                           t_out_ptr, t_out_idx, t_in_ptr, t_in_idx, perm, mapping, inv):
                mapping[u] = w
                inv[w] = u
                depth += 1
                advanced = True
                break
        if not advanced:
            c_kind[depth] = -1
            depth -= 1
    return 0, solutions, nodes
