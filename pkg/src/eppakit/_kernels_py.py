"""Pure-Python backtracking kernel; the Cython module ``_kernels`` mirrors it line for line.

Both structures are given as layered digraphs in CSR form: for layer ``l`` and
vertex ``v`` the out-neighbours are ``out_idx[out_ptr[l*(n+1)+v] : out_ptr[l*(n+1)+v+1]]``,
sorted ascending.  Layer ``l`` of the source corresponds to layer ``perm[l]`` of
the target.  The search extends the forced assignments to injective maps that
preserve and reflect every layer on the assigned part (induced embeddings).
"""

from bisect import bisect_left

IMPLEMENTATION = "python"


def _has_edge(ptr, idx, base, a, b):
    lo = ptr[base + a]
    hi = ptr[base + a + 1]
    k = bisect_left(idx, b, lo, hi)
    return k < hi and idx[k] == b


def extend_search(n_s, n_t, nlayers,
                  s_out_ptr, s_out_idx, s_in_ptr, s_in_idx,
                  t_out_ptr, t_out_idx, t_in_ptr, t_in_idx,
                  perm, order, anchor_layer, anchor_dir, anchor_vertex,
                  forced, sig_s, sig_t, constrained, target_ok,
                  max_solutions, max_nodes):
    """Return ``(status, solutions, nodes)``.

    status is 0 when the search space was exhausted, 1 when ``max_solutions``
    were found, -1 when the node budget ran out.  Each solution is a list
    giving the target index of every source vertex.
    """
    mapping = [-1] * n_s
    inv = [-1] * n_t
    cands = [None] * n_s
    cpos = [0] * n_s
    solutions = []
    nodes = 0
    depth = 0
    if n_s == 0:
        return 1 if max_solutions <= 1 else 0, [[]], 0
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
        cl = cands[depth]
        if cl is None:
            if forced[u] >= 0:
                cl = [forced[u]]
            elif anchor_vertex[u] >= 0:
                tl = perm[anchor_layer[u]]
                wa = mapping[anchor_vertex[u]]
                base = tl * (n_t + 1) + wa
                if anchor_dir[u] == 0:
                    cl = t_out_idx[t_out_ptr[base]:t_out_ptr[base + 1]]
                else:
                    cl = t_in_idx[t_in_ptr[base]:t_in_ptr[base + 1]]
            else:
                cl = range(n_t)
            cands[depth] = cl
            cpos[depth] = 0
        advanced = False
        while cpos[depth] < len(cl):
            w = cl[cpos[depth]]
            cpos[depth] += 1
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
            cands[depth] = None
            depth -= 1
    return 0, solutions, nodes


def _consistent(u, w, n_s, n_t, nlayers, s_out_ptr, s_out_idx, s_in_ptr, s_in_idx,
                t_out_ptr, t_out_idx, t_in_ptr, t_in_idx, perm, mapping, inv):
    for l in range(nlayers):
        tl = perm[l]
        bs = l * (n_s + 1)
        bt = tl * (n_t + 1)
        # edges u -> a, including a loop at u
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
        # edges a -> u with a != u
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
