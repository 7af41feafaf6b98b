"""Compiled inner loops.

Everything here works on plain arrays. The oracle-side kernels (Prim pass
simulation) see the hidden graph and therefore live behind CutOracle methods;
they are validated against pure-Python reference implementations in the tests.
"""
import numpy as np
from numba import njit


@njit(cache=True)
def uf_find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(cache=True)
def stoer_wagner_dense(W):
    """Global min cut of a symmetric non-negative weight matrix (modified in place)."""
    q = W.shape[0]
    owner = np.arange(q)
    alive = np.ones(q, dtype=np.bool_)
    best = np.int64(-1)
    best_side = np.zeros(q, dtype=np.bool_)
    keys = np.zeros(q, dtype=np.int64)
    added = np.zeros(q, dtype=np.bool_)
    for phase in range(q - 1):
        k = q - phase
        keys[:] = 0
        added[:] = False
        prev = -1
        last = -1
        for step in range(k):
            sel = -1
            bk = np.int64(-1)
            for v in range(q):
                if alive[v] and not added[v] and keys[v] > bk:
                    bk = keys[v]
                    sel = v
            added[sel] = True
            prev = last
            last = sel
            if step < k - 1:
                for v in range(q):
                    if alive[v] and not added[v]:
                        keys[v] += W[sel, v]
        phase_cut = keys[last]
        if best < 0 or phase_cut < best:
            best = phase_cut
            for v in range(q):
                best_side[v] = owner[v] == last
        for v in range(q):
            W[prev, v] += W[last, v]
            W[v, prev] = W[prev, v]
        W[prev, prev] = 0
        alive[last] = False
        for v in range(q):
            if owner[v] == last:
                owner[v] = prev
    return best, best_side


@njit(cache=True)
def _heap_push(hk, hv, size, key, val):
    i = size
    hk[i] = key
    hv[i] = val
    while i > 0:
        p = (i - 1) // 2
        if hk[p] >= hk[i]:
            break
        hk[p], hk[i] = hk[i], hk[p]
        hv[p], hv[i] = hv[i], hv[p]
        i = p
    return size + 1


@njit(cache=True)
def _heap_pop(hk, hv, size):
    key = hk[0]
    val = hv[0]
    size -= 1
    hk[0] = hk[size]
    hv[0] = hv[size]
    i = 0
    while True:
        l = 2 * i + 1
        if l >= size:
            break
        c = l
        if l + 1 < size and hk[l + 1] > hk[l]:
            c = l + 1
        if hk[i] >= hk[c]:
            break
        hk[c], hk[i] = hk[i], hk[c]
        hv[c], hv[i] = hv[i], hv[c]
        i = c
    return key, val, size


@njit(cache=True)
def ma_min_cut(q, eu, ev, ew):
    """Exact min cut of a weighted multigraph by maximum-adjacency contraction.

    Each phase computes an MA ordering, records the smallest weighted degree as
    a candidate, then contracts every edge whose ordering key reaches the
    current best value (such edges cannot cross a cut lighter than the best).
    Returns (value, side over the q input nodes).
    """
    node_of = np.arange(q)
    best = np.int64(-1)
    best_side = np.zeros(q, dtype=np.bool_)
    if q < 2:
        return np.int64(0), best_side
    cu = eu.copy()
    cv = ev.copy()
    cw = ew.astype(np.int64).copy()
    nq = q
    while nq > 1:
        # merge parallel edges, drop loops
        m = cu.shape[0]
        keyv = np.empty(m, dtype=np.int64)
        cnt = 0
        for i in range(m):
            a = cu[i]
            b = cv[i]
            if a == b:
                continue
            if a > b:
                a, b = b, a
            keyv[cnt] = a * nq + b
            cnt += 1
        keyv = keyv[:cnt]
        wts = np.empty(cnt, dtype=np.int64)
        j = 0
        for i in range(m):
            if cu[i] != cv[i]:
                wts[j] = cw[i]
                j += 1
        order = np.argsort(keyv)
        uniq_u = np.empty(cnt, dtype=np.int64)
        uniq_v = np.empty(cnt, dtype=np.int64)
        uniq_w = np.empty(cnt, dtype=np.int64)
        nu = 0
        for t in range(cnt):
            kk = keyv[order[t]]
            if nu > 0 and uniq_u[nu - 1] * nq + uniq_v[nu - 1] == kk:
                uniq_w[nu - 1] += wts[order[t]]
            else:
                uniq_u[nu] = kk // nq
                uniq_v[nu] = kk % nq
                uniq_w[nu] = wts[order[t]]
                nu += 1
        cu = uniq_u[:nu]
        cv = uniq_v[:nu]
        cw = uniq_w[:nu]
        m = nu
        # adjacency
        deg = np.zeros(nq, dtype=np.int64)
        wdeg = np.zeros(nq, dtype=np.int64)
        for i in range(m):
            deg[cu[i]] += 1
            deg[cv[i]] += 1
            wdeg[cu[i]] += cw[i]
            wdeg[cv[i]] += cw[i]
        ptr = np.zeros(nq + 1, dtype=np.int64)
        for x in range(nq):
            ptr[x + 1] = ptr[x] + deg[x]
        fill = ptr[:-1].copy()
        nb = np.empty(2 * m, dtype=np.int64)
        eid = np.empty(2 * m, dtype=np.int64)
        for i in range(m):
            a = cu[i]
            b = cv[i]
            nb[fill[a]] = b
            eid[fill[a]] = i
            fill[a] += 1
            nb[fill[b]] = a
            eid[fill[b]] = i
            fill[b] += 1
        # candidate: lightest super node
        for x in range(nq):
            if best < 0 or wdeg[x] < best:
                best = wdeg[x]
                for v in range(q):
                    best_side[v] = node_of[v] == x
        # MA ordering
        r = np.zeros(nq, dtype=np.int64)
        done = np.zeros(nq, dtype=np.bool_)
        qe = np.zeros(m, dtype=np.int64)
        hk = np.empty(2 * m + nq + 1, dtype=np.int64)
        hv = np.empty(2 * m + nq + 1, dtype=np.int64)
        hs = 0
        hs = _heap_push(hk, hv, hs, 0, 0)
        seen = 0
        while hs > 0:
            key, x, hs = _heap_pop(hk, hv, hs)
            if done[x] or key != r[x]:
                continue
            done[x] = True
            seen += 1
            for t in range(ptr[x], ptr[x + 1]):
                y = nb[t]
                if not done[y]:
                    r[y] += cw[eid[t]]
                    qe[eid[t]] = r[y]
                    hs = _heap_push(hk, hv, hs, r[y], y)
        if seen < nq:
            # disconnected: the reached part is a zero cut
            best = 0
            for v in range(q):
                best_side[v] = done[node_of[v]]
            return best, best_side
        if best == 0:
            return best, best_side
        # contract edges with key >= best
        par = np.arange(nq)
        merged = 0
        for i in range(m):
            if qe[i] >= best:
                a = uf_find(par, cu[i])
                b = uf_find(par, cv[i])
                if a != b:
                    par[a] = b
                    merged += 1
        if merged == 0:
            # cannot happen for a connected graph; guard against looping
            break
        newid = -np.ones(nq, dtype=np.int64)
        cnt = 0
        for x in range(nq):
            rt = uf_find(par, x)
            if newid[rt] < 0:
                newid[rt] = cnt
                cnt += 1
        remap = np.empty(nq, dtype=np.int64)
        for x in range(nq):
            remap[x] = newid[uf_find(par, x)]
        for v in range(q):
            node_of[v] = remap[node_of[v]]
        for i in range(m):
            cu[i] = remap[cu[i]]
            cv[i] = remap[cv[i]]
        nq = cnt
    return best, best_side


@njit(cache=True)
def least_index_insert(par, eu, ev):
    """Insert edges in order into the first forest (row of the union-find table
    `par`, updated in place) where they close no cycle.

    Forest component partitions stay laminar (forest i+1 refines forest i), so
    "connected in forest i" is monotone in i and a binary search finds the slot.
    Returns the forest index per edge, -1 when the edge is dropped.
    """
    r = par.shape[0]
    out = -np.ones(eu.shape[0], dtype=np.int64)
    for e in range(eu.shape[0]):
        a = eu[e]
        b = ev[e]
        if a == b:
            continue
        lo = 0
        hi = r
        while lo < hi:
            mid = (lo + hi) // 2
            if uf_find(par[mid], a) == uf_find(par[mid], b):
                lo = mid + 1
            else:
                hi = mid
        if lo < r:
            ra = uf_find(par[lo], a)
            rb = uf_find(par[lo], b)
            par[lo, ra] = rb
            out[e] = lo
    return out


@njit(cache=True)
def least_index_forests(q, eu, ev, r):
    """least_index_insert starting from r empty forests on q nodes."""
    par = np.empty((r, q), dtype=np.int64)
    for i in range(r):
        for x in range(q):
            par[i, x] = x
    return least_index_insert(par, eu, ev)


@njit(cache=True)
def _slot_of(indptr, indices, u, v):
    lo = indptr[u]
    hi = indptr[u + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def mark_removed(indptr, indices, removed, ru, rv):
    for i in range(ru.shape[0]):
        removed[_slot_of(indptr, indices, ru[i], rv[i])] = True
        removed[_slot_of(indptr, indices, rv[i], ru[i])] = True


@njit(cache=True)
def prim_passes(indptr, indices, labels, q, r, removed, use_table):
    """Simulate up to r Prim passes of the two-binary-search spanning forest.

    Pass i finds a spanning forest of the contraction given by `labels` after
    deleting every edge flagged in `removed` (which this routine extends with
    the edges of each finished pass). Every probe of the reference algorithm
    is a cross query; the returned probe count is exactly the number of those
    queries. Stops early once a pass finds no edge.
    """
    n = indptr.shape[0] - 1
    max_edges = r * (q - 1) if q > 1 else 0
    fu = np.empty(max_edges, dtype=np.int64)
    fv = np.empty(max_edges, dtype=np.int64)
    fi = np.empty(max_edges, dtype=np.int64)
    ne = 0
    probes = np.int64(0)
    members_ptr = np.zeros(q + 1, dtype=np.int64)
    for v in range(n):
        members_ptr[labels[v] + 1] += 1
    for b in range(q):
        members_ptr[b + 1] += members_ptr[b]
    members = np.empty(n, dtype=np.int64)
    fillp = members_ptr[:-1].copy()
    for v in range(n):
        members[fillp[labels[v]]] = v
        fillp[labels[v]] += 1
    table = np.zeros((1, 1), dtype=np.int64)
    if use_table:
        table = np.zeros((n, q), dtype=np.int64)
        for v in range(n):
            for t in range(indptr[v], indptr[v + 1]):
                if not removed[t]:
                    table[v, labels[indices[t]]] += 1
    inA = np.zeros(n, dtype=np.bool_)
    c = np.zeros(n, dtype=np.int64)
    done = np.zeros(q, dtype=np.bool_)
    alist = np.empty(n, dtype=np.int64)
    blist = np.empty(n, dtype=np.int64)
    pref = np.empty(n + 1, dtype=np.int64)
    inA_blocks = np.zeros(q, dtype=np.bool_)
    for it in range(r):
        found_this_pass = 0
        done[:] = False
        for b0 in range(q):
            if done[b0]:
                continue
            inA[:] = False
            inA_blocks[:] = False
            c[:] = 0
            # add block b0
            cur = b0
            total_out = np.int64(0)
            while True:
                done[cur] = True
                inA_blocks[cur] = True
                for t in range(members_ptr[cur], members_ptr[cur + 1]):
                    inA[members[t]] = True
                # update c for old members and compute for new members
                if use_table:
                    for v in range(n):
                        if inA[v]:
                            if labels[v] == cur:
                                s = np.int64(0)
                                for bb in range(q):
                                    if not inA_blocks[bb]:
                                        s += table[v, bb]
                                c[v] = s
                                total_out += s
                            else:
                                c[v] -= table[v, cur]
                                total_out -= table[v, cur]
                else:
                    for t in range(members_ptr[cur], members_ptr[cur + 1]):
                        w = members[t]
                        s = np.int64(0)
                        for z in range(indptr[w], indptr[w + 1]):
                            if removed[z]:
                                continue
                            x = indices[z]
                            if inA[x]:
                                if labels[x] != cur:
                                    c[x] -= 1
                                    total_out -= 1
                            else:
                                s += 1
                        c[w] = s
                        total_out += s
                probes += 1
                if total_out == 0:
                    break
                # search 1: vertex of A with an edge leaving A
                na = 0
                for v in range(n):
                    if inA[v]:
                        alist[na] = v
                        na += 1
                pref[0] = 0
                for i in range(na):
                    pref[i + 1] = pref[i] + c[alist[i]]
                lo = 0
                hi = na
                while hi - lo > 1:
                    h = (hi - lo + 1) // 2
                    probes += 1
                    if pref[lo + h] - pref[lo] > 0:
                        hi = lo + h
                    else:
                        lo = lo + h
                u = alist[lo]
                # search 2: neighbour of u outside A
                nb_ = 0
                for v in range(n):
                    if not inA[v]:
                        blist[nb_] = v
                        nb_ += 1
                lo = 0
                hi = nb_
                while hi - lo > 1:
                    h = (hi - lo + 1) // 2
                    a_id = blist[lo]
                    b_id = blist[lo + h - 1]
                    cnt = 0
                    for z in range(indptr[u], indptr[u + 1]):
                        if removed[z]:
                            continue
                        x = indices[z]
                        if x >= a_id and x <= b_id and not inA[x]:
                            cnt += 1
                            break
                    probes += 1
                    if cnt > 0:
                        hi = lo + h
                    else:
                        lo = lo + h
                v = blist[lo]
                fu[ne] = u
                fv[ne] = v
                fi[ne] = it
                ne += 1
                found_this_pass += 1
                cur = labels[v]
        # flag this pass's edges as removed for the next pass
        for e in range(ne - found_this_pass, ne):
            a = fu[e]
            b = fv[e]
            sa = _slot_of(indptr, indices, a, b)
            sb = _slot_of(indptr, indices, b, a)
            removed[sa] = True
            removed[sb] = True
            if use_table:
                table[a, labels[b]] -= 1
                table[b, labels[a]] -= 1
        if found_this_pass == 0:
            break
    return fu[:ne], fv[:ne], fi[:ne], probes


@njit(cache=True)
def _pair_answers(mp, mi, md, xp, xi, yp, yi):
    # rows of M and of Y have sorted column ids; only the slice of each M row
    # inside [min y, max y] is inspected
    out = np.zeros(len(xp) - 1, dtype=np.int64)
    for a in range(len(out)):
        ys, ye = yp[a], yp[a + 1]
        if ys == ye:
            continue
        ymin, ymax = yi[ys], yi[ye - 1]
        s = 0
        for t in range(xp[a], xp[a + 1]):
            i = xi[t]
            lo, hi = mp[i], mp[i + 1]
            while lo < hi:
                mid = (lo + hi) // 2
                if mi[mid] < ymin:
                    lo = mid + 1
                else:
                    hi = mid
            u = lo
            cur = ys
            while u < mp[i + 1] and mi[u] <= ymax:
                c = mi[u]
                lo, hi = cur, ye
                while lo < hi:
                    mid = (lo + hi) // 2
                    if yi[mid] < c:
                        lo = mid + 1
                    else:
                        hi = mid
                cur = lo
                if lo < ye and yi[lo] == c:
                    s += md[u]
                u += 1
        out[a] = s
    return out


def csr_pair_answers(M, X, Y):
    """x_a^T M y_a for matching rows of 0/1 CSR matrices X and Y."""
    if not M.has_sorted_indices:
        M.sort_indices()
    Y = Y.tocsr(copy=False)
    if not Y.has_sorted_indices:
        Y = Y.sorted_indices()
    return _pair_answers(M.indptr.astype(np.int64), M.indices.astype(np.int64),
                         M.data.astype(np.int64), X.indptr.astype(np.int64),
                         X.indices.astype(np.int64), Y.indptr.astype(np.int64),
                         Y.indices.astype(np.int64))


@njit(cache=True)
def dense_block_weights(indptr, indices, labels, q):
    """q x q edge multiplicities between blocks (upper triangle), from CSR."""
    W = np.zeros((q, q), dtype=np.int64)
    n = indptr.size - 1
    for u in range(n):
        lu = labels[u]
        for j in range(indptr[u], indptr[u + 1]):
            v = indices[j]
            if u < v:
                lv = labels[v]
                if lu < lv:
                    W[lu, lv] += 1
                elif lv < lu:
                    W[lv, lu] += 1
    return W


@njit(cache=True)
def _lower_bound(a, lo, hi, x):
    while lo < hi:
        mid = (lo + hi) // 2
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def row_interval_counts(mp, mi, rows, lo, hi):
    """Number of stored columns of row rows[j] inside [lo[j], hi[j]) (sorted CSR rows)."""
    out = np.zeros(rows.size, dtype=np.int64)
    for j in range(rows.size):
        a = mp[rows[j]]
        b = mp[rows[j] + 1]
        out[j] = _lower_bound(mi, a, b, hi[j]) - _lower_bound(mi, a, b, lo[j])
    return out


@njit(cache=True)
def row_bit_counts(mp, mi, rows, lo, hi, nbits):
    """out[j, t] = number of columns c of row rows[j] in [lo[j], hi[j]) with bit t of c - lo[j] set."""
    out = np.zeros((rows.size, nbits), dtype=np.int64)
    for j in range(rows.size):
        a = mp[rows[j]]
        b = mp[rows[j] + 1]
        s = _lower_bound(mi, a, b, lo[j])
        e = _lower_bound(mi, a, b, hi[j])
        for p in range(s, e):
            off = mi[p] - lo[j]
            for t in range(nbits):
                if (off >> t) & 1:
                    out[j, t] += 1
    return out


@njit(cache=True)
def row_mask_counts(mp, mi, rows, mask):
    out = np.zeros(rows.size, dtype=np.int64)
    for j in range(rows.size):
        for p in range(mp[rows[j]], mp[rows[j] + 1]):
            if mask[mi[p]]:
                out[j] += 1
    return out


@njit(cache=True)
def _lazy_find(par, k, x):
    # par[k, x] == -1 marks a node forest k has never touched (its own root)
    root = x
    while par[k, root] >= 0 and par[k, root] != root:
        root = par[k, root]
    while x != root:
        nxt = par[k, x]
        par[k, x] = root
        x = nxt
    return root


@njit(cache=True)
def stream_repetition(order, ptr, nbrs, protected, center, coins, forests, budget,
                      abort_centerless, stop_after):
    """One repetition of star contraction plus least-index forests over a vertex stream.

    Event j announces vertex order[j] with neighbours nbrs[ptr[j]:ptr[j+1]].
    Unprotected vertices contract into a center neighbour picked with their
    coin; edges to already seen vertices are relabelled and inserted into the
    first forest where they close no cycle. Words are counted after every
    event: two per vertex (center flag, relabel map), one per node a forest
    touches and two per stored edge. An insertion that would exceed `budget`
    aborts instead.

    Returns (status, edge count, eu, ev, slot, rel, trace) with status 0 for
    a finished run, 1 for a centerless vertex, 2 for the budget.
    """
    n = order.shape[0]
    seen = np.zeros(n, dtype=np.bool_)
    rel = np.arange(n)
    par = -np.ones((forests, n), dtype=np.int32)
    cap = forests * max(n - 1, 1)
    eu = np.empty(cap, dtype=np.int64)
    ev = np.empty(cap, dtype=np.int64)
    slot = np.empty(cap, dtype=np.int64)
    trace = np.zeros(n, dtype=np.int64)
    words = 2 * n
    ne = 0
    if words > budget:
        return 2, 0, eu[:0], ev[:0], slot[:0], rel, trace
    for j in range(stop_after):
        v = order[j]
        if not protected[v]:
            cnt = 0
            for t in range(ptr[j], ptr[j + 1]):
                if center[nbrs[t]]:
                    cnt += 1
            if cnt == 0:
                if abort_centerless:
                    trace[j:] = 0
                    return 1, ne, eu[:ne], ev[:ne], slot[:ne], rel, trace
            else:
                pick = min(int(coins[v] * cnt), cnt - 1)
                for t in range(ptr[j], ptr[j + 1]):
                    if center[nbrs[t]]:
                        if pick == 0:
                            rel[v] = nbrs[t]
                            break
                        pick -= 1
        a = rel[v]
        for t in range(ptr[j], ptr[j + 1]):
            u = nbrs[t]
            if not seen[u]:
                continue
            b = rel[u]
            if a == b:
                continue
            lo = 0
            hi = forests
            while lo < hi:
                mid = (lo + hi) // 2
                if _lazy_find(par, mid, a) == _lazy_find(par, mid, b):
                    lo = mid + 1
                else:
                    hi = mid
            if lo == forests:
                continue
            cost = 2 + (par[lo, a] < 0) + (par[lo, b] < 0)
            if words + cost > budget:
                trace[j:] = 0
                return 2, ne, eu[:ne], ev[:ne], slot[:ne], rel, trace
            words += cost
            if par[lo, a] < 0:
                par[lo, a] = a
            if par[lo, b] < 0:
                par[lo, b] = b
            ra = _lazy_find(par, lo, a)
            rb = _lazy_find(par, lo, b)
            par[lo, ra] = rb
            eu[ne] = a
            ev[ne] = b
            slot[ne] = lo
            ne += 1
        seen[v] = True
        trace[j] = words
    return 0, ne, eu[:ne], ev[:ne], slot[:ne], rel, trace


@njit(cache=True)
def csr_take(indptr, indices, rows, cols, width):
    """Rows `rows` and sorted columns `cols` of a 0/1 CSR pattern, columns renumbered."""
    newcol = -np.ones(width, dtype=np.int64)
    for j in range(cols.shape[0]):
        newcol[cols[j]] = j
    out_ptr = np.zeros(rows.shape[0] + 1, dtype=np.int64)
    for a in range(rows.shape[0]):
        c = 0
        for t in range(indptr[rows[a]], indptr[rows[a] + 1]):
            if newcol[indices[t]] >= 0:
                c += 1
        out_ptr[a + 1] = out_ptr[a] + c
    out_idx = np.empty(out_ptr[-1], dtype=np.int64)
    for a in range(rows.shape[0]):
        k = out_ptr[a]
        for t in range(indptr[rows[a]], indptr[rows[a] + 1]):
            j = newcol[indices[t]]
            if j >= 0:
                out_idx[k] = j
                k += 1
    return out_ptr, out_idx
