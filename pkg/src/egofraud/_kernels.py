"""Compiled kernels for forest training and prediction.

Feature values are rank-transformed once per training set (ranks into the
sorted distinct values of each column), so split search runs on integers:
a dense rank histogram for large nodes, a packed-integer sort for small
ones. Both paths scan candidate thresholds in ascending order and evaluate
the same split score, so the chosen tree is independent of the path.

Randomness comes from a splitmix64 stream seeded per tree from
(forest seed, tree index); training is therefore reproducible for any
thread count. Each tree consumes its stream in a fixed order: n bootstrap
draws first, then feature subsampling per node.
"""
from __future__ import annotations

import numpy as np
from numba import njit, prange

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_INSERTION_CUTOFF = 32


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
    return z ^ (z >> _U64(31))


@njit(cache=True, inline="always")
def _next64(state):
    state = state + _GOLDEN
    return state, _mix64(state)


@njit(cache=True, inline="always")
def _tree_state(seed, tree):
    return _mix64(seed + _GOLDEN * (_U64(tree) + _U64(1)))


@njit(cache=True)
def bootstrap_rows(seed, tree, n):
    """Bootstrap row indices for one tree; the head of the tree's stream."""
    state = _tree_state(_U64(seed), tree)
    rows = np.empty(n, np.int64)
    for i in range(n):
        state, r = _next64(state)
        rows[i] = np.int64(r % _U64(n))
    return rows


@njit(cache=True)
def _sort_i64(keys, lo, hi):
    """Iterative quicksort with insertion sort for short ranges."""
    stack_lo = np.empty(64, np.int64)
    stack_hi = np.empty(64, np.int64)
    stack_lo[0] = lo
    stack_hi[0] = hi
    top = 1
    while top > 0:
        top -= 1
        lo = stack_lo[top]
        hi = stack_hi[top]
        while hi - lo > _INSERTION_CUTOFF:
            mid = (lo + hi) // 2
            a, b, c = keys[lo], keys[mid], keys[hi - 1]
            if a > b:
                a, b = b, a
            if b > c:
                b, c = c, b
            if a > b:
                a, b = b, a
            pivot = b
            i = lo
            j = hi - 1
            while i <= j:
                while keys[i] < pivot:
                    i += 1
                while keys[j] > pivot:
                    j -= 1
                if i <= j:
                    keys[i], keys[j] = keys[j], keys[i]
                    i += 1
                    j -= 1
            if j - lo < hi - i:
                if i < hi - 1:
                    stack_lo[top] = i
                    stack_hi[top] = hi
                    top += 1
                hi = j + 1
            else:
                if lo < j + 1:
                    stack_lo[top] = lo
                    stack_hi[top] = j + 1
                    top += 1
                lo = i
        for i in range(lo + 1, hi):
            v = keys[i]
            j = i - 1
            while j >= lo and keys[j] > v:
                keys[j + 1] = keys[j]
                j -= 1
            keys[j + 1] = v


@njit(cache=True)
def _build_tree(rb, yb, uniq_flat, uniq_off, max_depth, max_features,
                min_leaf, state, feat, thr, left, right, value, count,
                idx, keys, cnt, pos_hist, featbuf, stack):
    """Grow one tree in place; returns the number of nodes written."""
    d = rb.shape[0]
    n = rb.shape[1]
    for i in range(n):
        idx[i] = i
    stack[0, 0] = 0   # node
    stack[0, 1] = 0   # start
    stack[0, 2] = n   # end
    stack[0, 3] = 0   # depth
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        n_node = end - start
        pos = 0
        for i in range(start, end):
            pos += yb[idx[i]]
        value[node] = pos / n_node
        count[node] = n_node
        feat[node] = -1
        if depth >= max_depth or pos == 0 or pos == n_node or n_node < 2 * min_leaf:
            continue

        # Draw max_features distinct candidates, then scan them in ascending
        # order so equal-score ties resolve to the lowest feature index.
        for j in range(d):
            featbuf[j] = j
        for j in range(max_features):
            state, r = _next64(state)
            pick = j + np.int64(r % _U64(d - j))
            tmpf = featbuf[j]
            featbuf[j] = featbuf[pick]
            featbuf[pick] = tmpf
        for a in range(1, max_features):
            key = featbuf[a]
            b = a - 1
            while b >= 0 and featbuf[b] > key:
                featbuf[b + 1] = featbuf[b]
                b -= 1
            featbuf[b + 1] = key

        log2n = 0
        while (1 << (log2n + 1)) <= n_node:
            log2n += 1

        best_s = -1.0
        best_f = -1
        best_rank = -1
        best_thr = 0.0
        for fj in range(max_features):
            f = featbuf[fj]
            off = uniq_off[f]
            n_uniq = np.int64(uniq_off[f + 1] - off)
            if n_uniq < 2:
                continue
            if 2 * n_uniq + 2 * n_node <= n_node * (log2n + 2):
                # dense histogram over ranks
                for r in range(n_uniq):
                    cnt[r] = 0
                    pos_hist[r] = 0
                for i in range(start, end):
                    o = idx[i]
                    rk = rb[f, o]
                    cnt[rk] += 1
                    pos_hist[rk] += yb[o]
                cum_n = 0
                cum_pos = 0
                prev = -1
                for r in range(n_uniq):
                    if cnt[r] == 0:
                        continue
                    if prev >= 0:
                        nl = cum_n
                        nr = n_node - nl
                        if nl >= min_leaf and nr >= min_leaf:
                            posl = cum_pos
                            posr = pos - posl
                            negl = nl - posl
                            negr = nr - posr
                            s = ((posl * posl + negl * negl) / nl
                                 + (posr * posr + negr * negr) / nr)
                            if s > best_s:
                                best_s = s
                                best_f = f
                                best_rank = prev
                                v0 = uniq_flat[off + prev]
                                v1 = uniq_flat[off + r]
                                best_thr = v0 + 0.5 * (v1 - v0)
                    cum_n += cnt[r]
                    cum_pos += pos_hist[r]
                    prev = r
            else:
                # pack (rank, label) and sort; run boundaries are thresholds
                for i in range(n_node):
                    o = idx[start + i]
                    keys[i] = (np.int64(rb[f, o]) << 1) | np.int64(yb[o])
                _sort_i64(keys, 0, n_node)
                cum_pos = 0
                for i in range(1, n_node):
                    cum_pos += np.int64(keys[i - 1]) & 1
                    p = keys[i - 1] >> 1
                    r = keys[i] >> 1
                    if p == r:
                        continue
                    nl = i
                    nr = n_node - nl
                    if nl < min_leaf or nr < min_leaf:
                        continue
                    posl = cum_pos
                    posr = pos - posl
                    negl = nl - posl
                    negr = nr - posr
                    s = ((posl * posl + negl * negl) / nl
                         + (posr * posr + negr * negr) / nr)
                    if s > best_s:
                        best_s = s
                        best_f = f
                        best_rank = p
                        v0 = uniq_flat[off + p]
                        v1 = uniq_flat[off + r]
                        best_thr = v0 + 0.5 * (v1 - v0)

        if best_f < 0:
            continue
        i = start
        j = end - 1
        while i <= j:
            if rb[best_f, idx[i]] <= best_rank:
                i += 1
            else:
                tmp = idx[i]
                idx[i] = idx[j]
                idx[j] = tmp
                j -= 1
        feat[node] = best_f
        thr[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[top, 0] = n_nodes
        stack[top, 1] = start
        stack[top, 2] = i
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = n_nodes + 1
        stack[top, 1] = i
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        n_nodes += 2
    return n_nodes


@njit(cache=True, parallel=True)
def fit_forest(ranks, y, uniq_flat, uniq_off, n_trees, max_depth,
               max_features, min_leaf, seed,
               feat, thr, left, right, value, count, n_nodes):
    n, d = ranks.shape
    u_max = 0
    for f in range(d):
        u = np.int64(uniq_off[f + 1] - uniq_off[f])
        if u > u_max:
            u_max = u
    for t in prange(n_trees):
        state = _tree_state(_U64(seed), t)
        rb = np.empty((d, n), np.int32)
        yb = np.empty(n, np.int64)
        for i in range(n):
            state, r = _next64(state)
            row = np.int64(r % _U64(n))
            yb[i] = y[row]
            for f in range(d):
                rb[f, i] = ranks[row, f]
        idx = np.empty(n, np.int32)
        keys = np.empty(n, np.int64)
        cnt = np.empty(u_max, np.int64)
        pos_hist = np.empty(u_max, np.int64)
        featbuf = np.empty(d, np.int64)
        stack = np.empty((2 * n + 64, 4), np.int64)
        n_nodes[t] = _build_tree(
            rb, yb, uniq_flat, uniq_off, max_depth, max_features, min_leaf,
            state, feat[t], thr[t], left[t], right[t], value[t], count[t],
            idx, keys, cnt, pos_hist, featbuf, stack)


@njit(cache=True, parallel=True)
def predict_forest(feat, thr, left, right, value, X, out):
    """Mean leaf fraction over trees for each row of X."""
    n_trees = feat.shape[0]
    m = X.shape[0]
    for i in prange(m):
        acc = 0.0
        for t in range(n_trees):
            node = 0
            f = feat[t, node]
            while f >= 0:
                if X[i, f] <= thr[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
                f = feat[t, node]
            acc += value[t, node]
        out[i] = acc / n_trees
