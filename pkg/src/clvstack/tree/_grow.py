"""Compiled kernels for greedy depth-first regression-tree growth.

Trees are stored as flat parallel arrays indexed by node id. Node 0 is the
root; ``feature == -1`` marks a leaf. Children are allocated in pairs when a
node splits, and the left subtree is always expanded before the right one, so
node numbering is a pure function of the data and the uniform draws.
"""
import numba as nb
import numpy as np

MODE_VARIANCE = 0
MODE_NEWTON = 1
LEAF = -1

# Gains closer than this (relative) are treated as ties; the earlier
# candidate (lower feature index, then lower threshold) wins.
TIE_RTOL = 1e-12


@nb.njit(cache=True, nogil=True, error_model="numpy")
def newton_gain(g_left, h_left, g_right, h_right, lambda_l2, gamma_complexity):
    g = g_left + g_right
    h = h_left + h_right
    score = (
        g_left * g_left / (h_left + lambda_l2)
        + g_right * g_right / (h_right + lambda_l2)
        - g * g / (h + lambda_l2)
    )
    return 0.5 * score - gamma_complexity


@nb.njit(cache=True, nogil=True, error_model="numpy")
def newton_leaf_weight(g, h, lambda_l2, alpha_l1):
    magnitude = abs(g) - alpha_l1
    if magnitude <= 0.0:
        return 0.0
    if g > 0.0:
        return -magnitude / (h + lambda_l2)
    return magnitude / (h + lambda_l2)


@nb.njit(cache=True, nogil=True, error_model="numpy")
def grow(
    X,
    grad,
    hess,
    rows,
    mode,
    max_depth,
    min_samples_leaf,
    min_gain,
    n_sub,
    uniforms,
    lambda_l2,
    alpha_l1,
    gamma_complexity,
):
    n = rows.shape[0]
    d = X.shape[1]
    cap = 2 * n + 1

    feature = np.full(cap, LEAF, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, LEAF, np.int64)
    right = np.full(cap, LEAF, np.int64)
    value = np.zeros(cap)
    gain = np.zeros(cap)
    cover = np.zeros(cap)
    n_samples = np.zeros(cap, np.int64)

    idx = rows.copy()
    buf = np.empty(n, np.int64)
    xs = np.empty(n)
    perm = np.empty(d, np.int64)
    cand = np.empty(d, np.int64)

    st_node = np.empty(cap, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    top = 1
    n_nodes = 1
    upos = 0

    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        m = end - start

        g_sum = 0.0
        h_sum = 0.0
        for i in range(start, end):
            r = idx[i]
            g_sum += grad[r]
            h_sum += hess[r]
        if mode == MODE_VARIANCE:
            value[node] = g_sum / h_sum
        else:
            value[node] = newton_leaf_weight(g_sum, h_sum, lambda_l2, alpha_l1)
        cover[node] = h_sum
        n_samples[node] = m

        if depth >= max_depth or m < 2 * min_samples_leaf:
            continue

        if n_sub >= d:
            n_cand = d
            for j in range(d):
                cand[j] = j
        else:
            n_cand = n_sub
            for j in range(d):
                perm[j] = j
            for j in range(n_sub):
                k = j + int(uniforms[upos + j] * (d - j))
                if k >= d:
                    k = d - 1
                tmp = perm[j]
                perm[j] = perm[k]
                perm[k] = tmp
            upos += n_sub
            chosen = np.sort(perm[:n_sub])
            for j in range(n_sub):
                cand[j] = chosen[j]

        # Variance mode works on targets centred at the node mean: the gain
        # is shift invariant and centring avoids cancellation.
        shift = 0.0
        if mode == MODE_VARIANCE:
            shift = g_sum / h_sum
        g_tot = 0.0
        for i in range(start, end):
            g_tot += grad[idx[i]] - shift

        best_f = -1
        best_thr = 0.0
        best_gain = 0.0
        for c in range(n_cand):
            f = cand[c]
            for i in range(m):
                xs[i] = X[idx[start + i], f]
            order = np.argsort(xs[:m], kind="mergesort")
            g_left = 0.0
            h_left = 0.0
            for j in range(m - 1):
                r = idx[start + order[j]]
                g_left += grad[r] - shift
                h_left += hess[r]
                n_left = j + 1
                if n_left < min_samples_leaf:
                    continue
                if m - n_left < min_samples_leaf:
                    break
                x0 = xs[order[j]]
                x1 = xs[order[j + 1]]
                if x1 <= x0:
                    continue
                g_right = g_tot - g_left
                h_right = h_sum - h_left
                if mode == MODE_VARIANCE:
                    cand_gain = (
                        g_left * g_left / h_left
                        + g_right * g_right / h_right
                        - g_tot * g_tot / h_sum
                    )
                else:
                    cand_gain = newton_gain(
                        g_left, h_left, g_right, h_right, lambda_l2, gamma_complexity
                    )
                if best_f < 0 or cand_gain > best_gain + TIE_RTOL * abs(best_gain):
                    best_f = f
                    best_gain = cand_gain
                    thr = 0.5 * (x0 + x1)
                    if thr >= x1:
                        thr = x0
                    best_thr = thr

        if best_f < 0 or not best_gain > min_gain:
            continue

        n_left = 0
        for i in range(start, end):
            r = idx[i]
            if X[r, best_f] <= best_thr:
                buf[n_left] = r
                n_left += 1
        k = n_left
        for i in range(start, end):
            r = idx[i]
            if X[r, best_f] > best_thr:
                buf[k] = r
                k += 1
        for i in range(m):
            idx[start + i] = buf[i]

        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        gain[node] = best_gain
        left[node] = lc
        right[node] = rc

        st_node[top] = rc
        st_start[top] = start + n_left
        st_end[top] = end
        st_depth[top] = depth + 1
        top += 1
        st_node[top] = lc
        st_start[top] = start
        st_end[top] = start + n_left
        st_depth[top] = depth + 1
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        gain[:n_nodes].copy(),
        cover[:n_nodes].copy(),
        n_samples[:n_nodes].copy(),
    )


@nb.njit(cache=True, nogil=True)
def apply_rows(X, feature, threshold, left, right):
    out = np.empty(X.shape[0], np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] != LEAF:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = node
    return out
