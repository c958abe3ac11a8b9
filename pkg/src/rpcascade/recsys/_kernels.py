"""Numba kernels for training and row-wise scoring of the recommenders.

All kernels release the GIL and are deterministic: training loops visit
ratings in storage order, neighbor ties are broken by index, and no kernel
depends on thread scheduling.  Row scoring kernels are the canonical
prediction path; full-matrix generation is defined as their row-by-row
stacking so parallel and sequential runs agree bit for bit.
"""

import numpy as np
from numba import njit

# KNN accumulation modes
KNN_BASIC = 0
KNN_MEANS = 1
KNN_ZSCORE = 2
KNN_BASELINE = 3


@njit(cache=True, nogil=True)
def als_baseline(u_idx, i_idx, r, mu, n_users, n_items, reg, n_epochs):
    """Alternating least squares for the bias model mu + b_u + b_i."""
    bu = np.zeros(n_users)
    bi = np.zeros(n_items)
    u_cnt = np.zeros(n_users)
    i_cnt = np.zeros(n_items)
    for t in range(len(r)):
        u_cnt[u_idx[t]] += 1.0
        i_cnt[i_idx[t]] += 1.0
    for _ in range(n_epochs):
        acc_i = np.zeros(n_items)
        for t in range(len(r)):
            acc_i[i_idx[t]] += r[t] - mu - bu[u_idx[t]]
        for i in range(n_items):
            if i_cnt[i] > 0:
                bi[i] = acc_i[i] / (reg + i_cnt[i])
        acc_u = np.zeros(n_users)
        for t in range(len(r)):
            acc_u[u_idx[t]] += r[t] - mu - bi[i_idx[t]]
        for u in range(n_users):
            if u_cnt[u] > 0:
                bu[u] = acc_u[u] / (reg + u_cnt[u])
    return bu, bi


@njit(cache=True, nogil=True)
def sgd_svd(u_idx, i_idx, r, mu, bu, bi, P, Q, n_epochs, lr, reg):
    """Biased matrix factorization trained by SGD over the regularized
    squared error; updates use the pre-step parameter values."""
    F = P.shape[1]
    for _ in range(n_epochs):
        for t in range(len(r)):
            u = u_idx[t]
            i = i_idx[t]
            dot = 0.0
            for f in range(F):
                dot += P[u, f] * Q[i, f]
            err = r[t] - (mu + bu[u] + bi[i] + dot)
            bu[u] += lr * (err - reg * bu[u])
            bi[i] += lr * (err - reg * bi[i])
            for f in range(F):
                puf = P[u, f]
                qif = Q[i, f]
                P[u, f] += lr * (err * qif - reg * puf)
                Q[i, f] += lr * (err * puf - reg * qif)


@njit(cache=True, nogil=True)
def sgd_svdpp(u_idx, i_idx, r, mu, bu, bi, P, Q, Y, iu_ptr, iu_items, n_epochs, lr, reg):
    """SGD for the implicit-feedback factor model.

    The implicit profile of user u is |I_u|^-1/2 * sum of Y rows over the
    items u rated; the item factors Y receive their share of each error.
    """
    F = P.shape[1]
    impl = np.zeros(F)
    q_old = np.zeros(F)
    for _ in range(n_epochs):
        for t in range(len(r)):
            u = u_idx[t]
            i = i_idx[t]
            s = iu_ptr[u]
            e = iu_ptr[u + 1]
            nu = e - s
            sq = 1.0 / np.sqrt(nu) if nu > 0 else 0.0
            for f in range(F):
                impl[f] = 0.0
            for p in range(s, e):
                j = iu_items[p]
                for f in range(F):
                    impl[f] += Y[j, f]
            for f in range(F):
                impl[f] *= sq
            dot = 0.0
            for f in range(F):
                dot += (P[u, f] + impl[f]) * Q[i, f]
            err = r[t] - (mu + bu[u] + bi[i] + dot)
            bu[u] += lr * (err - reg * bu[u])
            bi[i] += lr * (err - reg * bi[i])
            for f in range(F):
                q_old[f] = Q[i, f]
            for f in range(F):
                puf = P[u, f]
                P[u, f] += lr * (err * q_old[f] - reg * puf)
                Q[i, f] += lr * (err * (puf + impl[f]) - reg * q_old[f])
            for p in range(s, e):
                j = iu_items[p]
                for f in range(F):
                    Y[j, f] += lr * (err * sq * q_old[f] - reg * Y[j, f])


@njit(cache=True, nogil=True)
def user_implicit_profiles(Y, iu_ptr, iu_items, n_users):
    """Per-user implicit profile |I_u|^-1/2 * sum_{j in I_u} Y_j."""
    F = Y.shape[1]
    out = np.zeros((n_users, F))
    for u in range(n_users):
        s = iu_ptr[u]
        e = iu_ptr[u + 1]
        if e == s:
            continue
        for p in range(s, e):
            j = iu_items[p]
            for f in range(F):
                out[u, f] += Y[j, f]
        sq = 1.0 / np.sqrt(e - s)
        for f in range(F):
            out[u, f] *= sq
    return out


@njit(cache=True, nogil=True)
def nmf_fit(u_idx, i_idx, r, P, Q, n_epochs, reg_u, reg_i, u_cnt, i_cnt):
    """Multiplicative-update factorization; factors stay strictly positive."""
    F = P.shape[1]
    n_users = P.shape[0]
    n_items = Q.shape[0]
    for _ in range(n_epochs):
        user_num = np.zeros((n_users, F))
        user_den = np.zeros((n_users, F))
        item_num = np.zeros((n_items, F))
        item_den = np.zeros((n_items, F))
        for t in range(len(r)):
            u = u_idx[t]
            i = i_idx[t]
            est = 0.0
            for f in range(F):
                est += P[u, f] * Q[i, f]
            for f in range(F):
                user_num[u, f] += Q[i, f] * r[t]
                user_den[u, f] += Q[i, f] * est
                item_num[i, f] += P[u, f] * r[t]
                item_den[i, f] += P[u, f] * est
        for u in range(n_users):
            if u_cnt[u] > 0:
                for f in range(F):
                    den = user_den[u, f] + u_cnt[u] * reg_u * P[u, f]
                    if den > 0.0:
                        P[u, f] *= user_num[u, f] / den
        for i in range(n_items):
            if i_cnt[i] > 0:
                for f in range(F):
                    den = item_den[i, f] + i_cnt[i] * reg_i * Q[i, f]
                    if den > 0.0:
                        Q[i, f] *= item_num[i, f] / den


@njit(cache=True, nogil=True)
def factor_row(base, P_u, Q, gate):
    """base[i] + P_u . Q[i] wherever gate[i], else base[i] alone."""
    m = base.shape[0]
    F = Q.shape[1]
    out = np.empty(m)
    for i in range(m):
        v = base[i]
        if gate[i]:
            dot = 0.0
            for f in range(F):
                dot += P_u[f] * Q[i, f]
            v += dot
        out[i] = v
    return out


@njit(cache=True, nogil=True)
def nmf_row(P_u, Q, gate, mu):
    """P_u . Q[i] wherever gate[i], else the global mean."""
    m = gate.shape[0]
    F = Q.shape[1]
    out = np.empty(m)
    for i in range(m):
        if gate[i]:
            dot = 0.0
            for f in range(F):
                dot += P_u[f] * Q[i, f]
            out[i] = dot
        else:
            out[i] = mu
    return out


@njit(cache=True, nogil=True)
def msd_sim(ptr, idxs, vals, n):
    """Mean-squared-difference similarity 1/(msd+1) over co-ratings.

    ``ptr/idxs/vals`` is a CSR view grouped by the opposite axis (items for
    user-user similarity and vice versa).  Pairs with no co-ratings get 0;
    the diagonal of active elements is 1.
    """
    sq = np.zeros((n, n))
    cnt = np.zeros((n, n), dtype=np.int64)
    active = np.zeros(n, dtype=np.bool_)
    for g in range(len(ptr) - 1):
        s = ptr[g]
        e = ptr[g + 1]
        for a in range(s, e):
            xa = idxs[a]
            active[xa] = True
            for b in range(a + 1, e):
                xb = idxs[b]
                d = vals[a] - vals[b]
                lo, hi = (xa, xb) if xa < xb else (xb, xa)
                sq[lo, hi] += d * d
                cnt[lo, hi] += 1
    sim = np.zeros((n, n))
    for a in range(n):
        if active[a]:
            sim[a, a] = 1.0
        for b in range(a + 1, n):
            c = cnt[a, b]
            if c > 0:
                # 1/(msd+1) with msd = sq/c, rearranged to avoid a division
                s_ab = c / (sq[a, b] / c + 1.0)
                sim[a, b] = s_ab
                sim[b, a] = s_ab
    return sim


@njit(cache=True, nogil=True)
def cosine_sim(ptr, idxs, vals, n):
    """Cosine similarity over co-ratings; 0 when none exist."""
    dot = np.zeros((n, n))
    na = np.zeros((n, n))
    nb = np.zeros((n, n))
    active = np.zeros(n, dtype=np.bool_)
    for g in range(len(ptr) - 1):
        s = ptr[g]
        e = ptr[g + 1]
        for a in range(s, e):
            xa = idxs[a]
            active[xa] = True
            for b in range(a + 1, e):
                xb = idxs[b]
                if xa < xb:
                    lo, hi, vlo, vhi = xa, xb, vals[a], vals[b]
                else:
                    lo, hi, vlo, vhi = xb, xa, vals[b], vals[a]
                dot[lo, hi] += vlo * vhi
                na[lo, hi] += vlo * vlo
                nb[lo, hi] += vhi * vhi
    sim = np.zeros((n, n))
    for a in range(n):
        if active[a]:
            sim[a, a] = 1.0
        for b in range(a + 1, n):
            if dot[a, b] > 0.0 or na[a, b] > 0.0:
                den = np.sqrt(na[a, b] * nb[a, b])
                if den > 0.0:
                    s_ab = dot[a, b] / den
                    sim[a, b] = s_ab
                    sim[b, a] = s_ab
    return sim


@njit(cache=True, nogil=True)
def knn_user_row(
    u,
    mode,
    sim_row,
    item_ptr,
    item_users,
    item_vals,
    k,
    min_k,
    mu,
    user_means,
    user_stds,
    bu,
    bi,
    user_known,
):
    """Scores of one user against all items for the user-based KNN family.

    Neighbors are the k most similar raters of the item (self excluded, ties
    by ascending user index); fewer than ``min_k`` positive-similarity
    neighbors falls back to the mode's center.
    """
    n_users = sim_row.shape[0]
    m = item_ptr.shape[0] - 1
    out = np.empty(m)
    # neighbor priority = position in the similarity-descending order
    order = np.argsort(-sim_row, kind="mergesort")
    rank = np.empty(n_users, dtype=np.int64)
    for p in range(n_users):
        rank[order[p]] = p
    uk = 0 <= u < n_users and user_known[u]
    center_u = user_means[u] if uk else mu
    bu_u = bu[u] if uk else 0.0
    sigma_u = user_stds[u] if uk else 0.0
    cand_rank = np.empty(n_users, dtype=np.int64)
    cand_pos = np.empty(n_users, dtype=np.int64)
    for i in range(m):
        s = item_ptr[i]
        e = item_ptr[i + 1]
        c = 0
        for p in range(s, e):
            v = item_users[p]
            if v == u:
                continue
            cand_rank[c] = rank[v]
            cand_pos[c] = p
            c += 1
        if mode == KNN_BASELINE:
            center = mu + bu_u + bi[i]
        elif mode == KNN_BASIC:
            center = mu
        else:
            center = center_u
        if c == 0:
            out[i] = center
            continue
        thr = np.iinfo(np.int64).max
        if c > k:
            thr = np.partition(cand_rank[:c].copy(), k - 1)[k - 1]
        num = 0.0
        den = 0.0
        npos = 0
        for t in range(c):
            if cand_rank[t] > thr:
                continue
            p = cand_pos[t]
            v = item_users[p]
            s_uv = sim_row[v]
            if s_uv <= 0.0:
                continue
            rv = item_vals[p]
            if mode == KNN_BASIC:
                num += s_uv * rv
            elif mode == KNN_MEANS:
                num += s_uv * (rv - user_means[v])
            elif mode == KNN_ZSCORE:
                z = (rv - user_means[v]) / user_stds[v] if user_stds[v] > 0.0 else 0.0
                num += s_uv * z
            else:
                num += s_uv * (rv - (mu + bu[v] + bi[i]))
            den += s_uv
            npos += 1
        if npos < min_k or den <= 0.0:
            out[i] = center
        elif mode == KNN_BASIC:
            out[i] = num / den
        elif mode == KNN_ZSCORE:
            out[i] = center_u + sigma_u * num / den
        else:
            out[i] = center + num / den
    return out


@njit(cache=True, nogil=True)
def item_rank_matrix(sim):
    """rank[i, j] = position of item j in item i's similarity-descending order."""
    m = sim.shape[0]
    rank = np.empty((m, m), dtype=np.int32)
    for i in range(m):
        order = np.argsort(-sim[i], kind="mergesort")
        for p in range(m):
            rank[i, order[p]] = p
    return rank


@njit(cache=True, nogil=True)
def knn_item_row(
    u,
    mode,
    sim,
    rank,
    user_items,
    user_vals,
    k,
    min_k,
    mu,
    item_means,
    item_stds,
    bu,
    bi,
    user_known,
    n_users,
):
    """Item-based mirror of knn_user_row: neighbors are the k most similar
    items among those the user rated (the target item itself excluded)."""
    m = sim.shape[0]
    out = np.empty(m)
    uk = 0 <= u < n_users and user_known[u]
    bu_u = bu[u] if uk else 0.0
    c_all = user_items.shape[0]
    cand_rank = np.empty(c_all, dtype=np.int64)
    cand_pos = np.empty(c_all, dtype=np.int64)
    for i in range(m):
        c = 0
        for p in range(c_all):
            j = user_items[p]
            if j == i:
                continue
            cand_rank[c] = rank[i, j]
            cand_pos[c] = p
            c += 1
        if mode == KNN_BASELINE:
            center = mu + bu_u + bi[i]
        elif mode == KNN_BASIC:
            center = mu
        else:
            center = item_means[i]
        if c == 0:
            out[i] = center
            continue
        thr = np.iinfo(np.int64).max
        if c > k:
            thr = np.partition(cand_rank[:c].copy(), k - 1)[k - 1]
        num = 0.0
        den = 0.0
        npos = 0
        for t in range(c):
            if cand_rank[t] > thr:
                continue
            p = cand_pos[t]
            j = user_items[p]
            s_ij = sim[i, j]
            if s_ij <= 0.0:
                continue
            rj = user_vals[p]
            if mode == KNN_BASIC:
                num += s_ij * rj
            elif mode == KNN_MEANS:
                num += s_ij * (rj - item_means[j])
            elif mode == KNN_ZSCORE:
                z = (rj - item_means[j]) / item_stds[j] if item_stds[j] > 0.0 else 0.0
                num += s_ij * z
            else:
                num += s_ij * (rj - (mu + bu_u + bi[j]))
            den += s_ij
            npos += 1
        if npos < min_k or den <= 0.0:
            out[i] = center
        elif mode == KNN_BASIC:
            out[i] = num / den
        elif mode == KNN_ZSCORE:
            out[i] = item_means[i] + item_stds[i] * num / den
        else:
            out[i] = center + num / den
    return out


@njit(cache=True, nogil=True)
def slope_one_fit(user_ptr, user_items, user_vals, n_items):
    """Pairwise deviation table dev[i, j] = mean(r_ui - r_uj) over co-raters."""
    diff = np.zeros((n_items, n_items))
    cnt = np.zeros((n_items, n_items), dtype=np.int64)
    for u in range(len(user_ptr) - 1):
        s = user_ptr[u]
        e = user_ptr[u + 1]
        for a in range(s, e):
            ia = user_items[a]
            va = user_vals[a]
            for b in range(s, e):
                if a == b:
                    continue
                ib = user_items[b]
                diff[ia, ib] += va - user_vals[b]
                cnt[ia, ib] += 1
    dev = np.zeros((n_items, n_items))
    for i in range(n_items):
        for j in range(n_items):
            if cnt[i, j] > 0:
                dev[i, j] = diff[i, j] / cnt[i, j]
    return dev, cnt


@njit(cache=True, nogil=True)
def slope_one_row(u, dev, cnt, user_items, mu, user_mean_u, user_is_known):
    """mu_u plus the mean deviation of the target item from the user's other
    rated items that share at least one co-rater with it."""
    m = dev.shape[0]
    out = np.empty(m)
    if not user_is_known:
        for i in range(m):
            out[i] = mu
        return out
    for i in range(m):
        acc = 0.0
        c = 0
        for p in range(user_items.shape[0]):
            j = user_items[p]
            if j == i:
                continue
            if cnt[i, j] > 0:
                acc += dev[i, j]
                c += 1
        out[i] = user_mean_u + acc / c if c > 0 else user_mean_u
    return out


@njit(cache=True, nogil=True)
def cocluster_fit(
    u_idx, i_idx, r, n_users, n_items, ucl, icl, n_ucl, n_icl, n_epochs,
    mu, user_means, item_means,
):
    """Alternating co-cluster assignment for the additive co-clustering model.

    Each epoch recomputes cluster means, reassigns every user to the cluster
    minimizing its squared error, then every item (ties to the lowest
    cluster index).  Empty clusters take the global mean.
    """
    nr = len(r)
    for sweep in range(n_epochs + 1):  # final extra pass recomputes means only
        co_sum = np.zeros((n_ucl, n_icl))
        co_cnt = np.zeros((n_ucl, n_icl))
        uc_sum = np.zeros(n_ucl)
        uc_cnt = np.zeros(n_ucl)
        ic_sum = np.zeros(n_icl)
        ic_cnt = np.zeros(n_icl)
        for t in range(nr):
            g = ucl[u_idx[t]]
            h = icl[i_idx[t]]
            co_sum[g, h] += r[t]
            co_cnt[g, h] += 1.0
            uc_sum[g] += r[t]
            uc_cnt[g] += 1.0
            ic_sum[h] += r[t]
            ic_cnt[h] += 1.0
        cm = np.full((n_ucl, n_icl), mu)
        for g in range(n_ucl):
            for h in range(n_icl):
                if co_cnt[g, h] > 0:
                    cm[g, h] = co_sum[g, h] / co_cnt[g, h]
        ucm = np.full(n_ucl, mu)
        for g in range(n_ucl):
            if uc_cnt[g] > 0:
                ucm[g] = uc_sum[g] / uc_cnt[g]
        icm = np.full(n_icl, mu)
        for h in range(n_icl):
            if ic_cnt[h] > 0:
                icm[h] = ic_sum[h] / ic_cnt[h]
        if sweep == n_epochs:
            return ucl, icl, cm, ucm, icm
        # reassign users against current means
        err_u = np.zeros((n_users, n_ucl))
        for t in range(nr):
            u = u_idx[t]
            h = icl[i_idx[t]]
            base = item_means[i_idx[t]] - icm[h]
            for g in range(n_ucl):
                est = cm[g, h] + (user_means[u] - ucm[g]) + base
                d = r[t] - est
                err_u[u, g] += d * d
        for u in range(n_users):
            best = 0
            for g in range(1, n_ucl):
                if err_u[u, g] < err_u[u, best]:
                    best = g
            ucl[u] = best
        # reassign items using the updated user clusters, same means
        err_i = np.zeros((n_items, n_icl))
        for t in range(nr):
            i = i_idx[t]
            g = ucl[u_idx[t]]
            base = user_means[u_idx[t]] - ucm[g]
            for h in range(n_icl):
                est = cm[g, h] + base + (item_means[i] - icm[h])
                d = r[t] - est
                err_i[i, h] += d * d
        for i in range(n_items):
            best = 0
            for h in range(1, n_icl):
                if err_i[i, h] < err_i[i, best]:
                    best = h
            icl[i] = best
    return ucl, icl, cm, ucm, icm  # unreachable; keeps numba typing happy


@njit(cache=True, nogil=True)
def cocluster_row(u, ucl, icl, cm, ucm, icm, mu, user_means, item_means, user_known, item_known, n_users):
    m = icl.shape[0]
    out = np.empty(m)
    uk = 0 <= u < n_users and user_known[u]
    if not uk:
        for i in range(m):
            out[i] = mu
        return out
    g = ucl[u]
    du = user_means[u] - ucm[g]
    for i in range(m):
        if item_known[i]:
            h = icl[i]
            out[i] = cm[g, h] + du + (item_means[i] - icm[h])
        else:
            out[i] = mu
    return out
