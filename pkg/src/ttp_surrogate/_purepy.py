"""Pure-Python implementations of the numeric kernels.

Used when the compiled ``_core`` extension is unavailable, or when
``TTP_SURROGATE_PURE=1`` is set. Every function here has a twin in
``_core.pyx`` with the same signature and the same floating-point
operation order, so the two backends agree bit-for-bit on the same inputs.

Conventions shared by all kernels: positions and cities are 0-based,
``order[0] == 0``; ``legs[k]`` is the distance from ``order[k]`` to
``order[(k + 1) % n]``; ``cumw[k]`` is the knapsack weight after picking at
position ``k``; ``nu = (vmax - vmin) / capacity``. ``dist`` is either an
``(n, n)`` matrix or an empty array, in which case CEIL_2D distances are
computed from ``coords`` on the fly.
"""

import math

import numpy as np

BACKEND = "python"


def _d(coords, dist, a, b):
    if dist.shape[0]:
        return dist[a, b]
    dx = coords[a, 0] - coords[b, 0]
    dy = coords[a, 1] - coords[b, 1]
    return float(math.ceil(math.sqrt(dx * dx + dy * dy)))


def tour_legs(order, coords, dist):
    n = order.shape[0]
    legs = np.empty(n, dtype=np.float64)
    for k in range(n):
        legs[k] = _d(coords, dist, order[k], order[(k + 1) % n])
    return legs


def tour_time(legs, cumw, vmax, nu):
    total = 0.0
    for k in range(legs.shape[0]):
        total += legs[k] / (vmax - nu * cumw[k])
    return total


def two_opt_delta(order, legs, cumw, coords, dist, vmax, nu, i, j):
    """Travel-time change of reversing positions ``i..j`` (``1 <= i < j < n``)."""
    n = order.shape[0]
    w_before = cumw[i - 1]
    w_end = cumw[j]
    old = 0.0
    for k in range(i - 1, j + 1):
        old += legs[k] / (vmax - nu * cumw[k])
    new = _d(coords, dist, order[i - 1], order[j]) / (vmax - nu * w_before)
    for x in range(j, i, -1):
        new += legs[x - 1] / (vmax - nu * (w_before + w_end - cumw[x - 1]))
    new += _d(coords, dist, order[i], order[(j + 1) % n]) / (vmax - nu * w_end)
    return new - old


def relocate_delta(order, legs, cumw, cityw, coords, dist, vmax, nu, i, j):
    """Travel-time change of moving the city at position ``i`` to position ``j``."""
    n = order.shape[0]
    c = order[i]
    wc = cityw[c]
    if j > i:
        old = 0.0
        for k in range(i - 1, j + 1):
            old += legs[k] / (vmax - nu * cumw[k])
        new = _d(coords, dist, order[i - 1], order[i + 1]) / (vmax - nu * cumw[i - 1])
        for q in range(i, j - 1):
            new += legs[q + 1] / (vmax - nu * (cumw[q + 1] - wc))
        new += _d(coords, dist, order[j], c) / (vmax - nu * (cumw[j] - wc))
        new += _d(coords, dist, c, order[(j + 1) % n]) / (vmax - nu * cumw[j])
    else:
        old = 0.0
        for k in range(j - 1, i + 1):
            old += legs[k] / (vmax - nu * cumw[k])
        new = _d(coords, dist, order[j - 1], c) / (vmax - nu * cumw[j - 1])
        new += _d(coords, dist, c, order[j]) / (vmax - nu * (cumw[j - 1] + wc))
        for q in range(j + 1, i):
            new += legs[q - 1] / (vmax - nu * (cumw[q - 1] + wc))
        new += _d(coords, dist, order[i - 1], order[(i + 1) % n]) / (vmax - nu * cumw[i])
    return new - old


def best_tour_move(order, legs, cumw, cityw, coords, dist, vmax, nu, relocate):
    """Scan 2-opt (then relocate) moves; return ``(kind, i, j, dT)`` of the lowest dT.

    ``kind`` is 0 when the tour has no moves, 1 for 2-opt, 2 for relocate.
    Ties keep the first move in scan order.
    """
    n = order.shape[0]
    best = math.inf
    kind, bi, bj = 0, 0, 0
    for i in range(1, n - 1):
        for j in range(i + 1, n):
            dt = two_opt_delta(order, legs, cumw, coords, dist, vmax, nu, i, j)
            if dt < best:
                best, kind, bi, bj = dt, 1, i, j
    if relocate:
        for i in range(1, n):
            for j in range(1, n):
                if j == i:
                    continue
                dt = relocate_delta(order, legs, cumw, cityw, coords, dist, vmax, nu, i, j)
                if dt < best:
                    best, kind, bi, bj = dt, 2, i, j
    return kind, bi, bj, (best if kind else 0.0)


def weight_delta_time(legs, cumw, vmax, nu, k1, dw1, k2, dw2):
    """Travel-time change when ``dw1`` is added at position ``k1`` and ``dw2`` at ``k2``."""
    n = legs.shape[0]
    start = k1 if k1 < k2 else k2
    total = 0.0
    for k in range(start, n):
        dw = 0.0
        if k >= k1:
            dw += dw1
        if k >= k2:
            dw += dw2
        if dw != 0.0:
            a = vmax - nu * cumw[k]
            total += legs[k] * (nu * dw) / (a * (a - nu * dw))
    return total


def _add_weight(cumw, k, dw):
    for q in range(k, cumw.shape[0]):
        cumw[q] += dw


def kp_search(pos, item_city, item_w, item_p, picks, legs, cumw, vmax, nu,
              capacity, rent, budget, draws, min_gain, fails=0):
    """Stochastic first-improvement packing search; mutates ``picks`` and ``cumw``.

    Each row of ``draws`` holds three uniforms for one sample: move type
    (flip if < 0.5, else picked/unpicked swap), first index, second index.
    ``fails`` carries the non-improving streak over from a previous chunk of
    draws. Returns ``(consumed_rows, stalled, fails)``; ``stalled`` is 1 once
    ``budget`` consecutive samples failed to improve.
    """
    m = item_city.shape[0]
    n = legs.shape[0]
    picked = [j for j in range(m) if picks[j]]
    unpicked = [j for j in range(m) if not picks[j]]
    slot = np.empty(m, dtype=np.int64)
    for s, j in enumerate(picked):
        slot[j] = s
    for s, j in enumerate(unpicked):
        slot[j] = s
    total = cumw[n - 1]
    rows = draws.shape[0]
    r = 0
    while r < rows:
        u0 = draws[r, 0]
        u1 = draws[r, 1]
        u2 = draws[r, 2]
        r += 1
        np_ = len(picked)
        nu_ = m - np_
        if u0 < 0.5 or np_ == 0 or nu_ == 0:
            j = int(u1 * m)
            if j >= m:
                j = m - 1
            k = pos[item_city[j]]
            if picks[j]:
                dw = -item_w[j]
                dp = -item_p[j]
            else:
                dw = item_w[j]
                dp = item_p[j]
            if total + dw <= capacity:
                gain = dp - rent * weight_delta_time(legs, cumw, vmax, nu, k, dw, k, 0.0)
                if gain > min_gain:
                    _add_weight(cumw, k, dw)
                    total = cumw[n - 1]
                    if picks[j]:
                        picks[j] = 0
                        _move(picked, unpicked, slot, j)
                    else:
                        picks[j] = 1
                        _move(unpicked, picked, slot, j)
                    fails = 0
                    continue
        else:
            sa = int(u1 * np_)
            if sa >= np_:
                sa = np_ - 1
            sb = int(u2 * nu_)
            if sb >= nu_:
                sb = nu_ - 1
            a = picked[sa]
            b = unpicked[sb]
            ka = pos[item_city[a]]
            kb = pos[item_city[b]]
            if total - item_w[a] + item_w[b] <= capacity:
                dt = weight_delta_time(legs, cumw, vmax, nu, ka, -item_w[a], kb, item_w[b])
                gain = item_p[b] - item_p[a] - rent * dt
                if gain > min_gain:
                    _add_weight(cumw, ka, -item_w[a])
                    _add_weight(cumw, kb, item_w[b])
                    total = cumw[n - 1]
                    picks[a] = 0
                    picks[b] = 1
                    _move(picked, unpicked, slot, a)
                    _move(unpicked, picked, slot, b)
                    fails = 0
                    continue
        fails += 1
        if fails >= budget:
            return r, 1, fails
    return r, 0, fails


def _move(src, dst, slot, j):
    # O(1) removal: swap with last element
    s = slot[j]
    last = src[-1]
    src[s] = last
    slot[last] = s
    src.pop()
    slot[j] = len(dst)
    dst.append(j)


def length_two_opt(order, coords, dist, offset):
    """First-improvement 2-opt on tour length, in place; scan starts at ``offset``."""
    n = order.shape[0]
    if n < 4:
        return 0
    moves = 0
    improved = True
    while improved:
        improved = False
        for s in range(n - 2):
            i = 1 + (s + offset) % (n - 2)
            a = order[i - 1]
            b = order[i]
            dab = _d(coords, dist, a, b)
            for j in range(i + 1, n):
                c = order[j]
                e = order[(j + 1) % n]
                delta = (_d(coords, dist, a, c) + _d(coords, dist, b, e)
                         - dab - _d(coords, dist, c, e))
                if delta < 0.0:
                    order[i:j + 1] = order[i:j + 1][::-1].copy()
                    moves += 1
                    improved = True
                    b = order[i]
                    dab = _d(coords, dist, a, b)
    return moves


def footrule(pa, pb):
    """Sum of absolute position differences for every row pair of ``pa`` x ``pb``."""
    out = np.empty((pa.shape[0], pb.shape[0]), dtype=np.float64)
    for r in range(pa.shape[0]):
        out[r] = np.abs(pb - pa[r]).sum(axis=1)
    return out


def smo_svr(K, y, C, eps, tol, max_iter):
    """epsilon-SVR dual by SMO with second-order working-set selection.

    Variables ``a[0:l]`` are alpha, ``a[l:2l]`` alpha*. Returns
    ``(beta, b, iterations)`` with ``beta = alpha - alpha*``.
    """
    l = y.shape[0]
    ll = 2 * l
    a = [0.0] * ll
    s = [1.0] * l + [-1.0] * l
    G = [eps - y[t] for t in range(l)] + [eps + y[t] for t in range(l)]
    tau = 1e-12
    it = 0
    while it < max_iter:
        gmax = -math.inf
        i = -1
        for t in range(ll):
            if s[t] > 0:
                if a[t] < C and -G[t] >= gmax:
                    gmax = -G[t]
                    i = t
            else:
                if a[t] > 0.0 and G[t] >= gmax:
                    gmax = G[t]
                    i = t
        gmax2 = -math.inf
        j = -1
        obj_min = math.inf
        if i >= 0:
            bi = i % l
            kii = K[bi, bi]
            for t in range(ll):
                bt = t % l
                if s[t] > 0:
                    if a[t] > 0.0:
                        grad_diff = gmax + G[t]
                        if G[t] >= gmax2:
                            gmax2 = G[t]
                        if grad_diff > 0.0:
                            quad = kii + K[bt, bt] - 2.0 * K[bi, bt]
                            if quad <= 0.0:
                                quad = tau
                            obj = -(grad_diff * grad_diff) / quad
                            if obj <= obj_min:
                                j = t
                                obj_min = obj
                else:
                    if a[t] < C:
                        grad_diff = gmax - G[t]
                        if -G[t] >= gmax2:
                            gmax2 = -G[t]
                        if grad_diff > 0.0:
                            quad = kii + K[bt, bt] - 2.0 * K[bi, bt]
                            if quad <= 0.0:
                                quad = tau
                            obj = -(grad_diff * grad_diff) / quad
                            if obj <= obj_min:
                                j = t
                                obj_min = obj
        if gmax + gmax2 < tol or j < 0:
            break
        it += 1
        bi = i % l
        bj = j % l
        old_ai = a[i]
        old_aj = a[j]
        quad = K[bi, bi] + K[bj, bj] - 2.0 * K[bi, bj]
        if quad <= 0.0:
            quad = tau
        if s[i] != s[j]:
            delta = (-G[i] - G[j]) / quad
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0.0:
                if a[j] < 0.0:
                    a[j] = 0.0
                    a[i] = diff
            else:
                if a[i] < 0.0:
                    a[i] = 0.0
                    a[j] = -diff
            if diff > 0.0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - diff
            else:
                if a[j] > C:
                    a[j] = C
                    a[i] = C + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = total - C
            else:
                if a[j] < 0.0:
                    a[j] = 0.0
                    a[i] = total
            if total > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = total - C
            else:
                if a[i] < 0.0:
                    a[i] = 0.0
                    a[j] = total
        dai = a[i] - old_ai
        daj = a[j] - old_aj
        si = s[i]
        sj = s[j]
        for t in range(ll):
            bt = t % l
            G[t] += s[t] * (si * K[bt, bi] * dai + sj * K[bt, bj] * daj)
    # bias from free variables, else midpoint of the feasible interval
    ub = math.inf
    lb = -math.inf
    nfree = 0
    sfree = 0.0
    for t in range(ll):
        yg = s[t] * G[t]
        if a[t] >= C:
            if s[t] < 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        elif a[t] <= 0.0:
            if s[t] > 0:
                ub = min(ub, yg)
            else:
                lb = max(lb, yg)
        else:
            nfree += 1
            sfree += yg
    rho = sfree / nfree if nfree else (ub + lb) / 2.0
    beta = np.array([a[t] - a[t + l] for t in range(l)], dtype=np.float64)
    return beta, -rho, it
