# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numeric kernels; mirrors ``_purepy`` function for function."""

import numpy as np
cimport numpy as cnp
from libc.math cimport ceil, sqrt, INFINITY

cnp.import_array()

BACKEND = "cython"


cdef inline double _d(const double[:, ::1] coords, const double[:, ::1] dist,
                      Py_ssize_t a, Py_ssize_t b) noexcept nogil:
    cdef double dx, dy
    if dist.shape[0]:
        return dist[a, b]
    dx = coords[a, 0] - coords[b, 0]
    dy = coords[a, 1] - coords[b, 1]
    return ceil(sqrt(dx * dx + dy * dy))


def tour_legs(const cnp.int64_t[::1] order, const double[:, ::1] coords,
              const double[:, ::1] dist):
    cdef Py_ssize_t n = order.shape[0], k
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] legs = out
    for k in range(n):
        legs[k] = _d(coords, dist, order[k], order[(k + 1) % n])
    return out


def tour_time(const double[::1] legs, const double[::1] cumw, double vmax, double nu):
    cdef double total = 0.0
    cdef Py_ssize_t k
    for k in range(legs.shape[0]):
        total += legs[k] / (vmax - nu * cumw[k])
    return total


cdef double _two_opt(const cnp.int64_t[::1] order, const double[::1] legs,
                     const double[::1] cumw, const double[:, ::1] coords,
                     const double[:, ::1] dist, double vmax, double nu,
                     Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t n = order.shape[0], k, x
    cdef double w_before = cumw[i - 1]
    cdef double w_end = cumw[j]
    cdef double old = 0.0, new
    for k in range(i - 1, j + 1):
        old += legs[k] / (vmax - nu * cumw[k])
    new = _d(coords, dist, order[i - 1], order[j]) / (vmax - nu * w_before)
    x = j
    while x > i:
        new += legs[x - 1] / (vmax - nu * (w_before + w_end - cumw[x - 1]))
        x -= 1
    new += _d(coords, dist, order[i], order[(j + 1) % n]) / (vmax - nu * w_end)
    return new - old


cdef double _relocate(const cnp.int64_t[::1] order, const double[::1] legs,
                      const double[::1] cumw, const double[::1] cityw,
                      const double[:, ::1] coords, const double[:, ::1] dist,
                      double vmax, double nu, Py_ssize_t i, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t n = order.shape[0], k, q
    cdef Py_ssize_t c = order[i]
    cdef double wc = cityw[c]
    cdef double old = 0.0, new
    if j > i:
        for k in range(i - 1, j + 1):
            old += legs[k] / (vmax - nu * cumw[k])
        new = _d(coords, dist, order[i - 1], order[i + 1]) / (vmax - nu * cumw[i - 1])
        for q in range(i, j - 1):
            new += legs[q + 1] / (vmax - nu * (cumw[q + 1] - wc))
        new += _d(coords, dist, order[j], c) / (vmax - nu * (cumw[j] - wc))
        new += _d(coords, dist, c, order[(j + 1) % n]) / (vmax - nu * cumw[j])
    else:
        for k in range(j - 1, i + 1):
            old += legs[k] / (vmax - nu * cumw[k])
        new = _d(coords, dist, order[j - 1], c) / (vmax - nu * cumw[j - 1])
        new += _d(coords, dist, c, order[j]) / (vmax - nu * (cumw[j - 1] + wc))
        for q in range(j + 1, i):
            new += legs[q - 1] / (vmax - nu * (cumw[q - 1] + wc))
        new += _d(coords, dist, order[i - 1], order[(i + 1) % n]) / (vmax - nu * cumw[i])
    return new - old


def two_opt_delta(const cnp.int64_t[::1] order, const double[::1] legs,
                  const double[::1] cumw, const double[:, ::1] coords,
                  const double[:, ::1] dist, double vmax, double nu,
                  Py_ssize_t i, Py_ssize_t j):
    return _two_opt(order, legs, cumw, coords, dist, vmax, nu, i, j)


def relocate_delta(const cnp.int64_t[::1] order, const double[::1] legs,
                   const double[::1] cumw, const double[::1] cityw,
                   const double[:, ::1] coords, const double[:, ::1] dist,
                   double vmax, double nu, Py_ssize_t i, Py_ssize_t j):
    return _relocate(order, legs, cumw, cityw, coords, dist, vmax, nu, i, j)


def best_tour_move(const cnp.int64_t[::1] order, const double[::1] legs,
                   const double[::1] cumw, const double[::1] cityw,
                   const double[:, ::1] coords, const double[:, ::1] dist,
                   double vmax, double nu, bint relocate):
    cdef Py_ssize_t n = order.shape[0], i, j
    cdef double best = INFINITY, dt
    cdef int kind = 0
    cdef Py_ssize_t bi = 0, bj = 0
    with nogil:
        for i in range(1, n - 1):
            for j in range(i + 1, n):
                dt = _two_opt(order, legs, cumw, coords, dist, vmax, nu, i, j)
                if dt < best:
                    best = dt
                    kind = 1
                    bi = i
                    bj = j
        if relocate:
            for i in range(1, n):
                for j in range(1, n):
                    if j == i:
                        continue
                    dt = _relocate(order, legs, cumw, cityw, coords, dist, vmax, nu, i, j)
                    if dt < best:
                        best = dt
                        kind = 2
                        bi = i
                        bj = j
    return kind, bi, bj, (best if kind else 0.0)


cdef double _wdt(const double[::1] legs, const double[::1] cumw, double vmax, double nu,
                 Py_ssize_t k1, double dw1, Py_ssize_t k2, double dw2) noexcept nogil:
    cdef Py_ssize_t n = legs.shape[0], k
    cdef Py_ssize_t start = k1 if k1 < k2 else k2
    cdef double total = 0.0, dw, a
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


def weight_delta_time(const double[::1] legs, const double[::1] cumw, double vmax,
                      double nu, Py_ssize_t k1, double dw1, Py_ssize_t k2, double dw2):
    return _wdt(legs, cumw, vmax, nu, k1, dw1, k2, dw2)


cdef inline void _add_weight(double[::1] cumw, Py_ssize_t k, double dw) noexcept nogil:
    cdef Py_ssize_t q
    for q in range(k, cumw.shape[0]):
        cumw[q] += dw


cdef inline void _move(cnp.int64_t[::1] src, Py_ssize_t* nsrc, cnp.int64_t[::1] dst,
                       Py_ssize_t* ndst, cnp.int64_t[::1] slot, Py_ssize_t j) noexcept nogil:
    cdef Py_ssize_t s = slot[j]
    cdef Py_ssize_t last = src[nsrc[0] - 1]
    src[s] = last
    slot[last] = s
    nsrc[0] -= 1
    slot[j] = ndst[0]
    dst[ndst[0]] = j
    ndst[0] += 1


def kp_search(const cnp.int64_t[::1] pos, const cnp.int64_t[::1] item_city,
              const double[::1] item_w, const double[::1] item_p,
              cnp.uint8_t[::1] picks, const double[::1] legs, double[::1] cumw,
              double vmax, double nu, double capacity, double rent,
              Py_ssize_t budget, const double[:, ::1] draws, double min_gain,
              Py_ssize_t fails=0):
    cdef Py_ssize_t m = item_city.shape[0], n = legs.shape[0]
    picked_a = np.empty(m, dtype=np.int64)
    unpicked_a = np.empty(m, dtype=np.int64)
    slot_a = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[::1] picked = picked_a, unpicked = unpicked_a, slot = slot_a
    cdef Py_ssize_t npk = 0, nup = 0, j, a, b, sa, sb, k, ka, kb
    cdef Py_ssize_t rows = draws.shape[0], r = 0
    cdef double total, dw, dp, gain, dt, u0, u1, u2
    cdef int stalled = 0
    for j in range(m):
        if picks[j]:
            slot[j] = npk
            picked[npk] = j
            npk += 1
        else:
            slot[j] = nup
            unpicked[nup] = j
            nup += 1
    total = cumw[n - 1]
    with nogil:
        while r < rows:
            u0 = draws[r, 0]
            u1 = draws[r, 1]
            u2 = draws[r, 2]
            r += 1
            if u0 < 0.5 or npk == 0 or nup == 0:
                j = <Py_ssize_t>(u1 * m)
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
                    gain = dp - rent * _wdt(legs, cumw, vmax, nu, k, dw, k, 0.0)
                    if gain > min_gain:
                        _add_weight(cumw, k, dw)
                        total = cumw[n - 1]
                        if picks[j]:
                            picks[j] = 0
                            _move(picked, &npk, unpicked, &nup, slot, j)
                        else:
                            picks[j] = 1
                            _move(unpicked, &nup, picked, &npk, slot, j)
                        fails = 0
                        continue
            else:
                sa = <Py_ssize_t>(u1 * npk)
                if sa >= npk:
                    sa = npk - 1
                sb = <Py_ssize_t>(u2 * nup)
                if sb >= nup:
                    sb = nup - 1
                a = picked[sa]
                b = unpicked[sb]
                ka = pos[item_city[a]]
                kb = pos[item_city[b]]
                if total - item_w[a] + item_w[b] <= capacity:
                    dt = _wdt(legs, cumw, vmax, nu, ka, -item_w[a], kb, item_w[b])
                    gain = item_p[b] - item_p[a] - rent * dt
                    if gain > min_gain:
                        _add_weight(cumw, ka, -item_w[a])
                        _add_weight(cumw, kb, item_w[b])
                        total = cumw[n - 1]
                        picks[a] = 0
                        picks[b] = 1
                        _move(picked, &npk, unpicked, &nup, slot, a)
                        _move(unpicked, &nup, picked, &npk, slot, b)
                        fails = 0
                        continue
            fails += 1
            if fails >= budget:
                stalled = 1
                break
    return r, stalled, fails


def length_two_opt(cnp.int64_t[::1] order, const double[:, ::1] coords,
                   const double[:, ::1] dist, Py_ssize_t offset):
    cdef Py_ssize_t n = order.shape[0], s, i, j, lo, hi, a, b, c, e
    cdef cnp.int64_t tmp
    cdef double dab, delta
    cdef long moves = 0
    cdef bint improved = True
    if n < 4:
        return 0
    with nogil:
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
                        lo = i
                        hi = j
                        while lo < hi:
                            tmp = order[lo]
                            order[lo] = order[hi]
                            order[hi] = tmp
                            lo += 1
                            hi -= 1
                        moves += 1
                        improved = True
                        b = order[i]
                        dab = _d(coords, dist, a, b)
    return moves


def footrule(const double[:, ::1] pa, const double[:, ::1] pb):
    cdef Py_ssize_t ra = pa.shape[0], rb = pb.shape[0], n = pa.shape[1], r, q, k
    cdef double acc, diff
    out_a = np.empty((ra, rb), dtype=np.float64)
    cdef double[:, ::1] out = out_a
    with nogil:
        for r in range(ra):
            for q in range(rb):
                acc = 0.0
                for k in range(n):
                    diff = pa[r, k] - pb[q, k]
                    acc += diff if diff >= 0.0 else -diff
                out[r, q] = acc
    return out_a


def smo_svr(const double[:, ::1] K, const double[::1] y, double C, double eps,
            double tol, long max_iter):
    cdef Py_ssize_t l = y.shape[0], ll = 2 * l, t, i, j, bi, bj, bt
    a_arr = np.zeros(ll, dtype=np.float64)
    s_arr = np.empty(ll, dtype=np.float64)
    G_arr = np.empty(ll, dtype=np.float64)
    cdef double[::1] a = a_arr, s = s_arr, G = G_arr
    cdef double tau = 1e-12, gmax, gmax2, obj_min, grad_diff, quad, obj, kii
    cdef double old_ai, old_aj, delta, diff, total, dai, daj, si, sj
    cdef double ub, lb, sfree, yg, rho
    cdef long it = 0
    cdef Py_ssize_t nfree
    for t in range(l):
        s[t] = 1.0
        s[t + l] = -1.0
        G[t] = eps - y[t]
        G[t + l] = eps + y[t]
    with nogil:
        while it < max_iter:
            gmax = -INFINITY
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
            gmax2 = -INFINITY
            j = -1
            obj_min = INFINITY
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
        ub = INFINITY
        lb = -INFINITY
        nfree = 0
        sfree = 0.0
        for t in range(ll):
            yg = s[t] * G[t]
            if a[t] >= C:
                if s[t] < 0:
                    if yg < ub:
                        ub = yg
                else:
                    if yg > lb:
                        lb = yg
            elif a[t] <= 0.0:
                if s[t] > 0:
                    if yg < ub:
                        ub = yg
                else:
                    if yg > lb:
                        lb = yg
            else:
                nfree += 1
                sfree += yg
        if nfree:
            rho = sfree / nfree
        else:
            rho = (ub + lb) / 2.0
    beta = a_arr[:l] - a_arr[l:]
    return beta, -rho, it
