"""Transfer-matrix kernels in rotated lattice coordinates.

The nearest-neighbour walk on Z^2 factorizes under the 45-degree rotation
a = x1 + x2, b = x1 - x2 into two independent +-1 walks, so the admissible
cone at time n becomes the full square grid (i, j) in [0, n]^2 with
i = (n + a)/2, j = (n + b)/2, and one polymer step moves i and j by 0 or 1
independently.  The weighted recursion is then a dense separable 2x2 stencil

    W_{k+1}[i, j] = w(k+1, x(i,j)) * (1/4) * sum_{di,dj in {0,1}} W_k[i-di, j-dj]

evaluated over a truncation window |a|, |b| <= T (T >= steps reproduces the
exact cone).  Slices carry a shared binary exponent; renormalization divides
by powers of two, which is exact in IEEE arithmetic, so results do not
depend on the renormalization cadence.

All kernels are deterministic: no threading, fixed accumulation order.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._rng import U64, mix64, norm_ppf, to_unit, rademacher_block, C_TIME, C_X1, C_X2

_LIM_HI = 2.0 ** 200
_LIM_LO = 2.0 ** -200


@njit(cache=True, inline="always")
def _frexp_exponent(x):
    e = 0
    while x >= 2.0:
        x *= 0.5
        e += 1
    while x < 1.0:
        x *= 2.0
        e -= 1
    return e


@njit(cache=True, inline="always")
def _window(k, alo, ahi, T):
    """Inclusive i-window [lo, hi] at local step k for initial spread [alo, ahi]."""
    lo = alo // 2
    t = (alo - T + k + 1) // 2
    if t > lo:
        lo = t
    hi = ahi // 2 + k
    t = (ahi + T + k) // 2
    if t < hi:
        hi = t
    return lo, hi


@njit(cache=True, inline="always")
def _fill_weight_row(wrow, law_id, key, beta, lam, n_abs, v, u0, width):
    """Per-site weights times 1/4 along one grid row (v fixed, u = u0 + 2q)."""
    if law_id == 1:
        wp = 0.25 * np.exp(beta - lam)
        wm = 0.25 * np.exp(-beta - lam)
        blk = (u0 >> 7) - 1
        h = U64(0)
        for q in range(width):
            u = u0 + 2 * q
            b = u >> 7
            if b != blk:
                h = rademacher_block(key, n_abs, v, b)
                blk = b
            bit = (h >> U64((u >> 1) & 63)) & U64(1)
            wrow[q] = wp if bit else wm
    else:
        kb = key ^ U64(n_abs) * C_TIME
        x1 = (v + u0) // 2
        x2 = (v - u0) // 2
        for q in range(width):
            h = mix64(kb ^ U64(x1) * C_X1 ^ U64(x2) * C_X2)
            g = norm_ppf(to_unit(h))
            wrow[q] = 0.25 * np.exp(beta * g - lam)
            x1 += 1
            x2 -= 1


@njit(cache=True, inline="always")
def _mask_weight_row(wrow, law_id, key, beta, lam, n_abs, v, u0, width, boxes, nact, act):
    """Masked variant: weight where (n_abs, x) lies in an active box, else 1."""
    _fill_weight_row(wrow, law_id, key, beta, lam, n_abs, v, u0, width)
    x1 = (v + u0) // 2
    x2 = (v - u0) // 2
    for q in range(width):
        inside = False
        for t in range(nact):
            b = act[t]
            if (
                abs(x1 - boxes[b, 2]) <= boxes[b, 4]
                and abs(x2 - boxes[b, 3]) <= boxes[b, 4]
            ):
                inside = True
                break
        if not inside:
            wrow[q] = 0.25
        x1 += 1
        x2 -= 1


@njit(cache=True)
def evolve_field(
    key,
    law_id,
    beta,
    lam,
    t_base,
    t_dir,
    r1,
    r2,
    steps,
    T,
    init,
    alo,
    ahi,
    blo,
    bhi,
    e2_init,
    suppress_last,
    capture_ks,
    boxes,
    use_mask,
):
    """Weighted transfer-matrix evolution.

    init is the padded slice at local step 0 (shape at least window+2 in each
    axis; index [p+1, q+1] holds site i = alo//2 + p, j = blo//2 + q).  The
    weight at local step k is taken at absolute time t_base + t_dir*k and at
    absolute coordinates x1 = r1 + i + j - k, x2 = r2 + i - j.

    Returns (slice_padded, i_lo, j_lo, wi, wj, e2, cap_mant, cap_e2,
    loss_mant, loss_e2) where loss upper-bounds the mass clipped by the
    truncation window, at its scale at the moment of clipping.
    """
    wi_max = (ahi - alo) // 2 + min(T, steps) + 3
    wj_max = (bhi - blo) // 2 + min(T, steps) + 3
    cur = np.zeros((wi_max + 2, wj_max + 2))
    nxt = np.zeros((wi_max + 2, wj_max + 2))
    rowsum2 = np.zeros((wi_max + 2, wj_max + 2))
    wrow = np.empty(wj_max + 2)
    act = np.empty(8, dtype=np.int64)

    ilo, ihi = _window(0, alo, ahi, T)
    jlo, jhi = _window(0, blo, bhi, T)
    wi = ihi - ilo + 1
    wj = jhi - jlo + 1
    for p in range(wi):
        for q in range(wj):
            cur[p + 1, q + 1] = init[p + 1, q + 1]

    e2 = e2_init
    loss = 0.0
    n_caps = capture_ks.size
    cap_mant = np.zeros(n_caps)
    cap_e2 = np.zeros(n_caps, dtype=np.int64)
    cap_idx = 0

    for k in range(1, steps + 1):
        n_abs = t_base + t_dir * k
        ilo_n, ihi_n = _window(k, alo, ahi, T)
        jlo_n, jhi_n = _window(k, blo, bhi, T)
        wi_n = ihi_n - ilo_n + 1
        wj_n = jhi_n - jlo_n + 1
        si = ilo_n - ilo
        sj = jlo_n - jlo

        weighted = beta != 0.0 and not (suppress_last and k == steps)
        nact = 0
        if weighted and use_mask:
            for b in range(boxes.shape[0]):
                if boxes[b, 0] <= n_abs <= boxes[b, 1]:
                    act[nact] = b
                    nact += 1
            if nact == 0:
                weighted = False

        # truncation loss: border sources whose offspring fall outside the window
        if ilo_n > alo // 2:
            srow = 0.0
            for q in range(wj):
                srow += cur[si, q + 1]
            loss += 0.5 * srow
        if ihi_n < ahi // 2 + k:
            srow = 0.0
            for q in range(wj):
                srow += cur[wi, q + 1]
            loss += 0.5 * srow
        if jlo_n > blo // 2:
            scol = 0.0
            for p in range(wi):
                scol += cur[p + 1, sj]
            loss += 0.5 * scol
        if jhi_n < bhi // 2 + k:
            scol = 0.0
            for p in range(wi):
                scol += cur[p + 1, wj]
            loss += 0.5 * scol

        # pass 1: vertical pair sums, pure float and vectorizable
        for p in range(wi_n):
            for q in range(wj_n + 1):
                rowsum2[p, q] = cur[p + si, q + sj] + cur[p + si + 1, q + sj]
        # pass 2: weights and horizontal pair sums
        u0 = (r1 - r2) + 2 * jlo_n - k
        for p in range(wi_n):
            if weighted:
                v = (r1 + r2) + 2 * (ilo_n + p) - k
                if use_mask:
                    _mask_weight_row(
                        wrow, law_id, key, beta, lam, n_abs, v, u0, wj_n, boxes, nact, act
                    )
                else:
                    _fill_weight_row(wrow, law_id, key, beta, lam, n_abs, v, u0, wj_n)
                for q in range(wj_n):
                    nxt[p + 1, q + 1] = (rowsum2[p, q] + rowsum2[p, q + 1]) * wrow[q]
            else:
                for q in range(wj_n):
                    nxt[p + 1, q + 1] = (rowsum2[p, q] + rowsum2[p, q + 1]) * 0.25

        # stale rows/cols from the previous occupancy of nxt
        for p in range(wi_n, wi + 2):
            for q in range(wj_max + 2):
                nxt[p + 1, q] = 0.0
        for q in range(wj_n, wj + 2):
            for p in range(wi_max + 2):
                nxt[p, q + 1] = 0.0

        tmp = cur
        cur = nxt
        nxt = tmp
        ilo, ihi, jlo, jhi, wi, wj = ilo_n, ihi_n, jlo_n, jhi_n, wi_n, wj_n

        # scale drift per step is bounded by the extreme site weight, so a
        # sparse max scan is safe against the 2^+-200 thresholds
        if k % 16 == 0 or k == steps:
            mx = 0.0
            for p in range(wi):
                for q in range(wj):
                    if cur[p + 1, q + 1] > mx:
                        mx = cur[p + 1, q + 1]
            if mx > 0.0 and (mx > _LIM_HI or mx < _LIM_LO):
                e = _frexp_exponent(mx)
                scale = 2.0 ** (-e)
                for p in range(wi):
                    for q in range(wj):
                        cur[p + 1, q + 1] *= scale
                loss *= scale
                e2 += e

        if cap_idx < n_caps and capture_ks[cap_idx] == k:
            tot = 0.0
            for p in range(wi):
                for q in range(wj):
                    tot += cur[p + 1, q + 1]
            cap_mant[cap_idx] = tot
            cap_e2[cap_idx] = e2
            cap_idx += 1

    return cur, ilo, jlo, wi, wj, e2, cap_mant, cap_e2, loss, e2


@njit(cache=True)
def evolve_backward(
    key,
    law_id,
    beta,
    lam,
    n_hi,
    n_lo,
    T,
    init,
    e2_init,
    store_times,
    out_slices,
    out_e2,
    store_g,
    g_slices,
    boxes,
    use_mask,
):
    """Free-endpoint backward recursion B_n = (1/4) sum_{2x2 ahead} w_{n+1} B_{n+1}.

    Lives on the origin-rooted global grid: at time n the slice covers
    i in [max(0,(n-T+1)//2), min(n,(n+T)//2)], padded by one cell.  init is
    the padded B slice at time n_hi.  B slices are stored (padded, with their
    exponent) whenever n matches an entry of store_times; when store_g is
    true, the weighted products G_n = w_n * B_n are stored for every
    n in (n_lo, n_hi] into g_slices[n - n_lo - 1] (mantissas only).
    """
    act = np.empty(8, dtype=np.int64)
    W = init.shape[0]
    cur = np.zeros((W, W))
    nxt = np.zeros((W, W))
    vsum = np.zeros((W, W))
    wrow = np.empty(W)
    ilo, ihi = _window(n_hi, 0, 0, T)
    wi = ihi - ilo + 1
    for p in range(wi):
        for q in range(wi):
            cur[p + 1, q + 1] = init[p + 1, q + 1]
    e2 = e2_init
    n_store = store_times.size
    sidx = 0
    while sidx < n_store and store_times[sidx] >= n_hi:
        if store_times[sidx] == n_hi:
            for p in range(wi + 2):
                for q in range(wi + 2):
                    out_slices[sidx, p, q] = cur[p, q]
            out_e2[sidx] = e2
        sidx += 1

    for n in range(n_hi - 1, n_lo - 1, -1):
        n_w = n + 1  # weight slice consumed by this step
        ilo_n, ihi_n = _window(n, 0, 0, T)
        wi_n = ihi_n - ilo_n + 1
        s = ilo_n - ilo  # in {0, -1}

        weighted = beta != 0.0
        nact = 0
        if weighted and use_mask:
            for b in range(boxes.shape[0]):
                if boxes[b, 0] <= n_w <= boxes[b, 1]:
                    act[nact] = b
                    nact += 1
            if nact == 0:
                weighted = False

        # multiply the (n+1)-slice by its weights (this is G_{n+1})
        if weighted:
            u0 = 2 * ilo - n_w
            for p in range(wi):
                i = ilo + p
                v = 2 * i - n_w
                if use_mask:
                    _mask_weight_row(
                        wrow, law_id, key, beta, lam, n_w, v, u0, wi, boxes, nact, act
                    )
                else:
                    _fill_weight_row(wrow, law_id, key, beta, lam, n_w, v, u0, wi)
                for q in range(wi):
                    cur[p + 1, q + 1] *= 4.0 * wrow[q]
        if store_g:
            gi = n_w - n_lo - 1
            if 0 <= gi < g_slices.shape[0]:
                for p in range(wi + 2):
                    for q in range(wi + 2):
                        g_slices[gi, p, q] = cur[p, q]

        for p in range(wi_n):
            for q in range(min(wi + 3, W)):
                vsum[p, q] = cur[p + s + 1, q] + cur[p + s + 2, q]
        for p in range(wi_n):
            for q in range(wi_n):
                nxt[p + 1, q + 1] = 0.25 * (vsum[p, q + s + 1] + vsum[p, q + s + 2])
        for p in range(wi_n + 1, min(wi + 3, W)):
            for q in range(W):
                nxt[p, q] = 0.0
        for q in range(wi_n + 1, min(wi + 3, W)):
            for p in range(W):
                nxt[p, q] = 0.0

        tmp = cur
        cur = nxt
        nxt = tmp
        ilo, ihi, wi = ilo_n, ihi_n, wi_n

        if n % 16 == 0 or n == n_lo:
            mx = 0.0
            for p in range(wi):
                for q in range(wi):
                    if cur[p + 1, q + 1] > mx:
                        mx = cur[p + 1, q + 1]
            if mx > 0.0 and (mx > _LIM_HI or mx < _LIM_LO):
                e = _frexp_exponent(mx)
                scale = 2.0 ** (-e)
                for p in range(wi):
                    for q in range(wi):
                        cur[p + 1, q + 1] *= scale
                e2 += e

        if sidx < n_store and store_times[sidx] == n:
            for p in range(wi + 2):
                for q in range(wi + 2):
                    out_slices[sidx, p, q] = cur[p, q]
            out_e2[sidx] = e2
            sidx += 1

    return cur, ilo, wi, e2


@njit(cache=True)
def advance_paths(g_slices, n_from, n_to, T, pos_i, pos_j, path_keys, out_i, out_j):
    """Advance all paths from time n_from to n_to through stored G slices.

    g_slices[m] is the padded weighted slice G_{n_from+1+m} on the global
    grid.  Transition: P(step) prop. to G_{n+1}(neighbour), neighbours
    enumerated in the fixed order +x, -x, +y, -y.  One uniform per
    (path, time step).  Positions are global (i, j); out_i/out_j record the
    trajectory rows for times n_from+1 .. n_to.
    """
    npaths = pos_i.size
    for n in range(n_from, n_to):
        gi = n - n_from
        ilo1, _ = _window(n + 1, 0, 0, T)
        for p in range(npaths):
            i = pos_i[p]
            j = pos_j[p]
            # order: +x -> (i+1, j+1), -x -> (i, j), +y -> (i+1, j), -y -> (i, j+1)
            a0 = g_slices[gi, i + 1 - ilo1 + 1, j + 1 - ilo1 + 1]
            a1 = g_slices[gi, i - ilo1 + 1, j - ilo1 + 1]
            a2 = g_slices[gi, i + 1 - ilo1 + 1, j - ilo1 + 1]
            a3 = g_slices[gi, i - ilo1 + 1, j + 1 - ilo1 + 1]
            tot = a0 + a1 + a2 + a3
            u = to_unit(mix64(path_keys[p] ^ U64(n) * C_TIME))
            if tot <= 0.0:
                a0 = a1 = a2 = a3 = 1.0
                tot = 4.0
            t = u * tot
            if t < a0:
                i += 1
                j += 1
            elif t < a0 + a1:
                pass
            elif t < a0 + a1 + a2:
                i += 1
            else:
                j += 1
            pos_i[p] = i
            pos_j[p] = j
            out_i[p, n + 1] = i
            out_j[p, n + 1] = j


@njit(cache=True)
def second_moment_dp(sigma_sq, steps, d0i, d0j, T):
    """E[Z(0,0,N,*) Z(0,u,N,*)] by the difference-walk DP.

    The difference of two independent walks factorizes in rotated halved
    coordinates into two lazy walks with step law (1/4, 1/2, 1/4) on
    {-1,0,+1}; every visit to the origin multiplies the local mass by
    (1 + sigma^2).  d0 = (d0i, d0j) is the initial halved separation; the
    window is fixed, [min(0,d0)-T, max(0,d0)+T] per axis.  Returns
    (mantissa, exp2) with value = mantissa * 2^exp2.
    """
    lo_i = min(0, d0i) - T
    hi_i = max(0, d0i) + T
    lo_j = min(0, d0j) - T
    hi_j = max(0, d0j) + T
    wi = hi_i - lo_i + 1
    wj = hi_j - lo_j + 1
    cur = np.zeros((wi + 2, wj + 2))
    vs = np.zeros((wi + 2, wj + 2))
    nxt = np.zeros((wi + 2, wj + 2))
    cur[d0i - lo_i + 1, d0j - lo_j + 1] = 1.0
    oi = -lo_i + 1
    oj = -lo_j + 1
    e2 = 0
    mult = 1.0 + sigma_sq
    for n in range(1, steps + 1):
        for p in range(1, wi + 1):
            for q in range(1, wj + 1):
                vs[p, q] = 0.25 * (cur[p - 1, q] + cur[p + 1, q]) + 0.5 * cur[p, q]
        for p in range(1, wi + 1):
            for q in range(1, wj + 1):
                nxt[p, q] = 0.25 * (vs[p, q - 1] + vs[p, q + 1]) + 0.5 * vs[p, q]
        nxt[oi, oj] *= mult
        tmp = cur
        cur = nxt
        nxt = tmp
        if n % 512 == 0:
            mx = 0.0
            for p in range(1, wi + 1):
                for q in range(1, wj + 1):
                    if cur[p, q] > mx:
                        mx = cur[p, q]
            if mx > 0.0 and (mx > _LIM_HI or mx < _LIM_LO):
                e = _frexp_exponent(mx)
                scale = 2.0 ** (-e)
                for p in range(1, wi + 1):
                    for q in range(1, wj + 1):
                        cur[p, q] *= scale
                e2 += e
    tot = 0.0
    for p in range(1, wi + 1):
        for q in range(1, wj + 1):
            tot += cur[p, q]
    return tot, e2
