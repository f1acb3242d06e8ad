"""JIT-compiled fixed-step integration loops.

Classical RK4 on the closed loop with the control value held over each step
(zero-order hold).  The curve inverse is a uniform-grid linear table lookup;
leaving the table's voltage span aborts the run with the offending time.
Two kernels: known-parameter references from precomputed schedules, and the
adaptive loop carrying the estimator states plus a periodic grid-argmin
refresh of the estimated equilibrium current.

Status codes: 0 = completed, 1 = cell voltage left the invertible range.
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_RANGE = 1

KNOWN_COLS = 7      # t, x1, x2, x3, xc, u_raw, u_sat
ADAPTIVE_COLS = 11  # ... + th1_hat, th2_hat, x1_star_hat, x2_star_hat


@njit(cache=True)
def run_known(
    h, n, decim,
    c_fc, l_ind, c_out, th1, th2_init,
    ld_steps, ld_th2,
    k_p, k_i, u_min, u_max,
    ref_steps, ref_x2s, ref_x3s,
    x1_0, x2_0, x3_0, xc_0,
    tab, v_lo, inv_hv,
    out,
):
    x1, x2, x3, xc = x1_0, x2_0, x3_0, xc_0
    th2 = th2_init
    x2s = ref_x2s[0]
    x3s = ref_x3s[0]
    i_cfc, i_l, i_c = 1.0 / c_fc, 1.0 / l_ind, 1.0 / c_out
    hh, h6 = 0.5 * h, h / 6.0
    ntab = float(tab.shape[0] - 1)
    ld_ptr = 0
    ref_ptr = 0
    m = 0
    for k in range(n):
        while ld_ptr < ld_steps.shape[0] and ld_steps[ld_ptr] == k:
            th2 = ld_th2[ld_ptr]
            ld_ptr += 1
        while ref_ptr < ref_steps.shape[0] and ref_steps[ref_ptr] == k:
            x2s = ref_x2s[ref_ptr]
            x3s = ref_x3s[ref_ptr]
            ref_ptr += 1
        yn = x2s * x3 - x3s * x2
        u_raw = -k_p * yn - k_i * xc
        u = u_raw
        if u < u_min:
            u = u_min
        elif u > u_max:
            u = u_max
        if k % decim == 0:
            out[m, 0] = k * h
            out[m, 1] = x1
            out[m, 2] = x2
            out[m, 3] = x3
            out[m, 4] = xc
            out[m, 5] = u_raw
            out[m, 6] = u
            m += 1
        # stage 1
        j = (x1 - v_lo) * inv_hv
        if not (0.0 <= j < ntab):
            return m, STATUS_RANGE, k * h
        ji = int(j)
        ifc = tab[ji] + (j - ji) * (tab[ji + 1] - tab[ji])
        a1 = (ifc - x2) * i_cfc
        b1 = (x1 - th1 * x2 - u * x3) * i_l
        c1 = (u * x2 - th2 * x3) * i_c
        d1 = x2s * x3 - x3s * x2
        # stage 2
        y1 = x1 + hh * a1
        y2 = x2 + hh * b1
        y3 = x3 + hh * c1
        j = (y1 - v_lo) * inv_hv
        if not (0.0 <= j < ntab):
            return m, STATUS_RANGE, k * h
        ji = int(j)
        ifc = tab[ji] + (j - ji) * (tab[ji + 1] - tab[ji])
        a2 = (ifc - y2) * i_cfc
        b2 = (y1 - th1 * y2 - u * y3) * i_l
        c2 = (u * y2 - th2 * y3) * i_c
        d2 = x2s * y3 - x3s * y2
        # stage 3
        y1 = x1 + hh * a2
        y2 = x2 + hh * b2
        y3 = x3 + hh * c2
        j = (y1 - v_lo) * inv_hv
        if not (0.0 <= j < ntab):
            return m, STATUS_RANGE, k * h
        ji = int(j)
        ifc = tab[ji] + (j - ji) * (tab[ji + 1] - tab[ji])
        a3 = (ifc - y2) * i_cfc
        b3 = (y1 - th1 * y2 - u * y3) * i_l
        c3 = (u * y2 - th2 * y3) * i_c
        d3 = x2s * y3 - x3s * y2
        # stage 4
        y1 = x1 + h * a3
        y2 = x2 + h * b3
        y3 = x3 + h * c3
        j = (y1 - v_lo) * inv_hv
        if not (0.0 <= j < ntab):
            return m, STATUS_RANGE, k * h
        ji = int(j)
        ifc = tab[ji] + (j - ji) * (tab[ji + 1] - tab[ji])
        a4 = (ifc - y2) * i_cfc
        b4 = (y1 - th1 * y2 - u * y3) * i_l
        c4 = (u * y2 - th2 * y3) * i_c
        d4 = x2s * y3 - x3s * y2
        x1 += h6 * (a1 + 2.0 * (a2 + a3) + a4)
        x2 += h6 * (b1 + 2.0 * (b2 + b3) + b4)
        x3 += h6 * (c1 + 2.0 * (c2 + c3) + c4)
        xc += h6 * (d1 + 2.0 * (d2 + d3) + d4)
    yn = x2s * x3 - x3s * x2
    u_raw = -k_p * yn - k_i * xc
    u = u_raw
    if u < u_min:
        u = u_min
    elif u > u_max:
        u = u_max
    out[m, 0] = n * h
    out[m, 1] = x1
    out[m, 2] = x2
    out[m, 3] = x3
    out[m, 4] = xc
    out[m, 5] = u_raw
    out[m, 6] = u
    return m + 1, STATUS_OK, n * h


@njit(cache=True)
def _argmin_abs_p(th1h, th2h, x3s, grid_power, grid_isq):
    # descending scan: ties resolve to the larger cell voltage
    c = th2h * x3s * x3s
    best = np.inf
    bj = grid_power.shape[0] - 1
    for j in range(grid_power.shape[0] - 1, -1, -1):
        val = abs(grid_power[j] - th1h * grid_isq[j] - c)
        if val < best:
            best = val
            bj = j
    return bj


@njit(cache=True)
def run_adaptive(
    h, n, decim, refresh,
    c_fc, l_ind, c_out, th1, th2_init,
    ld_steps, ld_th2,
    k_p, k_i, u_min, u_max,
    sp_steps, sp_x3s,
    k1, k2, th2_floor,
    x1_0, x2_0, x3_0, xc_0, z1_0, z2_0,
    tab, v_lo, inv_hv,
    grid_x1, grid_i, grid_power, grid_isq,
    out,
):
    x1, x2, x3, xc = x1_0, x2_0, x3_0, xc_0
    z1, z2 = z1_0, z2_0
    th2 = th2_init
    x3s = sp_x3s[0]
    i_cfc, i_l, i_c = 1.0 / c_fc, 1.0 / l_ind, 1.0 / c_out
    hh, h6 = 0.5 * h, h / 6.0
    hk1 = 0.5 * k1 * l_ind
    hk2 = 0.5 * k2 * c_out
    ntab = float(tab.shape[0] - 1)
    ld_ptr = 0
    sp_ptr = 0
    m = 0
    x1h = grid_x1[grid_x1.shape[0] - 1]
    x2h = grid_i[grid_x1.shape[0] - 1]
    for k in range(n):
        while ld_ptr < ld_steps.shape[0] and ld_steps[ld_ptr] == k:
            th2 = ld_th2[ld_ptr]
            ld_ptr += 1
        while sp_ptr < sp_steps.shape[0] and sp_steps[sp_ptr] == k:
            x3s = sp_x3s[sp_ptr]
            sp_ptr += 1
        th1h = z1 - hk1 * x2 * x2
        th2h = z2 - hk2 * x3 * x3
        if k % refresh == 0:
            th2h_f = th2h if th2h > th2_floor else th2_floor
            bj = _argmin_abs_p(th1h, th2h_f, x3s, grid_power, grid_isq)
            x1h = grid_x1[bj]
            x2h = grid_i[bj]
        yn = x2h * x3 - x3s * x2
        u_raw = -k_p * yn - k_i * xc
        u = u_raw
        if u < u_min:
            u = u_min
        elif u > u_max:
            u = u_max
        if k % decim == 0:
            out[m, 0] = k * h
            out[m, 1] = x1
            out[m, 2] = x2
            out[m, 3] = x3
            out[m, 4] = xc
            out[m, 5] = u_raw
            out[m, 6] = u
            out[m, 7] = th1h
            out[m, 8] = th2h
            out[m, 9] = x1h
            out[m, 10] = x2h
            m += 1
        # RK4 over (x1, x2, x3, xc, z1, z2); u and the estimate held
        j = (x1 - v_lo) * inv_hv
        if not (0.0 <= j < ntab):
            return m, STATUS_RANGE, k * h
        ji = int(j)
        ifc = tab[ji] + (j - ji) * (tab[ji + 1] - tab[ji])
        a1 = (ifc - x2) * i_cfc
        b1 = (x1 - th1 * x2 - u * x3) * i_l
        c1 = (u * x2 - th2 * x3) * i_c
        d1 = x2h * x3 - x3s * x2
        e1 = k1 * x2 * (x1 - z1 * x2 + hk1 * x2 * x2 * x2 - x3 * u)
        f1 = k2 * x3 * (x2 * u - z2 * x3 + hk2 * x3 * x3 * x3)
        y1 = x1 + hh * a1
        y2 = x2 + hh * b1
        y3 = x3 + hh * c1
        w1 = z1 + hh * e1
        w2 = z2 + hh * f1
        j = (y1 - v_lo) * inv_hv
        if not (0.0 <= j < ntab):
            return m, STATUS_RANGE, k * h
        ji = int(j)
        ifc = tab[ji] + (j - ji) * (tab[ji + 1] - tab[ji])
        a2 = (ifc - y2) * i_cfc
        b2 = (y1 - th1 * y2 - u * y3) * i_l
        c2 = (u * y2 - th2 * y3) * i_c
        d2 = x2h * y3 - x3s * y2
        e2 = k1 * y2 * (y1 - w1 * y2 + hk1 * y2 * y2 * y2 - y3 * u)
        f2 = k2 * y3 * (y2 * u - w2 * y3 + hk2 * y3 * y3 * y3)
        y1 = x1 + hh * a2
        y2 = x2 + hh * b2
        y3 = x3 + hh * c2
        w1 = z1 + hh * e2
        w2 = z2 + hh * f2
        j = (y1 - v_lo) * inv_hv
        if not (0.0 <= j < ntab):
            return m, STATUS_RANGE, k * h
        ji = int(j)
        ifc = tab[ji] + (j - ji) * (tab[ji + 1] - tab[ji])
        a3 = (ifc - y2) * i_cfc
        b3 = (y1 - th1 * y2 - u * y3) * i_l
        c3 = (u * y2 - th2 * y3) * i_c
        d3 = x2h * y3 - x3s * y2
        e3 = k1 * y2 * (y1 - w1 * y2 + hk1 * y2 * y2 * y2 - y3 * u)
        f3 = k2 * y3 * (y2 * u - w2 * y3 + hk2 * y3 * y3 * y3)
        y1 = x1 + h * a3
        y2 = x2 + h * b3
        y3 = x3 + h * c3
        w1 = z1 + h * e3
        w2 = z2 + h * f3
        j = (y1 - v_lo) * inv_hv
        if not (0.0 <= j < ntab):
            return m, STATUS_RANGE, k * h
        ji = int(j)
        ifc = tab[ji] + (j - ji) * (tab[ji + 1] - tab[ji])
        a4 = (ifc - y2) * i_cfc
        b4 = (y1 - th1 * y2 - u * y3) * i_l
        c4 = (u * y2 - th2 * y3) * i_c
        d4 = x2h * y3 - x3s * y2
        e4 = k1 * y2 * (y1 - w1 * y2 + hk1 * y2 * y2 * y2 - y3 * u)
        f4 = k2 * y3 * (y2 * u - w2 * y3 + hk2 * y3 * y3 * y3)
        x1 += h6 * (a1 + 2.0 * (a2 + a3) + a4)
        x2 += h6 * (b1 + 2.0 * (b2 + b3) + b4)
        x3 += h6 * (c1 + 2.0 * (c2 + c3) + c4)
        xc += h6 * (d1 + 2.0 * (d2 + d3) + d4)
        z1 += h6 * (e1 + 2.0 * (e2 + e3) + e4)
        z2 += h6 * (f1 + 2.0 * (f2 + f3) + f4)
    th1h = z1 - hk1 * x2 * x2
    th2h = z2 - hk2 * x3 * x3
    yn = x2h * x3 - x3s * x2
    u_raw = -k_p * yn - k_i * xc
    u = u_raw
    if u < u_min:
        u = u_min
    elif u > u_max:
        u = u_max
    out[m, 0] = n * h
    out[m, 1] = x1
    out[m, 2] = x2
    out[m, 3] = x3
    out[m, 4] = xc
    out[m, 5] = u_raw
    out[m, 6] = u
    out[m, 7] = th1h
    out[m, 8] = th2h
    out[m, 9] = x1h
    out[m, 10] = x2h
    return m + 1, STATUS_OK, n * h
