# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled closed-loop simulation kernel.

Twin of _loop.py: every floating-point expression keeps the operand
grouping of the pure-Python reference, and the build disables FP
contraction, so both backends produce bit-identical traces. Keep the two
files in lockstep when editing.
"""

import numpy as np

from libc.math cimport cos, fabs, isfinite, sin

DEF SIGN_DEAD_BAND = 1e-8  # keep equal to smc.SIGN_DEAD_BAND and _loop
DEF MAX_TERMS = 64


cdef inline double _trap(double a, double b, double c, double d, double x) noexcept:
    if x < a or x > d:
        return 0.0
    if b <= x and x <= c:
        return 1.0
    if x < b:
        return (x - a) / (b - a)
    return (d - x) / (d - c)


cdef inline double _centroid_crisp(const double[::1] gx, const double[::1] agg,
                                   Py_ssize_t n, double mid) noexcept:
    cdef Py_ssize_t m = (n - 1) // 2
    cdef double num = 0.0
    cdef double den = 0.0
    cdef Py_ssize_t i
    for i in range(m):
        num += gx[i] * agg[i] + gx[n - 1 - i] * agg[n - 1 - i]
    num += gx[m] * agg[m]
    for i in range(n):
        den += agg[i]
    if den == 0.0:
        return mid
    return num / den


def run_closed_loop(plan):
    """Fill plan.out with the trace; return -1 or the failing step index."""
    cdef Py_ssize_t n_steps = plan.n_steps
    cdef double dt = plan.dt
    cdef Py_ssize_t cp = plan.control_period
    kind = plan.kind

    cdef double x1 = plan.x1_0
    cdef double x2 = plan.x2_0
    cdef double x3 = plan.x3_0
    cdef double eq_angle = plan.eq_angle
    cdef double eq_u = plan.eq_u
    cdef double s2d = plan.s2d
    cdef double ped = plan.ped

    cdef double ca1 = plan.ca1
    cdef double ca2 = plan.ca2
    cdef double ca3 = plan.ca3
    cdef double ca5 = plan.ca5
    cdef double ca6 = plan.ca6

    cdef double k1 = plan.k1
    cdef double k2 = plan.k2
    cdef double eta_fix = plan.eta
    cdef double phi = plan.phi
    cdef double eps_sin = plan.eps_sin
    cdef double u_max = plan.u_max

    cdef const long long[::1] seg_end = plan.seg_end
    cdef const double[:, ::1] seg_coeffs = plan.seg_coeffs
    cdef const double[:, ::1] seg_pe = plan.seg_pe
    cdef Py_ssize_t n_seg = seg_end.shape[0]
    cdef double xd_total = plan.xd_total

    cdef bint cpss_on = kind == "cpss"
    cdef bint fpss_on = kind == "fpss"
    cdef bint nopss_on = kind == "nopss"
    cdef bint fsmc_on = kind == "fsmcpss"

    # cpss chain
    cdef double c00 = 0, c01 = 0, c02 = 0, c10 = 0, c11 = 0, c12 = 0
    cdef double c20 = 0, c21 = 0, c22 = 0, c30 = 0, c31 = 0, c32 = 0
    cdef double cpss_K = 0, v_lo = 0, v_hi = 0
    cdef double xp0 = 0, xp1 = 0, xp2 = 0, xp3 = 0
    cdef double yp0 = 0, yp1 = 0, yp2 = 0, yp3 = 0
    if cpss_on:
        cc = plan.cpss_coeffs
        c00 = cc[0, 0]; c01 = cc[0, 1]; c02 = cc[0, 2]
        c10 = cc[1, 0]; c11 = cc[1, 1]; c12 = cc[1, 2]
        c20 = cc[2, 0]; c21 = cc[2, 1]; c22 = cc[2, 2]
        c30 = cc[3, 0]; c31 = cc[3, 1]; c32 = cc[3, 2]
        cpss_K = plan.cpss_K; v_lo = plan.cpss_vmin; v_hi = plan.cpss_vmax

    # fpss fuzzy tables
    cdef double kw = 0, ka = 0, kout = 0, accel_alpha = 0
    cdef double omega_prev = 0.0, accel = 0.0
    cdef bint primed = False
    cdef const double[:, ::1] f2_in0 = None
    cdef const double[:, ::1] f2_in1 = None
    cdef const int[:, ::1] f2_ante = None
    cdef const int[::1] f2_cons = None
    cdef const double[::1] f2_grid = None
    cdef const double[:, ::1] f2_out = None
    cdef double f2_lo0 = 0, f2_hi0 = 0, f2_lo1 = 0, f2_hi1 = 0, f2_mid = 0
    cdef Py_ssize_t f2_nt = 0, f2_nr = 0, f2_ng = 0
    if fpss_on:
        f2 = plan.fuzzy2
        kw = plan.fpss_kw; ka = plan.fpss_ka; kout = plan.fpss_kout
        accel_alpha = plan.fpss_accel_alpha
        f2_in0 = f2.in_mfs[0]; f2_in1 = f2.in_mfs[1]
        f2_lo0 = f2.in_lo[0]; f2_hi0 = f2.in_hi[0]
        f2_lo1 = f2.in_lo[1]; f2_hi1 = f2.in_hi[1]
        f2_ante = f2.rule_ante; f2_cons = f2.rule_cons
        f2_nt = f2.n_out_terms; f2_nr = f2_cons.shape[0]
        f2_grid = f2.grid_x; f2_out = f2.out_levels
        f2_ng = f2_grid.shape[0]
        f2_mid = f2.mid
        if f2_nt > MAX_TERMS or f2_in0.shape[0] > MAX_TERMS or f2_in1.shape[0] > MAX_TERMS:
            raise ValueError("too many fuzzy terms for the compiled kernel")

    # fsmc fuzzy tables
    cdef double s_max = 0, eta_min = 0, eta_max = 0
    cdef const double[:, ::1] f1_in = None
    cdef const int[::1] f1_cons = None
    cdef const double[::1] f1_grid = None
    cdef const double[:, ::1] f1_out = None
    cdef double f1_lo = 0, f1_hi = 0, f1_mid = 0
    cdef Py_ssize_t f1_nt = 0, f1_nr = 0, f1_ng = 0
    if fsmc_on:
        f1 = plan.fuzzy1
        s_max = plan.fsmc_s_max; eta_min = plan.fsmc_eta_min; eta_max = plan.fsmc_eta_max
        f1_in = f1.in_mfs[0]
        f1_lo = f1.in_lo[0]; f1_hi = f1.in_hi[0]
        f1_cons = f1.rule_cons
        f1_nt = f1.n_out_terms; f1_nr = f1_cons.shape[0]
        f1_grid = f1.grid_x; f1_out = f1.out_levels
        f1_ng = f1_grid.shape[0]
        f1_mid = f1.mid
        if f1_nt > MAX_TERMS or f1_in.shape[0] > MAX_TERMS:
            raise ValueError("too many fuzzy terms for the compiled kernel")

    cdef double[:, ::1] out = plan.out
    agg_buf = np.empty(max(f2_ng, f1_ng, 1), dtype=np.float64)
    cdef double[::1] agg = agg_buf

    cdef double deg0[MAX_TERMS]
    cdef double deg1[MAX_TERMS]
    cdef double levels[MAX_TERMS]

    cdef double u = eq_u
    cdef double v_stab = 0.0
    cdef double eta_cur = 0.0

    cdef Py_ssize_t seg = 0
    cdef double b1 = seg_coeffs[0, 0], b2 = seg_coeffs[0, 1], b3 = seg_coeffs[0, 2]
    cdef double b4 = seg_coeffs[0, 3], b5 = seg_coeffs[0, 4], b6 = seg_coeffs[0, 5]
    cdef double ke = seg_pe[0, 0], kc = seg_pe[0, 1], vs = seg_pe[0, 2]

    cdef double dt_c = cp * dt

    cdef Py_ssize_t i, r, gi, ti
    cdef double t, s1, c1, z1, z2, z3, S
    cdef double vv, y0, y1, y2, y3, raw, w_in, a_in, sn, crisp
    cdef double w, s1c, gain, drift, sw, u_dev, best, lv, tab, d1, srow
    cdef double e_q, p_e
    cdef double k1x1, k1x2, k1x3, k2x1, k2x2, k2x3
    cdef double k3x1, k3x2, k3x3, k4x1, k4x2, k4x3
    cdef double a1_, a2_, a3_, sa, h2, d6
    cdef bint clamped
    cdef Py_ssize_t ci_

    for i in range(n_steps + 1):
        t = i * dt
        while seg < n_seg - 1 and i >= seg_end[seg]:
            seg += 1
            b1 = seg_coeffs[seg, 0]; b2 = seg_coeffs[seg, 1]; b3 = seg_coeffs[seg, 2]
            b4 = seg_coeffs[seg, 3]; b5 = seg_coeffs[seg, 4]; b6 = seg_coeffs[seg, 5]
            ke = seg_pe[seg, 0]; kc = seg_pe[seg, 1]; vs = seg_pe[seg, 2]

        s1 = sin(x1)
        c1 = cos(x1)
        z1 = x1 - eq_angle
        z2 = x2
        z3 = ca1 * x2 - ca2 * (x3 * s1 - ped) + ca3 * (sin(2.0 * x1) - s2d)
        S = z3 + k1 * z2 + k2 * z1

        if i % cp == 0:
            if nopss_on:
                u = eq_u
                v_stab = 0.0
            elif cpss_on:
                vv = x2
                y0 = c00 * vv + c01 * xp0 + c02 * yp0
                xp0 = vv; yp0 = y0
                vv = cpss_K * y0
                y1 = c10 * vv + c11 * xp1 + c12 * yp1
                xp1 = vv; yp1 = y1
                y2 = c20 * y1 + c21 * xp2 + c22 * yp2
                xp2 = y1; yp2 = y2
                y3 = c30 * y2 + c31 * xp3 + c32 * yp3
                xp3 = y2; yp3 = y3
                vv = y3
                if vv > v_hi:
                    vv = v_hi
                elif vv < v_lo:
                    vv = v_lo
                v_stab = vv
                u = eq_u + v_stab
            elif fpss_on:
                raw = (x2 - omega_prev) / dt_c if primed else 0.0
                omega_prev = x2
                primed = True
                accel = accel + accel_alpha * (raw - accel)
                w_in = kw * x2
                a_in = ka * accel
                if w_in < f2_lo0:
                    w_in = f2_lo0
                elif w_in > f2_hi0:
                    w_in = f2_hi0
                if a_in < f2_lo1:
                    a_in = f2_lo1
                elif a_in > f2_hi1:
                    a_in = f2_hi1
                for ti in range(f2_in0.shape[0]):
                    deg0[ti] = _trap(f2_in0[ti, 0], f2_in0[ti, 1], f2_in0[ti, 2], f2_in0[ti, 3], w_in)
                for ti in range(f2_in1.shape[0]):
                    deg1[ti] = _trap(f2_in1[ti, 0], f2_in1[ti, 1], f2_in1[ti, 2], f2_in1[ti, 3], a_in)
                for ti in range(f2_nt):
                    levels[ti] = 0.0
                for r in range(f2_nr):
                    srow = deg0[f2_ante[r, 0]]
                    d1 = deg1[f2_ante[r, 1]]
                    if d1 < srow:
                        srow = d1
                    ci_ = f2_cons[r]
                    if srow > levels[ci_]:
                        levels[ci_] = srow
                for gi in range(f2_ng):
                    best = 0.0
                    for ti in range(f2_nt):
                        lv = levels[ti]
                        tab = f2_out[ti, gi]
                        if tab < lv:
                            lv = tab
                        if lv > best:
                            best = lv
                    agg[gi] = best
                crisp = _centroid_crisp(f2_grid, agg, f2_ng, f2_mid)
                vv = kout * crisp
                if vv > kout:
                    vv = kout
                elif vv < -kout:
                    vv = -kout
                v_stab = vv
                u = eq_u + v_stab
            else:
                if fsmc_on:
                    sn = fabs(S) / s_max
                    if sn > 1.0:
                        sn = 1.0
                    if sn < f1_lo:
                        sn = f1_lo
                    elif sn > f1_hi:
                        sn = f1_hi
                    for ti in range(f1_in.shape[0]):
                        deg0[ti] = _trap(f1_in[ti, 0], f1_in[ti, 1], f1_in[ti, 2], f1_in[ti, 3], sn)
                    for ti in range(f1_nt):
                        levels[ti] = 0.0
                    for r in range(f1_nr):
                        srow = deg0[r]
                        ci_ = f1_cons[r]
                        if srow > levels[ci_]:
                            levels[ci_] = srow
                    for gi in range(f1_ng):
                        best = 0.0
                        for ti in range(f1_nt):
                            lv = levels[ti]
                            tab = f1_out[ti, gi]
                            if tab < lv:
                                lv = tab
                            if lv > best:
                                best = lv
                        agg[gi] = best
                    crisp = _centroid_crisp(f1_grid, agg, f1_ng, f1_mid)
                    eta_cur = eta_min + (eta_max - eta_min) * crisp
                else:
                    eta_cur = eta_fix
                w = ca5 * x3 + ca6 * c1
                clamped = fabs(s1) < eps_sin
                s1c = s1
                if clamped:
                    s1c = eps_sin if s1 >= 0.0 else -eps_sin
                gain = -(ca2 * s1c)
                drift = ca1 * z3 + gain * w - ca2 * x2 * x3 * c1 + 2.0 * ca3 * x2 * cos(2.0 * x1)
                if phi > 0.0:
                    sw = S / phi
                    if sw > 1.0:
                        sw = 1.0
                    elif sw < -1.0:
                        sw = -1.0
                else:
                    if S > SIGN_DEAD_BAND:
                        sw = 1.0
                    elif S < -SIGN_DEAD_BAND:
                        sw = -1.0
                    else:
                        sw = 0.0
                u_dev = (-(drift + gain * eq_u) - k1 * z3 - k2 * z2 - eta_cur * sw) / gain
                if u_dev > u_max:
                    u_dev = u_max
                elif u_dev < -u_max:
                    u_dev = -u_max
                v_stab = u_dev
                u = eq_u + u_dev

        e_q = ke * x3 - kc * c1
        p_e = vs * e_q * s1 / xd_total
        out[i, 0] = t
        out[i, 1] = x1
        out[i, 2] = x2
        out[i, 3] = x3
        out[i, 4] = u
        out[i, 5] = v_stab
        out[i, 6] = S
        out[i, 7] = eta_cur
        out[i, 8] = p_e
        out[i, 9] = z1

        if i == n_steps:
            break

        k1x1 = x2
        k1x2 = b1 * x2 - b2 * x3 * s1 + b3 * sin(2.0 * x1) + b4
        k1x3 = b5 * x3 + b6 * c1 + u

        h2 = 0.5 * dt
        a1_ = x1 + h2 * k1x1
        a2_ = x2 + h2 * k1x2
        a3_ = x3 + h2 * k1x3
        sa = sin(a1_)
        k2x1 = a2_
        k2x2 = b1 * a2_ - b2 * a3_ * sa + b3 * sin(2.0 * a1_) + b4
        k2x3 = b5 * a3_ + b6 * cos(a1_) + u

        a1_ = x1 + h2 * k2x1
        a2_ = x2 + h2 * k2x2
        a3_ = x3 + h2 * k2x3
        sa = sin(a1_)
        k3x1 = a2_
        k3x2 = b1 * a2_ - b2 * a3_ * sa + b3 * sin(2.0 * a1_) + b4
        k3x3 = b5 * a3_ + b6 * cos(a1_) + u

        a1_ = x1 + dt * k3x1
        a2_ = x2 + dt * k3x2
        a3_ = x3 + dt * k3x3
        sa = sin(a1_)
        k4x1 = a2_
        k4x2 = b1 * a2_ - b2 * a3_ * sa + b3 * sin(2.0 * a1_) + b4
        k4x3 = b5 * a3_ + b6 * cos(a1_) + u

        d6 = dt / 6.0
        x1 = x1 + d6 * (k1x1 + 2.0 * k2x1 + 2.0 * k3x1 + k4x1)
        x2 = x2 + d6 * (k1x2 + 2.0 * k2x2 + 2.0 * k3x2 + k4x2)
        x3 = x3 + d6 * (k1x3 + 2.0 * k2x3 + 2.0 * k3x3 + k4x3)

        if not (isfinite(x1) and isfinite(x2) and isfinite(x3)):
            return i + 1
    return -1
