"""Pure-Python closed-loop simulation kernel (fallback backend).

This file and _speedups.pyx are twins: every floating-point expression here
appears in the compiled kernel with the same operand grouping, and the
extension is built with FP contraction disabled, so the two backends
produce bit-identical traces. Keep them in lockstep when editing.

The plan object (engine.LoopPlan) carries everything as plain scalars and
arrays; this module never touches the dataclass layer.
"""

from __future__ import annotations

import math

import numpy as np

SIGN_DEAD_BAND = 1e-8  # keep equal to smc.SIGN_DEAD_BAND and _speedups


def _centroid(grid_x, grid_list, agg) -> float:
    n = len(grid_list)
    m = (n - 1) // 2
    pair = grid_x[:m] * agg[:m] + grid_x[n - 1:n - 1 - m:-1] * agg[n - 1:n - 1 - m:-1]
    num = 0.0
    for v in pair.tolist():
        num += v
    num += grid_list[m] * agg[m]
    den = 0.0
    for v in agg.tolist():
        den += v
    return num, den


def _trap(a, b, c, d, x) -> float:
    if x < a or x > d:
        return 0.0
    if b <= x <= c:
        return 1.0
    if x < b:
        return (x - a) / (b - a)
    return (d - x) / (d - c)


def run_closed_loop(plan) -> int:
    """Fill plan.out with the trace; return -1 or the failing step index."""
    n_steps = plan.n_steps
    dt = plan.dt
    cp = plan.control_period
    kind = plan.kind

    x1 = plan.x1_0
    x2 = plan.x2_0
    x3 = plan.x3_0
    eq_angle = plan.eq_angle
    eq_u = plan.eq_u
    s2d = plan.s2d
    ped = plan.ped

    ca1, ca2, ca3 = plan.ca1, plan.ca2, plan.ca3
    ca5, ca6 = plan.ca5, plan.ca6

    k1, k2 = plan.k1, plan.k2
    eta_fix, phi = plan.eta, plan.phi
    eps_sin, u_max = plan.eps_sin, plan.u_max

    seg_end = plan.seg_end
    seg_coeffs = plan.seg_coeffs
    seg_pe = plan.seg_pe
    n_seg = len(seg_end)
    xd_total = plan.xd_total

    cpss_on = kind == "cpss"
    fpss_on = kind == "fpss"
    smc_on = kind in ("smcpss", "fsmcpss")
    fsmc_on = kind == "fsmcpss"

    if cpss_on:
        cc = plan.cpss_coeffs  # (4, 3)
        c00, c01, c02 = cc[0]
        c10, c11, c12 = cc[1]
        c20, c21, c22 = cc[2]
        c30, c31, c32 = cc[3]
        cpss_K, v_lo, v_hi = plan.cpss_K, plan.cpss_vmin, plan.cpss_vmax
        xp0 = xp1 = xp2 = xp3 = 0.0
        yp0 = yp1 = yp2 = yp3 = 0.0

    if fpss_on:
        f2 = plan.fuzzy2
        kw, ka, kout = plan.fpss_kw, plan.fpss_ka, plan.fpss_kout
        accel_alpha = plan.fpss_accel_alpha
        omega_prev = 0.0
        accel = 0.0
        primed = False
        f2_in0 = [tuple(row) for row in f2.in_mfs[0].tolist()]
        f2_in1 = [tuple(row) for row in f2.in_mfs[1].tolist()]
        f2_lo0, f2_hi0 = f2.in_lo[0], f2.in_hi[0]
        f2_lo1, f2_hi1 = f2.in_lo[1], f2.in_hi[1]
        f2_ante = f2.rule_ante.tolist()
        f2_cons = f2.rule_cons.tolist()
        f2_nt = f2.n_out_terms
        f2_grid = f2.grid_x
        f2_grid_list = f2_grid.tolist()
        f2_out = f2.out_levels
        f2_mid = f2.mid

    if fsmc_on:
        f1 = plan.fuzzy1
        s_max, eta_min, eta_max = plan.fsmc_s_max, plan.fsmc_eta_min, plan.fsmc_eta_max
        f1_in = [tuple(row) for row in f1.in_mfs[0].tolist()]
        f1_lo, f1_hi = f1.in_lo[0], f1.in_hi[0]
        f1_cons = f1.rule_cons.tolist()
        f1_nt = f1.n_out_terms
        f1_grid = f1.grid_x
        f1_grid_list = f1_grid.tolist()
        f1_out = f1.out_levels
        f1_mid = f1.mid

    out = plan.out
    u = eq_u
    v_stab = 0.0
    eta_cur = 0.0

    seg = 0
    b1 = seg_coeffs[0, 0]; b2 = seg_coeffs[0, 1]; b3 = seg_coeffs[0, 2]
    b4 = seg_coeffs[0, 3]; b5 = seg_coeffs[0, 4]; b6 = seg_coeffs[0, 5]
    ke = seg_pe[0, 0]; kc = seg_pe[0, 1]; vs = seg_pe[0, 2]

    dt_c = cp * dt

    for i in range(n_steps + 1):
        t = i * dt
        while seg < n_seg - 1 and i >= seg_end[seg]:
            seg += 1
            b1 = seg_coeffs[seg, 0]; b2 = seg_coeffs[seg, 1]; b3 = seg_coeffs[seg, 2]
            b4 = seg_coeffs[seg, 3]; b5 = seg_coeffs[seg, 4]; b6 = seg_coeffs[seg, 5]
            ke = seg_pe[seg, 0]; kc = seg_pe[seg, 1]; vs = seg_pe[seg, 2]

        s1 = math.sin(x1)
        c1 = math.cos(x1)
        # surface diagnostic from the nominal model (deviation form)
        z1 = x1 - eq_angle
        z2 = x2
        z3 = ca1 * x2 - ca2 * (x3 * s1 - ped) + ca3 * (math.sin(2.0 * x1) - s2d)
        S = z3 + k1 * z2 + k2 * z1

        if i % cp == 0:
            if kind == "nopss":
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
                deg0 = [_trap(p[0], p[1], p[2], p[3], w_in) for p in f2_in0]
                deg1 = [_trap(p[0], p[1], p[2], p[3], a_in) for p in f2_in1]
                levels = [0.0] * f2_nt
                for r in range(len(f2_cons)):
                    srow = deg0[f2_ante[r][0]]
                    d1 = deg1[f2_ante[r][1]]
                    if d1 < srow:
                        srow = d1
                    ci_ = f2_cons[r]
                    if srow > levels[ci_]:
                        levels[ci_] = srow
                agg = np.maximum.reduce(np.minimum(np.array(levels)[:, None], f2_out))
                num, den = _centroid(f2_grid, f2_grid_list, agg)
                crisp = f2_mid if den == 0.0 else num / den
                vv = kout * crisp
                if vv > kout:
                    vv = kout
                elif vv < -kout:
                    vv = -kout
                v_stab = vv
                u = eq_u + v_stab
            else:
                # smc family
                if fsmc_on:
                    sn = abs(S) / s_max
                    if sn > 1.0:
                        sn = 1.0
                    if sn < f1_lo:
                        sn = f1_lo
                    elif sn > f1_hi:
                        sn = f1_hi
                    deg = [_trap(p[0], p[1], p[2], p[3], sn) for p in f1_in]
                    levels = [0.0] * f1_nt
                    for r in range(len(f1_cons)):
                        srow = deg[r]
                        ci_ = f1_cons[r]
                        if srow > levels[ci_]:
                            levels[ci_] = srow
                    agg = np.maximum.reduce(np.minimum(np.array(levels)[:, None], f1_out))
                    num, den = _centroid(f1_grid, f1_grid_list, agg)
                    crisp = f1_mid if den == 0.0 else num / den
                    eta_cur = eta_min + (eta_max - eta_min) * crisp
                else:
                    eta_cur = eta_fix
                w = ca5 * x3 + ca6 * c1
                clamped = abs(s1) < eps_sin
                s1c = s1
                if clamped:
                    s1c = eps_sin if s1 >= 0.0 else -eps_sin
                gain = -(ca2 * s1c)
                drift = ca1 * z3 + gain * w - ca2 * x2 * x3 * c1 + 2.0 * ca3 * x2 * math.cos(2.0 * x1)
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
        row = out[i]
        row[0] = t
        row[1] = x1
        row[2] = x2
        row[3] = x3
        row[4] = u
        row[5] = v_stab
        row[6] = S
        row[7] = eta_cur
        row[8] = p_e
        row[9] = z1

        if i == n_steps:
            break

        # rk4 with plant (segment) coefficients, u held
        k1x1 = x2
        k1x2 = b1 * x2 - b2 * x3 * s1 + b3 * math.sin(2.0 * x1) + b4
        k1x3 = b5 * x3 + b6 * c1 + u

        h2 = 0.5 * dt
        a1_ = x1 + h2 * k1x1
        a2_ = x2 + h2 * k1x2
        a3_ = x3 + h2 * k1x3
        sa = math.sin(a1_)
        k2x1 = a2_
        k2x2 = b1 * a2_ - b2 * a3_ * sa + b3 * math.sin(2.0 * a1_) + b4
        k2x3 = b5 * a3_ + b6 * math.cos(a1_) + u

        a1_ = x1 + h2 * k2x1
        a2_ = x2 + h2 * k2x2
        a3_ = x3 + h2 * k2x3
        sa = math.sin(a1_)
        k3x1 = a2_
        k3x2 = b1 * a2_ - b2 * a3_ * sa + b3 * math.sin(2.0 * a1_) + b4
        k3x3 = b5 * a3_ + b6 * math.cos(a1_) + u

        a1_ = x1 + dt * k3x1
        a2_ = x2 + dt * k3x2
        a3_ = x3 + dt * k3x3
        sa = math.sin(a1_)
        k4x1 = a2_
        k4x2 = b1 * a2_ - b2 * a3_ * sa + b3 * math.sin(2.0 * a1_) + b4
        k4x3 = b5 * a3_ + b6 * math.cos(a1_) + u

        d6 = dt / 6.0
        x1 = x1 + d6 * (k1x1 + 2.0 * k2x1 + 2.0 * k3x1 + k4x1)
        x2 = x2 + d6 * (k1x2 + 2.0 * k2x2 + 2.0 * k3x2 + k4x2)
        x3 = x3 + d6 * (k1x3 + 2.0 * k2x3 + 2.0 * k3x3 + k4x3)

        if not (math.isfinite(x1) and math.isfinite(x2) and math.isfinite(x3)):
            return i + 1
    return -1
