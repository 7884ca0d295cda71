"""Pure-Python hot loops. Mirrors ``_kernels.pyx`` operation for operation.

Both backends must stay bit-compatible up to libm differences, so keep the
floating-point expression order here identical to the Cython source.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


class SimulationError(RuntimeError):
    pass


def _interp(x, xp, fp, n):
    if x <= xp[0]:
        return fp[0]
    if x >= xp[n - 1]:
        return fp[n - 1]
    lo = 0
    hi = n - 1
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xp[mid] <= x:
            lo = mid
        else:
            hi = mid
    slope = (fp[lo + 1] - fp[lo]) / (xp[lo + 1] - xp[lo])
    return slope * (x - xp[lo]) + fp[lo]


def run_pipeline(
    t,
    current,
    v_max,
    t_min,
    t_max,
    mode,
    soc0,
    capacity_ah,
    eta,
    snap,
    v_100,
    gamma,
    t_debounce,
    denom_epsilon,
    map_ac,
    map_dc,
    ac_rates,
    ac_alphas,
    dc_rates,
    dc_alphas,
    rate_capacity_ah,
):
    """Baseline, detector and corrector in lockstep over one profile.

    Returns ``(soc_baseline, soc_vb, soc_corr, active)``; ``soc_vb`` is nan
    where the strategy is inactive.
    """
    n = len(t)
    t = t.tolist()
    current = current.tolist()
    v_max = v_max.tolist()
    t_min = t_min.tolist()
    t_max = t_max.tolist()
    mode = mode.tolist()
    ac_r = ac_rates.tolist()
    ac_a = ac_alphas.tolist()
    dc_r = dc_rates.tolist()
    dc_a = dc_alphas.tolist()
    n_ac = len(ac_r)
    n_dc = len(dc_r)
    a0, a1, a2 = map_ac
    d0, d1, d2 = map_dc

    out_b = [0.0] * n
    out_vb = [math.nan] * n
    out_c = [0.0] * n
    out_act = [False] * n

    denom_cap = 3600.0 * capacity_ah
    b = soc0
    above_since = 0.0
    has_above = False
    prev_mode = -1
    was_active = False
    prev_v = 0.0
    prev_corr = 0.0

    for k in range(n):
        cur = current[k]
        v = v_max[k]
        md = mode[k]
        now = t[k]
        # baseline
        if k > 0:
            dt = now - t[k - 1]
            gain = eta if cur > 0 else 1.0
            b = b + 100.0 * gain * cur * dt / denom_cap
            if b > 100.0:
                b = 100.0
            elif b < 0.0:
                b = 0.0
        if snap and v >= v_100:
            b = 100.0
        out_b[k] = b

        # detector
        if md == 2:
            thr = d0 + d1 * t_min[k] + d2 * t_max[k]
            charging = True
        elif md == 1:
            thr = a0 + a1 * t_min[k] + a2 * t_max[k]
            charging = True
        else:
            thr = 0.0
            charging = False
        active = False
        if charging and v > thr:
            if not has_above or prev_mode != md:
                above_since = now
                has_above = True
            active = now - above_since >= t_debounce
        else:
            has_above = False
        prev_mode = md

        # corrector
        if not active:
            was_active = False
            out_c[k] = b
            continue
        out_act[k] = True
        if not was_active:
            was_active = True
            prev_v = v
            prev_corr = b
            out_vb[k] = b
            out_c[k] = b
            continue
        d = v_100 - prev_v
        if d <= denom_epsilon or prev_v >= v_100 - denom_epsilon:
            vb = 100.0
        else:
            vb = prev_corr + gamma * ((v - prev_v) / d) * (100.0 - prev_corr)
            if vb < 0.0:
                vb = 0.0
            if vb > 100.0:
                vb = 100.0
        rate = abs(cur) / rate_capacity_ah
        if md == 2:
            alpha = _interp(rate, dc_r, dc_a, n_dc)
        else:
            alpha = _interp(rate, ac_r, ac_a, n_ac)
        if vb > b:
            corr = alpha * vb + (1.0 - alpha) * b
        else:
            corr = b
        out_vb[k] = vb
        out_c[k] = corr
        prev_v = v
        prev_corr = corr

    return (
        np.array(out_b, dtype=np.float64),
        np.array(out_vb, dtype=np.float64),
        np.array(out_c, dtype=np.float64),
        np.array(out_act, dtype=bool),
    )


def _solve_cv_current(soc, b0, g, k_soc, i_max, ocv_soc, ocv_v, n_ocv):
    """Current that puts the terminal voltage exactly on the CV setpoint.

    Solves ``OCV(soc + k_soc*I) + g*I + b0 = 0`` on the piecewise-linear OCV,
    segment by segment; the OCV is held flat beyond the last knot.
    """
    j = 0
    while j < n_ocv - 1 and ocv_soc[j + 1] <= soc:
        j += 1
    while True:
        if j >= n_ocv - 1:
            # flat extension past the last knot
            i = -(ocv_v[n_ocv - 1] + b0) / g
            break
        m = (ocv_v[j + 1] - ocv_v[j]) / (ocv_soc[j + 1] - ocv_soc[j])
        i = -(ocv_v[j] + m * (soc - ocv_soc[j]) + b0) / (m * k_soc + g)
        if soc + k_soc * i <= ocv_soc[j + 1]:
            break
        j += 1
    if i < 0.0:
        i = 0.0
    if i > i_max:
        i = i_max
    return i


def simulate_charge(
    ocv_soc,
    ocv_v,
    capacity_ah,
    r0,
    r1,
    c1,
    soc0,
    v_rc0,
    dt,
    band_upper,
    band_current,
    cv_voltage,
    cutoff_current,
    max_steps,
):
    """Drive the 1-RC cell with a band-scheduled CC charger and a CV ceiling.

    Row 0 is the rest state at t = 0. Row k >= 1 holds the current applied
    over ``(t[k-1], t[k]]`` and the post-step terminal voltage and SOC.
    Returns ``(t, current, v_terminal, soc_true, v_rc, in_cv)``.
    """
    xs = ocv_soc.tolist()
    ys = ocv_v.tolist()
    n_ocv = len(xs)
    bu = band_upper.tolist()
    bc = band_current.tolist()
    n_band = len(bc)

    tau = r1 * c1
    a = math.exp(-dt / tau)
    g_rc = r1 * (1.0 - a)
    k_soc = 100.0 * dt / (3600.0 * capacity_ah)

    ts = [0.0]
    cs = [0.0]
    soc = soc0
    vrc = v_rc0
    vs = [_interp(soc, xs, ys, n_ocv) + vrc]
    socs = [soc]
    vrcs = [vrc]
    cvs = [False]

    step = 0
    while True:
        step += 1
        if step > max_steps:
            raise SimulationError(f"charge did not complete within {max_steps} steps")
        j = 0
        while j < n_band - 1 and soc >= bu[j]:
            j += 1
        i_cmd = bc[j]
        s_new = soc + k_soc * i_cmd
        if s_new > 100.0:
            s_new = 100.0
        vrc_new = a * vrc + g_rc * i_cmd
        v_term = _interp(s_new, xs, ys, n_ocv) + vrc_new + r0 * i_cmd
        in_cv = False
        if v_term > cv_voltage:
            i_cmd = _solve_cv_current(soc, a * vrc - cv_voltage, g_rc + r0, k_soc, i_cmd, xs, ys, n_ocv)
            s_new = soc + k_soc * i_cmd
            if s_new > 100.0:
                s_new = 100.0
            vrc_new = a * vrc + g_rc * i_cmd
            v_term = cv_voltage
            in_cv = True
        soc = s_new
        vrc = vrc_new
        ts.append(step * dt)
        cs.append(i_cmd)
        vs.append(v_term)
        socs.append(soc)
        vrcs.append(vrc)
        cvs.append(in_cv)
        if v_term >= cv_voltage and i_cmd <= cutoff_current:
            break

    return (
        np.array(ts, dtype=np.float64),
        np.array(cs, dtype=np.float64),
        np.array(vs, dtype=np.float64),
        np.array(socs, dtype=np.float64),
        np.array(vrcs, dtype=np.float64),
        np.array(cvs, dtype=bool),
    )
