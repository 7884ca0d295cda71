# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Mirrors ``_pykernels.py`` operation for operation."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, NAN

cnp.import_array()

BACKEND = "cython"


class SimulationError(RuntimeError):
    pass


cdef inline double _interp(double x, const double[::1] xp, const double[::1] fp, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t lo, hi, mid
    cdef double slope
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
    const double[::1] t,
    const double[::1] current,
    const double[::1] v_max,
    const double[::1] t_min,
    const double[::1] t_max,
    const cnp.int64_t[::1] mode,
    double soc0,
    double capacity_ah,
    double eta,
    bint snap,
    double v_100,
    double gamma,
    double t_debounce,
    double denom_epsilon,
    map_ac,
    map_dc,
    const double[::1] ac_rates,
    const double[::1] ac_alphas,
    const double[::1] dc_rates,
    const double[::1] dc_alphas,
    double rate_capacity_ah,
):
    cdef Py_ssize_t n = t.shape[0]
    cdef Py_ssize_t n_ac = ac_rates.shape[0]
    cdef Py_ssize_t n_dc = dc_rates.shape[0]
    cdef double a0 = map_ac[0], a1 = map_ac[1], a2 = map_ac[2]
    cdef double d0 = map_dc[0], d1 = map_dc[1], d2 = map_dc[2]

    out_b_arr = np.empty(n, dtype=np.float64)
    out_vb_arr = np.full(n, np.nan, dtype=np.float64)
    out_c_arr = np.empty(n, dtype=np.float64)
    out_act_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] out_b = out_b_arr
    cdef double[::1] out_vb = out_vb_arr
    cdef double[::1] out_c = out_c_arr
    cdef cnp.uint8_t[::1] out_act = out_act_arr

    cdef double denom_cap = 3600.0 * capacity_ah
    cdef double b = soc0
    cdef double above_since = 0.0
    cdef bint has_above = False
    cdef cnp.int64_t prev_mode = -1
    cdef bint was_active = False
    cdef double prev_v = 0.0
    cdef double prev_corr = 0.0
    cdef Py_ssize_t k
    cdef double cur, v, now, dt, gain, thr, d, vb, rate, alpha, corr
    cdef cnp.int64_t md
    cdef bint charging, active

    with nogil:
        for k in range(n):
            cur = current[k]
            v = v_max[k]
            md = mode[k]
            now = t[k]
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

            if not active:
                was_active = False
                out_c[k] = b
                continue
            out_act[k] = 1
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
            rate = fabs(cur) / rate_capacity_ah
            if md == 2:
                alpha = _interp(rate, dc_rates, dc_alphas, n_dc)
            else:
                alpha = _interp(rate, ac_rates, ac_alphas, n_ac)
            if vb > b:
                corr = alpha * vb + (1.0 - alpha) * b
            else:
                corr = b
            out_vb[k] = vb
            out_c[k] = corr
            prev_v = v
            prev_corr = corr

    return out_b_arr, out_vb_arr, out_c_arr, out_act_arr.astype(bool)


cdef double _solve_cv_current(
    double soc, double b0, double g, double k_soc, double i_max,
    const double[::1] ocv_soc, const double[::1] ocv_v, Py_ssize_t n_ocv,
) noexcept nogil:
    cdef Py_ssize_t j = 0
    cdef double m, i
    while j < n_ocv - 1 and ocv_soc[j + 1] <= soc:
        j += 1
    while True:
        if j >= n_ocv - 1:
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
    const double[::1] ocv_soc,
    const double[::1] ocv_v,
    double capacity_ah,
    double r0,
    double r1,
    double c1,
    double soc0,
    double v_rc0,
    double dt,
    const double[::1] band_upper,
    const double[::1] band_current,
    double cv_voltage,
    double cutoff_current,
    Py_ssize_t max_steps,
):
    cdef Py_ssize_t n_ocv = ocv_soc.shape[0]
    cdef Py_ssize_t n_band = band_current.shape[0]
    cdef double tau = r1 * c1
    cdef double a = exp(-dt / tau)
    cdef double g_rc = r1 * (1.0 - a)
    cdef double k_soc = 100.0 * dt / (3600.0 * capacity_ah)

    ts_arr = np.empty(max_steps + 1, dtype=np.float64)
    cs_arr = np.empty(max_steps + 1, dtype=np.float64)
    vs_arr = np.empty(max_steps + 1, dtype=np.float64)
    socs_arr = np.empty(max_steps + 1, dtype=np.float64)
    vrcs_arr = np.empty(max_steps + 1, dtype=np.float64)
    cvs_arr = np.zeros(max_steps + 1, dtype=np.uint8)
    cdef double[::1] ts = ts_arr
    cdef double[::1] cs = cs_arr
    cdef double[::1] vs = vs_arr
    cdef double[::1] socs = socs_arr
    cdef double[::1] vrcs = vrcs_arr
    cdef cnp.uint8_t[::1] cvs = cvs_arr

    cdef double soc = soc0
    cdef double vrc = v_rc0
    cdef double i_cmd, s_new, vrc_new, v_term
    cdef Py_ssize_t step = 0, j
    cdef bint done = False

    ts[0] = 0.0
    cs[0] = 0.0
    vs[0] = _interp(soc, ocv_soc, ocv_v, n_ocv) + vrc
    socs[0] = soc
    vrcs[0] = vrc

    with nogil:
        while step < max_steps:
            step += 1
            j = 0
            while j < n_band - 1 and soc >= band_upper[j]:
                j += 1
            i_cmd = band_current[j]
            s_new = soc + k_soc * i_cmd
            if s_new > 100.0:
                s_new = 100.0
            vrc_new = a * vrc + g_rc * i_cmd
            v_term = _interp(s_new, ocv_soc, ocv_v, n_ocv) + vrc_new + r0 * i_cmd
            cvs[step] = 0
            if v_term > cv_voltage:
                i_cmd = _solve_cv_current(soc, a * vrc - cv_voltage, g_rc + r0, k_soc, i_cmd, ocv_soc, ocv_v, n_ocv)
                s_new = soc + k_soc * i_cmd
                if s_new > 100.0:
                    s_new = 100.0
                vrc_new = a * vrc + g_rc * i_cmd
                v_term = cv_voltage
                cvs[step] = 1
            soc = s_new
            vrc = vrc_new
            ts[step] = step * dt
            cs[step] = i_cmd
            vs[step] = v_term
            socs[step] = soc
            vrcs[step] = vrc
            if v_term >= cv_voltage and i_cmd <= cutoff_current:
                done = True
                break

    if not done:
        raise SimulationError(f"charge did not complete within {max_steps} steps")
    n = step + 1
    return (
        ts_arr[:n].copy(),
        cs_arr[:n].copy(),
        vs_arr[:n].copy(),
        socs_arr[:n].copy(),
        vrcs_arr[:n].copy(),
        cvs_arr[:n].astype(bool),
    )
