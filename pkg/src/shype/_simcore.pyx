# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled integration kernel; same contract as simulator._kernel_py."""

import numpy as np

from libc.math cimport NAN, fabs, isfinite
from libc.math cimport exp as c_exp
from libc.math cimport log as c_log
from libc.math cimport pow as c_pow
from libc.math cimport sqrt as c_sqrt

END = 0
STOCH = 1
GUARD = 2
ERR_NONFINITE = 3
ERR_NEGATIVE_RATE = 4

DEF STACK_CAP = 64
DEF ATOM_CAP = 256
DEF BSTACK_CAP = 32
DEF MAX_BISECT = 200


cdef double _ev(const int[:, ::1] code, int lo, int hi,
                const double[::1] consts, const double[::1] x,
                double* stack) noexcept nogil:
    cdef int i, sp = 0, op, arg
    cdef double v
    for i in range(lo, hi):
        op = code[i, 0]
        arg = code[i, 1]
        if op == 0:
            stack[sp] = consts[arg]
            sp += 1
        elif op == 1:
            stack[sp] = x[arg]
            sp += 1
        elif op == 2:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] + stack[sp]
        elif op == 3:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] - stack[sp]
        elif op == 4:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] * stack[sp]
        elif op == 5:
            sp -= 1
            if stack[sp] == 0.0:
                stack[sp - 1] = NAN
            else:
                stack[sp - 1] = stack[sp - 1] / stack[sp]
        elif op == 6:
            sp -= 1
            if stack[sp] < stack[sp - 1]:
                stack[sp - 1] = stack[sp]
        elif op == 7:
            sp -= 1
            if stack[sp] > stack[sp - 1]:
                stack[sp - 1] = stack[sp]
        elif op == 8:
            v = stack[sp - 1]
            stack[sp - 1] = c_sqrt(v) if v >= 0.0 else NAN
        elif op == 9:
            v = stack[sp - 1]
            stack[sp - 1] = c_log(v) if v > 0.0 else NAN
        elif op == 10:
            v = stack[sp - 1]
            if v > 700.0:
                v = 700.0
            stack[sp - 1] = c_exp(v)
        elif op == 11:
            sp -= 1
            stack[sp - 1] = c_pow(stack[sp - 1], stack[sp])
    return stack[sp - 1]


cdef void _deriv(const int[:, ::1] ode_code, const int[::1] ode_off,
                 const double[::1] consts, const double[::1] x,
                 double[::1] out, double* stack) noexcept nogil:
    cdef int v
    for v in range(out.shape[0]):
        out[v] = _ev(ode_code, ode_off[v], ode_off[v + 1], consts, x, stack)


cdef void _rk4(const int[:, ::1] ode_code, const int[::1] ode_off,
               const double[::1] consts, const double[::1] x0, double h,
               double[::1] out, double[::1] k1, double[::1] k2,
               double[::1] k3, double[::1] k4, double[::1] tmp,
               double* stack) noexcept nogil:
    cdef int i, n = x0.shape[0]
    _deriv(ode_code, ode_off, consts, x0, k1, stack)
    for i in range(n):
        tmp[i] = x0[i] + 0.5 * h * k1[i]
    _deriv(ode_code, ode_off, consts, tmp, k2, stack)
    for i in range(n):
        tmp[i] = x0[i] + 0.5 * h * k2[i]
    _deriv(ode_code, ode_off, consts, tmp, k3, stack)
    for i in range(n):
        tmp[i] = x0[i] + h * k3[i]
    _deriv(ode_code, ode_off, consts, tmp, k4, stack)
    for i in range(n):
        out[i] = x0[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i]
                                      + k4[i])


cdef double _total_rate(const int[:, ::1] rate_code, const int[::1] rate_off,
                        const double[::1] consts, const double[::1] x,
                        double* stack) noexcept nogil:
    cdef int i
    cdef double total = 0.0, r
    for i in range(rate_off.shape[0] - 1):
        r = _ev(rate_code, rate_off[i], rate_off[i + 1], consts, x, stack)
        if r < 0.0:
            return -1.0
        total += r
    return total


cdef long _mask_at(const int[:, ::1] atom_code, const int[::1] atom_off,
                   const signed char[::1] atom_kind,
                   const int[:, ::1] guard_code, const int[::1] guard_off,
                   const double[::1] consts,
                   const signed char[::1] entry_sign, const double[::1] x,
                   double* stack) noexcept nogil:
    cdef int i, g, sp, op, arg, sign
    cdef double s
    cdef long mask = 0
    cdef signed char sat[ATOM_CAP]
    cdef signed char bstack[BSTACK_CAP]
    for i in range(atom_off.shape[0] - 1):
        s = _ev(atom_code, atom_off[i], atom_off[i + 1], consts, x, stack)
        if atom_kind[i] == 0:
            sat[i] = 1 if s <= 0.0 else 0
        else:
            sign = 0 if s == 0.0 else (1 if s > 0.0 else -1)
            sat[i] = 1 if (sign == 0 or sign != entry_sign[i]) else 0
    for g in range(guard_off.shape[0] - 1):
        sp = 0
        for i in range(guard_off[g], guard_off[g + 1]):
            op = guard_code[i, 0]
            arg = guard_code[i, 1]
            if op == 0:
                bstack[sp] = sat[arg]
                sp += 1
            elif op == 1:
                sp -= 1
                bstack[sp - 1] = bstack[sp - 1] and bstack[sp]
            elif op == 2:
                sp -= 1
                bstack[sp - 1] = bstack[sp - 1] or bstack[sp]
            elif op == 3:
                bstack[sp] = 1
                sp += 1
            else:
                bstack[sp] = 0
                sp += 1
        if sp > 0 and bstack[sp - 1]:
            mask |= (<long> 1) << g
    return mask


def advance(ode_code, ode_off, atom_code, atom_off, atom_kind,
            guard_code, guard_off, rate_code, rate_off, consts,
            x, double t, double t_end, double dt, double root_tol,
            double U, double H, entry_sign,
            rec, long record_stride, long step_phase):
    """Integrate inside one mode; see the pure-Python kernel for semantics."""
    cdef const int[:, ::1] v_ode_code = ode_code
    cdef const int[::1] v_ode_off = ode_off
    cdef const int[:, ::1] v_atom_code = atom_code
    cdef const int[::1] v_atom_off = atom_off
    cdef const signed char[::1] v_atom_kind = atom_kind
    cdef const int[:, ::1] v_guard_code = guard_code
    cdef const int[::1] v_guard_off = guard_off
    cdef const int[:, ::1] v_rate_code = rate_code
    cdef const int[::1] v_rate_off = rate_off
    cdef const double[::1] v_consts = consts
    cdef double[::1] v_x = x
    cdef const signed char[::1] v_sign = entry_sign

    cdef int n = v_x.shape[0]
    cdef bint has_ts = v_rate_off.shape[0] > 1
    cdef bint has_td = v_guard_off.shape[0] > 1
    cdef bint has_rec = rec is not None and record_stride > 0
    cdef double[:, ::1] v_rec
    cdef long rec_cap = 0
    if has_rec:
        v_rec = rec
        rec_cap = v_rec.shape[0]

    buf = np.empty((7, n))
    cdef double[::1] x0 = buf[0]
    cdef double[::1] x1 = buf[1]
    cdef double[::1] k1 = buf[2]
    cdef double[::1] k2 = buf[3]
    cdef double[::1] k3 = buf[4]
    cdef double[::1] k4 = buf[5]
    cdef double[::1] tmp = buf[6]
    cdef double stack[STACK_CAP]

    cdef long n_rec = 0, mask1, mask, it
    cdef double h, lam0, lam1, H1, eps, lo, hi, mid, lam
    cdef double theta_g, theta_s
    cdef bint stoch_hit, ok
    cdef int i

    eps = 1e-12 * (1.0 if fabs(t_end) < 1.0 else fabs(t_end))

    while t < t_end - eps:
        h = dt if dt < (t_end - t) else (t_end - t)
        for i in range(n):
            x0[i] = v_x[i]
        if has_ts:
            lam0 = _total_rate(v_rate_code, v_rate_off, v_consts, x0, stack)
            if lam0 < 0.0:
                return ERR_NEGATIVE_RATE, t, H, 0, n_rec, step_phase
        else:
            lam0 = 0.0
        _rk4(v_ode_code, v_ode_off, v_consts, x0, h, x1,
             k1, k2, k3, k4, tmp, stack)
        ok = True
        for i in range(n):
            if not isfinite(x1[i]):
                ok = False
        if not ok:
            return ERR_NONFINITE, t, H, 0, n_rec, step_phase

        if has_ts:
            lam1 = _total_rate(v_rate_code, v_rate_off, v_consts, x1, stack)
            if lam1 < 0.0:
                return ERR_NEGATIVE_RATE, t, H, 0, n_rec, step_phase
        else:
            lam1 = 0.0
        H1 = H + 0.5 * h * (lam0 + lam1)

        mask1 = 0
        if has_td:
            mask1 = _mask_at(v_atom_code, v_atom_off, v_atom_kind,
                             v_guard_code, v_guard_off, v_consts, v_sign,
                             x1, stack)
        stoch_hit = has_ts and H1 >= U

        if mask1 == 0 and not stoch_hit:
            for i in range(n):
                v_x[i] = x1[i]
            t += h
            H = H1
            step_phase += 1
            if has_rec and step_phase % record_stride == 0 \
                    and n_rec < rec_cap:
                v_rec[n_rec, 0] = t
                for i in range(n):
                    v_rec[n_rec, 1 + i] = v_x[i]
                n_rec += 1
            continue

        theta_g = 2.0
        theta_g_pre = 0.0
        if mask1 != 0:
            lo = 0.0
            hi = 1.0
            it = 0
            while (hi - lo) * h > root_tol and it < MAX_BISECT:
                mid = 0.5 * (lo + hi)
                _rk4(v_ode_code, v_ode_off, v_consts, x0, mid * h, x1,
                     k1, k2, k3, k4, tmp, stack)
                if _mask_at(v_atom_code, v_atom_off, v_atom_kind,
                            v_guard_code, v_guard_off, v_consts, v_sign,
                            x1, stack) != 0:
                    hi = mid
                else:
                    lo = mid
                it += 1
            theta_g = hi
            theta_g_pre = lo
        theta_s = 2.0
        if stoch_hit:
            lo = 0.0
            hi = 1.0
            it = 0
            while (hi - lo) * h > root_tol and it < MAX_BISECT:
                mid = 0.5 * (lo + hi)
                _rk4(v_ode_code, v_ode_off, v_consts, x0, mid * h, x1,
                     k1, k2, k3, k4, tmp, stack)
                lam = _total_rate(v_rate_code, v_rate_off, v_consts, x1,
                                  stack)
                if H + 0.5 * mid * h * (lam0 + lam) >= U:
                    hi = mid
                else:
                    lo = mid
                it += 1
            theta_s = hi

        if theta_g <= theta_s:
            # fire just before the trigger so invariant surfaces are never
            # overshot; the fired set is read on the far side of the trigger
            _rk4(v_ode_code, v_ode_off, v_consts, x0, theta_g * h, x1,
                 k1, k2, k3, k4, tmp, stack)
            mask = _mask_at(v_atom_code, v_atom_off, v_atom_kind,
                            v_guard_code, v_guard_off, v_consts, v_sign,
                            x1, stack)
            if mask == 0:
                mask = mask1
            _rk4(v_ode_code, v_ode_off, v_consts, x0, theta_g_pre * h, x1,
                 k1, k2, k3, k4, tmp, stack)
            for i in range(n):
                v_x[i] = x1[i]
            t += theta_g_pre * h
            if has_ts:
                lam = _total_rate(v_rate_code, v_rate_off, v_consts, x1,
                                  stack)
                H = H + 0.5 * theta_g_pre * h * (lam0 + lam)
            return GUARD, t, H, mask, n_rec, step_phase
        _rk4(v_ode_code, v_ode_off, v_consts, x0, theta_s * h, x1,
             k1, k2, k3, k4, tmp, stack)
        for i in range(n):
            v_x[i] = x1[i]
        t += theta_s * h
        return STOCH, t, H, 0, n_rec, step_phase

    return END, t_end, H, 0, n_rec, step_phase
