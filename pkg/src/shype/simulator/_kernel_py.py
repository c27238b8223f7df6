"""Pure-Python integration kernel.

Interprets the flat stack programs produced by compilekit: RK4 flow inside a
mode, urgent-guard monitoring with bisection localization, and trapezoidal
hazard accumulation for stochastic firing. The compiled extension implements
the same contract; `shype.simulator.kernel` picks whichever is available.
"""

from __future__ import annotations

import math

import numpy as np

# statuses returned by advance()
END = 0
STOCH = 1
GUARD = 2
ERR_NONFINITE = 3
ERR_NEGATIVE_RATE = 4

_MAX_BISECT = 200


def _eval(code, lo, hi, consts, x, stack):
    """Evaluate one postfix program slice; returns the result."""
    sp = 0
    for i in range(lo, hi):
        op = code[i, 0]
        arg = code[i, 1]
        if op == 0:  # CONST
            stack[sp] = consts[arg]
            sp += 1
        elif op == 1:  # VAR
            stack[sp] = x[arg]
            sp += 1
        elif op == 2:  # ADD
            sp -= 1
            stack[sp - 1] = stack[sp - 1] + stack[sp]
        elif op == 3:  # SUB
            sp -= 1
            stack[sp - 1] = stack[sp - 1] - stack[sp]
        elif op == 4:  # MUL
            sp -= 1
            stack[sp - 1] = stack[sp - 1] * stack[sp]
        elif op == 5:  # DIV
            sp -= 1
            stack[sp - 1] = stack[sp - 1] / stack[sp] if stack[sp] != 0.0 \
                else math.nan
        elif op == 6:  # MIN
            sp -= 1
            stack[sp - 1] = min(stack[sp - 1], stack[sp])
        elif op == 7:  # MAX
            sp -= 1
            stack[sp - 1] = max(stack[sp - 1], stack[sp])
        elif op == 8:  # SQRT
            v = stack[sp - 1]
            stack[sp - 1] = math.sqrt(v) if v >= 0.0 else math.nan
        elif op == 9:  # LN
            v = stack[sp - 1]
            stack[sp - 1] = math.log(v) if v > 0.0 else math.nan
        elif op == 10:  # EXP
            stack[sp - 1] = math.exp(min(stack[sp - 1], 700.0))
        elif op == 11:  # POW
            sp -= 1
            try:
                stack[sp - 1] = math.pow(stack[sp - 1], stack[sp])
            except ValueError:
                stack[sp - 1] = math.nan
    return stack[sp - 1]


def _deriv(ode_code, ode_off, consts, x, out, stack):
    for v in range(len(out)):
        out[v] = _eval(ode_code, ode_off[v], ode_off[v + 1], consts, x, stack)


def _rk4(ode_code, ode_off, consts, x0, h, scratch):
    k1, k2, k3, k4, tmp, stack = scratch
    _deriv(ode_code, ode_off, consts, x0, k1, stack)
    np.multiply(k1, 0.5 * h, tmp)
    tmp += x0
    _deriv(ode_code, ode_off, consts, tmp, k2, stack)
    np.multiply(k2, 0.5 * h, tmp)
    tmp += x0
    _deriv(ode_code, ode_off, consts, tmp, k3, stack)
    np.multiply(k3, h, tmp)
    tmp += x0
    _deriv(ode_code, ode_off, consts, tmp, k4, stack)
    return x0 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _total_rate(rate_code, rate_off, consts, x, stack):
    total = 0.0
    for i in range(len(rate_off) - 1):
        r = _eval(rate_code, rate_off[i], rate_off[i + 1], consts, x, stack)
        if r < 0.0:
            return -1.0
        total += r
    return total


def _atom_values(atom_code, atom_off, consts, x, stack, out):
    for i in range(len(atom_off) - 1):
        out[i] = _eval(atom_code, atom_off[i], atom_off[i + 1], consts, x,
                       stack)


def atoms_satisfied(values, kinds, entry_sign):
    """Boolean per atom: LEQ holds at s <= 0; EQ holds at s == 0 or when the
    sign differs from the sign at mode entry (a crossing happened)."""
    out = np.zeros(len(values), dtype=bool)
    for i in range(len(values)):
        s = values[i]
        if kinds[i] == 0:
            out[i] = s <= 0.0
        else:
            sign = 0 if s == 0.0 else (1 if s > 0.0 else -1)
            out[i] = sign == 0 or sign != entry_sign[i]
    return out


def guard_mask(guard_code, guard_off, sat):
    """Bitmask of instantaneous transitions whose combiner evaluates true."""
    mask = 0
    bstack = [False] * 32
    for g in range(len(guard_off) - 1):
        sp = 0
        for i in range(guard_off[g], guard_off[g + 1]):
            op = guard_code[i, 0]
            arg = guard_code[i, 1]
            if op == 0:
                bstack[sp] = bool(sat[arg])
                sp += 1
            elif op == 1:
                sp -= 1
                bstack[sp - 1] = bstack[sp - 1] and bstack[sp]
            elif op == 2:
                sp -= 1
                bstack[sp - 1] = bstack[sp - 1] or bstack[sp]
            elif op == 3:
                bstack[sp] = True
                sp += 1
            else:
                bstack[sp] = False
                sp += 1
        if sp and bstack[sp - 1]:
            mask |= 1 << g
    return mask


def advance(ode_code, ode_off, atom_code, atom_off, atom_kind,
            guard_code, guard_off, rate_code, rate_off, consts,
            x, t, t_end, dt, root_tol, U, H, entry_sign,
            rec, record_stride, step_phase):
    """Integrate inside one mode until the end of time, a stochastic firing
    or an urgent-guard firing.

    Returns (status, t, H, fired_mask, n_rec, step_phase). On GUARD the
    fired_mask has one bit per satisfied instantaneous transition; x holds
    the state at the localized firing time.
    """
    n = len(x)
    scratch = (np.empty(n), np.empty(n), np.empty(n), np.empty(n),
               np.empty(n), np.empty(64))
    stack = scratch[5]
    n_atoms = len(atom_off) - 1
    atom_vals = np.empty(max(n_atoms, 1))
    n_rec = 0
    has_ts = len(rate_off) > 1
    has_td = len(guard_off) > 1
    eps = 1e-12 * max(1.0, abs(t_end))

    while t < t_end - eps:
        h = min(dt, t_end - t)
        x0 = x.copy()
        if has_ts:
            lam0 = _total_rate(rate_code, rate_off, consts, x0, stack)
            if lam0 < 0.0:
                return ERR_NEGATIVE_RATE, t, H, 0, n_rec, step_phase
        else:
            lam0 = 0.0
        x1 = _rk4(ode_code, ode_off, consts, x0, h, scratch)
        if not np.all(np.isfinite(x1)):
            return ERR_NONFINITE, t, H, 0, n_rec, step_phase

        if has_ts:
            lam1 = _total_rate(rate_code, rate_off, consts, x1, stack)
            if lam1 < 0.0:
                return ERR_NEGATIVE_RATE, t, H, 0, n_rec, step_phase
        else:
            lam1 = 0.0
        H1 = H + 0.5 * h * (lam0 + lam1)

        mask1 = 0
        if has_td:
            _atom_values(atom_code, atom_off, consts, x1, stack, atom_vals)
            sat = atoms_satisfied(atom_vals, atom_kind, entry_sign)
            mask1 = guard_mask(guard_code, guard_off, sat)

        stoch_hit = has_ts and H1 >= U
        if not mask1 and not stoch_hit:
            x[:] = x1
            t += h
            H = H1
            step_phase += 1
            if record_stride > 0 and step_phase % record_stride == 0 \
                    and rec is not None and n_rec < len(rec):
                rec[n_rec, 0] = t
                rec[n_rec, 1:] = x
                n_rec += 1
            continue

        # localize the earliest trigger inside [t, t+h] by bisection
        def state_at(theta):
            if theta >= 1.0:
                return x1
            return _rk4(ode_code, ode_off, consts, x0, theta * h, scratch)

        def guard_at(theta):
            xs = state_at(theta)
            _atom_values(atom_code, atom_off, consts, xs, stack, atom_vals)
            sat_ = atoms_satisfied(atom_vals, atom_kind, entry_sign)
            return guard_mask(guard_code, guard_off, sat_)

        def hazard_at(theta):
            xs = state_at(theta)
            lam = _total_rate(rate_code, rate_off, consts, xs, stack)
            return H + 0.5 * theta * h * (lam0 + lam)

        theta_g = 2.0
        theta_g_pre = 0.0
        if mask1:
            lo, hi = 0.0, 1.0
            it = 0
            while (hi - lo) * h > root_tol and it < _MAX_BISECT:
                mid = 0.5 * (lo + hi)
                if guard_at(mid):
                    hi = mid
                else:
                    lo = mid
                it += 1
            theta_g = hi
            theta_g_pre = lo
        theta_s = 2.0
        if stoch_hit:
            lo, hi = 0.0, 1.0
            it = 0
            while (hi - lo) * h > root_tol and it < _MAX_BISECT:
                mid = 0.5 * (lo + hi)
                if hazard_at(mid) >= U:
                    hi = mid
                else:
                    lo = mid
                it += 1
            theta_s = hi

        if theta_g <= theta_s:
            # fire just before the trigger so invariant surfaces are never
            # overshot; the fired set is read on the far side of the trigger
            mask = guard_at(theta_g)
            if mask == 0:
                mask = mask1
            xs = state_at(theta_g_pre)
            x[:] = xs.copy()
            t += theta_g_pre * h
            H = hazard_at(theta_g_pre) if has_ts else H
            return GUARD, t, H, mask, n_rec, step_phase
        xs = state_at(theta_s)
        x[:] = xs
        t += theta_s * h
        return STOCH, t, H, 0, n_rec, step_phase

    return END, t_end, H, 0, n_rec, step_phase
