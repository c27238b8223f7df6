"""Arithmetic expressions, boolean guards, resets and random-variable terms.

Expressions are immutable trees. They appear as influence strengths, event
rates, guard operands, reset right-hand sides and distribution parameters.
Random-variable terms (``Rand``) may only occur inside resets and duration
sugar; evaluating one requires an RNG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Optional, Union

import numpy as np

from .errors import (
    BadParameter,
    DivisionByZero,
    DomainError,
    EvalError,
    UnboundVariable,
)

# ---------------------------------------------------------------------------
# expression trees


@dataclass(frozen=True)
class Num:
    value: float

    def __repr__(self):
        return f"Num({self.value!r})"


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Bin:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str  # min max sqrt ln exp
    args: tuple


DISTRIBUTIONS = ("Uniform", "Normal", "LogNormal", "Exponential", "Gamma", "Dirac")

_DIST_ARITY = {
    "Uniform": 2,
    "Normal": 2,
    "LogNormal": 2,
    "Exponential": 1,
    "Gamma": 2,
    "Dirac": 1,
}


@dataclass(frozen=True)
class Rand:
    """A draw from a named distribution; parameters are expressions."""

    dist: str
    params: tuple

    def __post_init__(self):
        if self.dist not in _DIST_ARITY:
            raise BadParameter(f"unknown distribution {self.dist!r}")
        if len(self.params) != _DIST_ARITY[self.dist]:
            raise BadParameter(
                f"{self.dist} takes {_DIST_ARITY[self.dist]} parameter(s)"
            )


Expr = Union[Num, Var, Bin, Call, Rand]

ZERO = Num(0.0)
ONE = Num(1.0)


def add(a: Expr, b: Expr) -> Expr:
    return Bin("+", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    return Bin("*", a, b)


# ---------------------------------------------------------------------------
# guards (boolean formulas) and resets


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class Cmp:
    op: str  # <= >= < > =
    left: Expr
    right: Expr


@dataclass(frozen=True)
class And:
    left: "Guard"
    right: "Guard"


@dataclass(frozen=True)
class Or:
    left: "Guard"
    right: "Guard"


@dataclass(frozen=True)
class Not:
    arg: "Guard"


Guard = Union[BoolLit, Cmp, And, Or, Not]

TRUE = BoolLit(True)
FALSE = BoolLit(False)


@dataclass(frozen=True)
class ResetAtom:
    """One ``V ~ theta(V)`` conjunct; theta may contain Rand terms."""

    var: str
    expr: Expr


# A reset is a tuple of atoms; the empty tuple is the identity reset.
Reset = tuple


# ---------------------------------------------------------------------------
# traversal helpers


def walk(e: Expr) -> Iterator[Expr]:
    yield e
    if isinstance(e, Bin):
        yield from walk(e.left)
        yield from walk(e.right)
    elif isinstance(e, (Call, Rand)):
        for a in e.args if isinstance(e, Call) else e.params:
            yield from walk(a)


def free_vars(e: Expr) -> set:
    return {n.name for n in walk(e) if isinstance(n, Var)}


def has_rand(e: Expr) -> bool:
    return any(isinstance(n, Rand) for n in walk(e))


def guard_exprs(g: Guard) -> Iterator[Expr]:
    if isinstance(g, Cmp):
        yield g.left
        yield g.right
    elif isinstance(g, (And, Or)):
        yield from guard_exprs(g.left)
        yield from guard_exprs(g.right)
    elif isinstance(g, Not):
        yield from guard_exprs(g.arg)


def guard_vars(g: Guard) -> set:
    out = set()
    for e in guard_exprs(g):
        out |= free_vars(e)
    return out


def substitute(e: Expr, subst: Mapping[str, Expr]) -> Expr:
    if isinstance(e, Num):
        return e
    if isinstance(e, Var):
        return subst.get(e.name, e)
    if isinstance(e, Bin):
        return Bin(e.op, substitute(e.left, subst), substitute(e.right, subst))
    if isinstance(e, Call):
        return Call(e.fn, tuple(substitute(a, subst) for a in e.args))
    if isinstance(e, Rand):
        return Rand(e.dist, tuple(substitute(p, subst) for p in e.params))
    raise TypeError(e)


def substitute_guard(g: Guard, subst: Mapping[str, Expr]) -> Guard:
    if isinstance(g, BoolLit):
        return g
    if isinstance(g, Cmp):
        return Cmp(g.op, substitute(g.left, subst), substitute(g.right, subst))
    if isinstance(g, And):
        return And(substitute_guard(g.left, subst), substitute_guard(g.right, subst))
    if isinstance(g, Or):
        return Or(substitute_guard(g.left, subst), substitute_guard(g.right, subst))
    if isinstance(g, Not):
        return Not(substitute_guard(g.arg, subst))
    raise TypeError(g)


def substitute_reset(r: Reset, subst: Mapping[str, Expr]) -> Reset:
    return tuple(ResetAtom(a.var, substitute(a.expr, subst)) for a in r)


# ---------------------------------------------------------------------------
# evaluation


def eval_expr(
    e: Expr,
    valuation: Mapping[str, float],
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Evaluate ``e`` under ``valuation``.

    Rand terms are sampled with ``rng``; without an RNG they are an error.
    """
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        try:
            return float(valuation[e.name])
        except KeyError:
            raise UnboundVariable(e.name) from None
    if isinstance(e, Bin):
        a = eval_expr(e.left, valuation, rng)
        b = eval_expr(e.right, valuation, rng)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0.0:
                raise DivisionByZero(f"division by zero in {fmt_expr(e)}")
            return a / b
        if e.op == "^":
            try:
                return math.pow(a, b)
            except ValueError as exc:
                raise DomainError(str(exc)) from None
        raise EvalError(f"unknown operator {e.op!r}")
    if isinstance(e, Call):
        args = [eval_expr(a, valuation, rng) for a in e.args]
        if e.fn == "min":
            return min(args)
        if e.fn == "max":
            return max(args)
        if e.fn == "sqrt":
            if args[0] < 0:
                raise DomainError(f"sqrt of negative value {args[0]}")
            return math.sqrt(args[0])
        if e.fn == "ln":
            if args[0] <= 0:
                raise DomainError(f"ln of non-positive value {args[0]}")
            return math.log(args[0])
        if e.fn == "exp":
            return math.exp(args[0])
        raise EvalError(f"unknown function {e.fn!r}")
    if isinstance(e, Rand):
        if rng is None:
            raise EvalError("random term evaluated without an RNG")
        return sample(e, valuation, rng)
    raise TypeError(e)


def sample(
    r: Rand, valuation: Mapping[str, float], rng: np.random.Generator
) -> float:
    """Draw one value from the distribution term ``r``."""
    ps = [eval_expr(p, valuation, rng) for p in r.params]
    if r.dist == "Dirac":
        return ps[0]
    if r.dist == "Uniform":
        a, b = ps
        if a > b:
            raise BadParameter(f"Uniform({a}, {b}): requires a <= b")
        if a == b:
            return a
        return float(rng.uniform(a, b))
    if r.dist == "Normal":
        mu, var = ps
        if var < 0:
            raise BadParameter(f"Normal variance {var} < 0")
        return float(rng.normal(mu, math.sqrt(var)))
    if r.dist == "LogNormal":
        mu, var = ps
        if var < 0:
            raise BadParameter(f"LogNormal variance {var} < 0")
        return float(rng.lognormal(mu, math.sqrt(var)))
    if r.dist == "Exponential":
        (rate,) = ps
        if rate <= 0:
            raise BadParameter(f"Exponential rate {rate} <= 0")
        return float(rng.exponential(1.0 / rate))
    if r.dist == "Gamma":
        shape, scale = ps
        if shape <= 0 or scale <= 0:
            raise BadParameter(f"Gamma({shape}, {scale}): parameters must be > 0")
        return float(rng.gamma(shape, scale))
    raise BadParameter(f"unknown distribution {r.dist!r}")


def eval_guard(
    g: Guard,
    valuation: Mapping[str, float],
    eq_tol: float = 0.0,
) -> bool:
    """Boolean evaluation; equality atoms hold within ``eq_tol``."""
    if isinstance(g, BoolLit):
        return g.value
    if isinstance(g, Cmp):
        a = eval_expr(g.left, valuation)
        b = eval_expr(g.right, valuation)
        if g.op == "<=":
            return a <= b
        if g.op == ">=":
            return a >= b
        if g.op == "<":
            return a < b
        if g.op == ">":
            return a > b
        if g.op == "=":
            return abs(a - b) <= eq_tol
        raise EvalError(f"unknown comparison {g.op!r}")
    if isinstance(g, And):
        return eval_guard(g.left, valuation, eq_tol) and eval_guard(
            g.right, valuation, eq_tol
        )
    if isinstance(g, Or):
        return eval_guard(g.left, valuation, eq_tol) or eval_guard(
            g.right, valuation, eq_tol
        )
    if isinstance(g, Not):
        return not eval_guard(g.arg, valuation, eq_tol)
    raise TypeError(g)


def apply_reset(
    r: Reset,
    valuation: Mapping[str, float],
    rng: np.random.Generator,
) -> dict:
    """Return a new valuation; all right-hand sides read the pre-valuation."""
    out = dict(valuation)
    for atom in r:
        out[atom.var] = eval_expr(atom.expr, valuation, rng)
    return out


# ---------------------------------------------------------------------------
# canonical keys (normalized comparison)
#
# Semantic equality of functions is undecidable; equality used by the
# isomorphism checker and the state equivalences is syntactic equality after
# normalization: +, * flattened and sorted, numeric literals folded,
# a - b turned into a + (-1 * b).


def _fold_num(x) -> object:
    # exact rational arithmetic when folding, so 1/3*m^2 style constants
    # normalize identically regardless of association order
    return x


def canon_key(e: Expr):
    """Hashable canonical form of an expression. Memoized: expressions are
    immutable and the same objects recur across lifted product transitions."""
    key = id(e)
    hit = _CANON_MEMO.get(key)
    if hit is not None and hit[0] is e:
        return hit[1]
    out = _canon_key(e)
    _CANON_MEMO[key] = (e, out)
    return out


_CANON_MEMO: dict = {}


def _canon_key(e: Expr):
    if isinstance(e, Num):
        return ("num", Fraction(e.value).limit_denominator(10**12))
    if isinstance(e, Var):
        return ("var", e.name)
    if isinstance(e, Bin):
        if e.op == "-":
            return canon_key(Bin("+", e.left, Bin("*", Num(-1.0), e.right)))
        if e.op in "+*":
            terms = []
            _flatten(e, e.op, terms)
            keys = [canon_key(t) for t in terms]
            const = _unit_fraction(e.op)
            rest = []
            for k in keys:
                if k[0] == "num":
                    const = const + k[1] if e.op == "+" else const * k[1]
                else:
                    rest.append(k)
            if e.op == "*" and const == 0:
                return ("num", Fraction(0))
            rest.sort(key=repr)
            if not rest:
                return ("num", const)
            if const != _unit_fraction(e.op):
                rest.append(("num", const))
                rest.sort(key=repr)
            if len(rest) == 1:
                return rest[0]
            return ("+" if e.op == "+" else "*", tuple(rest))
        lk, rk = canon_key(e.left), canon_key(e.right)
        if lk[0] == "num" and rk[0] == "num":
            a, b = lk[1], rk[1]
            if e.op == "/" and b != 0:
                return ("num", a / b)
            if e.op == "^":
                try:
                    v = float(a) ** float(b)
                    return ("num", Fraction(v).limit_denominator(10**12))
                except (OverflowError, ValueError, ZeroDivisionError):
                    pass
        return (e.op, lk, rk)
    if isinstance(e, Call):
        keys = tuple(canon_key(a) for a in e.args)
        if e.fn in ("min", "max"):
            keys = tuple(sorted(keys, key=repr))
        return (e.fn, keys)
    if isinstance(e, Rand):
        return ("rand", e.dist, tuple(canon_key(p) for p in e.params))
    raise TypeError(e)


def _unit_fraction(op: str) -> Fraction:
    return Fraction(0) if op == "+" else Fraction(1)


def _flatten(e: Expr, op: str, out: list):
    if isinstance(e, Bin) and e.op == op:
        _flatten(e.left, op, out)
        _flatten(e.right, op, out)
    else:
        out.append(e)


def exprs_equal(a: Expr, b: Expr) -> bool:
    return canon_key(a) == canon_key(b)


def const_value(e: Expr) -> Optional[float]:
    """The numeric value of ``e`` when it normalizes to a literal, else None."""
    k = canon_key(e)
    if k[0] == "num":
        return float(k[1])
    return None


def guard_key(g: Guard):
    """Canonical form of a guard: conjunction flattened, trues dropped."""
    if isinstance(g, BoolLit):
        return ("bool", g.value)
    if isinstance(g, Cmp):
        op, l, r = g.op, g.left, g.right
        if op in (">=", ">"):
            op = "<=" if op == ">=" else "<"
            l, r = r, l
        lk, rk = canon_key(l), canon_key(r)
        if op == "=" and repr(rk) < repr(lk):
            lk, rk = rk, lk
        return ("cmp", op, lk, rk)
    if isinstance(g, And):
        parts = []
        _flatten_and(g, parts)
        keys = sorted({guard_key(p) for p in parts}, key=repr)
        keys = [k for k in keys if k != ("bool", True)]
        if not keys:
            return ("bool", True)
        if ("bool", False) in keys:
            return ("bool", False)
        if len(keys) == 1:
            return keys[0]
        return ("and", tuple(keys))
    if isinstance(g, Or):
        return ("or", tuple(sorted((guard_key(g.left), guard_key(g.right)), key=repr)))
    if isinstance(g, Not):
        return ("not", guard_key(g.arg))
    raise TypeError(g)


def _flatten_and(g: Guard, out: list):
    if isinstance(g, And):
        _flatten_and(g.left, out)
        _flatten_and(g.right, out)
    else:
        out.append(g)


def reset_key(r: Reset):
    """Canonical form of a reset: atoms deduped and sorted by variable."""
    atoms = {}
    for a in r:
        k = canon_key(a.expr)
        if a.var in atoms and atoms[a.var] != k:
            return ("conflict", a.var)
        atoms[a.var] = k
    return tuple(sorted(atoms.items()))


# ---------------------------------------------------------------------------
# interval arithmetic (used by the I-graph construction)

INF = math.inf

Interval = tuple  # (lo, hi)


def _iv(lo, hi) -> Interval:
    return (lo, hi)


def interval_eval(e: Expr, env: Mapping[str, Interval]) -> Interval:
    """Overapproximating interval evaluation; Rand terms use their support."""
    if isinstance(e, Num):
        return _iv(e.value, e.value)
    if isinstance(e, Var):
        return env.get(e.name, _iv(-INF, INF))
    if isinstance(e, Bin):
        a = interval_eval(e.left, env)
        b = interval_eval(e.right, env)
        if e.op == "+":
            return _iv(a[0] + b[0], a[1] + b[1])
        if e.op == "-":
            return _iv(a[0] - b[1], a[1] - b[0])
        if e.op == "*":
            cands = [x * y for x in a for y in b if not math.isnan(x * y)]
            return _iv(min(cands, default=-INF), max(cands, default=INF))
        if e.op == "/":
            if b[0] <= 0.0 <= b[1]:
                return _iv(-INF, INF)
            cands = [x / y for x in a for y in b]
            return _iv(min(cands), max(cands))
        if e.op == "^":
            return _iv(-INF, INF)
    if isinstance(e, Call):
        ivs = [interval_eval(a, env) for a in e.args]
        if e.fn == "min":
            return _iv(min(i[0] for i in ivs), min(i[1] for i in ivs))
        if e.fn == "max":
            return _iv(max(i[0] for i in ivs), max(i[1] for i in ivs))
        if e.fn == "sqrt":
            lo, hi = ivs[0]
            if hi < 0:
                return _iv(INF, -INF)  # empty
            lo = max(lo, 0.0)
            return _iv(math.sqrt(lo), math.sqrt(hi) if hi < INF else INF)
        if e.fn == "ln":
            lo, hi = ivs[0]
            if hi <= 0:
                return _iv(INF, -INF)
            lo = math.log(lo) if lo > 0 else -INF
            return _iv(lo, math.log(hi) if hi < INF else INF)
        if e.fn == "exp":
            lo, hi = ivs[0]
            return _iv(math.exp(lo) if lo > -INF else 0.0,
                       math.exp(hi) if hi < INF else INF)
    if isinstance(e, Rand):
        return rand_support(e, env)
    return _iv(-INF, INF)


def rand_support(r: Rand, env: Mapping[str, Interval]) -> Interval:
    """Support of a distribution term; Normal-family boxes use mu +- 6 sd."""
    ivs = [interval_eval(p, env) for p in r.params]
    if r.dist == "Dirac":
        return ivs[0]
    if r.dist == "Uniform":
        return _iv(ivs[0][0], ivs[1][1])
    if r.dist == "Normal":
        (mlo, mhi), (vlo, vhi) = ivs
        sd = math.sqrt(max(vhi, 0.0)) if vhi < INF else INF
        return _iv(mlo - 6 * sd, mhi + 6 * sd)
    if r.dist == "LogNormal":
        lo, hi = rand_support(Rand("Normal", r.params), env)
        return _iv(math.exp(lo) if lo > -INF else 0.0,
                   math.exp(hi) if hi < INF else INF)
    if r.dist in ("Exponential", "Gamma"):
        return _iv(0.0, INF)
    return _iv(-INF, INF)


# ---------------------------------------------------------------------------
# pretty printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def fmt_expr(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, Num):
        s = fmt_num(e.value)
        if e.value < 0 and parent_prec > 0:
            return f"({s})"
        return s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Bin):
        p = _PREC[e.op]
        # the parser is left-associative (right-associative for ^); force
        # parens on the other side so parse(format(e)) == e structurally
        if e.op == "^":
            left, right = fmt_expr(e.left, p + 1), fmt_expr(e.right, p)
        else:
            left, right = fmt_expr(e.left, p), fmt_expr(e.right, p + 1)
        s = f"{left} {e.op} {right}"
        if p < parent_prec:
            return f"({s})"
        return s
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(fmt_expr(a) for a in e.args)})"
    if isinstance(e, Rand):
        return f"{e.dist}({', '.join(fmt_expr(p) for p in e.params)})"
    raise TypeError(e)


def fmt_guard(g: Guard, parent_prec: int = 0) -> str:
    if isinstance(g, BoolLit):
        return "true" if g.value else "false"
    if isinstance(g, Cmp):
        return f"{fmt_expr(g.left)} {g.op} {fmt_expr(g.right)}"
    if isinstance(g, And):
        # left-associative parser: parenthesize same-precedence right side
        s = f"{fmt_guard(g.left, 2)} and {fmt_guard(g.right, 3)}"
        return f"({s})" if parent_prec > 2 else s
    if isinstance(g, Or):
        s = f"{fmt_guard(g.left, 1)} or {fmt_guard(g.right, 2)}"
        return f"({s})" if parent_prec > 1 else s
    if isinstance(g, Not):
        return f"not {fmt_guard(g.arg, 3)}"
    raise TypeError(g)


def fmt_reset(r: Reset) -> str:
    if not r:
        return "true"
    return " and ".join(f"{a.var} ~ {fmt_expr(a.expr)}" for a in r)
