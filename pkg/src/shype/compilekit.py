"""Compilation of an automaton into flat numeric programs.

Expressions become postfix stack programs over int32 (op, arg) pairs with a
float64 constant pool; guards become sign-function atoms plus a boolean
postfix combiner. The integration kernels (pure Python and the compiled
extension) interpret these programs without touching expression trees.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

import numpy as np

from . import expr as ex
from .errors import EvalError
from .tdsha import Tdsha

# expression opcodes
OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_MIN = 6
OP_MAX = 7
OP_SQRT = 8
OP_LN = 9
OP_EXP = 10
OP_POW = 11

# boolean opcodes (guard combiner programs)
B_ATOM = 0
B_AND = 1
B_OR = 2
B_TRUE = 3
B_FALSE = 4

# guard atom kinds: the signed expression s must satisfy
ATOM_LEQ = 0  # s <= 0
ATOM_EQ = 1  # s == 0, reached by crossing from the entry sign

_CALL_OP = {"sqrt": OP_SQRT, "ln": OP_LN, "exp": OP_EXP}
_BIN_OP = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW}


class _ConstPool:
    def __init__(self):
        self.values: List[float] = []
        self.index: Dict[float, int] = {}

    def add(self, v: float) -> int:
        if v not in self.index:
            self.index[v] = len(self.values)
            self.values.append(v)
        return self.index[v]


def _emit(e: ex.Expr, var_index: Dict[str, int], code: List[Tuple[int, int]],
          pool: _ConstPool) -> None:
    if isinstance(e, ex.Num):
        code.append((OP_CONST, pool.add(e.value)))
        return
    if isinstance(e, ex.Var):
        if e.name not in var_index:
            raise EvalError(f"unbound variable {e.name!r} in compiled program")
        code.append((OP_VAR, var_index[e.name]))
        return
    if isinstance(e, ex.Bin):
        _emit(e.left, var_index, code, pool)
        _emit(e.right, var_index, code, pool)
        code.append((_BIN_OP[e.op], 0))
        return
    if isinstance(e, ex.Call):
        if e.fn in ("min", "max"):
            op = OP_MIN if e.fn == "min" else OP_MAX
            _emit(e.args[0], var_index, code, pool)
            for a in e.args[1:]:
                _emit(a, var_index, code, pool)
                code.append((op, 0))
            return
        _emit(e.args[0], var_index, code, pool)
        code.append((_CALL_OP[e.fn], 0))
        return
    if isinstance(e, ex.Rand):
        raise EvalError("random terms cannot appear in flows, guards or rates")
    raise TypeError(e)


@dataclass
class CompiledMode:
    """Flat programs for one mode. Arrays are contiguous numpy buffers."""

    index: int
    n_vars: int
    # dV/dt programs, one per variable, delimited by ode_off
    ode_code: np.ndarray
    ode_off: np.ndarray
    # guard atoms shared by this mode's instantaneous transitions
    atom_code: np.ndarray
    atom_off: np.ndarray
    atom_kind: np.ndarray
    # per-transition boolean combiner programs
    guard_code: np.ndarray
    guard_off: np.ndarray
    # per-stochastic-transition rate programs
    rate_code: np.ndarray
    rate_off: np.ndarray
    consts: np.ndarray
    td: tuple  # the Td objects, same order as guard programs
    ts: tuple  # the Ts objects, same order as rate programs


def _pack(code: List[Tuple[int, int]]) -> np.ndarray:
    if not code:
        return np.zeros((0, 2), dtype=np.int32)
    return np.asarray(code, dtype=np.int32)


class _ModeCompiler:
    def __init__(self, variables: tuple):
        self.var_index = {v: i for i, v in enumerate(variables)}
        self.pool = _ConstPool()

    def guard_atoms(self, g, atoms: Dict[tuple, int],
                    atom_exprs: List[Tuple[ex.Expr, int]]) -> List[Tuple[int, int]]:
        """Lower a guard into a boolean postfix program over sign atoms."""
        if isinstance(g, ex.BoolLit):
            return [(B_TRUE if g.value else B_FALSE, 0)]
        if isinstance(g, ex.Cmp):
            if g.op == "<=":
                signed, kind = ex.Bin("-", g.left, g.right), ATOM_LEQ
            elif g.op == ">=":
                signed, kind = ex.Bin("-", g.right, g.left), ATOM_LEQ
            elif g.op == "=":
                signed, kind = ex.Bin("-", g.left, g.right), ATOM_EQ
            else:
                raise EvalError(
                    f"strict comparison {g.op!r} in an urgent guard")
            key = (ex.canon_key(signed), kind)
            if key not in atoms:
                atoms[key] = len(atom_exprs)
                atom_exprs.append((signed, kind))
            return [(B_ATOM, atoms[key])]
        if isinstance(g, ex.And):
            return (self.guard_atoms(g.left, atoms, atom_exprs)
                    + self.guard_atoms(g.right, atoms, atom_exprs)
                    + [(B_AND, 0)])
        if isinstance(g, ex.Or):
            return (self.guard_atoms(g.left, atoms, atom_exprs)
                    + self.guard_atoms(g.right, atoms, atom_exprs)
                    + [(B_OR, 0)])
        raise EvalError("negation in an urgent guard")

    def compile_mode(self, t: Tdsha, mode, mode_index: int,
                     variables: tuple) -> CompiledMode:
        ode_code: List[Tuple[int, int]] = []
        ode_off = [0]
        # dV/dt as a sum of this mode's continuous-transition contributions
        for v in variables:
            parts = [(coeff, rate) for q, stoich, rate in t.tc if q == mode
                     for var, coeff in stoich if var == v]
            if not parts:
                ode_code.append((OP_CONST, self.pool.add(0.0)))
            else:
                for i, (coeff, rate) in enumerate(parts):
                    _emit(rate, self.var_index, ode_code, self.pool)
                    if coeff != 1.0:
                        ode_code.append((OP_CONST, self.pool.add(coeff)))
                        ode_code.append((OP_MUL, 0))
                    if i > 0:
                        ode_code.append((OP_ADD, 0))
            ode_off.append(len(ode_code))

        atoms: Dict[tuple, int] = {}
        atom_exprs: List[Tuple[ex.Expr, int]] = []
        guard_code: List[Tuple[int, int]] = []
        guard_off = [0]
        td = tuple(e for e in t.td if e.src == mode)
        for e in td:
            guard_code.extend(self.guard_atoms(e.guard, atoms, atom_exprs))
            guard_off.append(len(guard_code))
        atom_code: List[Tuple[int, int]] = []
        atom_off = [0]
        kinds = []
        for signed, kind in atom_exprs:
            _emit(signed, self.var_index, atom_code, self.pool)
            atom_off.append(len(atom_code))
            kinds.append(kind)

        ts = tuple(e for e in t.ts if e.src == mode)
        rate_code: List[Tuple[int, int]] = []
        rate_off = [0]
        for e in ts:
            if e.guard != ex.TRUE:
                raise EvalError("stochastic transitions must have guard true")
            _emit(e.rate, self.var_index, rate_code, self.pool)
            rate_off.append(len(rate_code))

        return CompiledMode(
            index=mode_index,
            n_vars=len(variables),
            ode_code=_pack(ode_code),
            ode_off=np.asarray(ode_off, dtype=np.int32),
            atom_code=_pack(atom_code),
            atom_off=np.asarray(atom_off, dtype=np.int32),
            atom_kind=np.asarray(kinds, dtype=np.int8),
            guard_code=_pack(guard_code),
            guard_off=np.asarray(guard_off, dtype=np.int32),
            rate_code=_pack(rate_code),
            rate_off=np.asarray(rate_off, dtype=np.int32),
            consts=np.asarray(self.pool.values, dtype=np.float64),
            td=td,
            ts=ts,
        )


@dataclass
class CompiledTdsha:
    source: Tdsha
    variables: tuple
    modes: dict  # mode id -> CompiledMode
    mode_order: tuple  # stable indexable order of mode ids

    def mode_index(self, mode) -> int:
        return self.modes[mode].index


def compile_tdsha(t: Tdsha) -> CompiledTdsha:
    variables = tuple(t.variables)
    modes = {}
    order = []
    for i, mode in enumerate(t.modes):
        compiler = _ModeCompiler(variables)
        modes[mode] = compiler.compile_mode(t, mode, i, variables)
        order.append(mode)
    return CompiledTdsha(t, variables, modes, tuple(order))
