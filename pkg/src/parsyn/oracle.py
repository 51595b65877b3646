"""Brute-force reference computations over truth tables.

Everything here enumerates assignments with numpy and is only meant for small
variable counts.  Tests compare the symbolic machinery against these tables.
Tables are indexed by ``vars.all_vars`` (inputs first, then outputs in order).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .formula import Manager, Ref, VarTable


def table(m: Manager, f: Ref, vars: VarTable) -> np.ndarray:
    return m.truth_table(f, vars.all_vars)


def exact_delta_gamma(m: Manager, phi: Ref, vars: VarTable) -> tuple[list, list]:
    """Exact Delta_i / Gamma_i tables of ``phi`` for every output position.

    Delta_i is true where no choice of y_1..y_{i-1} satisfies phi with y_i=0,
    Gamma_i likewise with y_i=1.  The returned tables range over all
    variables but do not depend on y_1..y_i.
    """
    t = table(m, phi, vars)
    nx = len(vars.inputs)
    deltas, gammas = [], []
    for i in range(len(vars.outputs)):
        axes = tuple(range(nx, nx + i))
        q = t.any(axis=axes, keepdims=True) if axes else t
        yi = nx + i
        q0 = np.take(q, [0], axis=yi)
        q1 = np.take(q, [1], axis=yi)
        deltas.append(np.broadcast_to(~q0, t.shape).copy())
        gammas.append(np.broadcast_to(~q1, t.shape).copy())
    return deltas, gammas


def realizable_table(m: Manager, phi: Ref, vars: VarTable) -> np.ndarray:
    """Over X: true where some Y satisfies phi."""
    t = table(m, phi, vars)
    nx = len(vars.inputs)
    return t.any(axis=tuple(range(nx, t.ndim))) if vars.outputs else t


def skolem_table_check(m: Manager, phi: Ref, vars: VarTable, fs: Sequence[Ref]) -> dict | None:
    """Check that ``fs`` (over X only) realize the outputs of ``phi``.

    Returns None on success, otherwise the first input assignment (in
    enumeration order) where phi is satisfiable but phi(X, F(X)) is false.
    Evaluation goes through truth tables, not formula substitution.
    """
    nx = len(vars.inputs)
    t = table(m, phi, vars)
    real = t.any(axis=tuple(range(nx, t.ndim))) if vars.outputs else t
    xs = list(vars.inputs)
    fvals = [m.truth_table(f, xs) for f in fs]
    for idx in np.ndindex(*(2,) * nx):
        if not real[idx]:
            continue
        ys = tuple(int(fv[idx]) for fv in fvals)
        if not t[idx + ys]:
            return dict(zip(xs, map(bool, idx)))
    return None


def band_holds(m: Manager, phi: Ref, vars: VarTable, gs: Sequence[Ref]) -> bool:
    """Every g_i satisfies Delta_i & ~Gamma_i -> g_i -> Delta_i | ~Gamma_i.

    Where Delta_i and Gamma_i overlap no value of y_i helps, so g_i is free.
    """
    deltas, gammas = exact_delta_gamma(m, phi, vars)
    for d, g_, f in zip(deltas, gammas, gs):
        v = table(m, f, vars)
        if (d & ~g_ & ~v).any() or (v & ~d & g_).any():
            return False
    return True


def implies_table(m: Manager, a: Ref, b: np.ndarray | Ref, vars: VarTable) -> bool:
    """``a`` implies ``b`` pointwise; ``b`` may be a formula or a table."""
    ta = table(m, a, vars)
    tb = b if isinstance(b, np.ndarray) else table(m, b, vars)
    return not (ta & ~tb).any()


def solution_band_violations(m: Manager, phi: Ref, vars: VarTable, fs: Sequence[Ref]) -> list:
    """Output positions where ``fs`` (over X only) leave the solution band.

    For each i, phi^(i) = exists y_1..y_{i-1}. phi with y_{i+1}..y_n replaced
    by f_{i+1}..f_n must satisfy  p1 & ~p0 -> f_i -> p1 | ~p0, where p1/p0
    are phi^(i) with y_i set to 1/0.  ``fs`` realizes the outputs exactly
    when the returned list is empty.
    """
    nx, n = len(vars.inputs), len(vars.outputs)
    t = table(m, phi, vars)
    xs = list(vars.inputs)
    fvals = [m.truth_table(f, xs) for f in fs]
    bad = []
    for i in range(n):
        q = t.any(axis=tuple(range(nx, nx + i)), keepdims=True) if i else t
        p0 = np.zeros((2,) * nx, dtype=bool)
        p1 = np.zeros((2,) * nx, dtype=bool)
        for idx in np.ndindex(*(2,) * nx):
            later = tuple(int(fv[idx]) for fv in fvals[i + 1:])
            head = idx + (0,) * i
            p0[idx] = q[head + (0,) + later]
            p1[idx] = q[head + (1,) + later]
        fi = fvals[i]
        if (p1 & ~p0 & ~fi).any() or (fi & ~(p1 | ~p0)).any():
            bad.append(i)
    return bad
