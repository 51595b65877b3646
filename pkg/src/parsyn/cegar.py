"""Counterexample-guided repair of Delta/Gamma refinements at one node.

Composed annotations under-approximate Delta_i / Gamma_i.  For each output
y_i in order, a SAT query looks for a point where the current refinement is
too small; the point is generalized to a cube that still lies inside the exact
function, the cube is added, and the query repeats until it is unsatisfiable.

Two error formulas are available:

``exact``
    ~r_i & (y_1 <-> g_1) & .. & (y_i <-> g_i) & ~phi, with g_j = delta_j on
    the delta side and g_j = ~gamma_j on the gamma side.  Once r_1..r_{i-1}
    are exact, a model is precisely a point of Delta_i (Gamma_i) missing from
    r_i, so termination makes the vector exact.

``skolem``
    Same, conjoined with phi(X, y'_1..y'_i, y_{i+1}..y_n) over fresh copies
    y'.  A model additionally needs some y_1..y_i satisfying phi, so only the
    points that break "g_1..g_i realize y_1..y_i" are repaired.  The result
    is in general not exact but good enough for Skolem extraction, and never
    needs more iterations than ``exact``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Hashable

from .compose import DeltaGammaVec
from .formula import Manager, Ref, VarTable
from .sat import CdclSolver, Encoder, SolverBudgetExceeded

SIDES = ("delta", "gamma")
VARIANTS = ("exact", "skolem")


def primed(name: Hashable) -> Hashable:
    """Name of the fresh copy of output ``name`` used by the skolem variant."""
    return f"{name}'" if isinstance(name, str) else (name, "'")


@dataclass
class CegarBudget:
    max_iterations: int | None = None      # counterexamples per call, all sides
    deadline: float | None = None          # time.monotonic() value
    conflict_limit: int | None = None      # per SAT call

    def expired(self) -> bool:
        return self.deadline is not None and time.monotonic() > self.deadline


@dataclass
class CegarStep:
    """One repair: the counterexample point and the cube added for it."""
    side: str
    index: int                 # 0-based output position
    point: tuple               # ((name, value), ...)
    cube: tuple                # ((name, value), ...), satisfied by ``point``
    before: Ref
    after: Ref


@dataclass
class CegarStats:
    iterations: int = 0
    solver_calls: int = 0
    shortcuts: int = 0
    wall_time: float = 0.0
    exhausted: bool = False
    steps: list = field(default_factory=list)

    def merge(self, other: "CegarStats"):
        self.iterations += other.iterations
        self.solver_calls += other.solver_calls
        self.shortcuts += other.shortcuts
        self.wall_time += other.wall_time
        self.exhausted |= other.exhausted
        self.steps.extend(other.steps)


def build_error_formula(m: Manager, phi: Ref, vars: VarTable, refs, i: int,
                        side: str = "delta", variant: str = "exact") -> Ref:
    """Error formula for output position ``i`` (0-based) as a single formula.

    ``refs`` holds the current delta (or gamma) refinements of ``phi``.  The
    incremental loop in :func:`perform_cegar` asserts the same constraints
    clause by clause; this form is for inspection and independent checks.
    """
    if side not in SIDES or variant not in VARIANTS:
        raise ValueError(f"unknown side/variant {side!r}/{variant!r}")
    ys = vars.outputs
    parts = [m.not_(refs[i])]
    for j in range(i + 1):
        g = refs[j] if side == "delta" else m.not_(refs[j])
        parts.append(m.iff(m.var(ys[j]), g))
    parts.append(m.not_(phi))
    if variant == "skolem":
        parts.append(m.rename(phi, {ys[j]: primed(ys[j]) for j in range(i + 1)}))
    return m.and_(*parts)


class _SideRepair:
    """Incremental CEGAR over one side (delta or gamma) of one formula."""

    def __init__(self, m: Manager, phi: Ref, vars: VarTable, side: str, variant: str,
                 budget: CegarBudget, stats: CegarStats, seed: int, generalize_attempts: int,
                 trace: Callable[[CegarStep], None] | None):
        self.m, self.phi, self.vars = m, phi, vars
        self.side, self.variant = side, variant
        self.budget, self.stats, self.trace = budget, stats, trace
        self.attempts = generalize_attempts
        self.support = m.support(phi)

        self.err = CdclSolver(seed)
        self.enc = Encoder(m, self.err)
        self.err.add_clause([-self.enc.lit(phi)])
        if variant == "skolem":
            ys = vars.outputs
            self.penc = Encoder(m, self.err, var_names={y: primed(y) for y in ys},
                                var_of=self.enc.var_of)
            self.err.add_clause([self.penc.lit(phi)])
            for y in ys:
                self.enc.var(y)
                self.penc.var(primed(y))

        self.gen = CdclSolver(seed)
        self.genc = Encoder(m, self.gen)
        self.gen_phi = self.genc.lit(phi)

    def _solve(self, solver: CdclSolver, assumptions) -> bool:
        self.stats.solver_calls += 1
        return solver.solve(assumptions, self.budget.conflict_limit, self.budget.deadline)

    def _relevant(self, i: int) -> list:
        later = set(self.vars.outputs[i + 1:])
        return [v for v in self.vars.all_vars
                if v in self.support and (v in later or v in self.vars.inputs)]

    def _generalize(self, i: int, point: list) -> list | None:
        """Shrink ``point`` to a cube inside Delta_i (Gamma_i), or None if outside."""
        genc = self.genc
        y = genc.var(self.vars.outputs[i])
        base = [self.gen_phi, -y if self.side == "delta" else y]
        lit_of = {name: genc.var(name) if val else -genc.var(name) for name, val in point}
        if self._solve(self.gen, base + [lit_of[n] for n, _ in point]):
            return None
        core = set(self.gen.core)
        cube = [(n, v) for n, v in point if lit_of[n] in core]
        tries = 0
        for lit in list(cube):
            if tries >= self.attempts:
                break
            if lit not in cube:
                continue
            trial = [c for c in cube if c != lit]
            tries += 1
            if not self._solve(self.gen, base + [lit_of[n] for n, _ in trial]):
                core = set(self.gen.core)
                cube = [(n, v) for n, v in trial if lit_of[n] in core]
        return cube

    def run(self, refs: list) -> bool:
        """Repair ``refs`` in place; True if every position was completed."""
        m, enc, err = self.m, self.enc, self.err
        ys = self.vars.outputs
        delta = self.side == "delta"
        for i, y in enumerate(ys):
            ylit = enc.var(y)
            if not (self.support & set(ys[:i + 1])):
                # phi does not mention y_1..y_i: both functions equal ~phi
                refs[i] = m.not_(self.phi)
                self.stats.shortcuts += 1
                self._chain(ylit, refs[i], delta)
                continue

            cur = refs[i]
            a = err.new_var()
            err.add_clause([-a, -enc.lit(cur)])
            err.add_clause([-a, -ylit if delta else ylit])
            if self.variant == "skolem":
                for y2 in ys[i + 1:]:
                    u, v = enc.var(y2), self.penc.var(primed(y2))
                    err.add_clause([-a, -u, v])
                    err.add_clause([-a, u, -v])
            relevant = self._relevant(i)
            cubes = []
            complete = True
            try:
                while True:
                    if self.budget.expired() or (
                            self.budget.max_iterations is not None
                            and self.stats.iterations >= self.budget.max_iterations):
                        complete = False
                        break
                    if not self._solve(err, [a]):
                        break
                    point = [(v, err.value(enc.var(v))) for v in relevant]
                    cube = self._generalize(i, point)
                    if cube is None:
                        # earlier positions are not exact, so the point is not
                        # a genuine miss; stop with a sound refinement
                        complete = False
                        break
                    self.stats.iterations += 1
                    err.add_clause([-a] + [-enc.var(n) if v else enc.var(n) for n, v in cube])
                    if self.trace is not None:
                        before = m.or_(cur, *(m.cube(c) for c in cubes))
                        after = m.or_(before, m.cube(cube))
                        self.trace(CegarStep(self.side, i, tuple(point), tuple(cube), before, after))
                    cubes.append(cube)
            except SolverBudgetExceeded:
                complete = False
            refs[i] = m.or_(cur, *(m.cube(c) for c in cubes))
            err.add_clause([-a])
            if not complete:
                self.stats.exhausted = True
                return False
            self._chain(ylit, refs[i], delta)
        return True

    def _chain(self, ylit: int, f: Ref, delta: bool):
        t = self.enc.lit(f)
        if not delta:
            t = -t
        self.err.add_clause([-ylit, t])
        self.err.add_clause([ylit, -t])


def perform_cegar(m: Manager, phi: Ref, vec: DeltaGammaVec, vars: VarTable, *,
                  variant: str = "exact", sides=SIDES, budget: CegarBudget | None = None,
                  seed: int = 0, generalize_attempts: int = 16,
                  trace: Callable[[CegarStep], None] | None = None) -> tuple[DeltaGammaVec, CegarStats]:
    """Repair the annotations ``vec`` of ``phi``.

    The returned vector is flagged exact only for the ``exact`` variant when
    every requested side ran to completion (and both sides were requested).
    Budget exhaustion returns the sound refinements reached so far.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown CEGAR variant {variant!r}")
    budget = budget or CegarBudget()
    stats = CegarStats()
    t0 = time.perf_counter()
    out = {"delta": list(vec.delta), "gamma": list(vec.gamma)}
    complete = True
    for side in sides:
        if side not in SIDES:
            raise ValueError(f"unknown side {side!r}")
        rep = _SideRepair(m, phi, vars, side, variant, budget, stats, seed, generalize_attempts, trace)
        complete &= rep.run(out[side])
    stats.wall_time = time.perf_counter() - t0
    exact = complete and variant == "exact" and set(sides) == set(SIDES)
    return DeltaGammaVec(out["delta"], out["gamma"], exact or vec.exact), stats
