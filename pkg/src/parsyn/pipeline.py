"""End-to-end synthesis: order outputs, annotate, extract, substitute, verify."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .formula import FormulaError, Manager, Ref, Spec, VarTable
from .sat import CdclSolver, Encoder, SolverBudgetExceeded
from .scheduler import RunResult, SchedulerConfig, run

EXTRACT_MODES = ("gamma", "delta")
ORDER_MODES = ("fanin", "given")


@dataclass
class SynthesisConfig(SchedulerConfig):
    extract: str = "gamma"        # g_i = ~gamma_i ("gamma") or delta_i ("delta")
    order: str = "fanin"          # output order heuristic
    detect_ops: bool = False      # fold AIG patterns back into ITE/XOR first

    def __post_init__(self):
        super().__post_init__()
        if self.extract not in EXTRACT_MODES:
            raise ValueError(f"extract must be one of {EXTRACT_MODES}")
        if self.order not in ORDER_MODES:
            raise ValueError(f"order must be one of {ORDER_MODES}")

    def scheduler_config(self) -> SchedulerConfig:
        return SchedulerConfig(**{f: getattr(self, f) for f in SchedulerConfig.__dataclass_fields__})


@dataclass
class SkolemVector:
    """Candidates ``g`` (over X and later outputs) and functions ``f`` over X."""
    vars: VarTable
    g: tuple
    f: tuple

    def as_dict(self) -> dict:
        return dict(zip(self.vars.outputs, self.f))


@dataclass
class VerificationReport:
    verdict: str                  # "verified", "falsified" or "unknown"
    witness: dict | None = None   # input assignment when falsified
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return self.verdict == "verified"


@dataclass
class SynthesisResult:
    spec: Spec                    # with the output order actually used
    skolem: SkolemVector
    run: RunResult
    wall_time: float = 0.0
    verification: VerificationReport | None = None
    timings: dict = field(default_factory=dict)


def order_outputs(spec: Spec, mode: str = "fanin") -> Spec:
    """Spec with outputs reordered by the chosen heuristic."""
    if mode == "given":
        return spec
    if mode != "fanin":
        raise ValueError(f"unknown order mode {mode!r}")
    return Spec(spec.manager, spec.root, spec.manager.order_outputs(spec.root, spec.vars))


def extract_candidates(m: Manager, run_result: RunResult, mode: str = "gamma") -> tuple:
    vec = run_result.root_annotation.pos
    if mode == "gamma":
        return tuple(m.not_(g) for g in vec.gamma)
    if mode == "delta":
        return tuple(vec.delta)
    raise ValueError(f"unknown extract mode {mode!r}")


def reverse_substitute(m: Manager, g: Sequence[Ref], vars: VarTable) -> tuple:
    """Turn candidates g_i(X, y_{i+1}..y_n) into functions of X alone.

    f_n = g_n, then f_i = g_i with every later y_j replaced by f_j.
    """
    ys = vars.outputs
    if len(g) != len(ys):
        raise ValueError("one candidate per output expected")
    allowed = set(vars.inputs)
    f: list[Ref | None] = [None] * len(ys)
    mapping: dict = {}
    memo: dict = {}
    for i in range(len(ys) - 1, -1, -1):
        extra = m.support(g[i]) - allowed
        if extra:
            raise FormulaError(
                f"candidate for {ys[i]!r} depends on {sorted(map(str, extra))}, "
                f"which are not later outputs or inputs")
        f[i] = m.substitute(g[i], mapping, memo)
        mapping[ys[i]] = f[i]
        allowed.add(ys[i])
    return tuple(f)


def verify(spec: Spec, f: Sequence[Ref] | Mapping, *, conflict_limit: int | None = None,
           deadline: float | None = None, seed: int = 0) -> VerificationReport:
    """Check that ``f`` realizes the outputs of ``spec``.

    Searches for X, Y with phi(X, Y) true but phi(X, F(X)) false.
    """
    t0 = time.perf_counter()
    m, vars = spec.manager, spec.vars
    if isinstance(f, Mapping):
        f = [f[y] for y in vars.outputs]
    for fi in f:
        extra = m.support(fi) - set(vars.inputs)
        if extra:
            raise FormulaError(f"function depends on non-input variables {sorted(map(str, extra))}")
    subst = m.substitute(spec.root, dict(zip(vars.outputs, f)))
    solver = CdclSolver(seed)
    enc = Encoder(m, solver)
    solver.add_clause([enc.lit(spec.root)])
    solver.add_clause([-enc.lit(subst)])
    for x in vars.inputs:
        enc.var(x)
    try:
        sat = solver.solve((), conflict_limit, deadline)
    except SolverBudgetExceeded:
        return VerificationReport("unknown", wall_time=time.perf_counter() - t0)
    if not sat:
        return VerificationReport("verified", wall_time=time.perf_counter() - t0)
    witness = {x: solver.value(enc.var(x)) for x in vars.inputs}
    return VerificationReport("falsified", witness, time.perf_counter() - t0)


def synthesize(spec: Spec, config: SynthesisConfig | None = None, *, check: bool = False) -> SynthesisResult:
    """Compute Skolem functions for the outputs of ``spec``."""
    config = config or SynthesisConfig()
    t0 = time.perf_counter()
    m = spec.manager
    if config.detect_ops:
        spec = Spec(m, m.detect_ops(spec.root), spec.vars)
    spec = order_outputs(spec, config.order)
    t1 = time.perf_counter()
    result = run(m, spec.root, spec.vars, config.scheduler_config())
    t2 = time.perf_counter()
    g = extract_candidates(m, result, config.extract)
    f = reverse_substitute(m, g, spec.vars)
    t3 = time.perf_counter()
    out = SynthesisResult(spec, SkolemVector(spec.vars, g, f), result)
    if check:
        out.verification = verify(spec, f, seed=config.seed)
    out.wall_time = time.perf_counter() - t0
    out.timings = {"order": t1 - t0, "annotate": t2 - t1, "extract": t3 - t2,
                   "verify": (out.verification.wall_time if out.verification else 0.0)}
    return out


__all__ = [
    "SynthesisConfig", "SkolemVector", "VerificationReport", "SynthesisResult",
    "order_outputs", "extract_candidates", "reverse_substitute", "verify", "synthesize",
]
