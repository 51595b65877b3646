"""Manager/worker evaluation of the formula DAG.

The manager thread owns the ready queue and the pending-children counters;
workers pull one node at a time, compute its :class:`QuadAnnotation` from the
children's annotations (composition, then CEGAR where needed) and hand it
back.  A node becomes ready when all of its distinct children are done.

Only the polarities that are actually needed are repaired by CEGAR: the root
needs its positive polarity, NOT flips the demand, AND/OR pass it through and
template operators need both polarities of every child.
"""

from __future__ import annotations

import logging
import queue
import threading
import time
from collections import deque
from dataclasses import dataclass, field

from .cegar import CegarBudget, CegarStats, perform_cegar
from .compose import QuadAnnotation, compose_node, leaf_delta_gamma
from .formula import AND, NOT, OR, Manager, Ref, VarTable

log = logging.getLogger(__name__)

POS, NEG = True, False


class SchedulerError(RuntimeError):
    pass


class PartialResultError(SchedulerError):
    """Global timeout: ``annotations`` holds the nodes finished so far."""

    def __init__(self, msg: str, annotations: dict):
        super().__init__(msg)
        self.annotations = annotations


@dataclass
class SchedulerConfig:
    workers: int = 1
    global_timeout: float | None = None        # seconds for the whole run
    cegar_node_timeout: float | None = None    # seconds after which internal nodes skip CEGAR
    cegar_variant: str = "exact"
    cegar_max_iterations: int | None = None    # per node
    generalize_attempts: int = 16
    use_templates: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass
class SynthesisTask:
    node: Ref
    children: tuple            # QuadAnnotation per child position
    demand: frozenset          # polarities needing CEGAR
    is_root: bool
    cegar_deadline: float | None
    global_deadline: float | None


@dataclass
class TaskResult:
    node: Ref
    annotation: QuadAnnotation
    cegar_ran: bool = False
    cegar: CegarStats = field(default_factory=CegarStats)
    wall_time: float = 0.0
    worker: int = -1

    def stats_record(self, m: Manager) -> dict:
        return {
            "node": m.to_str(self.node) if m.size(self.node) <= 12 else f"node#{self.node}",
            "kind": m.kind(self.node),
            "worker": self.worker,
            "cegar_ran": self.cegar_ran,
            "cegar_iterations": self.cegar.iterations,
            "solver_calls": self.cegar.solver_calls,
            "cegar_exhausted": self.cegar.exhausted,
            "exact": self.annotation.pos.exact,
            "wall_time": round(self.wall_time, 6),
        }


@dataclass
class RunResult:
    root: Ref
    annotations: dict          # node -> QuadAnnotation
    results: dict              # node -> TaskResult
    completion_order: list
    wall_time: float
    requeues: int = 0

    @property
    def root_annotation(self) -> QuadAnnotation:
        return self.annotations[self.root]


def demand_polarities(m: Manager, root: Ref) -> dict:
    """Polarities of each node that the root's positive annotation depends on."""
    order = m.topo([root])
    demand = {g: set() for g in order}
    demand[root].add(POS)
    for g in reversed(order):
        d = demand[g]
        if not d or m.is_leaf(g):
            continue
        k = m.kind(g)
        for c in m.children(g):
            if k == NOT:
                demand[c].update(not p for p in d)
            elif k in (AND, OR):
                demand[c].update(d)
            else:
                demand[c].update((POS, NEG))
    return {g: frozenset(d) for g, d in demand.items()}


def compute_node(m: Manager, vars: VarTable, task: SynthesisTask, config: SchedulerConfig,
                 worker: int = -1) -> TaskResult:
    """Annotation of one node from its children's annotations."""
    t0 = time.perf_counter()
    node = task.node
    if m.is_leaf(node):
        return TaskResult(node, leaf_delta_gamma(m, node, vars), wall_time=time.perf_counter() - t0,
                          worker=worker)
    quad = compose_node(m, node, task.children, use_templates=config.use_templates)
    res = TaskResult(node, quad, worker=worker)
    if m.kind(node) == NOT and not task.is_root:
        # the child's repaired polarities carry over; the root still gets its
        # own CEGAR in case the child skipped it
        res.wall_time = time.perf_counter() - t0
        return res
    now = time.monotonic()
    allowed = task.is_root or task.cegar_deadline is None or now < task.cegar_deadline
    if allowed:
        deadline = task.global_deadline
        if not task.is_root and task.cegar_deadline is not None:
            deadline = task.cegar_deadline if deadline is None else min(deadline, task.cegar_deadline)
        budget = CegarBudget(max_iterations=config.cegar_max_iterations, deadline=deadline)
        vecs = {POS: quad.pos, NEG: quad.neg}
        for pol in (POS, NEG):
            if pol not in task.demand or vecs[pol].exact:
                continue
            phi = node if pol else m.not_(node)
            vecs[pol], st = perform_cegar(m, phi, vecs[pol], vars, variant=config.cegar_variant,
                                          budget=budget, seed=config.seed,
                                          generalize_attempts=config.generalize_attempts)
            res.cegar.merge(st)
            res.cegar_ran = True
        res.annotation = QuadAnnotation(vecs[POS], vecs[NEG])
    res.wall_time = time.perf_counter() - t0
    return res


def run(m: Manager, root: Ref, vars: VarTable, config: SchedulerConfig | None = None) -> RunResult:
    """Annotate every node under ``root`` with a pool of worker threads.

    Raises :class:`PartialResultError` when ``global_timeout`` elapses and
    :class:`SchedulerError` when a node fails twice.
    """
    config = config or SchedulerConfig()
    t0 = time.monotonic()
    global_deadline = None if config.global_timeout is None else t0 + config.global_timeout
    cegar_deadline = None if config.cegar_node_timeout is None else t0 + config.cegar_node_timeout

    order = m.topo([root])
    demand = demand_polarities(m, root)
    parents: dict[Ref, list] = {g: [] for g in order}
    pending: dict[Ref, int] = {}
    for g in order:
        kids = [] if m.is_leaf(g) else list(dict.fromkeys(m.children(g)))
        pending[g] = len(kids)
        for c in kids:
            parents[c].append(g)
    ready = deque(g for g in order if pending[g] == 0)

    annotations: dict[Ref, QuadAnnotation] = {}
    results: dict[Ref, TaskResult] = {}
    completion: list[Ref] = []
    retries: dict[Ref, int] = {}

    tasks: queue.Queue = queue.Queue()
    done: queue.Queue = queue.Queue()

    def worker(wid: int):
        while True:
            task = tasks.get()
            if task is None:
                return
            try:
                done.put((task, compute_node(m, vars, task, config, wid), None))
            except Exception as exc:  # reported to the manager
                done.put((task, None, exc))

    threads = [threading.Thread(target=worker, args=(w,), daemon=True, name=f"parsyn-worker-{w}")
               for w in range(config.workers)]
    for th in threads:
        th.start()
    idle = config.workers
    try:
        while len(annotations) < len(order):
            while idle and ready:
                g = ready.popleft()
                kids = () if m.is_leaf(g) else tuple(annotations[c] for c in m.children(g))
                tasks.put(SynthesisTask(g, kids, demand[g], g == root, cegar_deadline, global_deadline))
                idle -= 1
            timeout = None if global_deadline is None else max(0.0, global_deadline - time.monotonic())
            try:
                task, res, exc = done.get(timeout=timeout)
            except queue.Empty:
                raise PartialResultError(
                    f"global timeout after {config.global_timeout}s with "
                    f"{len(annotations)}/{len(order)} nodes done", dict(annotations)) from None
            idle += 1
            if global_deadline is not None and time.monotonic() >= global_deadline:
                # a result that arrives late may have been cut short by the deadline
                raise PartialResultError(
                    f"global timeout after {config.global_timeout}s with "
                    f"{len(annotations)}/{len(order)} nodes done", dict(annotations))
            if exc is not None:
                if retries.get(task.node, 0) >= 1:
                    raise SchedulerError(f"node {task.node} failed twice") from exc
                retries[task.node] = retries.get(task.node, 0) + 1
                log.warning("node %s failed (%s); requeueing", task.node, exc)
                ready.appendleft(task.node)
                continue
            annotations[task.node] = res.annotation
            results[task.node] = res
            completion.append(task.node)
            for p in parents[task.node]:
                pending[p] -= 1
                if pending[p] == 0:
                    ready.append(p)
    finally:
        for _ in threads:
            tasks.put(None)
    return RunResult(root, annotations, results, completion, time.monotonic() - t0,
                     sum(retries.values()))
