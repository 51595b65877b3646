import numpy as np
import pytest

from parsyn import oracle, scheduler
from parsyn.bench import gen_factorization
from parsyn.formula import VarTable
from parsyn.scheduler import (NEG, POS, PartialResultError, SchedulerConfig, SchedulerError,
                              demand_polarities, run)

from conftest import small_corpus


def _tables(m, vec, vars):
    return [oracle.table(m, f, vars) for f in (*vec.delta, *vec.gamma)]


def test_single_leaf(m):
    vars = VarTable(("x1",), ("y1",))
    res = run(m, m.var("y1"), vars)
    assert res.completion_order == [m.var("y1")]
    q = res.root_annotation
    assert q.pos.delta == (m.true,) and q.pos.gamma == (m.false,)


def test_chain_completes_in_topological_order(m):
    vars = VarTable(("x1", "x2"), ("y1", "y2"))
    f = m.var("y1")
    for k, name in enumerate(("x1", "y2", "x2", "y1")):
        f = (m.and_ if k % 2 else m.or_)(f, m.not_(m.var(name)))
    res = run(m, f, vars, SchedulerConfig(workers=8))
    pos = {g: k for k, g in enumerate(res.completion_order)}
    assert set(pos) == set(m.topo([f]))
    for g in pos:
        if not m.is_leaf(g):
            assert all(pos[c] < pos[g] for c in m.children(g))
    d, g = oracle.exact_delta_gamma(m, f, vars)
    assert all(np.array_equal(a, b) for a, b in zip(_tables(m, res.root_annotation.pos, vars), d + g))


def test_worker_counts_agree():
    for spec in small_corpus(15, seed=8):
        m, vars = spec.manager, spec.vars
        tabs = [_tables(m, run(m, spec.root, vars, SchedulerConfig(workers=w)).root_annotation.pos, vars)
                for w in (1, 2, 8)]
        for other in tabs[1:]:
            assert all(np.array_equal(a, b) for a, b in zip(tabs[0], other))


def test_or_root_needs_no_solver(m):
    vars = VarTable(("x1",), ("y1",))
    f = m.or_(m.var("y1"), m.var("x1"))
    res = run(m, f, vars)
    r = res.results[f]
    assert res.root_annotation.pos.exact
    assert r.cegar.solver_calls == 0


def test_and_root_is_repaired(m):
    vars = VarTable(("x1",), ("y1",))
    f = m.and_(m.var("y1"), m.var("x1"))
    res = run(m, f, vars)
    assert res.results[f].cegar_ran
    assert res.root_annotation.pos.exact
    d, _ = oracle.exact_delta_gamma(m, f, vars)
    assert np.array_equal(oracle.table(m, res.root_annotation.pos.delta[0], vars), d[0])


def test_internal_node_skips_cegar_after_timeout(m):
    vars = VarTable(("x1", "x2"), ("y1", "y2"))
    y1, y2, x1, x2 = (m.var(n) for n in ("y1", "y2", "x1", "x2"))
    ite = m.ite(y1, m.and_(y2, x1), m.and_(m.not_(y2), x2))
    root = m.or_(ite, m.and_(x1, x2))
    res = run(m, root, vars, SchedulerConfig(cegar_node_timeout=0))
    r = res.results[ite]
    assert not r.cegar_ran and not r.annotation.pos.exact
    assert res.results[root].cegar_ran
    d, g = oracle.exact_delta_gamma(m, root, vars)
    tabs = _tables(m, res.root_annotation.pos, vars)
    assert all(np.array_equal(a, b) for a, b in zip(tabs, d + g))


def test_global_timeout_raises_partial_result():
    spec = gen_factorization(3)
    with pytest.raises(PartialResultError) as info:
        run(spec.manager, spec.root, spec.vars, SchedulerConfig(workers=2, global_timeout=0.05))
    assert len(info.value.annotations) < spec.manager.size(spec.root)


def test_failed_task_is_requeued_once(m, monkeypatch):
    vars = VarTable(("x1",), ("y1",))
    f = m.and_(m.var("y1"), m.var("x1"))
    real = scheduler.compute_node
    failures = []

    def flaky(mm, vv, task, config, worker=-1):
        if task.node == f and not failures:
            failures.append(task.node)
            raise RuntimeError("worker crashed")
        return real(mm, vv, task, config, worker)

    monkeypatch.setattr(scheduler, "compute_node", flaky)
    res = run(m, f, vars, SchedulerConfig(workers=2))
    assert res.requeues == 1 and res.root_annotation.pos.exact


def test_repeated_failure_is_fatal(m, monkeypatch):
    vars = VarTable(("x1",), ("y1",))
    f = m.and_(m.var("y1"), m.var("x1"))
    real = scheduler.compute_node

    def broken(mm, vv, task, config, worker=-1):
        if task.node == f:
            raise RuntimeError("worker crashed")
        return real(mm, vv, task, config, worker)

    monkeypatch.setattr(scheduler, "compute_node", broken)
    with pytest.raises(SchedulerError, match="failed twice"):
        run(m, f, vars)


def test_demand_polarities(m):
    a, b, c = m.var("a"), m.var("b"), m.var("c")
    inner = m.and_(a, b)
    f = m.or_(m.not_(inner), m.ite(a, b, c))
    d = demand_polarities(m, f)
    assert d[f] == {POS}
    assert d[inner] == {NEG}
    assert d[a] == {POS, NEG}       # reached through both NOT and ITE
    assert d[c] == {POS, NEG}
    # a negated variable is a leaf: demand stops there
    g = m.and_(m.not_(a), b)
    dg = demand_polarities(m, g)
    assert dg[m.not_(a)] == {POS} and not dg.get(a)


def test_invalid_worker_count():
    with pytest.raises(ValueError):
        SchedulerConfig(workers=0)


def test_negated_root_still_repaired_after_timeout(m):
    vars = VarTable(("x1",), ("y1",))
    inner = m.or_(m.and_(m.var("y1"), m.var("x1")), m.and_(m.not_(m.var("y1")), m.not_(m.var("x1"))))
    root = m.not_(m.and_(inner, m.var("x1")))
    res = run(m, root, vars, SchedulerConfig(cegar_node_timeout=0))
    assert res.results[root].cegar_ran or res.root_annotation.pos.exact
    d, g = oracle.exact_delta_gamma(m, root, vars)
    assert all(np.array_equal(a, b) for a, b in zip(_tables(m, res.root_annotation.pos, vars), d + g))
