import itertools

import pytest

from parsyn import oracle
from parsyn.bench import factor_names, gen_factorization
from parsyn.formula import FormulaError, Manager, Spec, VarTable
from parsyn.pipeline import (SynthesisConfig, extract_candidates, order_outputs, reverse_substitute,
                             synthesize, verify)

from conftest import small_corpus


def _spec(m, root, inputs, outputs):
    return Spec(m, root, VarTable(inputs, outputs))


def _bits(value, width):
    return [bool(value >> k & 1) for k in range(width)]


def _value(env, names):
    return sum(1 << k for k, n in enumerate(names) if env[n])


def factor_table(bits):
    """X -> set of (a, b) with a * b == X and neither factor equal to 1."""
    out = {}
    for a, b in itertools.product(range(1 << bits), repeat=2):
        if a != 1 and b != 1:
            out.setdefault(a * b, set()).add((a, b))
    return out


def test_equivalence_spec(m):
    res = synthesize(_spec(m, m.iff(m.var("y1"), m.var("x1")), ("x1",), ("y1",)), check=True)
    assert res.skolem.f[0] == m.var("x1")
    assert res.verification.verdict == "verified"


def test_single_output_band(m):
    y1, x1 = m.var("y1"), m.var("x1")
    phi = m.or_(y1, x1)
    spec = _spec(m, phi, ("x1",), ("y1",))
    for extract in ("gamma", "delta"):
        f = synthesize(spec, SynthesisConfig(extract=extract)).skolem.f[0]
        p1, p0 = m.substitute(phi, {"y1": m.true}), m.substitute(phi, {"y1": m.false})
        for x in (False, True):
            env = {"x1": x}
            lo = m.eval(p1, env) and not m.eval(p0, env)
            hi = m.eval(p1, env) or not m.eval(p0, env)
            assert (not lo or m.eval(f, env)) and (not m.eval(f, env) or hi)
        # ~x1 -> f is the whole constraint here
        assert m.eval(f, {"x1": False})


def test_factorization_two_bits():
    spec = gen_factorization(2)
    res = synthesize(spec, SynthesisConfig(workers=2), check=True)
    assert res.verification.ok
    m = spec.manager
    p, a, b = factor_names(2)
    f = res.skolem.as_dict()
    table = factor_table(2)
    for x in range(16):
        env = dict(zip(p, _bits(x, 4)))
        av = _value({n: m.eval(f[n], env) for n in a}, a)
        bv = _value({n: m.eval(f[n], env) for n in b}, b)
        if x in table:
            assert (av, bv) in table[x], x
    env = dict(zip(p, _bits(9, 4)))
    assert (_value({n: m.eval(f[n], env) for n in a}, a), _value({n: m.eval(f[n], env) for n in b}, b)) == (3, 3)


def test_reverse_substitution(m):
    vars = VarTable(("x1",), ("y1", "y2"))
    x1, y2 = m.var("x1"), m.var("y2")
    f = reverse_substitute(m, [m.and_(y2, x1), m.not_(x1)], vars)
    assert f == (m.false, m.not_(x1))
    f = reverse_substitute(m, [m.or_(y2, x1), m.not_(x1)], vars)
    assert f == (m.true, m.not_(x1))
    with pytest.raises(FormulaError):
        reverse_substitute(m, [m.var("y1"), m.true], vars)
    with pytest.raises(FormulaError):
        reverse_substitute(m, [m.true, y2], vars)
    with pytest.raises(ValueError):
        reverse_substitute(m, [m.true], vars)


def test_reverse_substitution_matches_enumeration():
    for spec in small_corpus(20, seed=9):
        m, vars = spec.manager, spec.vars
        res = synthesize(spec)
        g, f = res.skolem.g, res.skolem.f
        v = res.spec.vars
        for env in ({x: b for x, b in zip(v.inputs, bits)}
                    for bits in itertools.product((False, True), repeat=len(v.inputs))):
            full = dict(env)
            for i in range(len(v.outputs) - 1, -1, -1):
                full[v.outputs[i]] = m.eval(g[i], full)
                assert m.eval(f[i], env) == full[v.outputs[i]]


def test_verify_reports_witness(m):
    spec = _spec(m, m.and_(m.var("y1"), m.var("x1")), ("x1",), ("y1",))
    rep = verify(spec, [m.false])
    assert rep.verdict == "falsified" and rep.witness == {"x1": True}
    assert not rep.ok
    assert verify(spec, {"y1": m.true}).verdict == "verified"
    with pytest.raises(FormulaError):
        verify(spec, [m.var("y1")])


@pytest.mark.parametrize("extract", ["gamma", "delta"])
def test_results_lie_in_solution_band(extract):
    for spec in small_corpus(40, seed=10):
        res = synthesize(spec, SynthesisConfig(extract=extract), check=True)
        m, vars = spec.manager, res.spec.vars
        assert res.verification.verdict == "verified"
        assert oracle.solution_band_violations(m, res.spec.root, vars, res.skolem.f) == []
        assert oracle.skolem_table_check(m, res.spec.root, vars, res.skolem.f) is None
        assert oracle.band_holds(m, res.spec.root, vars, res.skolem.g)


def test_band_oracle_rejects_bad_vectors(m):
    vars = VarTable(("x1",), ("y1", "y2"))
    y1, y2, x1 = m.var("y1"), m.var("y2"), m.var("x1")
    phi = m.and_(m.iff(y1, x1), m.or_(y2, y1))
    assert oracle.solution_band_violations(m, phi, vars, [x1, m.true]) == []
    assert oracle.solution_band_violations(m, phi, vars, [m.not_(x1), m.true]) == [0]
    # y2 = 0 forces y1 = 1, which fails when x1 = 0
    assert oracle.solution_band_violations(m, phi, vars, [x1, m.false]) == [1]


def test_configuration_variants_agree_on_validity():
    configs = [SynthesisConfig(use_templates=True), SynthesisConfig(detect_ops=True, use_templates=True),
               SynthesisConfig(cegar_variant="skolem"), SynthesisConfig(order="given"),
               SynthesisConfig(cegar_node_timeout=0, workers=3)]
    for spec in small_corpus(15, seed=12):
        for cfg in configs:
            res = synthesize(spec, cfg, check=True)
            assert res.verification.ok, cfg


def test_output_order_modes(m):
    vars = VarTable(("x1",), ("y1", "y2"))
    spec = Spec(m, m.var("y1"), vars)
    assert order_outputs(spec, "given").vars.outputs == ("y1", "y2")
    assert order_outputs(spec).vars.outputs == ("y2", "y1")
    with pytest.raises(ValueError):
        order_outputs(spec, "random")
    res = synthesize(spec)
    with pytest.raises(ValueError):
        extract_candidates(m, res.run, "beta")


def test_timings_recorded(m):
    res = synthesize(_spec(m, m.var("y1"), ("x1",), ("y1",)), check=True)
    assert set(res.timings) == {"order", "annotate", "extract", "verify"}
    assert res.wall_time >= res.timings["annotate"]
