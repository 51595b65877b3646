import itertools

import pytest
from hypothesis import strategies as st

from parsyn.formula import Manager, VarTable

# Formula trees as nested tuples, evaluated independently of the manager.

NAMES = ("x1", "x2", "x3", "y1", "y2", "y3")


def trees(names=NAMES, max_leaves=12):
    leaf = st.one_of(st.sampled_from(names), st.booleans())

    def extend(inner):
        return st.one_of(
            st.tuples(st.just("not"), inner),
            st.tuples(st.sampled_from(["and", "or"]), st.lists(inner, min_size=2, max_size=3)),
            st.tuples(st.just("xor"), inner, inner),
            st.tuples(st.just("ite"), inner, inner, inner),
        )

    return st.recursive(leaf, extend, max_leaves=max_leaves)


def build(m, t):
    if isinstance(t, bool):
        return m.const(t)
    if isinstance(t, str):
        return m.var(t)
    op = t[0]
    if op == "not":
        return m.not_(build(m, t[1]))
    if op == "and":
        return m.and_(*(build(m, c) for c in t[1]))
    if op == "or":
        return m.or_(*(build(m, c) for c in t[1]))
    if op == "xor":
        return m.xor(build(m, t[1]), build(m, t[2]))
    return m.ite(build(m, t[1]), build(m, t[2]), build(m, t[3]))


def tree_eval(t, env):
    if isinstance(t, bool):
        return t
    if isinstance(t, str):
        return env[t]
    op = t[0]
    if op == "not":
        return not tree_eval(t[1], env)
    if op == "and":
        return all(tree_eval(c, env) for c in t[1])
    if op == "or":
        return any(tree_eval(c, env) for c in t[1])
    if op == "xor":
        return tree_eval(t[1], env) != tree_eval(t[2], env)
    return tree_eval(t[2], env) if tree_eval(t[1], env) else tree_eval(t[3], env)


def assignments(names):
    for bits in itertools.product((False, True), repeat=len(names)):
        yield dict(zip(names, bits))


@pytest.fixture
def m():
    return Manager()


@pytest.fixture
def xy3():
    return VarTable(("x1", "x2", "x3"), ("y1", "y2", "y3"))


def annotate(m, root, vars, use_templates=False):
    """Bottom-up composition without CEGAR, for every node under ``root``."""
    from parsyn.compose import compose_node, leaf_delta_gamma

    ann = {}
    for g in m.topo([root]):
        if m.is_leaf(g):
            ann[g] = leaf_delta_gamma(m, g, vars)
        else:
            ann[g] = compose_node(m, g, [ann[c] for c in m.children(g)], use_templates)
    return ann


def small_corpus(count, seed=0, max_inputs=4, max_outputs=4, max_nodes=25):
    from parsyn.bench import random_corpus

    return random_corpus(count, seed, max_inputs, max_outputs, max_nodes)
