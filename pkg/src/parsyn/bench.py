"""Benchmark specification generators.

* :func:`gen_factorization` builds the multiplier-equality specification: the
  inputs are the bits of a product P, the outputs are the bits of two factors
  A and B, and the specification says ``A * B == P`` with neither factor 1.
* :func:`gen_random_spec` builds seeded random formulas over a mix of AND,
  OR, NOT, ITE and XOR nodes.
"""

from __future__ import annotations

import random

from .formula import NOT, Manager, Ref, Spec, VarTable
from .sat import solve, tseitin

# ----------------------------------------------------------------------
# factorization (pure AND-inverter graph)


def _aig_or(m: Manager, a: Ref, b: Ref) -> Ref:
    return m.not_(m.and_(m.not_(a), m.not_(b)))


def _aig_xor(m: Manager, a: Ref, b: Ref) -> Ref:
    return _aig_or(m, m.and_(a, m.not_(b)), m.and_(m.not_(a), b))


def _aig_and_tree(m: Manager, fs: list[Ref]) -> Ref:
    fs = list(fs)
    if not fs:
        return m.true
    while len(fs) > 1:
        nxt = [m.and_(fs[k], fs[k + 1]) for k in range(0, len(fs) - 1, 2)]
        if len(fs) % 2:
            nxt.append(fs[-1])
        fs = nxt
    return fs[0]


def _ripple_add(m: Manager, xs: list[Ref], ys: list[Ref]) -> list[Ref]:
    """Sum of two little-endian bit vectors, one bit wider than the longer."""
    width = max(len(xs), len(ys))
    xs = xs + [m.false] * (width - len(xs))
    ys = ys + [m.false] * (width - len(ys))
    out = []
    carry = m.false
    for a, b in zip(xs, ys):
        ab = _aig_xor(m, a, b)
        out.append(_aig_xor(m, ab, carry))
        carry = _aig_or(m, m.and_(a, b), m.and_(carry, ab))
    out.append(carry)
    return out


def multiplier(m: Manager, a: list[Ref], b: list[Ref]) -> list[Ref]:
    """Array multiplier: little-endian product bits, ``len(a) + len(b)`` wide."""
    rows = [[m.and_(aj, bi) for aj in a] for bi in b]
    total = list(rows[0])
    for i in range(1, len(b)):
        high = _ripple_add(m, total[i:], rows[i])
        total = total[:i] + high
    width = len(a) + len(b)
    total = total + [m.false] * (width - len(total))
    return total[:width]


def factor_names(bits: int) -> tuple[list[str], list[str], list[str]]:
    """Product, first-factor and second-factor variable names, LSB first."""
    return ([f"p{k}" for k in range(2 * bits)], [f"a{k}" for k in range(bits)],
            [f"b{k}" for k in range(bits)])


def gen_factorization(bits: int, manager: Manager | None = None) -> Spec:
    """Specification ``A * B == P`` with ``A != 1`` and ``B != 1`` (n-bit factors)."""
    if not 2 <= bits <= 8:
        raise ValueError(f"factor width must be between 2 and 8 bits, got {bits}")
    m = manager or Manager()
    p_names, a_names, b_names = factor_names(bits)
    p = [m.var(n) for n in p_names]
    a = [m.var(n) for n in a_names]
    b = [m.var(n) for n in b_names]
    prod = multiplier(m, a, b)
    eqs = [m.not_(_aig_xor(m, pk, qk)) for pk, qk in zip(p, prod)]

    def is_one(v: list[Ref]) -> Ref:
        return _aig_and_tree(m, [v[0]] + [m.not_(x) for x in v[1:]])

    root = _aig_and_tree(m, eqs + [m.not_(is_one(a)), m.not_(is_one(b))])
    return Spec(m, root, VarTable(p_names, a_names + b_names))


# ----------------------------------------------------------------------
# random specifications

_OPS = ("and", "or", "not", "ite", "xor")


def _is_constant(m: Manager, f: Ref) -> bool:
    if m.is_const(f):
        return True
    sup = sorted(m.support(f))
    if len(sup) <= 14:
        t = m.truth_table(f, sup)
        return bool(t.all() or not t.any())
    return not solve(tseitin(m, f)) or not solve(tseitin(m, m.not_(f)))


def gen_random_spec(seed: int, nodes: int, n_inputs: int, n_outputs: int,
                    manager: Manager | None = None) -> Spec:
    """Seeded random specification with ``nodes`` internal nodes.

    Variables are ``x1..x{n_inputs}`` and ``y1..y{n_outputs}``.  The internal
    node count (non-leaf nodes reachable from the root) equals ``nodes``
    unless folding makes that impossible for this seed, in which case it is
    as close as the generator gets after a bounded number of retries.
    Candidates that are semantically constant are also retried, so constant
    specifications only come out when no retry avoided one.
    """
    if nodes < 1 or n_inputs < 0 or n_outputs < 1:
        raise ValueError("need nodes >= 1, n_inputs >= 0, n_outputs >= 1")
    rng = random.Random(seed)
    m = manager or Manager()
    xs = [f"x{k + 1}" for k in range(n_inputs)]
    ys = [f"y{k + 1}" for k in range(n_outputs)]
    vars = VarTable(xs, ys)
    names = xs + ys

    def leaf() -> Ref:
        v = m.var(rng.choice(names))
        return m.not_(v) if rng.random() < 0.5 else v

    def internal(f: Ref) -> int:
        return sum(1 for g in m.topo([f]) if not m.is_leaf(g))

    best = None
    for _attempt in range(50):
        pool: list[Ref] = []      # creation order, for determinism
        fresh: list[Ref] = []     # built but not yet used as a child

        def count() -> int:
            return len(pool) + max(len(fresh) - 1, 0)

        while count() < nodes:
            # once one node short, a node that reuses nothing fresh would
            # add itself plus a merge, so force consuming a fresh child
            force = count() == nodes - 1 and bool(fresh)
            op = rng.choice(_OPS)
            arity = {"not": 1, "ite": 3, "xor": 2}.get(op, rng.choice((2, 2, 3)))
            kids, popped = [], []
            for k in range(arity):
                if fresh and (rng.random() < 0.6 or (force and k == 0)):
                    popped.append(fresh.pop(rng.randrange(len(fresh))))
                    kids.append(popped[-1])
                elif pool and rng.random() < 0.5:
                    kids.append(rng.choice(pool))
                else:
                    kids.append(leaf())
            if op == "not" and not m.is_leaf(kids[0]) and m.kind(kids[0]) != NOT:
                g = m.not_(kids[0])
            elif op == "not":
                kids.append(leaf())
                g = m.and_(*kids)
            elif op == "and":
                g = m.and_(*kids)
            elif op == "or":
                g = m.or_(*kids)
            elif op == "ite":
                g = m.ite(*kids)
            else:
                g = m.xor(*kids)
            if m.is_leaf(g) or g in pool:
                # folded away or already built: undo the consumption
                fresh.extend(popped)
                continue
            pool.append(g)
            fresh.append(g)
        # merge whatever is still unused so every node is reachable
        while len(fresh) > 1:
            a = fresh.pop(0)
            b = fresh.pop(0)
            fresh.append(m.and_(a, b) if rng.random() < 0.5 else m.or_(a, b))
        root = fresh[0] if fresh else leaf()
        score = (abs(internal(root) - nodes), _is_constant(m, root))
        if best is None or score < best[1]:
            best = (root, score)
        if score == (0, False):
            break
    return Spec(m, best[0], vars)


def random_corpus(count: int, seed: int = 0, max_inputs: int = 6, max_outputs: int = 6,
                  max_nodes: int = 40) -> list[Spec]:
    """Deterministic family of small random specifications."""
    rng = random.Random(seed)
    specs = []
    for k in range(count):
        specs.append(gen_random_spec(
            seed * 100003 + k,
            nodes=rng.randint(3, max_nodes),
            n_inputs=rng.randint(1, max_inputs),
            n_outputs=rng.randint(1, max_outputs),
        ))
    return specs
