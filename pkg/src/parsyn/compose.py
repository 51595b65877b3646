"""Bottom-up composition of Delta/Gamma annotations.

For a node N and output y_i:

* ``delta[i]`` under-approximates Delta_i(N) = (~ exists y_1..y_{i-1}. N)[y_i := 0],
  the condition under which y_i cannot be 0;
* ``gamma[i]`` under-approximates Gamma_i(N) = (~ exists y_1..y_{i-1}. N)[y_i := 1].

Every node carries a :class:`QuadAnnotation`: one vector for N and one for ~N.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .formula import AND, ITE, NOT, OR, XOR, FormulaError, Manager, Ref, VarTable, transfer


@dataclass(frozen=True)
class DeltaGammaVec:
    delta: tuple
    gamma: tuple
    exact: bool

    def __post_init__(self):
        object.__setattr__(self, "delta", tuple(self.delta))
        object.__setattr__(self, "gamma", tuple(self.gamma))
        if len(self.delta) != len(self.gamma):
            raise ValueError("delta and gamma vectors differ in length")

    def __len__(self):
        return len(self.delta)

    def side(self, name: str) -> tuple:
        return self.delta if name == "delta" else self.gamma


@dataclass(frozen=True)
class QuadAnnotation:
    pos: DeltaGammaVec    # annotations of N
    neg: DeltaGammaVec    # annotations of ~N

    def swap(self) -> "QuadAnnotation":
        return QuadAnnotation(self.neg, self.pos)

    def polarity(self, positive: bool) -> DeltaGammaVec:
        return self.pos if positive else self.neg


# ----------------------------------------------------------------------
# leaves

def _literal_vec(m: Manager, phi: Ref, vars: VarTable) -> DeltaGammaVec:
    n = len(vars.outputs)
    not_phi = m.not_(phi)
    if m.is_const(phi):
        return DeltaGammaVec([not_phi] * n, [not_phi] * n, True)
    positive = m.is_var(phi)
    name = m.label(phi if positive else m.children(phi)[0])
    if name not in vars.outputs:
        return DeltaGammaVec([not_phi] * n, [not_phi] * n, True)
    k = vars.outputs.index(name)
    delta, gamma = [], []
    for i in range(n):
        if i < k:
            delta.append(not_phi)
            gamma.append(not_phi)
        elif i == k:
            # y_k := 0 falsifies y_k; y_k := 1 falsifies ~y_k
            delta.append(m.const(positive))
            gamma.append(m.const(not positive))
        else:
            # y_k already quantified: exists y_k. (+-y_k) is true
            delta.append(m.false)
            gamma.append(m.false)
    return DeltaGammaVec(delta, gamma, True)


def leaf_delta_gamma(m: Manager, leaf: Ref, vars: VarTable) -> QuadAnnotation:
    """Exact annotations of a constant or literal, both polarities."""
    if not m.is_leaf(leaf):
        raise FormulaError("leaf_delta_gamma expects a constant or a literal")
    return QuadAnnotation(_literal_vec(m, leaf, vars), _literal_vec(m, m.not_(leaf), vars))


# ----------------------------------------------------------------------
# AND / OR

def compose_or(m: Manager, children: Sequence[DeltaGammaVec]) -> DeltaGammaVec:
    """OR node: conjunction of the children's annotations, exact if they are."""
    if len(children) < 2:
        raise ValueError("compose_or needs at least two children")
    n = len(children[0])
    delta = [m.and_(*(c.delta[i] for c in children)) for i in range(n)]
    gamma = [m.and_(*(c.gamma[i] for c in children)) for i in range(n)]
    return DeltaGammaVec(delta, gamma, all(c.exact for c in children))


def compose_and(m: Manager, children: Sequence[DeltaGammaVec]) -> DeltaGammaVec:
    """AND node: disjunction of the children's annotations (one-sided)."""
    if len(children) < 2:
        raise ValueError("compose_and needs at least two children")
    n = len(children[0])
    delta = [m.or_(*(c.delta[i] for c in children)) for i in range(n)]
    gamma = [m.or_(*(c.gamma[i] for c in children)) for i in range(n)]
    return DeltaGammaVec(delta, gamma, False)


# ----------------------------------------------------------------------
# operator templates

OPERATORS: dict[str, tuple[int | None, Callable]] = {
    "and": (None, lambda *z: all(z)),
    "or": (None, lambda *z: any(z)),
    "ite": (3, lambda s, a, b: a if s else b),
    "xor": (2, lambda a, b: a != b),
    # (z1 xor z2) and (z1 xor z3)
    "xor_pair": (3, lambda a, b, c: (a != b) and (a != c)),
}

KIND_OPCODE = {AND: "and", OR: "or", ITE: "ite", XOR: "xor"}

MAX_TEMPLATE_ARITY = 4


def zvar(s: int) -> str:
    return f"z{s}"


def zbar(s: int) -> str:
    return f"zb{s}"


@dataclass(frozen=True)
class OpTemplate:
    """Positive-unate composition recipe for an r-ary operator.

    ``omega_pos[l]`` / ``upsilon_pos[l]`` are the NNF of Delta_{z_{l+1}}(op) /
    Gamma_{z_{l+1}}(op) over z_{l+2}..z_r with every negative literal ~z_s
    renamed to the variable ``zb{s}``; the ``_neg`` lists do the same for ~op.
    All formulas live in :attr:`manager`.  Lists are 0-based over positions.
    """

    opcode: str
    arity: int
    manager: Manager
    omega_pos: tuple
    upsilon_pos: tuple
    omega_neg: tuple
    upsilon_neg: tuple


def _minimal_dnf(table: np.ndarray) -> list[tuple[tuple[int, bool], ...]]:
    """Smallest sum-of-products for a truth table over k <= 3 variables.

    Cubes are tuples of ``(var_index, value)``; ties are broken by the
    deterministic enumeration order (fewer literals first, then index order).
    """
    k = table.ndim
    points = [p for p in itertools.product((0, 1), repeat=k) if table[p]]
    if not points:
        return []
    if len(points) == 1 << k:
        return [()]

    def covers(cube, p):
        return all(p[j] == v for j, v in cube)

    cubes = []
    for spec in itertools.product((None, 0, 1), repeat=k):
        cube = tuple((j, bool(v)) for j, v in enumerate(spec) if v is not None)
        pts = [p for p in itertools.product((0, 1), repeat=k) if covers(cube, p)]
        if all(table[p] for p in pts):
            cubes.append(cube)
    cube_set = set(cubes)
    primes = [c for c in cubes
              if not any(tuple(l for l in c if l != drop) in cube_set for drop in c)]
    primes.sort(key=lambda c: (len(c), [(j, not v) for j, v in c]))
    for size in range(1, len(primes) + 1):
        for combo in itertools.combinations(primes, size):
            if all(any(covers(c, p) for c in combo) for p in points):
                return list(combo)
    raise AssertionError("prime implicants failed to cover the function")


def _delta_gamma_tables(table: np.ndarray, l: int):
    """Delta/Gamma of z_{l+1} for a truth table over z_1..z_r (0-based l)."""
    q = table.any(axis=tuple(range(l))) if l else table
    return ~q[0], ~q[1]


def _dnf_formula(tm: Manager, dnf, first: int) -> Ref:
    """Positive-unate formula from a DNF whose variable j is z_{first+j}."""
    terms = []
    for cube in dnf:
        lits = [tm.var(zvar(first + j)) if v else tm.var(zbar(first + j)) for j, v in cube]
        terms.append(tm.and_(*lits))
    return tm.or_(*terms)


@lru_cache(maxsize=None)
def build_template(opcode: str | Callable, arity: int) -> OpTemplate:
    """Compute the composition template of ``opcode`` for the order z_1 < .. < z_r."""
    if isinstance(opcode, str):
        if opcode not in OPERATORS:
            raise ValueError(f"unknown operator {opcode!r}")
        fixed, fn = OPERATORS[opcode]
        if fixed is not None and fixed != arity:
            raise ValueError(f"operator {opcode!r} has arity {fixed}, not {arity}")
        name = opcode
    else:
        fn, name = opcode, getattr(opcode, "__name__", "op")
    if arity < 1:
        raise ValueError("arity must be positive")
    if arity > MAX_TEMPLATE_ARITY:
        raise ValueError(f"template arity {arity} exceeds the supported maximum {MAX_TEMPLATE_ARITY}")

    table = np.zeros((2,) * arity, dtype=bool)
    for p in itertools.product((0, 1), repeat=arity):
        table[p] = bool(fn(*map(bool, p)))

    tm = Manager()
    result = {}
    for sign, t in (("pos", table), ("neg", ~table)):
        omegas, upsilons = [], []
        for l in range(arity):
            d, g = _delta_gamma_tables(t, l)
            omegas.append(_dnf_formula(tm, _minimal_dnf(d), l + 2))
            upsilons.append(_dnf_formula(tm, _minimal_dnf(g), l + 2))
        result[sign] = (tuple(omegas), tuple(upsilons))
    return OpTemplate(name, arity, tm, result["pos"][0], result["pos"][1],
                      result["neg"][0], result["neg"][1])


def _apply_side(m: Manager, tpl: OpTemplate, omegas, upsilons, children, side: str, i: int) -> Ref:
    r = tpl.arity
    var_map = {}
    for s in range(r):
        var_map[zvar(s + 1)] = children[s].neg.side(side)[i]
        var_map[zbar(s + 1)] = children[s].pos.side(side)[i]
    memo: dict = {}
    terms = []
    for l in range(r):
        om = transfer(tpl.manager, omegas[l], m, var_map, memo)
        up = transfer(tpl.manager, upsilons[l], m, var_map, memo)
        terms.append(m.and_(children[l].pos.side(side)[i], om))
        terms.append(m.and_(children[l].neg.side(side)[i], up))
    return m.or_(*terms)


def apply_template(m: Manager, tpl: OpTemplate, children: Sequence[QuadAnnotation]) -> QuadAnnotation:
    """Refinements of both polarities of op(c_1..c_r) from the children's annotations."""
    if len(children) != tpl.arity:
        raise ValueError(f"template arity {tpl.arity} but {len(children)} children")
    n = len(children[0].pos)
    vecs = []
    for omegas, upsilons in ((tpl.omega_pos, tpl.upsilon_pos), (tpl.omega_neg, tpl.upsilon_neg)):
        delta = [_apply_side(m, tpl, omegas, upsilons, children, "delta", i) for i in range(n)]
        gamma = [_apply_side(m, tpl, omegas, upsilons, children, "gamma", i) for i in range(n)]
        vecs.append(DeltaGammaVec(delta, gamma, False))
    return QuadAnnotation(vecs[0], vecs[1])


def compose_node(m: Manager, node: Ref, children: Sequence[QuadAnnotation],
                 use_templates: bool = False) -> QuadAnnotation:
    """Annotations of an internal node from its children's, without CEGAR.

    AND/OR go through the composition rules (the negative polarity by De
    Morgan); ITE/XOR, and AND/OR when ``use_templates`` is set, go through
    operator templates.
    """
    k = m.kind(node)
    if k == NOT:
        return children[0].swap()
    if k in (AND, OR) and not (use_templates and len(children) <= MAX_TEMPLATE_ARITY):
        pos = [c.pos for c in children]
        neg = [c.neg for c in children]
        if k == AND:
            return QuadAnnotation(compose_and(m, pos), compose_or(m, neg))
        return QuadAnnotation(compose_or(m, pos), compose_and(m, neg))
    if k in KIND_OPCODE:
        tpl = build_template(KIND_OPCODE[k], len(children))
        return apply_template(m, tpl, children)
    raise FormulaError(f"cannot compose node kind {k}")
