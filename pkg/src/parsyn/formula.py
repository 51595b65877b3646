"""Hash-consed Boolean DAG manager.

Every formula handled by the synthesis engine (the specification, the
per-node Delta/Gamma annotations, templates, synthesized functions) lives in
a :class:`Manager` as an integer node id.  Nodes are immutable once created
and structurally identical nodes share one id.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

# Node kinds
CONST = 0
VAR = 1
NOT = 2
AND = 3
OR = 4
ITE = 5
XOR = 6

KIND_NAMES = {CONST: "const", VAR: "var", NOT: "not", AND: "and", OR: "or",
              ITE: "ite", XOR: "xor"}
OP_ARITY = {ITE: 3, XOR: 2}

FALSE = 0
TRUE = 1

Ref = int


class FormulaError(ValueError):
    pass


@dataclass(frozen=True)
class VarTable:
    """Input variables X and ordered output variables Y (y_1 first)."""

    inputs: tuple
    outputs: tuple

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        overlap = set(self.inputs) & set(self.outputs)
        if overlap:
            raise FormulaError(f"variables both input and output: {sorted(map(str, overlap))}")
        if len(set(self.inputs)) != len(self.inputs) or len(set(self.outputs)) != len(self.outputs):
            raise FormulaError("duplicate variable in VarTable")

    @property
    def all_vars(self) -> tuple:
        return self.inputs + self.outputs

    def output_index(self, name) -> int:
        """0-based position of an output in the current order."""
        return self.outputs.index(name)

    def with_outputs(self, outputs: Sequence) -> "VarTable":
        if sorted(map(str, outputs)) != sorted(map(str, self.outputs)):
            raise FormulaError("reordered outputs must be a permutation of the original outputs")
        return VarTable(self.inputs, tuple(outputs))


class Manager:
    """Append-only store of hash-consed formula nodes.

    Reads (``kind``, ``children``, ``eval``, ``support``...) are safe from any
    thread; node creation goes through a single lock.
    """

    def __init__(self):
        self._kind: list[int] = []
        self._children: list[tuple] = []
        self._label: list = []
        self._table: dict = {}
        self._lock = threading.Lock()
        self._support_cache: dict[int, frozenset] = {}
        self._new_node(CONST, (), False)
        self._new_node(CONST, (), True)

    # ------------------------------------------------------------------
    # raw node access

    def __len__(self) -> int:
        return len(self._kind)

    def kind(self, f: Ref) -> int:
        return self._kind[f]

    def children(self, f: Ref) -> tuple:
        return self._children[f]

    def label(self, f: Ref):
        """Variable name of a VAR node, boolean value of a CONST node."""
        return self._label[f]

    def is_const(self, f: Ref) -> bool:
        return f == FALSE or f == TRUE

    def is_var(self, f: Ref) -> bool:
        return self._kind[f] == VAR

    def is_literal(self, f: Ref) -> bool:
        k = self._kind[f]
        return k == VAR or (k == NOT and self._kind[self._children[f][0]] == VAR)

    def is_leaf(self, f: Ref) -> bool:
        return f <= TRUE or self.is_literal(f)

    def _new_node(self, kind, children, label=None) -> Ref:
        key = (kind, children, label)
        f = self._table.get(key)
        if f is not None:
            return f
        with self._lock:
            f = self._table.get(key)
            if f is None:
                f = len(self._kind)
                self._kind.append(kind)
                self._children.append(children)
                self._label.append(label)
                self._table[key] = f
        return f

    # ------------------------------------------------------------------
    # construction with constant folding

    @property
    def true(self) -> Ref:
        return TRUE

    @property
    def false(self) -> Ref:
        return FALSE

    def const(self, value: bool) -> Ref:
        return TRUE if value else FALSE

    def var(self, name: Hashable) -> Ref:
        return self._new_node(VAR, (), name)

    def not_(self, a: Ref) -> Ref:
        if a == TRUE:
            return FALSE
        if a == FALSE:
            return TRUE
        if self._kind[a] == NOT:
            return self._children[a][0]
        return self._new_node(NOT, (a,))

    def _nary(self, kind, args) -> Ref:
        absorbing, neutral = (FALSE, TRUE) if kind == AND else (TRUE, FALSE)
        seen = set()
        kids = []
        for a in args:
            if a == neutral or a in seen:
                continue
            if a == absorbing:
                return absorbing
            seen.add(a)
            kids.append(a)
        for a in kids:
            if self._kind[a] == NOT and self._children[a][0] in seen:
                return absorbing
        if not kids:
            return neutral
        if len(kids) == 1:
            return kids[0]
        return self._new_node(kind, tuple(kids))

    def and_(self, *args: Ref) -> Ref:
        return self._nary(AND, args)

    def or_(self, *args: Ref) -> Ref:
        return self._nary(OR, args)

    def xor(self, a: Ref, b: Ref) -> Ref:
        if a == b:
            return FALSE
        if a <= TRUE:
            return self.not_(b) if a == TRUE else b
        if b <= TRUE:
            return self.not_(a) if b == TRUE else a
        if self.not_(a) == b:
            return TRUE
        return self._new_node(XOR, (a, b))

    def iff(self, a: Ref, b: Ref) -> Ref:
        return self.not_(self.xor(a, b))

    def ite(self, s: Ref, a: Ref, b: Ref) -> Ref:
        if s == TRUE:
            return a
        if s == FALSE:
            return b
        if a == b:
            return a
        if a == TRUE and b == FALSE:
            return s
        if a == FALSE and b == TRUE:
            return self.not_(s)
        return self._new_node(ITE, (s, a, b))

    def implies(self, a: Ref, b: Ref) -> Ref:
        return self.or_(self.not_(a), b)

    def mk(self, kind: int, *children: Ref, label=None) -> Ref:
        """Generic constructor dispatching on ``kind``."""
        if kind == CONST:
            if children:
                raise FormulaError("constant takes no children")
            return self.const(bool(label))
        if kind == VAR:
            if children:
                raise FormulaError("variable takes no children")
            return self.var(label)
        if kind == NOT:
            if len(children) != 1:
                raise FormulaError(f"NOT expects 1 child, got {len(children)}")
            return self.not_(children[0])
        if kind in (AND, OR):
            if len(children) < 2:
                raise FormulaError(f"{KIND_NAMES[kind].upper()} expects at least 2 children")
            return self._nary(kind, children)
        if kind in OP_ARITY:
            if len(children) != OP_ARITY[kind]:
                raise FormulaError(
                    f"{KIND_NAMES[kind].upper()} expects {OP_ARITY[kind]} children, got {len(children)}")
            return self.ite(*children) if kind == ITE else self.xor(*children)
        raise FormulaError(f"unknown node kind {kind!r}")

    def cube(self, literals: Iterable[tuple]) -> Ref:
        """Conjunction of ``(name, value)`` literals."""
        return self.and_(*(self.var(v) if b else self.not_(self.var(v)) for v, b in literals))

    # ------------------------------------------------------------------
    # traversal

    def topo(self, roots: Iterable[Ref]) -> list[Ref]:
        """Nodes reachable from ``roots``, children before parents."""
        order = []
        done = set()
        for r in roots:
            if r in done:
                continue
            stack = [(r, False)]
            while stack:
                f, expanded = stack.pop()
                if f in done:
                    continue
                if expanded:
                    done.add(f)
                    order.append(f)
                    continue
                stack.append((f, True))
                for c in reversed(self._children[f]):
                    if c not in done:
                        stack.append((c, False))
        return order

    def size(self, f: Ref) -> int:
        return len(self.topo([f]))

    def rebuild(self, f: Ref, leaf_fn: Callable[[Ref], Ref], target: "Manager | None" = None,
                memo: dict | None = None) -> Ref:
        """Copy ``f`` bottom-up into ``target`` (default: self), mapping
        every VAR node through ``leaf_fn``."""
        dst = self if target is None else target
        memo = {} if memo is None else memo
        kinds, kids, labels = self._kind, self._children, self._label
        for g in self.topo([f]):
            if g in memo:
                continue
            k = kinds[g]
            if k == CONST:
                memo[g] = dst.const(labels[g])
            elif k == VAR:
                memo[g] = leaf_fn(g)
            else:
                memo[g] = dst.mk(k, *(memo[c] for c in kids[g]))
        return memo[f]

    def substitute(self, f: Ref, mapping: Mapping[Hashable, Ref], memo: dict | None = None) -> Ref:
        """Simultaneously replace variables (by name) with formulas."""
        if not mapping:
            return f

        def leaf(g):
            name = self._label[g]
            return mapping[name] if name in mapping else g

        return self.rebuild(f, leaf, memo=memo)

    def rename(self, f: Ref, names: Mapping[Hashable, Hashable]) -> Ref:
        return self.substitute(f, {old: self.var(new) for old, new in names.items()})

    # ------------------------------------------------------------------
    # semantics

    def eval(self, f: Ref, assignment: Mapping[Hashable, bool]) -> bool:
        memo: dict[int, bool] = {}
        kinds, kids, labels = self._kind, self._children, self._label
        for g in self.topo([f]):
            k = kinds[g]
            if k == CONST:
                v = labels[g]
            elif k == VAR:
                try:
                    v = bool(assignment[labels[g]])
                except KeyError:
                    raise FormulaError(f"unassigned variable {labels[g]!r}") from None
            elif k == NOT:
                v = not memo[kids[g][0]]
            elif k == AND:
                v = all(memo[c] for c in kids[g])
            elif k == OR:
                v = any(memo[c] for c in kids[g])
            elif k == XOR:
                a, b = kids[g]
                v = memo[a] != memo[b]
            else:
                s, a, b = kids[g]
                v = memo[a] if memo[s] else memo[b]
            memo[g] = v
        return memo[f]

    def truth_table(self, fs: Ref | Sequence[Ref], variables: Sequence[Hashable]) -> np.ndarray:
        """Evaluate formulas on all 2^k assignments of ``variables``.

        Returns a boolean array of shape ``(2,)*k`` (or ``(len(fs), 2, ..)``
        for a sequence) whose axis ``j`` indexes the value of variables[j].
        """
        single = isinstance(fs, (int, np.integer))
        roots = [int(fs)] if single else [int(g) for g in fs]
        k = len(variables)
        shape = (2,) * k
        axis = {v: j for j, v in enumerate(variables)}
        memo: dict[int, np.ndarray] = {}
        kinds, kids, labels = self._kind, self._children, self._label
        for g in self.topo(roots):
            kd = kinds[g]
            if kd == CONST:
                v = np.full(shape, labels[g], dtype=bool)
            elif kd == VAR:
                name = labels[g]
                if name not in axis:
                    raise FormulaError(f"unassigned variable {name!r}")
                idx = [1] * k
                idx[axis[name]] = 2
                v = np.broadcast_to(np.array([False, True]).reshape(idx), shape)
            elif kd == NOT:
                v = ~memo[kids[g][0]]
            elif kd == AND:
                cs = kids[g]
                v = memo[cs[0]] & memo[cs[1]]
                for c in cs[2:]:
                    v = v & memo[c]
            elif kd == OR:
                cs = kids[g]
                v = memo[cs[0]] | memo[cs[1]]
                for c in cs[2:]:
                    v = v | memo[c]
            elif kd == XOR:
                a, b = kids[g]
                v = memo[a] ^ memo[b]
            else:
                s, a, b = kids[g]
                v = np.where(memo[s], memo[a], memo[b])
            memo[g] = v
        if single:
            return np.array(memo[roots[0]], dtype=bool)
        return np.stack([np.broadcast_to(memo[g], shape) for g in roots]).astype(bool)

    def support(self, f: Ref) -> frozenset:
        cache = self._support_cache
        if f in cache:
            return cache[f]
        kinds, kids, labels = self._kind, self._children, self._label
        for g in self.topo([f]):
            if g in cache:
                continue
            k = kinds[g]
            if k == CONST:
                s = frozenset()
            elif k == VAR:
                s = frozenset((labels[g],))
            else:
                cs = kids[g]
                s = cache[cs[0]]
                for c in cs[1:]:
                    s = s | cache[c]
            cache[g] = s
        return cache[f]

    # ------------------------------------------------------------------
    # rewriting passes

    def to_nnf(self, f: Ref) -> Ref:
        """Negation normal form over AND/OR with negations on variables only.

        ITE and XOR nodes are expanded into their AND/OR definitions.
        """
        memo: dict[tuple[int, bool], Ref] = {}
        kinds, kids = self._kind, self._children

        # iterative DFS over (node, negated) pairs
        stack = [(f, False, False)]
        while stack:
            g, neg, expanded = stack.pop()
            key = (g, neg)
            if key in memo:
                continue
            k = kinds[g]
            if k == CONST or k == VAR:
                memo[key] = self.not_(g) if neg else g
                continue
            if k == NOT:
                deps = [(kids[g][0], not neg)]
            elif k in (AND, OR):
                deps = [(c, neg) for c in kids[g]]
            elif k == XOR:
                a, b = kids[g]
                deps = [(a, False), (a, True), (b, False), (b, True)]
            else:
                s, a, b = kids[g]
                deps = [(s, False), (s, True), (a, neg), (b, neg)]
            if not expanded:
                stack.append((g, neg, True))
                stack.extend((c, n, False) for c, n in deps if (c, n) not in memo)
                continue
            if k == NOT:
                memo[key] = memo[deps[0]]
            elif k in (AND, OR):
                parts = [memo[d] for d in deps]
                use_and = (k == AND) != neg
                memo[key] = self._nary(AND if use_and else OR, parts)
            elif k == XOR:
                a, b = kids[g]
                pa, na, pb, nb = (memo[d] for d in deps)
                if neg:  # a <-> b
                    memo[key] = self.or_(self.and_(pa, pb), self.and_(na, nb))
                else:
                    memo[key] = self.or_(self.and_(pa, nb), self.and_(na, pb))
            else:
                ps, ns, ta, tb = (memo[d] for d in deps)
                memo[key] = self.or_(self.and_(ps, ta), self.and_(ns, tb))
        return memo[(f, False)]

    def _as_or(self, g: Ref):
        """Disjuncts of ``g`` viewed as an OR, including AIG form NOT(AND(NOT..))."""
        k = self._kind[g]
        if k == OR:
            return self._children[g]
        if k == NOT:
            inner = self._children[g][0]
            if self._kind[inner] == AND:
                return tuple(self.not_(c) for c in self._children[inner])
        return None

    def _as_and(self, g: Ref):
        k = self._kind[g]
        if k == AND:
            return self._children[g]
        if k == NOT:
            inner = self._children[g][0]
            if self._kind[inner] == OR:
                return tuple(self.not_(c) for c in self._children[inner])
        return None

    def _match_ite(self, g: Ref):
        disj = self._as_or(g)
        if disj is None or len(disj) != 2:
            return None
        p, q = self._as_and(disj[0]), self._as_and(disj[1])
        if p is None or q is None or len(p) != 2 or len(q) != 2:
            return None
        for i in (0, 1):
            for j in (0, 1):
                if q[j] == self.not_(p[i]):
                    sel, then_, else_ = p[i], p[1 - i], q[1 - j]
                    # prefer a positive selector
                    if self._kind[sel] == NOT:
                        sel, then_, else_ = q[j], else_, then_
                    return sel, then_, else_
        return None

    def detect_ops(self, f: Ref) -> Ref:
        """Rewrite (a&b)|(~a&c) into ITE(a,b,c) and (~a&b)|(a&~b) into XOR(a,b)."""
        memo: dict[int, Ref] = {}
        kinds, kids, labels = self._kind, self._children, self._label
        for g in self.topo([f]):
            k = kinds[g]
            if k == CONST or k == VAR:
                memo[g] = g
                continue
            node = self.mk(k, *(memo[c] for c in kids[g]))
            m = self._match_ite(node)
            if m is not None:
                sel, then_, else_ = m
                if then_ == self.not_(else_):
                    node = self.xor(sel, else_)
                else:
                    node = self.ite(sel, then_, else_)
            memo[g] = node
        return memo[f]

    def fanin_counts(self, root: Ref, variables: Iterable[Hashable]) -> dict:
        """Number of DAG nodes (leaf included) whose transitive fan-in contains each variable."""
        counts = {v: 0 for v in variables}
        for g in self.topo([root]):
            for v in self.support(g):
                if v in counts:
                    counts[v] += 1
        return counts

    def order_outputs(self, root: Ref, vars: VarTable) -> VarTable:
        """Sort outputs by ascending fan-in occurrence count, ties by original index."""
        counts = self.fanin_counts(root, vars.outputs)
        order = sorted(range(len(vars.outputs)), key=lambda j: (counts[vars.outputs[j]], j))
        return vars.with_outputs([vars.outputs[j] for j in order])

    # ------------------------------------------------------------------

    def to_str(self, f: Ref) -> str:
        """Readable infix rendering, for debugging and small examples."""
        out: dict[int, str] = {}
        kinds, kids, labels = self._kind, self._children, self._label
        for g in self.topo([f]):
            k = kinds[g]
            if k == CONST:
                s = "1" if labels[g] else "0"
            elif k == VAR:
                s = str(labels[g])
            elif k == NOT:
                s = "~" + out[kids[g][0]]
            elif k in (AND, OR):
                sep = " & " if k == AND else " | "
                s = "(" + sep.join(out[c] for c in kids[g]) + ")"
            else:
                s = f"{KIND_NAMES[k]}(" + ", ".join(out[c] for c in kids[g]) + ")"
            out[g] = s
        return out[f]


@dataclass
class Spec:
    """A relational specification: root formula plus the X/Y split."""

    manager: Manager
    root: Ref
    vars: VarTable


def transfer(src: Manager, f: Ref, dst: Manager, var_map: Mapping[Hashable, Ref] | None = None,
             memo: dict | None = None) -> Ref:
    """Copy a formula between managers, optionally substituting variables."""
    var_map = var_map or {}

    def leaf(g):
        name = src.label(g)
        return var_map[name] if name in var_map else dst.var(name)

    return src.rebuild(f, leaf, target=dst, memo=memo)
