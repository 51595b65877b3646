"""CNF encoding of DAG formulas and SAT decision procedures.

Two solvers share one interface (``new_var``, ``add_clause``,
``solve(assumptions)``): :class:`CdclSolver`, an incremental conflict-driven
solver used by the synthesis engine, and :class:`ExhaustiveSolver`, a brute
force enumerator used as an independent reference on small instances.

Literals are DIMACS-style signed integers throughout the public API.
"""

from __future__ import annotations

import heapq
import random
import time
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .formula import AND, CONST, ITE, NOT, OR, TRUE, FALSE, VAR, XOR, Manager, Ref


class SolverBudgetExceeded(RuntimeError):
    """The solver hit its conflict limit before reaching a verdict."""


# ----------------------------------------------------------------------
# Tseitin encoding

class Encoder:
    """Incremental Tseitin encoder writing into a clause sink.

    The sink is anything with ``new_var()`` and ``add_clause(lits)``.  Every
    DAG node gets at most one CNF variable; NOT nodes reuse their child's
    variable with flipped sign.  Encoding is full biconditional.
    """

    def __init__(self, m: Manager, sink, var_names: dict | None = None,
                 var_of: dict | None = None):
        self.m = m
        self.sink = sink
        self.node_lit: dict[Ref, int] = {}
        # passing another encoder's var_of shares source variables between encodings
        self.var_of: dict[Hashable, int] = {} if var_of is None else var_of
        self._rename = var_names or {}
        self._true: int | None = None

    def var(self, name: Hashable) -> int:
        """CNF variable standing for source variable ``name``."""
        v = self.var_of.get(name)
        if v is None:
            v = self.sink.new_var()
            self.var_of[name] = v
        return v

    def true_lit(self) -> int:
        if self._true is None:
            self._true = self.sink.new_var()
            self.sink.add_clause([self._true])
        return self._true

    def lit(self, f: Ref) -> int:
        node_lit = self.node_lit
        if f in node_lit:
            return node_lit[f]
        m = self.m
        add = self.sink.add_clause
        for g in m.topo([f]):
            if g in node_lit:
                continue
            k = m.kind(g)
            if k == CONST:
                t = self.true_lit()
                node_lit[g] = t if g == TRUE else -t
                continue
            if k == VAR:
                name = m.label(g)
                node_lit[g] = self.var(self._rename.get(name, name))
                continue
            cs = [node_lit[c] for c in m.children(g)]
            if k == NOT:
                node_lit[g] = -cs[0]
                continue
            t = self.sink.new_var()
            if k == AND:
                for c in cs:
                    add([-t, c])
                add([t] + [-c for c in cs])
            elif k == OR:
                for c in cs:
                    add([t, -c])
                add([-t] + cs)
            elif k == XOR:
                a, b = cs
                add([-t, a, b])
                add([-t, -a, -b])
                add([t, -a, b])
                add([t, a, -b])
            elif k == ITE:
                s, a, b = cs
                add([-t, -s, a])
                add([-t, s, b])
                add([t, -s, -a])
                add([t, s, -b])
            node_lit[g] = t
        return node_lit[f]


class _ClauseSink:
    def __init__(self):
        self.num_vars = 0
        self.clauses: list[tuple[int, ...]] = []

    def new_var(self) -> int:
        self.num_vars += 1
        return self.num_vars

    def add_clause(self, lits):
        self.clauses.append(tuple(lits))


@dataclass(frozen=True)
class CnfDoc:
    num_vars: int
    clauses: tuple
    var_map: dict = field(default_factory=dict)     # source variable -> CNF var
    node_map: dict = field(default_factory=dict)    # DAG node -> CNF literal

    @classmethod
    def from_clauses(cls, clauses: Iterable[Iterable[int]], num_vars: int | None = None) -> "CnfDoc":
        cl = tuple(tuple(c) for c in clauses)
        n = max((abs(l) for c in cl for l in c), default=0)
        return cls(max(n, num_vars or 0), cl)

    def lit(self, name: Hashable, value: bool = True) -> int:
        v = self.var_map[name]
        return v if value else -v


def tseitin(m: Manager, f: Ref) -> CnfDoc:
    """Equisatisfiable CNF asserting ``f``."""
    sink = _ClauseSink()
    if f == FALSE:
        return CnfDoc(0, ((),))
    enc = Encoder(m, sink)
    root = enc.lit(f)
    sink.add_clause([root])
    return CnfDoc(sink.num_vars, tuple(sink.clauses), dict(enc.var_of), dict(enc.node_lit))


def to_dimacs(doc: CnfDoc) -> str:
    lines = [f"p cnf {doc.num_vars} {len(doc.clauses)}"]
    lines += [" ".join(map(str, c)) + (" 0" if c else "0") for c in doc.clauses]
    return "\n".join(lines) + "\n"


def parse_dimacs(text: str) -> CnfDoc:
    clauses, cur, nvars = [], [], 0
    for line in text.splitlines():
        line = line.strip()
        if not line or line[0] in "c%":
            continue
        if line[0] == "p":
            nvars = int(line.split()[2])
            continue
        for tok in line.split():
            lit = int(tok)
            if lit == 0:
                clauses.append(cur)
                cur = []
            else:
                cur.append(lit)
    if cur:
        clauses.append(cur)
    return CnfDoc.from_clauses(clauses, nvars)


# ----------------------------------------------------------------------
# CDCL solver

def _luby(i: int) -> int:
    # i >= 1
    k = 1
    while (1 << k) - 1 < i:
        k += 1
    while True:
        if i == (1 << k) - 1:
            return 1 << (k - 1)
        i -= (1 << (k - 1)) - 1
        k = 1
        while (1 << k) - 1 < i:
            k += 1


class CdclSolver:
    """Incremental CDCL with two watched literals, VSIDS, phase saving,
    Luby restarts, learnt-clause reduction and solving under assumptions.

    After an UNSAT answer under assumptions, :attr:`core` holds a subset of
    the assumptions that is already inconsistent with the clauses.
    """

    restart_base = 64
    var_decay = 0.95

    def __init__(self, seed: int = 0):
        self._rng = random.Random(seed)
        self.nvars = 0
        self.val = [0, 0]          # by literal code 2v / 2v+1: 1 true, -1 false, 0 free
        self.level = [0]
        self.reason: list = [None]
        self.watches: list[list] = [[], []]
        self.activity = [0.0]
        self.phase = [False]
        self.seen = [False]
        self.heap: list = []
        self.var_inc = 1.0
        self.clauses: list[list[int]] = []
        self.learnts: list[list[int]] = []
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.ok = True
        self.model: list[bool] | None = None
        self.core: list[int] | None = None
        self.max_learnts = 2000
        self.stats = {"solves": 0, "conflicts": 0, "decisions": 0, "propagations": 0}

    # -- variables and clauses ------------------------------------------

    def new_var(self) -> int:
        self.nvars += 1
        v = self.nvars
        self.val += [0, 0]
        self.level.append(0)
        self.reason.append(None)
        self.watches += [[], []]
        act = self._rng.random() * 1e-5
        self.activity.append(act)
        self.phase.append(False)
        self.seen.append(False)
        heapq.heappush(self.heap, (-act, v))
        return v

    @staticmethod
    def _code(lit: int) -> int:
        return 2 * lit if lit > 0 else -2 * lit + 1

    def add_clause(self, lits: Iterable[int]) -> bool:
        """Add a clause between solves; returns False once the clause set is UNSAT."""
        if not self.ok:
            return False
        self._cancel_until(0)
        val = self.val
        codes = []
        seen = set()
        for lit in lits:
            if lit == 0 or abs(lit) > self.nvars:
                raise ValueError(f"literal {lit} out of range")
            c = self._code(lit)
            if c ^ 1 in seen or val[c] == 1:
                return True
            if c in seen or val[c] == -1:
                continue
            seen.add(c)
            codes.append(c)
        if not codes:
            self.ok = False
            return False
        if len(codes) == 1:
            self._assign(codes[0], None)
            if self._propagate() is not None:
                self.ok = False
            return self.ok
        self.clauses.append(codes)
        self.watches[codes[0]].append(codes)
        self.watches[codes[1]].append(codes)
        return True

    # -- core machinery --------------------------------------------------

    def _assign(self, code: int, reason):
        self.val[code] = 1
        self.val[code ^ 1] = -1
        v = code >> 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(code)

    def _cancel_until(self, lvl: int):
        if len(self.trail_lim) <= lvl:
            return
        val, phase, heap, act = self.val, self.phase, self.heap, self.activity
        stop = self.trail_lim[lvl]
        trail = self.trail
        for i in range(len(trail) - 1, stop - 1, -1):
            c = trail[i]
            v = c >> 1
            phase[v] = not (c & 1)
            val[c] = 0
            val[c ^ 1] = 0
            self.reason[v] = None
            heapq.heappush(heap, (-act[v], v))
        del trail[stop:]
        del self.trail_lim[lvl:]
        self.qhead = len(trail)
        if len(heap) > 8 * self.nvars + 64:
            self._rebuild_heap()

    def _rebuild_heap(self):
        val, act = self.val, self.activity
        self.heap = [(-act[v], v) for v in range(1, self.nvars + 1) if val[2 * v] == 0]
        heapq.heapify(self.heap)

    def _propagate(self):
        val, watches, trail, level, reason = self.val, self.watches, self.trail, self.level, self.reason
        lvl = len(self.trail_lim)
        qhead = self.qhead
        props = 0
        while qhead < len(trail):
            fl = trail[qhead] ^ 1
            qhead += 1
            props += 1
            ws = watches[fl]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == fl:
                    c[0] = c[1]
                    c[1] = fl
                first = c[0]
                if val[first] == 1:
                    ws[j] = c
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != -1:
                        c[1] = lk
                        c[k] = fl
                        watches[lk].append(c)
                        break
                else:
                    ws[j] = c
                    j += 1
                    if val[first] == -1:
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                        del ws[j:]
                        self.qhead = len(trail)
                        self.stats["propagations"] += props
                        return c
                    val[first] = 1
                    val[first ^ 1] = -1
                    v = first >> 1
                    level[v] = lvl
                    reason[v] = c
                    trail.append(first)
            del ws[j:]
        self.qhead = qhead
        self.stats["propagations"] += props
        return None

    def _bump(self, v: int):
        act = self.activity
        act[v] += self.var_inc
        if act[v] > 1e100:
            for u in range(1, self.nvars + 1):
                act[u] *= 1e-100
            self.var_inc *= 1e-100
            self._rebuild_heap()
        elif self.val[2 * v] == 0:
            heapq.heappush(self.heap, (-act[v], v))

    def _analyze(self, confl):
        seen, level, reason, trail = self.seen, self.level, self.reason, self.trail
        cur = len(self.trail_lim)
        learnt = [0]
        path = 0
        p = -1
        idx = len(trail) - 1
        clause = confl
        while True:
            start = 0 if p == -1 else 1
            for k in range(start, len(clause)):
                q = clause[k]
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    seen[v] = True
                    self._bump(v)
                    if level[v] >= cur:
                        path += 1
                    else:
                        learnt.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            clause = reason[p >> 1]
            seen[p >> 1] = False
            path -= 1
            if path == 0:
                break
        learnt[0] = p ^ 1

        # local minimization: drop literals implied by other learnt literals
        keep = [learnt[0]]
        for q in learnt[1:]:
            r = reason[q >> 1]
            if r is None:
                keep.append(q)
                continue
            for k in range(1, len(r)):
                u = r[k] >> 1
                if not seen[u] and level[u] > 0:
                    keep.append(q)
                    break
        for q in learnt[1:]:
            seen[q >> 1] = False

        if len(keep) == 1:
            back = 0
        else:
            best = 1
            for k in range(2, len(keep)):
                if level[keep[k] >> 1] > level[keep[best] >> 1]:
                    best = k
            keep[1], keep[best] = keep[best], keep[1]
            back = level[keep[1] >> 1]
        self.var_inc /= self.var_decay
        return keep, back

    def _analyze_final(self, failed: int) -> list[int]:
        """Assumption codes responsible for ``failed`` (an assumption code) being false."""
        core = [failed]
        if not self.trail_lim:
            return core
        seen, reason, level, trail = self.seen, self.reason, self.level, self.trail
        seen[failed >> 1] = True
        for i in range(len(trail) - 1, self.trail_lim[0] - 1, -1):
            c = trail[i]
            v = c >> 1
            if seen[v]:
                r = reason[v]
                if r is None:
                    core.append(c)
                else:
                    for k in range(1, len(r)):
                        if level[r[k] >> 1] > 0:
                            seen[r[k] >> 1] = True
                seen[v] = False
        seen[failed >> 1] = False
        return core

    def _reduce_db(self):
        reason, val = self.reason, self.val
        locked = set()
        for c in self.learnts:
            v = c[0] >> 1
            if reason[v] is c and val[c[0]] == 1:
                locked.add(id(c))
        ranked = sorted(self.learnts, key=len)
        half = len(ranked) // 2
        keep, drop = [], set()
        for k, c in enumerate(ranked):
            if k < half or id(c) in locked or len(c) <= 2:
                keep.append(c)
            else:
                drop.add(id(c))
        if drop:
            for ws in self.watches:
                if ws:
                    ws[:] = [c for c in ws if id(c) not in drop]
        self.learnts = keep
        self.max_learnts = int(self.max_learnts * 1.1)

    def _pick(self) -> int:
        heap, val = self.heap, self.val
        while heap:
            _, v = heapq.heappop(heap)
            if val[2 * v] == 0:
                return v
        return 0

    # -- public ----------------------------------------------------------

    def solve(self, assumptions: Sequence[int] = (), conflict_limit: int | None = None,
              deadline: float | None = None) -> bool:
        """Search for a model extending ``assumptions``.

        Raises :class:`SolverBudgetExceeded` once ``conflict_limit`` conflicts
        were spent or the ``time.monotonic()`` ``deadline`` has passed.
        """
        self.stats["solves"] += 1
        self.model = None
        self.core = None
        if not self.ok:
            self.core = []
            return False
        for a in assumptions:
            if a == 0 or abs(a) > self.nvars:
                raise ValueError(f"assumption {a} out of range")
        assume = [self._code(a) for a in assumptions]
        self._cancel_until(0)
        if self._propagate() is not None:
            self.ok = False
            self.core = []
            return False
        conflicts = 0
        restart_no = 1
        next_restart = self.restart_base * _luby(restart_no)
        since_restart = 0
        val = self.val
        try:
            while True:
                confl = self._propagate()
                if confl is not None:
                    conflicts += 1
                    since_restart += 1
                    self.stats["conflicts"] += 1
                    if not self.trail_lim:
                        self.ok = False
                        self.core = []
                        return False
                    learnt, back = self._analyze(confl)
                    self._cancel_until(back)
                    if len(learnt) == 1:
                        self._assign(learnt[0], None)
                    else:
                        self.learnts.append(learnt)
                        self.watches[learnt[0]].append(learnt)
                        self.watches[learnt[1]].append(learnt)
                        self._assign(learnt[0], learnt)
                    continue
                if conflict_limit is not None and conflicts >= conflict_limit:
                    raise SolverBudgetExceeded(f"conflict limit {conflict_limit} reached")
                if deadline is not None and conflicts and conflicts % 64 == 0 \
                        and time.monotonic() > deadline:
                    raise SolverBudgetExceeded("deadline reached")
                if since_restart >= next_restart:
                    restart_no += 1
                    next_restart = self.restart_base * _luby(restart_no)
                    since_restart = 0
                    self._cancel_until(0)
                    continue
                if len(self.learnts) - len(self.trail) >= self.max_learnts:
                    self._reduce_db()
                dl = len(self.trail_lim)
                if dl < len(assume):
                    a = assume[dl]
                    if val[a] == 1:
                        self.trail_lim.append(len(self.trail))
                        continue
                    if val[a] == -1:
                        self.core = [self._lit(c) for c in self._analyze_final(a)]
                        return False
                    self.trail_lim.append(len(self.trail))
                    self._assign(a, None)
                    continue
                v = self._pick()
                if v == 0:
                    self.model = [False] + [val[2 * u] == 1 for u in range(1, self.nvars + 1)]
                    return True
                self.stats["decisions"] += 1
                self.trail_lim.append(len(self.trail))
                self._assign(2 * v if self.phase[v] else 2 * v + 1, None)
        finally:
            self._cancel_until(0)

    @staticmethod
    def _lit(code: int) -> int:
        return -(code >> 1) if code & 1 else code >> 1

    def value(self, lit: int) -> bool:
        """Value of ``lit`` in the last model."""
        assert self.model is not None
        return self.model[lit] if lit > 0 else not self.model[-lit]


class ExhaustiveSolver:
    """Reference decision procedure by enumeration of all assignments.

    Independent of the CDCL code path; meant for instances with at most
    ~22 variables.  The returned model is the lexicographically smallest
    satisfying assignment (variable 1 least significant).
    """

    chunk_bits = 16

    def __init__(self, max_vars: int = 24):
        self.nvars = 0
        self.max_vars = max_vars
        self.clauses: list[tuple[int, ...]] = []
        self.model: list[bool] | None = None
        self.core: list[int] | None = None

    def new_var(self) -> int:
        self.nvars += 1
        return self.nvars

    def add_clause(self, lits: Iterable[int]) -> bool:
        self.clauses.append(tuple(lits))
        return True

    def solve(self, assumptions: Sequence[int] = (), conflict_limit: int | None = None,
              deadline: float | None = None) -> bool:
        self.model = None
        self.core = None
        if self.nvars > self.max_vars:
            raise SolverBudgetExceeded(f"{self.nvars} variables exceed exhaustive limit {self.max_vars}")
        if any(len(c) == 0 for c in self.clauses):
            self.core = []
            return False
        fixed = {}
        for a in assumptions:
            if fixed.get(abs(a), a > 0) != (a > 0):
                self.core = list(assumptions)
                return False
            fixed[abs(a)] = a > 0
        free = [v for v in range(1, self.nvars + 1) if v not in fixed]
        total = 1 << len(free)
        step = 1 << min(self.chunk_bits, len(free))
        for start in range(0, total, step):
            idx = np.arange(start, min(start + step, total), dtype=np.int64)
            cols = {}
            for j, v in enumerate(free):
                cols[v] = ((idx >> j) & 1).astype(bool)
            for v, b in fixed.items():
                cols[v] = np.full(len(idx), b)
            ok = np.ones(len(idx), dtype=bool)
            for c in self.clauses:
                sat = np.zeros(len(idx), dtype=bool)
                for lit in c:
                    sat |= cols[lit] if lit > 0 else ~cols[-lit]
                ok &= sat
                if not ok.any():
                    break
            hits = np.flatnonzero(ok)
            if hits.size:
                h = hits[0]
                self.model = [False] + [bool(cols[v][h]) for v in range(1, self.nvars + 1)]
                return True
        self.core = list(assumptions)
        return False

    def value(self, lit: int) -> bool:
        assert self.model is not None
        return self.model[lit] if lit > 0 else not self.model[-lit]


@dataclass(frozen=True)
class SatResult:
    satisfiable: bool
    model: dict | None = None          # source variable -> bool
    cnf_model: tuple | None = None     # indexed by CNF variable (index 0 unused)
    core: tuple | None = None          # failed assumptions when UNSAT

    def __bool__(self):
        return self.satisfiable


def make_solver(kind: str = "cdcl", seed: int = 0):
    if kind == "cdcl":
        return CdclSolver(seed)
    if kind == "exhaustive":
        return ExhaustiveSolver()
    raise ValueError(f"unknown solver kind {kind!r}")


def solve(doc: CnfDoc, assumptions: Sequence[int] = (), solver: str = "cdcl",
          conflict_limit: int | None = None, seed: int = 0) -> SatResult:
    """Decide ``doc`` under ``assumptions``.

    Raises :class:`SolverBudgetExceeded` when ``conflict_limit`` is hit.
    """
    s = make_solver(solver, seed)
    for _ in range(doc.num_vars):
        s.new_var()
    for c in doc.clauses:
        s.add_clause(c)
    if not s.solve(assumptions, conflict_limit):
        return SatResult(False, core=tuple(s.core or ()))
    model = tuple(s.model)
    named = {name: model[v] for name, v in doc.var_map.items()}
    return SatResult(True, named, model)


def check_model(doc: CnfDoc, cnf_model: Sequence[bool]) -> bool:
    """Every clause has a true literal under ``cnf_model``."""
    return all(any(cnf_model[l] if l > 0 else not cnf_model[-l] for l in c) for c in doc.clauses)
