"""ASCII AIGER (``aag``) reading and writing, plus the JSON output manifest."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .formula import AND, CONST, ITE, NOT, OR, VAR, XOR, FormulaError, Manager, Ref, Spec, VarTable


class AigerError(FormulaError):
    def __init__(self, msg: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


@dataclass
class AagCircuit:
    input_names: list
    outputs: list[Ref]
    output_names: list
    comments: list[str]


def _ints(line: str, count: int, lineno: int) -> list[int]:
    parts = line.split()
    if len(parts) != count:
        raise AigerError(f"expected {count} integers, got {len(parts)}", lineno)
    try:
        vals = [int(p) for p in parts]
    except ValueError:
        raise AigerError(f"non-integer token in {line!r}", lineno) from None
    if any(v < 0 for v in vals):
        raise AigerError("negative literal", lineno)
    return vals


def read_aag(text: str, manager: Manager | None = None) -> tuple[Manager, AagCircuit]:
    """Parse a combinational ``aag`` document with any number of outputs."""
    m = manager or Manager()
    lines = text.splitlines()
    if not lines:
        raise AigerError("empty document", 1)
    header = lines[0].split()
    if len(header) != 6 or header[0] != "aag":
        raise AigerError(f"malformed header {lines[0]!r}", 1)
    try:
        maxvar, n_in, n_latch, n_out, n_and = (int(h) for h in header[1:])
    except ValueError:
        raise AigerError(f"malformed header {lines[0]!r}", 1) from None
    if n_latch:
        raise AigerError("latches are not supported (combinational specifications only)", 1)
    if maxvar < n_in + n_and:
        raise AigerError("header M smaller than I + A", 1)
    need = 1 + n_in + n_out + n_and
    if len(lines) < need:
        raise AigerError(f"document truncated: expected at least {need} lines", len(lines))

    pos = 1
    input_lits = []
    for _ in range(n_in):
        (lit,) = _ints(lines[pos], 1, pos + 1)
        if lit < 2 or lit & 1:
            raise AigerError(f"invalid input literal {lit}", pos + 1)
        input_lits.append(lit)
        pos += 1
    out_lits = []
    for _ in range(n_out):
        (lit,) = _ints(lines[pos], 1, pos + 1)
        out_lits.append((lit, pos + 1))
        pos += 1
    gates = []
    for _ in range(n_and):
        lhs, r0, r1 = _ints(lines[pos], 3, pos + 1)
        if lhs < 2 or lhs & 1:
            raise AigerError(f"invalid AND output literal {lhs}", pos + 1)
        gates.append((lhs, r0, r1, pos + 1))
        pos += 1

    in_names: dict[int, Hashable] = {}
    out_names: dict[int, Hashable] = {}
    comments: list[str] = []
    while pos < len(lines):
        line = lines[pos]
        lineno = pos + 1
        pos += 1
        if line == "c":
            comments = lines[pos:]
            break
        if not line.strip():
            continue
        kind = line[0]
        head, _, name = line.partition(" ")
        if kind not in "iol" or not head[1:].isdigit() or not name:
            raise AigerError(f"malformed symbol line {line!r}", lineno)
        idx = int(head[1:])
        if kind == "i":
            if idx >= n_in:
                raise AigerError(f"symbol for undeclared input {idx}", lineno)
            in_names[idx] = name
        elif kind == "o":
            if idx >= n_out:
                raise AigerError(f"symbol for undeclared output {idx}", lineno)
            out_names[idx] = name
        else:
            raise AigerError("latch symbol in combinational document", lineno)

    names = [in_names.get(k, f"i{k}") for k in range(n_in)]
    if len(set(names)) != len(names):
        raise AigerError("duplicate input symbol", None)

    node_of: dict[int, Ref] = {0: m.false}
    for k, lit in enumerate(input_lits):
        if lit // 2 in node_of:
            raise AigerError(f"input variable {lit // 2} defined twice", 2 + k)
        node_of[lit // 2] = m.var(names[k])
    defs = {}
    for lhs, r0, r1, lineno in gates:
        if lhs // 2 in node_of or lhs // 2 in defs:
            raise AigerError(f"variable {lhs // 2} defined twice", lineno)
        defs[lhs // 2] = (r0, r1, lineno)

    def lit_node(lit: int, lineno: int) -> Ref:
        v = lit // 2
        if v not in node_of:
            _define(v, lineno)
        f = node_of[v]
        return m.not_(f) if lit & 1 else f

    def _define(v: int, lineno: int):
        # iterative post-order over gate definitions
        stack = [(v, False)]
        on_stack = set()
        while stack:
            u, ready = stack.pop()
            if u in node_of:
                continue
            if u not in defs:
                raise AigerError(f"undefined literal variable {u}", lineno)
            r0, r1, ln = defs[u]
            if ready:
                a = node_of[r0 // 2]
                b = node_of[r1 // 2]
                node_of[u] = m.and_(m.not_(a) if r0 & 1 else a, m.not_(b) if r1 & 1 else b)
                continue
            if u in on_stack:
                raise AigerError(f"cyclic definition through variable {u}", ln)
            on_stack.add(u)
            stack.append((u, True))
            for r in (r0, r1):
                if r // 2 not in node_of:
                    stack.append((r // 2, False))

    outs = [lit_node(lit, ln) for lit, ln in out_lits]
    onames = [out_names.get(k, f"o{k}") for k in range(n_out)]
    return m, AagCircuit(names, outs, onames, comments)


def parse_aiger(text: str, output_names: Iterable[Hashable], manager: Manager | None = None) -> Spec:
    """Read a single-output ``aag`` specification.

    ``output_names`` selects which AIG inputs are the outputs Y to synthesize;
    its iteration order becomes the initial Y order.
    """
    m, circ = read_aag(text, manager)
    if len(circ.outputs) != 1:
        raise AigerError(f"specification must have exactly one output, found {len(circ.outputs)}", 1)
    outputs = list(output_names)
    declared = set(circ.input_names)
    for name in outputs:
        if name not in declared:
            raise AigerError(f"undeclared output variable {name!r}", None)
    chosen = set(outputs)
    inputs = [n for n in circ.input_names if n not in chosen]
    return Spec(m, circ.outputs[0], VarTable(inputs, outputs))


def write_aiger(m: Manager, outputs: Sequence[Ref], inputs: Sequence[Hashable],
                output_names: Sequence[Hashable] | None = None,
                comments: Sequence[str] = ()) -> str:
    """Serialize formulas over ``inputs`` as an ``aag`` document.

    OR, XOR and ITE nodes are lowered to AND-inverter form with structural
    hashing of the emitted gates.
    """
    lit_of: dict[Ref, int] = {m.false: 0, m.true: 1}
    for k, name in enumerate(inputs):
        lit_of[m.var(name)] = 2 * (k + 1)
    gates: list[tuple[int, int, int]] = []
    strash: dict[tuple[int, int], int] = {}
    next_var = [len(inputs) + 1]

    def and2(a: int, b: int) -> int:
        if a == 0 or b == 0 or a == b ^ 1:
            return 0
        if a == 1:
            return b
        if b == 1 or a == b:
            return a
        key = (max(a, b), min(a, b))
        lit = strash.get(key)
        if lit is None:
            lit = 2 * next_var[0]
            next_var[0] += 1
            gates.append((lit, key[0], key[1]))
            strash[key] = lit
        return lit

    def and_n(lits: list[int]) -> int:
        acc = lits[0]
        for lit in lits[1:]:
            acc = and2(acc, lit)
        return acc

    def or2(a: int, b: int) -> int:
        return and2(a ^ 1, b ^ 1) ^ 1

    for g in m.topo(outputs):
        if g in lit_of:
            continue
        k = m.kind(g)
        cs = [lit_of.get(c) for c in m.children(g)]
        if k == VAR:
            raise FormulaError(f"variable {m.label(g)!r} is not among the declared inputs")
        if k == CONST:
            lit = 1 if m.label(g) else 0
        elif k == NOT:
            lit = cs[0] ^ 1
        elif k == AND:
            lit = and_n(cs)
        elif k == OR:
            lit = and_n([c ^ 1 for c in cs]) ^ 1
        elif k == XOR:
            a, b = cs
            lit = or2(and2(a, b ^ 1), and2(a ^ 1, b))
        elif k == ITE:
            s, a, b = cs
            lit = or2(and2(s, a), and2(s ^ 1, b))
        else:
            raise FormulaError(f"cannot lower node kind {k}")
        lit_of[g] = lit

    lines = [f"aag {next_var[0] - 1} {len(inputs)} 0 {len(outputs)} {len(gates)}"]
    lines += [str(2 * (k + 1)) for k in range(len(inputs))]
    lines += [str(lit_of[o]) for o in outputs]
    lines += [f"{lhs} {r0} {r1}" for lhs, r0, r1 in gates]
    lines += [f"i{k} {name}" for k, name in enumerate(inputs)]
    if output_names is not None:
        lines += [f"o{k} {name}" for k, name in enumerate(output_names)]
    if comments:
        lines.append("c")
        lines += list(comments)
    return "\n".join(lines) + "\n"


def spec_to_aiger(spec: Spec) -> str:
    return write_aiger(spec.manager, [spec.root], list(spec.vars.inputs) + list(spec.vars.outputs),
                       output_names=["spec"])


# ----------------------------------------------------------------------
# manifests

def read_manifest(text: str) -> dict:
    """Parse an output manifest: ``{"outputs": [...], "order": [...]?}``."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AigerError(f"manifest is not valid JSON: {exc}") from None
    if isinstance(data, list):
        data = {"outputs": data}
    if not isinstance(data, dict) or not isinstance(data.get("outputs"), list):
        raise AigerError("manifest must contain an 'outputs' list")
    outputs = data["outputs"]
    if not all(isinstance(n, str) for n in outputs) or len(set(outputs)) != len(outputs):
        raise AigerError("manifest outputs must be distinct strings")
    order = data.get("order")
    if order is not None and sorted(order) != sorted(outputs):
        raise AigerError("manifest 'order' must be a permutation of 'outputs'")
    return {"outputs": outputs, "order": order}


def write_manifest(outputs: Sequence[str], order: Sequence[str] | None = None) -> str:
    data: dict = {"outputs": list(outputs)}
    if order is not None:
        data["order"] = list(order)
    return json.dumps(data, indent=2) + "\n"


def result_manifest(inputs: Sequence[str], outputs: Sequence[str]) -> str:
    """Manifest accompanying a synthesized AIGER file: y name -> output index."""
    data = {"inputs": list(inputs), "outputs": {name: k for k, name in enumerate(outputs)}}
    return json.dumps(data, indent=2) + "\n"
