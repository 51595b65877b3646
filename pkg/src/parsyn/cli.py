"""Command line interface: ``parsyn synth`` and ``parsyn bench``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .aiger import AigerError, parse_aiger, read_manifest, result_manifest, spec_to_aiger, write_aiger
from .bench import gen_factorization, gen_random_spec
from .formula import FormulaError, Spec
from .pipeline import SynthesisConfig, SynthesisResult, synthesize
from .scheduler import PartialResultError, SchedulerError

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_TIMEOUT = 3


def _add_run_options(p: argparse.ArgumentParser, seed_flag: str = "--seed"):
    p.add_argument("--workers", type=int, default=1, help="worker threads (default 1)")
    p.add_argument("--cegar-timeout", type=float, default=None, metavar="S",
                   help="after S seconds, internal nodes skip CEGAR (the root never does)")
    p.add_argument("--global-timeout", type=float, default=None, metavar="S",
                   help="abort the run after S seconds")
    p.add_argument("--cegar-variant", choices=("exact", "skolem"), default="exact")
    p.add_argument("--extract", choices=("gamma", "delta"), default="gamma",
                   help="use ~gamma_i (default) or delta_i as candidate")
    p.add_argument("--order", choices=("fanin", "given"), default="fanin",
                   help="output order: fan-in heuristic or manifest order")
    p.add_argument("--templates", action="store_true", help="compose AND/OR through operator templates")
    p.add_argument("--detect-ops", action="store_true", help="recover ITE/XOR from AIG patterns first")
    p.add_argument("--verify", action="store_true", help="SAT-check the result; exit 1 unless verified")
    p.add_argument("--dump-stats", type=Path, default=None, metavar="PATH",
                   help="write per-node statistics as JSON lines")
    p.add_argument(seed_flag, dest="seed", type=int, default=0, help="SAT solver seed")
    p.add_argument("-o", "--output", type=Path, default=None,
                   help="write the synthesized functions as aag here, with a .json manifest next to "
                        "it (synth defaults to <spec>.skolem.aag)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="parsyn", description="Compositional Skolem function synthesis.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="synthesize Skolem functions for an AIGER specification")
    s.add_argument("spec", type=Path, help="single-output aag specification")
    s.add_argument("--outputs", type=Path, required=True,
                   help='JSON manifest {"outputs": [...], "order": [...]} naming the Y inputs')
    _add_run_options(s)

    b = sub.add_parser("bench", help="run a generated benchmark")
    bsub = b.add_subparsers(dest="family", required=True)
    f = bsub.add_parser("factorization", help="A * B == P with non-trivial factors")
    f.add_argument("--bits", type=int, required=True, help="bits per factor")
    f.add_argument("--emit-spec", type=Path, default=None, help="also write the spec as aag")
    _add_run_options(f)
    r = bsub.add_parser("random", help="seeded random specification")
    r.add_argument("--seed", dest="spec_seed", type=int, required=True, help="generator seed")
    r.add_argument("--nodes", type=int, required=True)
    r.add_argument("--inputs", type=int, required=True)
    r.add_argument("--outputs", type=int, required=True)
    r.add_argument("--emit-spec", type=Path, default=None, help="also write the spec as aag")
    _add_run_options(r, seed_flag="--solver-seed")
    return parser


def _config(args) -> SynthesisConfig:
    return SynthesisConfig(
        workers=args.workers, global_timeout=args.global_timeout,
        cegar_node_timeout=args.cegar_timeout, cegar_variant=args.cegar_variant,
        use_templates=args.templates, seed=args.seed, extract=args.extract,
        order=args.order, detect_ops=args.detect_ops)


def _dump_stats(path: Path, res: SynthesisResult):
    m = res.spec.manager
    with path.open("w") as fh:
        for node in res.run.completion_order:
            fh.write(json.dumps(res.run.results[node].stats_record(m)) + "\n")
        summary = {
            "summary": True, "wall_time": round(res.wall_time, 6),
            "nodes": len(res.run.annotations),
            "cegar_iterations": sum(r.cegar.iterations for r in res.run.results.values()),
            "root_cegar_iterations": res.run.results[res.run.root].cegar.iterations,
            "output_order": list(res.spec.vars.outputs),
            "verdict": res.verification.verdict if res.verification else None,
        }
        fh.write(json.dumps(summary) + "\n")


def _run(spec: Spec, args) -> int:
    try:
        res = synthesize(spec, _config(args), check=args.verify)
    except PartialResultError as exc:
        print(f"timeout: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except SchedulerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    vars = res.spec.vars
    m = spec.manager
    print(f"synthesized {len(vars.outputs)} functions over {len(vars.inputs)} inputs "
          f"in {res.wall_time:.2f}s ({res.run.wall_time:.2f}s annotating, "
          f"{len(res.run.annotations)} nodes)")
    if args.output is not None:
        args.output.write_text(write_aiger(m, res.skolem.f, vars.inputs, vars.outputs))
        args.output.with_suffix(".json").write_text(result_manifest(vars.inputs, vars.outputs))
        print(f"wrote {args.output} and {args.output.with_suffix('.json')}")
    if args.dump_stats is not None:
        _dump_stats(args.dump_stats, res)
    if args.verify:
        v = res.verification
        print(f"verification: {v.verdict}")
        if v.verdict == "falsified":
            print("witness: " + " ".join(f"{k}={int(b)}" for k, b in v.witness.items()))
        return EXIT_OK if v.ok else EXIT_VERIFY_FAILED
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            manifest = read_manifest(args.outputs.read_text())
            spec = parse_aiger(args.spec.read_text(), manifest["outputs"])
            if manifest["order"] is not None:
                spec = Spec(spec.manager, spec.root, spec.vars.with_outputs(manifest["order"]))
            if args.output is None:
                args.output = args.spec.with_suffix(".skolem.aag")
            return _run(spec, args)
        if args.family == "factorization":
            spec = gen_factorization(args.bits)
        else:
            spec = gen_random_spec(args.spec_seed, args.nodes, args.inputs, args.outputs)
        if args.emit_spec is not None:
            args.emit_spec.write_text(spec_to_aiger(spec))
        return _run(spec, args)
    except (AigerError, FormulaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
