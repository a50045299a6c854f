"""Command line interface: ``lazyid solve`` and ``lazyid compare``."""

from __future__ import annotations

import argparse
import json
import sys
from itertools import product
from pathlib import Path
from typing import Optional, Sequence

from .hugin import run_hugin
from .datasets import EXAMPLES, example_path
from .io import load_model
from .jtree import build_for
from .lazy import run_lazy
from .model import InfluenceDiagram, ModelError, check_evidence, information_partition
from .oracle import OracleCapExceeded, brute_force_solve, bucket_eliminate
from .potential import OpCounter

EXIT_OK, EXIT_MODEL, EXIT_DISAGREE = 0, 2, 3
ENGINES = ("lazy", "hugin", "ve", "brute")
MEU_TOL = 1e-9


def _sig(x: float) -> float:
    return float(f"{x:.9g}")


def _load(path: str) -> InfluenceDiagram:
    """Load a model file; a missing path named after a bundled network loads that network."""
    p = Path(path)
    if not p.exists() and p.stem in EXAMPLES and p.suffix in ("", ".id"):
        p = example_path(p.stem)
    return load_model(p)


def _parse_evidence(items: Sequence[str]) -> dict:
    out = {}
    for item in items or ():
        var, sep, state = item.partition("=")
        if not sep or not var or not state:
            raise ModelError(f"evidence must look like VAR=state, got {item!r}")
        out[var.strip()] = state.strip()
    return out


def run_engine(engine: str, diagram: InfluenceDiagram, evidence: dict,
               prune: bool = True, force_divide: bool = False) -> dict:
    """Solve with one engine and return a report dictionary."""
    ctr = OpCounter()
    compile_ops, tree = None, None
    if engine == "lazy":
        run = run_lazy(diagram, evidence, ctr, prune=prune, force_divide=force_divide)
        strategy, tree = run.strategy, run.tree
    elif engine == "hugin":
        run = run_hugin(diagram, evidence, ctr)
        strategy, tree, compile_ops = run.strategy, run.tree, run.compile_ops
    elif engine == "ve":
        strategy, _ = bucket_eliminate(diagram, None, evidence, ctr)
    elif engine == "brute":
        strategy = brute_force_solve(diagram, evidence)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    report = {
        "engine": engine,
        "meu": strategy.meu,
        "strategy": strategy,
        "ops": ctr,
        "compile_ops": compile_ops,
        "tree": tree,
    }
    return report


def _rules_json(diagram: InfluenceDiagram, strategy) -> dict:
    out = {}
    for d, rule in strategy.rules.items():
        dec = diagram.variables[d]
        entries = []
        for idx in product(*(range(c) for c in rule.cards)):
            entries.append(
                {
                    "given": {diagram.name(v): diagram.variables[v].states[s]
                              for v, s in zip(rule.variables, idx)},
                    "choice": dec.states[int(rule.table[idx])],
                    "tie": bool(rule.ties[idx]),
                }
            )
        out[dec.name] = {
            "given": [diagram.name(v) for v in rule.variables],
            "arbitrary": rule.arbitrary,
            "table": entries,
        }
    return out


def report_json(diagram: InfluenceDiagram, report: dict, tree_text: Optional[str] = None) -> str:
    ops = report["ops"]
    doc = {
        "engine": report["engine"],
        "meu": _sig(report["meu"]),
        "rules": _rules_json(diagram, report["strategy"]),
        "ops": ops.as_dict(),
        "divisions": {"introduced": ops.divisions_introduced, "executed": ops.divisions},
    }
    if report["compile_ops"] is not None:
        doc["compile_ops"] = report["compile_ops"].as_dict()
    if tree_text is not None:
        doc["tree"] = tree_text.splitlines()
    return json.dumps(doc, indent=2) + "\n"


def report_text(diagram: InfluenceDiagram, report: dict) -> str:
    ops = report["ops"]
    lines = [f"engine: {report['engine']}", f"MEU: {report['meu']:.9g}"]
    for name, rule in _rules_json(diagram, report["strategy"]).items():
        given = ", ".join(rule["given"]) or "nothing"
        note = "  (no effect on utility: any choice is optimal)" if rule["arbitrary"] else ""
        lines.append(f"decision {name} given {given}:{note}")
        for entry in rule["table"]:
            cond = ", ".join(f"{k}={v}" for k, v in entry["given"].items()) or "always"
            tie = "  (tie)" if entry["tie"] and not rule["arbitrary"] else ""
            lines.append(f"  {cond} -> {entry['choice']}{tie}")
    d = ops.as_dict()
    lines.append(
        "ops: " + "  ".join(f"{k} {v}" for k, v in d.items()) + f"  total {ops.total}"
    )
    lines.append(f"divisions: introduced {ops.divisions_introduced}  executed {ops.divisions}")
    if report["compile_ops"] is not None:
        c = report["compile_ops"]
        lines.append(
            "compile ops: " + "  ".join(f"{k} {v}" for k, v in c.as_dict().items())
            + f"  total {c.total}"
        )
    return "\n".join(lines) + "\n"


def compare(diagram: InfluenceDiagram, evidence: dict) -> tuple:
    """Run every engine; returns (table text, agree flag)."""
    rows = []
    meus = []
    for label, engine in (("lazy", "lazy"), ("hugin", "hugin"), ("ve-immediate", "ve"), ("brute", "brute")):
        try:
            rep = run_engine(engine, diagram, evidence)
        except OracleCapExceeded:
            rows.append((label, "skipped (too large)", "", "", "", "", "", ""))
            continue
        ops = rep["ops"]
        meus.append(rep["meu"])
        d = ops.as_dict()
        extra = ""
        if engine == "lazy":
            extra = f"div introduced {ops.divisions_introduced}, executed {ops.divisions}"
        elif engine == "hugin":
            extra = f"compile {rep['compile_ops'].total} (not in total)"
        elif engine == "ve":
            extra = f"div executed {ops.divisions}"
        elif engine == "brute":
            extra = "reference; ops not counted"
        rows.append((label, f"{rep['meu']:.9g}", d["mul"], d["add"], d["div"], d["max"],
                     ops.total, extra))
    head = ("engine", "MEU", "mul", "add", "div", "max", "total", "notes")
    table = [head] + [tuple(map(str, r)) for r in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(head))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in table]
    agree = all(abs(m - meus[0]) <= MEU_TOL for m in meus)
    lines.append("engines agree on MEU" if agree else "ENGINES DISAGREE ON MEU")
    return "\n".join(lines) + "\n", agree


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lazyid", description="Solve influence diagrams by lazy propagation."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser("solve", help="solve a model file with one engine")
    solve.add_argument("file", help="model file, or the name of a bundled network (ex61, ex52)")
    solve.add_argument("--engine", choices=ENGINES, default="lazy")
    solve.add_argument("--evidence", action="append", default=[], metavar="VAR=state")
    solve.add_argument("--json", action="store_true", help="machine-readable report")
    solve.add_argument("--dump-tree", action="store_true", help="print the junction tree")
    solve.add_argument("--no-prune", action="store_true", help="disable relevance pruning (lazy)")
    solve.add_argument("--force-divide", action="store_true",
                       help="perform divisions immediately (lazy)")
    cmp_ = sub.add_parser("compare", help="run all engines and tabulate op counts")
    cmp_.add_argument("file", help="model file, or the name of a bundled network (ex61, ex52)")
    cmp_.add_argument("--evidence", action="append", default=[], metavar="VAR=state")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        diagram = _load(args.file)
        evidence = check_evidence(diagram, _parse_evidence(args.evidence))
        if args.command == "compare":
            text, agree = compare(diagram, evidence)
            sys.stdout.write(text)
            return EXIT_OK if agree else EXIT_DISAGREE
        report = run_engine(args.engine, diagram, evidence,
                            prune=not args.no_prune, force_divide=args.force_divide)
    except (ModelError, OSError, OracleCapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    tree_text = None
    if args.dump_tree:
        tree = report["tree"] or build_for(diagram, information_partition(diagram))
        tree_text = tree.dump([v.name for v in diagram.variables])
    if args.json:
        sys.stdout.write(report_json(diagram, report, tree_text))
    else:
        sys.stdout.write((tree_text or "") + report_text(diagram, report))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
