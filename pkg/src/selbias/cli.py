"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 input/parse error, 4 estimator
precondition error, 5 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from . import scenarios
from .bootstrap import default_workers
from .evaluation import (
    DEFAULT_SEED,
    EvalConfig,
    TABLE_NAMES,
    reproduce_table,
    resolve_budget,
    simulate,
    summarize,
)
from .io import ParseError, read_dataset, read_scenario, write_rows_csv
from .methods import estimate
from .model import BudgetError, EstimatorSpec, PreconditionError, ValidationError
from .oracle import EnumerationBudget, exact_nb_bias

EXIT_PARSE, EXIT_PRECONDITION, EXIT_BUDGET = 3, 4, 5
MANIFEST = "manifest.json"
MANIFEST_SCHEMA = "selbias.run-manifest/1"

_HINTS = {
    "NB requires subject-level data": "use a PB method such as --method pb1 for summary data",
    "jackknife requires subject-level data": "use --method shrink or a PB method for summary data",
}


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _methods(text: str) -> list[str]:
    codes = [c.strip() for c in text.split(",") if c.strip()]
    for c in codes:
        try:
            EstimatorSpec.parse(c)
        except ValidationError as e:
            raise argparse.ArgumentTypeError(str(e)) from None
    return codes


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="selbias", description="Estimate the largest of several group means "
                                "with reduced selection bias.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="run estimators on a dataset file")
    e.add_argument("--input", required=True, type=Path)
    e.add_argument("--format", choices=("subject", "summary"), help="default: inferred from the header")
    e.add_argument("--method", type=_methods, default=["traditional"],
                   help="comma-separated: traditional, jk, jkp, shrink, pb1..pb3, nb1..nb3, pb2s, nb2s, ...")
    e.add_argument("--B", type=int, default=1000)
    e.add_argument("--seed", type=int, default=1)
    e.add_argument("--workers", type=int, default=None)
    e.add_argument("--output", type=Path, help="directory for estimates.csv and the run manifest")
    e.add_argument("--exact-nb-level", type=int, choices=(1, 2), help=argparse.SUPPRESS)

    s = sub.add_parser("simulate", help="Monte Carlo bias/MSE of estimators on a scenario")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=sorted(scenarios.FAMILIES))
    src.add_argument("--scenario", type=Path, help="key = value scenario file")
    s.add_argument("--theta", type=_floats, help="override the builtin mean vector")
    s.add_argument("--w", type=float, help="mixture weight for S3/S4")
    s.add_argument("--n", type=int, help="per-group sample size for toy")
    s.add_argument("--methods", type=_methods, default=["traditional"])
    s.add_argument("--R", type=int, default=10_000)
    s.add_argument("--B", type=int, default=80)
    s.add_argument("--seed", type=int, default=DEFAULT_SEED)
    s.add_argument("--conditional-target", type=int, help="0-based group index to condition on")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--output", type=Path)

    r = sub.add_parser("reproduce", help="reproduce a reference table")
    r.add_argument("table", choices=TABLE_NAMES)
    r.add_argument("--quick", action="store_true", help="R=2000 (triple bootstrap R=1000)")
    r.add_argument("--R", type=int)
    r.add_argument("--R-triple", type=int)
    r.add_argument("--seed", type=int, default=DEFAULT_SEED)
    r.add_argument("--workers", type=int, default=None)
    r.add_argument("--output", type=Path)

    m = sub.add_parser("replay", help="re-run the command recorded in a run manifest")
    m.add_argument("manifest", type=Path)
    m.add_argument("--output", type=Path, help="write to this directory instead of the recorded one")
    return p


def _write_manifest(outdir: Path, argv, args, t0: float, outputs: list[str], timings=None) -> None:
    config = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()}
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "command": args.command,
        "argv": list(argv),
        "config": config,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "started_utc": datetime.fromtimestamp(t0, timezone.utc).isoformat(),
        "duration_seconds": time.time() - t0,
        "outputs": outputs,
    }
    if timings:
        manifest["timings_seconds"] = timings
    (outdir / MANIFEST).write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _cmd_estimate(args, argv, t0) -> int:
    d = read_dataset(args.input, args.format)
    if args.exact_nb_level:
        ex = exact_nb_bias(d, args.exact_nb_level, EnumerationBudget())
        print(f"exact NB level {ex.level}: theta_hat={ex.theta_hat:.6f} bias={list(ex.bias)} "
              f"corrected={ex.corrected:.6f}")
        return 0
    rows = []
    for code in args.method:
        spec = EstimatorSpec.parse(code, B=args.B, seed=args.seed)
        est = estimate(d, spec, workers=args.workers)
        tr = est.trace
        row = {"method": code, "value": est.value, "raw": tr.raw,
               "selected": d.labels[tr.selected_index], "selected_index": tr.selected_index,
               "bias_estimates": ";".join(repr(a) for a in tr.bias_estimates),
               "shrink_c": tr.shrink_c, "shrink_c_plus": tr.shrink_c_plus,
               "B": args.B if spec.kind in ("bootstrap", "hybrid") else None,
               "seed": args.seed if spec.kind in ("bootstrap", "hybrid") else None}
        rows.append(row)
        extra = ""
        if tr.bias_estimates:
            extra += " bias=[" + ", ".join(f"{a:.4f}" for a in tr.bias_estimates) + "]"
        if tr.shrink_c_plus is not None:
            extra += f" C+={tr.shrink_c_plus:.4f}"
        print(f"{code:12s} {est.value:.4f}  (raw {tr.raw:.4f}, selected {row['selected']}){extra}")
    if args.output:
        args.output.mkdir(parents=True, exist_ok=True)
        cols = list(rows[0])
        write_rows_csv(rows, cols, args.output / "estimates.csv")
        _write_manifest(args.output, argv, args, t0, ["estimates.csv"])
    return 0


def _scenarios_for(args) -> list:
    if args.scenario:
        return [read_scenario(args.scenario)]
    fam = args.builtin
    make, _ = scenarios.FAMILIES[fam]
    if fam == "toy":
        return [scenarios.toy(args.n)] if args.n else scenarios.family(fam)
    if fam in ("S3", "S4"):
        return [make(args.w)] if args.w is not None else scenarios.family(fam)
    return [make(args.theta)] if args.theta else scenarios.family(fam)


def _cmd_simulate(args, argv, t0) -> int:
    workers = default_workers() if args.workers is None else args.workers
    cfg = EvalConfig(args.R, args.B, tuple(args.methods), args.seed, args.conditional_target, workers)
    rows, blocks = [], []
    for s in _scenarios_for(args):
        rep = summarize(s, cfg, simulate(s, cfg))
        probs = ", ".join(f"{p:.4f}" for p in rep.selection_prob)
        lines = [f"## {s.name}  (true max {rep.true_theta_max:g}, R={rep.R}, selection prob [{probs}])", "",
                 "| method | bias | bias_se | mse | mse_se | cond_bias | cond_mse | cond_n |",
                 "|---|---|---|---|---|---|---|---|"]
        for m in rep.methods:
            def f(v):
                return "" if v is None else f"{v:.4f}"
            lines.append(f"| {m.method} | {f(m.marginal_bias)} | {f(m.bias_se)} | {f(m.marginal_mse)} | "
                         f"{f(m.mse_se)} | {f(m.conditional_bias)} | {f(m.conditional_mse)} | "
                         f"{m.conditioning_count if rep.conditional_target is not None else ''} |")
        blocks.append("\n".join(lines))
        for r in rep.rows():
            r["selection_prob"] = ";".join(repr(float(p)) for p in rep.selection_prob)
            rows.append(r)
    text = "\n\n".join(blocks) + "\n"
    print(text, end="")
    if args.output:
        args.output.mkdir(parents=True, exist_ok=True)
        write_rows_csv(rows, list(rows[0]), args.output / "report.csv")
        (args.output / "report.md").write_text(text, encoding="utf-8")
        _write_manifest(args.output, argv, args, t0, ["report.csv", "report.md"])
    return 0


def _cmd_reproduce(args, argv, t0) -> int:
    args.R, args.R_triple = resolve_budget(args.R, args.quick, args.R_triple)
    t = reproduce_table(args.table, R=args.R, quick=args.quick, seed=args.seed, workers=args.workers,
                        R_triple=args.R_triple)
    md = t.to_markdown()
    print(md, end="")
    for k, v in t.timings.items():
        print(f"time {k}: {v:.3f} s")
    if args.output:
        args.output.mkdir(parents=True, exist_ok=True)
        write_rows_csv(t.rows, t.columns, args.output / f"{t.name}.csv")
        (args.output / f"{t.name}.md").write_text(md, encoding="utf-8")
        _write_manifest(args.output, argv, args, t0, [f"{t.name}.csv", f"{t.name}.md"], t.timings)
    return 0


def _cmd_replay(args) -> int:
    manifest = json.loads(args.manifest.read_text(encoding="utf-8"))
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ParseError(args.manifest, 1, "not a selbias run manifest")
    argv = list(manifest["argv"])
    if args.output is not None:
        if "--output" in argv:
            argv[argv.index("--output") + 1] = str(args.output)
        else:
            argv += ["--output", str(args.output)]
    return main(argv)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    t0 = time.time()
    if getattr(args, "workers", 0) is None:
        args.workers = default_workers()
    try:
        if args.command == "estimate":
            return _cmd_estimate(args, argv, t0)
        if args.command == "simulate":
            return _cmd_simulate(args, argv, t0)
        if args.command == "reproduce":
            return _cmd_reproduce(args, argv, t0)
        return _cmd_replay(args)
    except (ParseError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except PreconditionError as e:
        msg = str(e)
        hint = _HINTS.get(msg)
        print(f"error: {msg}" + (f"; {hint}" if hint else ""), file=sys.stderr)
        return EXIT_PRECONDITION
    except ValidationError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except BudgetError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
