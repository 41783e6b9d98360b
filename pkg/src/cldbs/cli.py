"""Command-line front end.

Each subcommand writes only under ``--out`` and prints one JSON object to
stdout; diagnostics go to stderr. Exit status: 0 success, 1 runtime or
configuration error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import SCENARIOS, ExperimentConfig, load_config, with_value
from .dataset_io import RUN_COLUMNS, generate_dataset, read_run, simulate_run, write_run
from .errors import ConfigurationError, DesignError, FormatError, GenerationError
from .metrics import COMPARISON_COLUMNS, comparison_csv, compute_report
from .plots import plot_comparison, plot_trace

COMPARE_ORDER = ("dbs_off", "open_loop", "onoff_lif", "dual_lif")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cldbs", description="Closed-loop DBS simulation suite.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="one closed-loop run plus its DBS-off baseline")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("compare", help="DBS-off, open loop, on-off LIF and dual LIF on the same seeds")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--seeds", type=int, nargs="+", help="plant seeds (default: the config's plant.seed)")

    s = sub.add_parser("sweep", help="simulate over values of one config parameter")
    s.add_argument("--param", required=True, help="dotted config path, e.g. controller.gain")
    s.add_argument("--values", required=True, nargs="+", help="values, parsed as JSON")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("gen-dataset", help="generate the severity x scenario x seed dataset")
    s.add_argument("--spec", required=True)
    s.add_argument("--out", required=True)

    s = sub.add_parser("plot", help="SVG figures of a run file or comparison table")
    s.add_argument("--run", required=True)
    s.add_argument("--out", required=True)
    return p


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _simulate_pair(config: ExperimentConfig, kind: str, seed: int):
    cfg = replace(config, plant=replace(config.plant, seed=seed))
    sev = cfg.plant.severity
    trace = simulate_run(cfg, sev, kind, seed)
    baseline = trace if kind == "dbs_off" else simulate_run(cfg, sev, "dbs_off", seed)
    return trace, compute_report(trace, baseline, cfg.metrics)


def cmd_simulate(args) -> dict:
    config = load_config(args.config)
    out = Path(args.out)
    trace, report = _simulate_pair(config, config.controller.kind, config.plant.seed)
    summary = {"controller": report.controller, "metrics": report.to_dict()}
    _write(out / "metrics.json", report.to_json())
    if config.output.trace:
        summary["trace"] = str(out / "trace.csv")
        summary["trace_digest"] = write_run(trace, out / "trace.csv")
    if config.output.plots:
        summary["plots"] = [str(p) for p in plot_trace(trace, out / "plots")]
    return summary


def cmd_compare(args) -> dict:
    config = load_config(args.config)
    out = Path(args.out)
    seeds = args.seeds if args.seeds else [config.plant.seed]
    lines, rows = [], []
    for seed in seeds:
        cfg = replace(config, plant=replace(config.plant, seed=seed))
        traces = {k: simulate_run(cfg, cfg.plant.severity, k, seed) for k in COMPARE_ORDER}
        for k in COMPARE_ORDER:
            rep = compute_report(traces[k], traces["dbs_off"], cfg.metrics)
            rows.append({"seed": seed, **rep.to_dict()})
            if config.output.trace:
                write_run(traces[k], out / "traces" / f"{k}__seed{seed}.csv")
    header = ("seed",) + COMPARISON_COLUMNS
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(["" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in header])
    _write(out / "comparison.csv", buf.getvalue())
    summary = {"comparison": str(out / "comparison.csv"), "rows": len(rows), "seeds": seeds}
    if config.output.plots:
        summary["plots"] = [str(p) for p in plot_comparison(rows, out / "plots")]
    return summary


def cmd_sweep(args) -> dict:
    config = load_config(args.config)
    out = Path(args.out)
    reports = []
    for raw in args.values:
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        cfg = with_value(config, args.param, value)
        _, rep = _simulate_pair(cfg, cfg.controller.kind, cfg.plant.seed)
        reports.append((raw, rep))
    body = comparison_csv([r for _, r in reports]).splitlines()
    text = f"{args.param},{body[0]}\n" + "".join(f"{v},{line}\n" for (v, _), line in zip(reports, body[1:]))
    _write(out / "sweep.csv", text)
    return {"sweep": str(out / "sweep.csv"), "param": args.param, "rows": len(reports)}


def cmd_gen_dataset(args) -> dict:
    config = load_config(args.spec)
    manifest = generate_dataset(config, args.out)
    return {"manifest": str(Path(args.out) / "manifest.json"), "runs": len(manifest.runs)}


def cmd_plot(args) -> dict:
    path = Path(args.run)
    try:
        with open(path, newline="") as fh:
            header = next(csv.reader(fh), [])
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror}") from exc
    if header == list(RUN_COLUMNS):
        files = plot_trace(read_run(path), args.out)
    elif "controller" in header:
        with open(path, newline="") as fh:
            files = plot_comparison(csv.DictReader(fh), args.out)
    else:
        raise FormatError(f"{path}: neither a run file nor a comparison table")
    return {"plots": [str(p) for p in files]}


COMMANDS = {
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "gen-dataset": cmd_gen_dataset,
    "plot": cmd_plot,
}


def execute(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        summary = COMMANDS[args.command](args)
    except (ConfigurationError, DesignError, FormatError, GenerationError, ValueError, OSError) as exc:
        print(f"cldbs {args.command}: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(summary, sort_keys=True))
    return 0


def main():
    sys.exit(execute())


if __name__ == "__main__":
    main()


__all__ = ["SCENARIOS", "build_parser", "execute", "main"]
