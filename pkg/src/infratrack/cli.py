"""Command line entry point: simulate, track, evaluate, bench-assoc."""

from __future__ import annotations

import argparse
import datetime as _dt
import glob
import json
import logging
import sys
from importlib import metadata, resources
from pathlib import Path

from . import bench, evaluation, pipeline, sim
from .config import ConfigError, PipelineFile, load_config
from .records import RecordError, dumps, iter_jsonl, list_to_record, write_jsonl

log = logging.getLogger("infratrack")

SHIPPED_SCENARIOS = ("crossing", "highway")


def version() -> str:
    try:
        return metadata.version("infratrack")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def shipped(kind: str, name: str) -> Path:
    return Path(str(resources.files("infratrack.data") / kind / f"{name}.yaml"))


def resolve(path: str, kind: str) -> Path:
    """A config path, or the name of a shipped config (e.g. ``highway``)."""
    p = Path(path)
    if p.exists() or p.suffix:
        return p
    cand = shipped(kind, path)
    return cand if cand.exists() else p


def write_manifest(out_dir: Path, command: str, configs: dict, seed=None, extra=None, name="manifest.json") -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    body = {
        "command": command,
        "argv": sys.argv[1:],
        "configs": {k: str(v) for k, v in configs.items()},
        "seed": seed,
        "out": str(out_dir),
        "version": version(),
        "started": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    body.update(extra or {})
    path = out_dir / name
    path.write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def cmd_simulate(args) -> int:
    path = resolve(args.config, "scenarios")
    scenario = sim.load_scenario(path)
    if args.seed is not None:
        scenario = scenario.with_seed(args.seed)
    out = Path(args.out)
    write_manifest(out, "simulate", {"scenario": path}, scenario.seed)
    truth, streams = sim.simulate(scenario)
    write_jsonl(out / "truth.jsonl", truth)
    for source, recs in streams.items():
        write_jsonl(out / f"detections_{source}.jsonl", recs)
    print(f"{len(truth)} truth frames, {len(streams)} detection streams -> {out}")
    return 0


def _source_of(rec: dict, path: Path) -> str:
    if "source" in rec:
        return str(rec["source"])
    stem = path.stem
    return stem[len("detections_") :] if stem.startswith("detections_") else stem


def cmd_track(args) -> int:
    path = resolve(args.pipeline, "pipelines")
    cfg = load_config(path, PipelineFile)
    files = sorted(Path(p) for p in glob.glob(args.inputs))
    if not files:
        raise FileNotFoundError(f"no input files match {args.inputs!r}")
    out = Path(args.out)
    write_manifest(out, "track", {"pipeline": path, **{f"input{k}": f for k, f in enumerate(files)}})
    records = [(_source_of(rec, f), rec) for f in files for rec in iter_jsonl(f)]
    tracker = pipeline.Tracker(cfg)
    n = 0
    with (out / "fused.jsonl").open("w", encoding="utf-8") as fh:
        for olist in pipeline.run(cfg, records, tracker=tracker):
            fh.write(dumps(list_to_record(olist)) + "\n")
            n += 1
    write_jsonl(out / "audit.jsonl", tracker.audit)
    print(f"{n} fused lists from {len(records)} detection lists -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    write_manifest(out, "evaluate", {"truth": args.truth, "fused": args.fused})
    report = evaluation.evaluate_files(args.truth, args.fused, args.include_tentative)
    evaluation.write_report(report, out)
    s = report.summary()

    def fmt(v, unit):
        return "n/a" if v is None else f"{v:.3f}{unit}"

    print(
        f"matched {s['matched']}  ghosts {len(s['ghosts'])}  misses {len(s['misses'])}  id_swaps {s['id_swaps']}\n"
        f"rmse_x {fmt(s['rmse_x'], ' m')}  rmse_y {fmt(s['rmse_y'], ' m')}  mae_theta {fmt(s['mae_theta'], ' deg')}"
    )
    for stream, st in s["latency"].items():
        print(f"latency {stream}: median {st['median'] * 1e3:.1f} ms  p95 {st['p95'] * 1e3:.1f} ms  (n={st['n']})")
    return 0


def _sizes(text: str) -> list[int]:
    try:
        sizes = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError("sizes must be integers >= 1")
    return sizes


def cmd_bench(args) -> int:
    if args.reps < 1:
        raise ValueError("reps must be >= 1")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_manifest(
        out.parent, "bench-assoc", {}, args.seed, {"sizes": args.sizes, "reps": args.reps}, name=out.stem + ".manifest.json"
    )
    timings = bench.run_bench(args.sizes, args.reps, args.seed, args.solvers)
    bench.write_csv(timings, out)
    print(bench.summary_table(timings))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="infratrack", description="Object-level multi-source tracking toolkit.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log warnings from the pipeline")
    ap.add_argument("--version", action="version", version=f"%(prog)s {version()}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate truth and detection streams from a scenario")
    p.add_argument("--config", required=True, help="scenario YAML, or a shipped name (crossing, highway)")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("track", help="run the tracking pipeline over detection streams")
    p.add_argument("--pipeline", required=True, help="pipeline YAML, or a shipped name")
    p.add_argument("--inputs", required=True, help="glob of detection JSONL files")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("evaluate", help="score fused output against truth")
    p.add_argument("--truth", required=True)
    p.add_argument("--fused", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--include-tentative", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench-assoc", help="time the assignment solvers on random matrices")
    p.add_argument("--sizes", type=_sizes, default=_sizes("2,4,8,16,32,64,128"))
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solvers", type=lambda s: s.split(","), default=list(bench.SOLVER_FUNCS))
    p.add_argument("--out", required=True, help="CSV path")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, RecordError, evaluation.EvaluationError, ValueError, KeyError, OSError) as exc:
        msg = " ".join(str(exc).split())
        print(f"infratrack: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
