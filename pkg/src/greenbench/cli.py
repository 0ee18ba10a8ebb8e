"""greenbench command line.

Exit codes: 0 success / valid test, 1 error, 2 the test ran but was
invalidated (for example a device failed the return-to-full-capacity probe).
Only the requested artifact goes to stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import GreenbenchError, InvalidMeasurementSet
from .metrics import MeasurementSet, WeightProfile, metric_from_set, parse_kind
from .reporting import DeviceReport, export, format_sig, render_comparison
from .scenario import (
    atomic_write,
    detect_kind,
    load_json,
    load_scenario,
    resolve,
    run_scenario,
    validate_file,
    write_outcome,
)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALIDATED = 2


def _err(msg: str) -> None:
    print(f"greenbench: {msg}", file=sys.stderr)


def _emit(data: bytes, out: str | None) -> None:
    if out:
        atomic_write(Path(out), data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _report_text(report: DeviceReport) -> bytes:
    lines = [f"device: {report.device}" + (f" ({report.label})" if report.label else "")]
    for m in report.metrics:
        lines.append(f"  {m.kind.value:<14}{format_sig(m.value):>12}  {m.units}")
    for v in report.validity:
        verdict = "valid" if v["valid"] else f"INVALID: {v['reason']}"
        lines.append(f"  [{v['procedure']}] {verdict}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _render(obj, fmt: str) -> bytes:
    if fmt == "table":
        if isinstance(obj, DeviceReport):
            return _report_text(obj)
        if hasattr(obj, "render_text"):
            return obj.render_text().encode("utf-8")
        return f"{obj.kind.value} = {format_sig(obj.value)} {obj.units}\n".encode("utf-8")
    return export(obj, fmt)


def _scenario_paths(path: Path) -> list[Path]:
    if not path.is_dir():
        return [resolve(str(path))]
    out = []
    for p in sorted(path.glob("*.json")):
        try:
            if detect_kind(load_json(p)) == "scenario":
                out.append(p)
        except GreenbenchError:
            continue
    if not out:
        raise GreenbenchError(f"{path}: no scenario files found")
    return out


def _run_one(path: str, out_dir: str, seed: int | None) -> tuple[str, bool, bytes, bytes]:
    outcome = run_scenario(load_scenario(path), orchestrator_seed=seed)
    write_outcome(outcome, Path(out_dir))
    return path, outcome.valid, export(outcome.report, "json"), _report_text(outcome.report)


def cmd_run(args) -> int:
    paths = _scenario_paths(Path(args.scenario))
    if len(paths) == 1 or args.jobs == 1:
        results = [_run_one(str(p), args.out, args.seed) for p in paths]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(_run_one, str(p), args.out, args.seed) for p in paths]
            results = [f.result() for f in futures]
    all_valid = True
    for path, valid, as_json, as_text in results:
        if not valid:
            all_valid = False
            _err(f"{path}: test invalidated")
        if args.format == "table":
            sys.stdout.buffer.write(as_text)
        elif args.format == "json":
            sys.stdout.buffer.write(as_json)
    if args.format == "csv":
        reports = [DeviceReport.from_dict(json.loads(r[2])) for r in results]
        sys.stdout.buffer.write(b"".join(export(r, "csv") for r in reports))
    sys.stdout.flush()
    return EXIT_OK if all_valid else EXIT_INVALIDATED


def _parse_weights(text: str, reduced: float) -> WeightProfile:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise GreenbenchError("--weights takes three comma-separated values a,b,e")
    return WeightProfile(*parts, reduced_load_fraction=reduced)


def cmd_metrics(args) -> int:
    mset = MeasurementSet.from_dict(load_json(args.measurement))
    kind = parse_kind(args.metric)
    weights = None
    if args.weights:
        reduced = mset.weights.reduced_load_fraction if mset.weights else 0.3
        weights = _parse_weights(args.weights, reduced)
    try:
        result = metric_from_set(mset, kind, weights)
    except InvalidMeasurementSet as exc:
        _err(str(exc))
        return EXIT_ERROR
    _emit(_render(result, args.format), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    reports = [DeviceReport.from_dict(load_json(p)) for p in args.reports]
    table = render_comparison(reports, parse_kind(args.metric))
    _emit(_render(table, args.format), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    path = Path(args.path)
    paths = sorted(path.glob("*.json")) if path.is_dir() else [path]
    status = EXIT_OK
    for p in paths:
        try:
            kind = validate_file(p)
            print(f"{p}: ok ({kind})", file=sys.stderr)
        except GreenbenchError as exc:
            _err(str(exc))
            status = EXIT_ERROR
    return status


def _common(fmt: str = "json") -> argparse.ArgumentParser:
    # fresh per subcommand: argparse parents share action objects
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="output file (directory for run)")
    common.add_argument("--format", choices=("json", "csv", "table"), default=fmt)
    common.add_argument("--seed", type=int, help="orchestrator seed override (u64)")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="greenbench", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[_common()], help="run a scenario file or directory")
    p.add_argument("scenario")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for a directory")
    p.set_defaults(func=cmd_run, out="greenbench-out")

    p = sub.add_parser("metrics", parents=[_common()], help="compute a metric from a measurement file")
    p.add_argument("measurement")
    p.add_argument("--metric", required=True)
    p.add_argument("--weights", help="a,b,e weight override")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("compare", parents=[_common("table")], help="comparison table across reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--metric", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", parents=[_common()], help="schema-check device/scenario/measurement files")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        _err("--seed must be a 64-bit unsigned integer")
        return EXIT_ERROR
    try:
        return args.func(args)
    except GreenbenchError as exc:
        _err(str(exc))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
