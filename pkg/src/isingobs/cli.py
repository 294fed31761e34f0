"""Command line: ``isingobs verify``, ``isingobs report merge`` and ``isingobs plotdata``.

Exit status: 0 all selected suites pass, 1 a suite failed, 2 the
configuration (or a report file) does not match its schema, 3 internal
error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from .config import SUITES, ConfigError, load_config

EXIT_OK, EXIT_FAIL, EXIT_SCHEMA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("isingobs")


def write_report(report: dict, path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def _status(report: dict) -> int:
    suites = report.get("suites", {})
    if any(s.get("status") == "error" for s in suites.values()):
        return EXIT_INTERNAL
    return EXIT_OK if all(s.get("pass") for s in suites.values()) else EXIT_FAIL


def cmd_verify(args) -> int:
    from .suites import run_campaign  # heavy imports only when needed

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if args.suites:
        selected = list(args.suites)
    else:
        selected = cfg.run.suite_list()
    if "all" in selected:
        selected = list(SUITES)
    unknown = [s for s in selected if s not in SUITES]
    if unknown:
        print(f"unknown suite(s): {', '.join(unknown)}; known: {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_SCHEMA
    if args.jobs < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return EXIT_SCHEMA

    def progress(name, status, dt):
        log.info("%-15s %-5s %7.1f s", name, status, dt)

    report = run_campaign(cfg, selected, seed=args.seed, jobs=args.jobs, progress=progress)
    out = Path(args.out or cfg.run.out)
    path = out / "report.json"
    write_report(report, path)
    for name, res in report["suites"].items():
        print(f"{name:15s} {res['status'].upper()}")
        if res["status"] == "error":
            print(f"  {res['error']}", file=sys.stderr)
    print(f"report: {path}")
    return _status(report)


def _load_report(path: str) -> dict:
    try:
        rep = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read report {path}: {exc}") from exc
    if not isinstance(rep, dict) or "suites" not in rep or "config_hash" not in rep:
        raise ConfigError(f"{path} is not a report (missing 'suites' or 'config_hash')")
    return rep


def cmd_merge(args) -> int:
    """Union of the suites of several reports; a suite present twice must come from the same config."""
    try:
        reports = [_load_report(p) for p in args.reports]
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_SCHEMA
    hashes = sorted({r["config_hash"] for r in reports})
    suites, sources = {}, {}
    for p, rep in zip(args.reports, reports):
        for name, res in rep["suites"].items():
            if name in suites and sources[name][1] != rep["config_hash"]:
                print(f"suite {name!r} appears in {sources[name][0]} and {p} with different configs",
                      file=sys.stderr)
                return EXIT_SCHEMA
            suites[name] = res
            sources[name] = (p, rep["config_hash"])
    order = [s for s in SUITES if s in suites] + sorted(s for s in suites if s not in SUITES)
    merged = {
        "config_hash": hashes[0] if len(hashes) == 1 else hashes,
        "seed": sorted({r.get("seed") for r in reports}, key=str),
        "suites": {s: suites[s] for s in order},
        "passed": all(suites[s].get("pass") for s in order),
        "environment": {"merged_from": list(args.reports),
                        "environments": [r.get("environment") for r in reports]},
    }
    write_report(merged, Path(args.out))
    print(f"merged {len(reports)} reports ({len(order)} suites) into {args.out}")
    return _status(merged)


def emit_plotdata(report: dict, out: Path) -> list[Path]:
    """One CSV per plot table of every suite, header first; tables without rows give header-only files."""
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, res in report["suites"].items():
        for stem, table in res.get("plotdata", {}).items():
            path = out / f"{stem}.csv"
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(table["columns"])
                w.writerows(table["rows"])
            written.append(path)
    return written


def cmd_plotdata(args) -> int:
    try:
        report = _load_report(args.report)
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_SCHEMA
    out = Path(args.out) if args.out else Path(args.report).parent / "plotdata"
    for p in emit_plotdata(report, out):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isingobs", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log suite progress")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run verification suites")
    v.add_argument("suites", nargs="*", help=f"suites to run ({', '.join(SUITES)}, or 'all'); "
                                             "default: the [run] suites of the config")
    v.add_argument("--config", default=None,
                   help="config file or name; also searched in $ISINGOBS_CONFIG_DIR and packaged configs")
    v.add_argument("--jobs", type=int, default=1, help="suites run in parallel worker processes")
    v.add_argument("--seed", type=lambda s: int(s, 0), default=None, help="override the config seed")
    v.add_argument("--out", default=None, help="output directory for report.json")
    v.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help="log suite progress")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("report", help="report utilities")
    rsub = r.add_subparsers(dest="report_command", required=True)
    m = rsub.add_parser("merge", help="merge several reports")
    m.add_argument("reports", nargs="+")
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_merge)

    d = sub.add_parser("plotdata", help="write CSV plot tables from a report")
    d.add_argument("report")
    d.add_argument("--out", default=None, help="directory (default: plotdata/ next to the report)")
    d.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except Exception:  # noqa: BLE001
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
