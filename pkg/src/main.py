"""
Main entry point for the FEM bus simulator.
This module provides the command-line interface: validate faultloads, run
scenarios and campaigns, diff traces, emit the built-in golden scenarios, and
run or talk to the tester service.
"""

import argparse
import json
import logging
import sys
from enum import IntEnum
from pathlib import Path
from typing import Any, List, Optional

import jsonschema

from src.config.config import (
    DEFAULT_WORKERS,
    FAULTLOAD_ENDPOINT,
    LOG_FORMAT,
    LOG_LEVEL,
    TESTER_HOST,
    TESTER_PORT,
)
from src.faultload.faultload import parse_faultload
from src.harness.campaign_runner import (
    campaign_from_config,
    render_report_table,
    report_to_record,
    run_campaign,
)
from src.harness.outcome import ACCEPTABLE_BY_DEFAULT, Verdict, verdict_to_record
from src.harness.runner import run_scenario
from src.harness.scenario import BUILTIN_SCENARIOS, Scenario, resolve_scenario, scenario_to_record
from src.harness.schemas import REPORT_SCHEMA
from src.harness.trace import EventSource, TraceMask, diff_traces, parse_trace, render_monitor_log, serialize_trace
from src.utils.errors import CampaignError, FaultloadError, ScenarioError, TraceFormatError
from src.utils.http_utils import build_server_url, get_server_health, upload_faultload

# Set up logging
logging.basicConfig(level=LOG_LEVEL, format=LOG_FORMAT)
logger = logging.getLogger(__name__)


class ExitCode(IntEnum):
    OK = 0
    MISMATCH = 1
    USAGE = 2
    INTERNAL = 3


MONITORED_SOURCES = (EventSource.OBC, EventSource.SLP, EventSource.FEM)


def _write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _as_expected(scenario: Scenario, verdict: Verdict) -> bool:
    if scenario.expect is not None:
        return verdict.outcome is scenario.expect
    return verdict.outcome in ACCEPTABLE_BY_DEFAULT


def cmd_validate(path: str) -> ExitCode:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        print(f"error: cannot read {path}: {e}", file=sys.stderr)
        return ExitCode.USAGE
    try:
        faultload = parse_faultload(text)
    except FaultloadError as e:
        for violation in e.violations:
            print(violation)
        return ExitCode.USAGE
    print(f"valid ({len(faultload)} spec(s))")
    return ExitCode.OK


def cmd_run(scenario_ref: str, trace_out: str, report_out: str) -> ExitCode:
    try:
        scenario = resolve_scenario(scenario_ref)
    except ScenarioError as e:
        for violation in e.violations:
            print(violation, file=sys.stderr)
        return ExitCode.USAGE

    trace, verdict = run_scenario(scenario)
    try:
        Path(trace_out).write_text(serialize_trace(trace), encoding="utf-8")
        _write_json(Path(report_out), verdict_to_record(verdict))
    except OSError as e:
        logger.error(f"Cannot write run outputs: {str(e)}")
        return ExitCode.INTERNAL

    print(verdict.summary())
    return ExitCode.OK if _as_expected(scenario, verdict) else ExitCode.MISMATCH


def cmd_campaign(config_path: str, out_dir: str, workers: int) -> ExitCode:
    try:
        config = json.loads(Path(config_path).read_text(encoding="utf-8"))
        scenarios = campaign_from_config(config)
    except (OSError, json.JSONDecodeError) as e:
        print(f"error: cannot load campaign config {config_path}: {e}", file=sys.stderr)
        return ExitCode.USAGE
    except (CampaignError, ScenarioError) as e:
        print(f"error: invalid campaign: {e}", file=sys.stderr)
        return ExitCode.USAGE
    if workers < 1:
        print(f"error: --workers must be >= 1, got {workers}", file=sys.stderr)
        return ExitCode.USAGE

    report = run_campaign(scenarios, workers=workers)
    record = report_to_record(report)
    jsonschema.validate(instance=record, schema=REPORT_SCHEMA)
    try:
        out = Path(out_dir)
        traces = out / "traces"
        traces.mkdir(parents=True, exist_ok=True)
        for trace in report.traces:
            (traces / f"{trace.scenario}.jsonl").write_text(serialize_trace(trace), encoding="utf-8")
        _write_json(out / "report.json", record)
        (out / "report.txt").write_text(render_report_table(report), encoding="utf-8")
    except OSError as e:
        logger.error(f"Cannot write campaign outputs to {out_dir}: {str(e)}")
        return ExitCode.INTERNAL

    print(f"{len(report.verdicts)} scenario(s): "
          + ", ".join(f"{o.value}={n}" for o, n in report.counts.items()))
    return ExitCode.OK


def cmd_diff(trace_a: str, trace_b: str, ignore_ticks: bool, ignore_counters: bool) -> ExitCode:
    try:
        a = parse_trace(Path(trace_a).read_text(encoding="utf-8"))
        b = parse_trace(Path(trace_b).read_text(encoding="utf-8"))
    except (OSError, UnicodeDecodeError, TraceFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return ExitCode.USAGE

    differences = diff_traces(a, b, TraceMask(ticks=ignore_ticks, counters=ignore_counters))
    if not differences:
        print("traces are equal")
        return ExitCode.OK
    for difference in differences:
        print(difference.describe())
    print(f"{len(differences)} difference(s)")
    return ExitCode.MISMATCH


def cmd_golden(name: str, out_dir: str) -> ExitCode:
    names: List[str] = sorted(BUILTIN_SCENARIOS) if name == "all" else [name]
    unknown = [n for n in names if n not in BUILTIN_SCENARIOS]
    if unknown:
        print(f"error: unknown built-in scenario {unknown[0]!r}; choose from {', '.join(sorted(BUILTIN_SCENARIOS))}",
              file=sys.stderr)
        return ExitCode.USAGE

    status = ExitCode.OK
    try:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        for n in names:
            scenario = BUILTIN_SCENARIOS[n]
            trace, verdict = run_scenario(scenario)
            _write_json(out / f"{n}.scenario.json", scenario_to_record(scenario))
            (out / f"{n}.trace.jsonl").write_text(serialize_trace(trace), encoding="utf-8")
            _write_json(out / f"{n}.verdict.json", verdict_to_record(verdict))
            for source in MONITORED_SOURCES:
                (out / f"{n}.{source.value.lower()}.log").write_text(
                    render_monitor_log(trace, source), encoding="utf-8")
            print(verdict.summary())
            if not _as_expected(scenario, verdict):
                status = ExitCode.MISMATCH
    except OSError as e:
        logger.error(f"Cannot write golden files to {out_dir}: {str(e)}")
        return ExitCode.INTERNAL
    return status


def cmd_serve(host: str, port: int) -> ExitCode:
    from src.tester_server.tester_server import run_server

    run_server(host=host, port=port)
    return ExitCode.OK


def cmd_upload(path: str, server_host: str, server_port: int) -> ExitCode:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        print(f"error: cannot read {path}: {e}", file=sys.stderr)
        return ExitCode.USAGE

    server_url = build_server_url(server_host, server_port)
    if not get_server_health(server_url):
        logger.error(f"Tester service at {server_url} is not reachable")
        return ExitCode.INTERNAL

    ok, body = upload_faultload(server_url, FAULTLOAD_ENDPOINT, text)
    if ok:
        print(f"valid ({body['specs']} spec(s))" if body else "valid")
        return ExitCode.OK
    if body and "violations" in body:
        for violation in body["violations"]:
            print(violation)
        return ExitCode.USAGE
    return ExitCode.INTERNAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="FEM bus simulator: fault injection on an OBC <-> FEM <-> SLP I2C chain",
        formatter_class=argparse.RawTextHelpFormatter
    )
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    validate_parser = subparsers.add_parser("validate", help="Validate a faultload file")
    validate_parser.add_argument("file", help="Faultload file (JSON Lines)")

    run_parser = subparsers.add_parser("run", help="Run one scenario")
    run_parser.add_argument("--scenario", required=True,
                            help=f"Scenario file or built-in name ({', '.join(sorted(BUILTIN_SCENARIOS))})")
    run_parser.add_argument("--trace", required=True, help="Where to write the trace (JSON Lines)")
    run_parser.add_argument("--report", required=True, help="Where to write the verdict (JSON)")

    campaign_parser = subparsers.add_parser("campaign", help="Generate and run a fault campaign")
    campaign_parser.add_argument("--config", required=True, help="Campaign config file (JSON)")
    campaign_parser.add_argument("--out", required=True, help="Output directory")
    campaign_parser.add_argument("--workers", type=int, default=DEFAULT_WORKERS,
                                 help=f"Number of scenarios run in parallel (default: {DEFAULT_WORKERS})")

    diff_parser = subparsers.add_parser("diff", help="Compare two trace files")
    diff_parser.add_argument("a", help="First trace")
    diff_parser.add_argument("b", help="Second trace")
    diff_parser.add_argument("--ignore-ticks", action="store_true", help="Ignore tick values and cross-component interleaving")
    diff_parser.add_argument("--ignore-counters", action="store_true", help="Ignore FEM counter bookkeeping")

    golden_parser = subparsers.add_parser("golden", help="Write the golden files of a built-in scenario")
    golden_parser.add_argument("name", help="Built-in scenario name, or 'all'")
    golden_parser.add_argument("--out", required=True, help="Output directory")

    serve_parser = subparsers.add_parser("serve", help="Run the tester service")
    serve_parser.add_argument("--host", default=TESTER_HOST,
                              help=f"Host to run the service on (default: {TESTER_HOST})")
    serve_parser.add_argument("--port", type=int, default=TESTER_PORT,
                              help=f"Port to run the service on (default: {TESTER_PORT})")

    upload_parser = subparsers.add_parser("upload", help="Upload a faultload to a running tester service")
    upload_parser.add_argument("file", help="Faultload file (JSON Lines)")
    upload_parser.add_argument("--server-host", default="localhost",
                               help="Host of the tester service (default: localhost)")
    upload_parser.add_argument("--server-port", type=int, default=TESTER_PORT,
                               help=f"Port of the tester service (default: {TESTER_PORT})")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Main entry point for the system.
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        if args.command == "validate":
            return cmd_validate(args.file)
        elif args.command == "run":
            return cmd_run(args.scenario, args.trace, args.report)
        elif args.command == "campaign":
            return cmd_campaign(args.config, args.out, args.workers)
        elif args.command == "diff":
            return cmd_diff(args.a, args.b, args.ignore_ticks, args.ignore_counters)
        elif args.command == "golden":
            return cmd_golden(args.name, args.out)
        elif args.command == "serve":
            return cmd_serve(args.host, args.port)
        elif args.command == "upload":
            return cmd_upload(args.file, args.server_host, args.server_port)
        else:
            parser.print_help()
            return ExitCode.USAGE
    except Exception as e:
        logger.exception(f"Internal error: {str(e)}")
        return ExitCode.INTERNAL


if __name__ == "__main__":
    sys.exit(main())
