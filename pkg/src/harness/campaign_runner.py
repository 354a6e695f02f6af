"""
Campaign execution: run many scenarios, keep input order, aggregate verdicts.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import jsonschema

from src.config.config import DEFAULT_WORKERS, REPORT_VERSION
from src.faultload.campaign import generate_campaign, parse_sweep
from src.faultload.faultload import Faultload
from src.harness.outcome import Outcome, Verdict, verdict_to_record
from src.harness.runner import run_scenario
from src.harness.scenario import Scenario, parse_scenario
from src.harness.schemas import CAMPAIGN_CONFIG_SCHEMA
from src.harness.trace import Trace
from src.utils.errors import CampaignError

logger = logging.getLogger(__name__)

NO_FAULT = 'none'


def _zero_counts() -> Dict[Outcome, int]:
    return {outcome: 0 for outcome in Outcome}


@dataclass(frozen=True)
class CampaignReport:
    scenarios: Tuple[Scenario, ...]
    verdicts: Tuple[Verdict, ...]
    traces: Tuple[Trace, ...]

    @property
    def counts(self) -> Dict[Outcome, int]:
        counts = _zero_counts()
        for verdict in self.verdicts:
            counts[verdict.outcome] += 1
        return counts

    @property
    def counts_by_nature(self) -> Dict[str, Dict[Outcome, int]]:
        """Outcome counts per fault class (time / provision / value) of the scenario's first spec."""
        by_nature: Dict[str, Dict[Outcome, int]] = {}
        for scenario, verdict in zip(self.scenarios, self.verdicts):
            specs = scenario.faultload.specs
            nature = specs[0].nature.value if specs else NO_FAULT
            by_nature.setdefault(nature, _zero_counts())[verdict.outcome] += 1
        return by_nature


def build_campaign_scenarios(template: Scenario, faultloads: Iterable[Faultload]) -> List[Scenario]:
    """One scenario per faultload, named after its first spec id."""
    scenarios = []
    for index, faultload in enumerate(faultloads, start=1):
        name = faultload.specs[0].id if faultload.specs else f"{template.name}-{index:04d}"
        scenarios.append(replace(template, name=name, faultload=faultload))
    return scenarios


def run_campaign(scenarios: Sequence[Scenario], workers: int = DEFAULT_WORKERS) -> CampaignReport:
    """
    Run every scenario and aggregate the verdicts.

    Args:
        scenarios: Scenarios to run
        workers: Number of worker threads; 1 runs sequentially

    Returns:
        CampaignReport in input order, whatever the execution order
    """
    if workers < 1:
        raise CampaignError(f"workers must be >= 1, got {workers}")
    logger.info(f"Running campaign of {len(scenarios)} scenario(s) with {workers} worker(s)")
    if workers == 1:
        results = [run_scenario(sc) for sc in scenarios]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(run_scenario, scenarios))
    report = CampaignReport(
        scenarios=tuple(scenarios),
        verdicts=tuple(v for _, v in results),
        traces=tuple(t for t, _ in results),
    )
    logger.info(f"Campaign done: {', '.join(f'{o.value}={n}' for o, n in report.counts.items() if n)}")
    return report


def campaign_from_config(config: Any) -> List[Scenario]:
    """
    Expand a campaign config document into its scenarios.

    Raises:
        CampaignError: If the config or its sweep is invalid
    """
    errors = list(jsonschema.Draft7Validator(CAMPAIGN_CONFIG_SCHEMA).iter_errors(config))
    if errors:
        raise CampaignError("; ".join(
            f"{'.'.join(str(p) for p in e.absolute_path) or '<config>'}: {e.message}" for e in errors))
    template_doc = dict(config.get("template", {}))
    template_doc.setdefault("name", "campaign")
    template = parse_scenario(template_doc)
    if len(template.faultload):
        raise CampaignError("the campaign template must not carry its own faultload")
    sweep = parse_sweep(config["sweep"])
    return build_campaign_scenarios(template, generate_campaign(template, sweep))


def _counts_record(counts: Dict[Outcome, int]) -> Dict[str, int]:
    return {outcome.value: n for outcome, n in counts.items()}


def report_to_record(report: CampaignReport) -> Dict[str, Any]:
    return {
        "version": REPORT_VERSION,
        "scenarios": len(report.verdicts),
        "counts": _counts_record(report.counts),
        "by_nature": {nature: _counts_record(c) for nature, c in sorted(report.counts_by_nature.items())},
        "verdicts": [verdict_to_record(v) for v in report.verdicts],
    }


def _table(rows: List[List[str]]) -> List[str]:
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    return ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]


def render_report_table(report: CampaignReport, title: Optional[str] = None) -> str:
    """Human-readable campaign report: one row per scenario, then the totals."""
    rows = [["scenario", "fault", "outcome", "detected_by"]]
    for verdict in report.verdicts:
        rows.append([verdict.scenario, verdict.fault_id or "-", verdict.outcome.value, verdict.detected_by or "-"])
    lines = [title] if title else []
    lines.extend(_table(rows))
    lines.append("")
    lines.append(f"total: {len(report.verdicts)}")
    lines.extend(f"  {outcome.value}: {n}" for outcome, n in report.counts.items())
    for nature, counts in sorted(report.counts_by_nature.items()):
        nonzero = ", ".join(f"{o.value}={n}" for o, n in counts.items() if n)
        lines.append(f"  [{nature}] {nonzero}")
    return "\n".join(lines) + "\n"
