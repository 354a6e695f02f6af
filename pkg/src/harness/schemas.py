"""
JSON schemas of the machine-readable files the harness writes or reads:
campaign config, campaign report and per-run verdict.
"""

from src.config.config import REPORT_VERSION
from src.harness.outcome import VERDICT_SCHEMA, Outcome
from src.harness.scenario import SCENARIO_SCHEMA

_COUNTS = {
    "type": "object",
    "properties": {o.value: {"type": "integer", "minimum": 0} for o in Outcome},
    "required": [o.value for o in Outcome],
    "additionalProperties": False,
}

REPORT_SCHEMA = {
    "type": "object",
    "properties": {
        "version": {"const": REPORT_VERSION},
        "scenarios": {"type": "integer", "minimum": 0},
        "counts": _COUNTS,
        "by_nature": {"type": "object", "additionalProperties": _COUNTS},
        "verdicts": {"type": "array", "items": VERDICT_SCHEMA},
    },
    "required": ["version", "scenarios", "counts", "by_nature", "verdicts"],
    "additionalProperties": False,
}

# The template is a scenario document; its name is optional here.
_TEMPLATE_SCHEMA = dict(SCENARIO_SCHEMA, required=[])

CAMPAIGN_CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "template": _TEMPLATE_SCHEMA,
        "sweep": {"type": "object"},
    },
    "required": ["sweep"],
    "additionalProperties": False,
}
