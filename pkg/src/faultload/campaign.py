"""
Automatic faultload generation: a sweep over Where x When x What produces one
single-spec faultload per combination, in a fixed order.

Sweep config (JSON):

    {"where": ["SlaveSide"],
     "when": [{"kind": "read", "ordinal": {"from": 1, "to": 4}}],
     "what": [{"nature": "value", "form": "flip", "byte_index": 0, "bit_index": {"from": 0, "to": 7}}]}

Any scalar may be replaced by a list or an inclusive {"from", "to"} range.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

import jsonschema

from src.bus.bus_core import Segment
from src.faultload.faultload import (
    FaultNature,
    FaultSpec,
    Faultload,
    Trigger,
    TriggerKind,
    what_from_record,
    what_violations,
)
from src.utils.errors import CampaignError

logger = logging.getLogger(__name__)

_RANGE = {
    "type": "object",
    "properties": {"from": {"type": "integer"}, "to": {"type": "integer"}},
    "required": ["from", "to"],
    "additionalProperties": False,
}

SWEEP_SCHEMA = {
    "type": "object",
    "properties": {
        "where": {
            "anyOf": [
                {"enum": [s.value for s in Segment]},
                {"type": "array", "items": {"enum": [s.value for s in Segment]}},
            ]
        },
        "when": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "kind": {"enum": [k.value for k in TriggerKind]},
                    "ordinal": {"anyOf": [
                        {"type": "integer"},
                        {"type": "array", "items": {"type": "integer"}},
                        _RANGE,
                    ]},
                },
                "required": ["kind", "ordinal"],
                "additionalProperties": False,
            },
        },
        "what": {"type": "array", "items": {"type": "object", "required": ["nature"]}},
    },
    "required": ["where", "when", "what"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class CampaignSweep:
    where: Tuple[Segment, ...]
    when: Tuple[Trigger, ...]
    what: Tuple[FaultNature, ...]

    @property
    def size(self) -> int:
        return len(self.where) * len(self.when) * len(self.what)


def _expand(value: Any) -> List[Any]:
    if isinstance(value, dict) and set(value) == {"from", "to"}:
        if value["to"] < value["from"]:
            return []
        return list(range(value["from"], value["to"] + 1))
    if isinstance(value, list):
        return list(value)
    return [value]


def _unique(values: Sequence[Any]) -> Tuple[Any, ...]:
    return tuple(dict.fromkeys(values))


def _expand_what(item: Dict[str, Any]) -> List[Dict[str, Any]]:
    keys = list(item)
    choices = [_expand(item[k]) for k in keys]
    return [dict(zip(keys, combo)) for combo in itertools.product(*choices)]


def parse_sweep(config: Any) -> CampaignSweep:
    """
    Expand a sweep config into its three dimensions.

    Raises:
        CampaignError: If the config breaks the sweep schema, a generated fault
            is invalid, or any dimension ends up empty
    """
    validator = jsonschema.Draft7Validator(SWEEP_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: [str(p) for p in e.absolute_path])
    if errors:
        raise CampaignError("; ".join(
            f"sweep.{'.'.join(str(p) for p in e.absolute_path) or '<root>'}: {e.message}" for e in errors))

    where = _unique([Segment(w) for w in _expand(config["where"])])

    triggers = []
    for item in config["when"]:
        for ordinal in _expand(item["ordinal"]):
            if ordinal < 1:
                raise CampaignError(f"sweep.when: ordinal must be >= 1, got {ordinal}")
            triggers.append(Trigger(kind=TriggerKind(item["kind"]), ordinal=ordinal))

    natures = []
    for index, item in enumerate(config["what"]):
        for record in _expand_what(item):
            problems = what_violations(record)
            if problems:
                raise CampaignError(f"sweep.what[{index}]: " + "; ".join(problems))
            natures.append(what_from_record(record))

    sweep = CampaignSweep(where=where, when=_unique(triggers), what=_unique(natures))
    for name in ("where", "when", "what"):
        if not getattr(sweep, name):
            raise CampaignError(f"sweep dimension '{name}' is empty")
    return sweep


def generate_campaign(template: Any, sweep: CampaignSweep) -> List[Faultload]:
    """
    Cartesian product of the sweep, one single-spec faultload per combination.

    Args:
        template: Scenario the campaign is built on; its name prefixes spec ids
            and its n_requests bounds the meaningful ordinals
        sweep: Expanded sweep

    Returns:
        Faultloads ordered where, then when, then what; spec ids are
        '<template name>-<index>' starting at 0001

    Raises:
        CampaignError: If a dimension is empty
    """
    for name in ("where", "when", "what"):
        if not getattr(sweep, name):
            raise CampaignError(f"sweep dimension '{name}' is empty")

    reads = template.n_requests
    writes = template.n_requests + 2
    for trigger in sweep.when:
        limit = reads if trigger.kind is TriggerKind.READ_ORDINAL else writes
        if trigger.ordinal > limit:
            logger.warning(f"Campaign {template.name}: {trigger.kind.value} #{trigger.ordinal} "
                           f"is beyond a {template.n_requests}-request session and will never fire")

    faultloads = []
    for index, (where, when, what) in enumerate(itertools.product(sweep.where, sweep.when, sweep.what), start=1):
        spec = FaultSpec(id=f"{template.name}-{index:04d}", where=where, when=when, what=what)
        faultloads.append(Faultload(specs=(spec,)))
    logger.info(f"Campaign {template.name}: generated {len(faultloads)} faultload(s)")
    return faultloads
