"""
Verdict types produced by the oracles.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple


class Outcome(str, Enum):
    FAULT_FREE_NOMINAL = 'FaultFreeNominal'
    SUT_DETECTED = 'SutDetected'
    SUT_SILENT_CORRUPTION = 'SutSilentCorruption'
    # a fault fired, yet nothing was detected and no corrupted value was accepted
    FAULT_MASKED = 'FaultMasked'
    RUN_ABORTED = 'RunAborted'
    SCRIPT_ERROR = 'ScriptError'


# Outcomes `run` accepts when the scenario states no expectation.
ACCEPTABLE_BY_DEFAULT = frozenset({Outcome.FAULT_FREE_NOMINAL, Outcome.SUT_DETECTED, Outcome.FAULT_MASKED})


@dataclass(frozen=True)
class Verdict:
    scenario: str
    outcome: Outcome
    fault_id: Optional[str] = None
    detected_by: Optional[str] = None
    # indices into the trace's event list
    evidence: Tuple[int, ...] = ()
    protocol_shape_ok: bool = True

    def summary(self) -> str:
        parts = [f"{self.scenario}: {self.outcome.value}"]
        if self.detected_by:
            parts[0] += f"({self.detected_by})"
        if self.fault_id:
            parts.append(f"fault={self.fault_id}")
        parts.append(f"evidence={list(self.evidence)}")
        return " ".join(parts)


VERDICT_SCHEMA = {
    "type": "object",
    "properties": {
        "scenario": {"type": "string"},
        "outcome": {"enum": [o.value for o in Outcome]},
        "fault_id": {"type": ["string", "null"]},
        "detected_by": {"type": ["string", "null"]},
        "evidence": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "protocol_shape_ok": {"type": "boolean"},
    },
    "required": ["scenario", "outcome", "fault_id", "detected_by", "evidence", "protocol_shape_ok"],
    "additionalProperties": False,
}


def verdict_to_record(verdict: Verdict) -> Dict[str, Any]:
    return {
        "scenario": verdict.scenario,
        "outcome": verdict.outcome.value,
        "fault_id": verdict.fault_id,
        "detected_by": verdict.detected_by,
        "evidence": list(verdict.evidence),
        "protocol_shape_ok": verdict.protocol_shape_ok,
    }


def verdict_from_record(record: Dict[str, Any]) -> Verdict:
    return Verdict(
        scenario=record["scenario"],
        outcome=Outcome(record["outcome"]),
        fault_id=record.get("fault_id"),
        detected_by=record.get("detected_by"),
        evidence=tuple(record.get("evidence", ())),
        protocol_shape_ok=record.get("protocol_shape_ok", True),
    )
