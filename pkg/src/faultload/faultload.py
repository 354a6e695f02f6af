"""
Faultload scripts: the Where/When/What fault descriptions uploaded to the FEM.

File format (JSON Lines, UTF-8):

    {"version":"1"}
    {"id":"f1","what":{"bit_index":7,"byte_index":0,"form":"flip","nature":"value"},"when":{"kind":"read","ordinal":1},"where":"SlaveSide"}

The first record is the header. Each further line is one fault spec. Blank
lines and lines starting with '#' are skipped by the parser. The canonical
form writes every record with sorted keys and compact separators, one per
line, header first, no comments.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Tuple, Union

import jsonschema

from src.bus.bus_core import Segment
from src.config.config import FAULTLOAD_VERSION
from src.utils.bit_utils import from_hex, to_hex
from src.utils.errors import FaultloadError

logger = logging.getLogger(__name__)


class FaultClass(str, Enum):
    """Failure classes: incorrect value, no output at all, delayed output."""
    TIME = 'time'
    PROVISION = 'provision'
    VALUE = 'value'


class TriggerKind(str, Enum):
    WRITE_ORDINAL = 'write'
    READ_ORDINAL = 'read'


@dataclass(frozen=True)
class Trigger:
    kind: TriggerKind
    ordinal: int


@dataclass(frozen=True)
class TimeFault:
    delay_ticks: int
    nature = FaultClass.TIME

    def to_record(self) -> Dict[str, Any]:
        return {"nature": self.nature.value, "delay_ticks": self.delay_ticks}


@dataclass(frozen=True)
class ProvisionFault:
    nature = FaultClass.PROVISION

    def to_record(self) -> Dict[str, Any]:
        return {"nature": self.nature.value}


@dataclass(frozen=True)
class FlipFault:
    byte_index: int
    bit_index: int
    nature = FaultClass.VALUE

    def to_record(self) -> Dict[str, Any]:
        return {"nature": self.nature.value, "form": "flip",
                "byte_index": self.byte_index, "bit_index": self.bit_index}


@dataclass(frozen=True)
class ReplaceFault:
    replacement: bytes
    nature = FaultClass.VALUE

    def to_record(self) -> Dict[str, Any]:
        return {"nature": self.nature.value, "form": "replace", "bytes": to_hex(self.replacement)}


FaultNature = Union[TimeFault, ProvisionFault, FlipFault, ReplaceFault]


@dataclass(frozen=True)
class FaultSpec:
    id: str
    where: Segment
    when: Trigger
    what: FaultNature
    # runtime only: never serialized, never part of equality
    consumed: bool = field(default=False, compare=False)

    @property
    def nature(self) -> FaultClass:
        return self.what.nature


@dataclass(frozen=True)
class Faultload:
    version: str = FAULTLOAD_VERSION
    specs: Tuple[FaultSpec, ...] = ()

    def __len__(self) -> int:
        return len(self.specs)


HEADER_SCHEMA = {
    "type": "object",
    "properties": {"version": {"type": "string"}},
    "required": ["version"],
    "additionalProperties": False,
}

SPEC_SCHEMA = {
    "type": "object",
    "properties": {
        "id": {"type": "string", "minLength": 1},
        "where": {"enum": [s.value for s in Segment]},
        "when": {
            "type": "object",
            "properties": {
                "kind": {"enum": [k.value for k in TriggerKind]},
                "ordinal": {"type": "integer", "minimum": 1},
            },
            "required": ["kind", "ordinal"],
            "additionalProperties": False,
        },
        "what": {
            "type": "object",
            "properties": {"nature": {"type": "string"}},
            "required": ["nature"],
        },
    },
    "required": ["id", "where", "when", "what"],
    "additionalProperties": False,
}

# Checked after the nature (and, for value faults, the form) is known.
WHAT_SCHEMAS = {
    "time": {
        "type": "object",
        "properties": {
            "nature": {"const": "time"},
            "delay_ticks": {"type": "integer", "minimum": 1},
        },
        "required": ["nature", "delay_ticks"],
        "additionalProperties": False,
    },
    "provision": {
        "type": "object",
        "properties": {"nature": {"const": "provision"}},
        "required": ["nature"],
        "additionalProperties": False,
    },
    "flip": {
        "type": "object",
        "properties": {
            "nature": {"const": "value"},
            "form": {"const": "flip"},
            "byte_index": {"type": "integer", "minimum": 0},
            "bit_index": {"type": "integer", "minimum": 0, "maximum": 7},
        },
        "required": ["nature", "form", "byte_index", "bit_index"],
        "additionalProperties": False,
    },
    "replace": {
        "type": "object",
        "properties": {
            "nature": {"const": "value"},
            "form": {"const": "replace"},
            "bytes": {"type": "string", "pattern": "^([0-9a-f]{2})+$"},
        },
        "required": ["nature", "form", "bytes"],
        "additionalProperties": False,
    },
}

VALUE_FORMS = ("flip", "replace")


def _describe(error: jsonschema.ValidationError, prefix: str = "") -> str:
    path = [str(p) for p in error.absolute_path]
    name = path[-1] if path else None
    where = ".".join([prefix] + path if prefix else path) or "<record>"
    if error.validator == "additionalProperties":
        extra = sorted(set(error.instance) - set(error.schema.get("properties", {})))
        return f"{where}: unknown field {', '.join(repr(e) for e in extra)}"
    if name == "ordinal" and error.validator == "minimum":
        return f"{where}: ordinal must be >= 1"
    if name == "bit_index" and error.validator in ("minimum", "maximum"):
        return f"{where}: bit_index out of range"
    if name == "delay_ticks" and error.validator == "minimum":
        return f"{where}: delay_ticks must be >= 1"
    if name == "bytes" and error.validator == "pattern":
        return f"{where}: bytes must be non-empty lowercase hex"
    return f"{where}: {error.message}"


def _schema_violations(instance: Any, schema: Dict[str, Any], prefix: str = "") -> List[str]:
    validator = jsonschema.Draft7Validator(schema)
    errors = sorted(validator.iter_errors(instance), key=lambda e: [str(p) for p in e.absolute_path])
    return [_describe(e, prefix) for e in errors]


def what_violations(record: Any) -> List[str]:
    """Violations of a 'what' object, with paths relative to it."""
    if not isinstance(record, dict):
        return ["what: must be an object"]
    nature = record.get("nature")
    if nature not in WHAT_SCHEMAS and nature != FaultClass.VALUE.value:
        return [f"what.nature: unknown nature {nature!r}"]
    if nature == FaultClass.VALUE.value:
        form = record.get("form")
        if form not in VALUE_FORMS:
            return [f"what.form: unknown value form {form!r}"]
        return _schema_violations(record, WHAT_SCHEMAS[form], "what")
    return _schema_violations(record, WHAT_SCHEMAS[nature], "what")


def what_from_record(record: Dict[str, Any]) -> FaultNature:
    """Build a fault nature from an already-validated 'what' object."""
    nature = record["nature"]
    if nature == FaultClass.TIME.value:
        return TimeFault(delay_ticks=record["delay_ticks"])
    if nature == FaultClass.PROVISION.value:
        return ProvisionFault()
    if record["form"] == "flip":
        return FlipFault(byte_index=record["byte_index"], bit_index=record["bit_index"])
    return ReplaceFault(replacement=from_hex(record["bytes"]))


def spec_violations(record: Any) -> List[str]:
    violations = _schema_violations(record, SPEC_SCHEMA)
    if isinstance(record, dict) and isinstance(record.get("what"), dict) and "nature" in record["what"]:
        violations.extend(what_violations(record["what"]))
    return violations


def spec_from_record(record: Dict[str, Any]) -> FaultSpec:
    when = record["when"]
    return FaultSpec(
        id=record["id"],
        where=Segment(record["where"]),
        when=Trigger(kind=TriggerKind(when["kind"]), ordinal=when["ordinal"]),
        what=what_from_record(record["what"]),
    )


def spec_to_record(spec: FaultSpec) -> Dict[str, Any]:
    return {
        "id": spec.id,
        "where": spec.where.value,
        "when": {"kind": spec.when.kind.value, "ordinal": spec.when.ordinal},
        "what": spec.what.to_record(),
    }


def specs_from_records(records: Iterable[Tuple[str, Any]]) -> Tuple[Tuple[FaultSpec, ...], List[str]]:
    """
    Validate and build specs from labelled records.

    Args:
        records: (label, record) pairs; the label prefixes each violation

    Returns:
        (specs, violations); specs holds only the records that validated
    """
    specs: List[FaultSpec] = []
    violations: List[str] = []
    seen: Dict[str, str] = {}
    for label, record in records:
        problems = spec_violations(record)
        if isinstance(record, dict) and isinstance(record.get("id"), str):
            first = seen.get(record["id"])
            if first is not None:
                problems.append(f"duplicate id {record['id']!r} (first defined at {first})")
            else:
                seen[record["id"]] = label
        if problems:
            violations.extend(f"{label}: {p}" for p in problems)
        else:
            specs.append(spec_from_record(record))
    return tuple(specs), violations


def parse_faultload(text: str) -> Faultload:
    """
    Parse and validate a faultload document.

    Args:
        text: Faultload file contents

    Returns:
        The validated Faultload

    Raises:
        FaultloadError: Carrying every violation found, each prefixed with its line number
    """
    violations: List[str] = []
    records: List[Tuple[str, Any]] = []
    header_seen = False

    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as e:
            violations.append(f"line {number}: invalid JSON: {e.msg}")
            header_seen = True
            continue

        if not header_seen:
            header_seen = True
            if isinstance(record, dict) and "version" in record:
                violations.extend(f"line {number}: {v}" for v in _schema_violations(record, HEADER_SCHEMA))
                if record["version"] != FAULTLOAD_VERSION:
                    violations.append(
                        f"line {number}: version mismatch: expected {FAULTLOAD_VERSION!r}, got {record['version']!r}")
                continue
            violations.append(f"line {number}: missing header {{\"version\":\"{FAULTLOAD_VERSION}\"}}")

        records.append((f"line {number}", record))

    if not header_seen:
        violations.append("line 1: missing header")

    specs, spec_problems = specs_from_records(records)
    violations.extend(spec_problems)
    if violations:
        logger.debug(f"Faultload rejected with {len(violations)} violation(s)")
        raise FaultloadError(violations)
    return Faultload(version=FAULTLOAD_VERSION, specs=specs)


def _dump(record: Dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def serialize_faultload(fl: Faultload) -> str:
    """Canonical text of a faultload. Equal faultloads serialize byte-identically."""
    lines = [_dump({"version": fl.version})]
    lines.extend(_dump(spec_to_record(spec)) for spec in fl.specs)
    return "\n".join(lines) + "\n"


def find_spec(fl: Faultload, spec_id: str) -> Optional[FaultSpec]:
    return next((s for s in fl.specs if s.id == spec_id), None)
