"""
Trace recording, the trace file format, trace diffing and monitor-log rendering.

A trace is the ordered log of every bus delivery and every device/FEM state
change in one run. On disk it is JSON Lines: a header record followed by one
event per line, keys sorted, compact separators, payloads in hex.
"""

import difflib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Tuple

import jsonschema

from src.config.config import TRACE_FORMAT, TRACE_VERSION
from src.utils.errors import TraceFormatError


class EventSource(str, Enum):
    OBC = 'OBC'
    FEM = 'FEM'
    SLP = 'SLP'
    BUS = 'Bus'


class EventKind(str, Enum):
    MSG_SENT = 'MsgSent'
    MSG_FORWARDED = 'MsgForwarded'
    MSG_TRANSFORMED = 'MsgTransformed'
    MSG_HELD = 'MsgHeld'
    MSG_RELEASED = 'MsgReleased'
    MSG_DROPPED = 'MsgDropped'
    COUNTER_UPDATE = 'CounterUpdate'
    DEVICE_TRANSITION = 'DeviceTransition'
    OBSERVATION = 'Observation'
    FAULT_APPLICATION_ERROR = 'FaultApplicationError'
    RUN_END = 'RunEnd'


# Events that record a fired fault; each fired spec id appears in exactly one of them.
FAULT_EVENT_KINDS = (
    EventKind.MSG_TRANSFORMED,
    EventKind.MSG_HELD,
    EventKind.MSG_DROPPED,
    EventKind.FAULT_APPLICATION_ERROR,
)

TICK_KEYS = frozenset({"tick", "at", "release_tick", "sent_at"})
COUNTER_KEYS = frozenset({"counters"})

TRACE_HEADER_SCHEMA = {
    "type": "object",
    "properties": {
        "format": {"const": TRACE_FORMAT},
        "scenario": {"type": "string"},
        "version": {"type": "string"},
    },
    "required": ["format", "scenario", "version"],
    "additionalProperties": False,
}

TRACE_EVENT_SCHEMA = {
    "type": "object",
    "properties": {
        "tick": {"type": "integer", "minimum": 0},
        "source": {"enum": [s.value for s in EventSource]},
        "kind": {"enum": [k.value for k in EventKind]},
        "detail": {"type": "object"},
    },
    "required": ["tick", "source", "kind", "detail"],
    "additionalProperties": False,
}


@dataclass(frozen=True)
class TraceEvent:
    tick: int
    source: EventSource
    kind: EventKind
    detail: Dict[str, Any] = field(default_factory=dict)

    def to_record(self) -> Dict[str, Any]:
        return {
            "detail": self.detail,
            "kind": self.kind.value,
            "source": self.source.value,
            "tick": self.tick,
        }

    @property
    def fault_id(self) -> Optional[str]:
        return self.detail.get("fault_id")


def make_event(tick: int, source: EventSource, kind: EventKind, /, **detail: Any) -> TraceEvent:
    return TraceEvent(tick=tick, source=source, kind=kind, detail=detail)


@dataclass(frozen=True)
class Trace:
    scenario: str
    events: Tuple[TraceEvent, ...] = ()

    def select(self, source: Optional[EventSource] = None,
               kind: Optional[EventKind] = None) -> List[Tuple[int, TraceEvent]]:
        """Return (index, event) pairs filtered by source and/or kind."""
        return [
            (i, e) for i, e in enumerate(self.events)
            if (source is None or e.source is source) and (kind is None or e.kind is kind)
        ]


class TraceRecorder:
    """
    Append-only event log for one run.

    Events must arrive in non-decreasing tick order.
    """

    def __init__(self, scenario: str):
        self.scenario = scenario
        self._events: List[TraceEvent] = []

    def record(self, event: TraceEvent) -> None:
        if self._events and event.tick < self._events[-1].tick:
            raise ValueError(f"event at tick {event.tick} recorded after tick {self._events[-1].tick}")
        self._events.append(event)

    def extend(self, events: Iterable[TraceEvent]) -> None:
        for event in events:
            self.record(event)

    def freeze(self) -> Trace:
        return Trace(scenario=self.scenario, events=tuple(self._events))


def _dump(record: Dict[str, Any]) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


def serialize_trace(trace: Trace) -> str:
    """
    Serialize a trace to its canonical JSON Lines form.

    Args:
        trace: Trace to serialize

    Returns:
        Text with a header line and one line per event, newline-terminated
    """
    lines = [_dump({"format": TRACE_FORMAT, "scenario": trace.scenario, "version": TRACE_VERSION})]
    lines.extend(_dump(e.to_record()) for e in trace.events)
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> Trace:
    """
    Parse a trace file.

    Args:
        text: Trace file contents

    Returns:
        The parsed Trace

    Raises:
        TraceFormatError: On invalid JSON, a bad header, a schema violation or
            ticks going backward
    """
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines:
        raise TraceFormatError("empty trace")
    records = []
    for number, line in enumerate(lines, start=1):
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as e:
            raise TraceFormatError(f"line {number}: invalid JSON: {e.msg}") from e

    header = records[0]
    try:
        jsonschema.validate(instance=header, schema=TRACE_HEADER_SCHEMA)
    except jsonschema.ValidationError as e:
        raise TraceFormatError(f"line 1: bad trace header: {e.message}") from e
    if header["version"] != TRACE_VERSION:
        raise TraceFormatError(f"line 1: version mismatch: expected '{TRACE_VERSION}', got '{header['version']}'")

    events = []
    last_tick = 0
    for number, record in enumerate(records[1:], start=2):
        try:
            jsonschema.validate(instance=record, schema=TRACE_EVENT_SCHEMA)
        except jsonschema.ValidationError as e:
            raise TraceFormatError(f"line {number}: {e.message}") from e
        if record["tick"] < last_tick:
            raise TraceFormatError(f"line {number}: tick {record['tick']} goes backward")
        last_tick = record["tick"]
        events.append(TraceEvent(
            tick=record["tick"],
            source=EventSource(record["source"]),
            kind=EventKind(record["kind"]),
            detail=record["detail"],
        ))
    return Trace(scenario=header["scenario"], events=tuple(events))


class TraceMask(NamedTuple):
    """Fields ignored by diff_traces."""
    ticks: bool = False
    counters: bool = False


class TraceDifference(NamedTuple):
    stream: str
    index_a: Optional[int]
    index_b: Optional[int]
    event_a: Optional[TraceEvent]
    event_b: Optional[TraceEvent]

    def describe(self) -> str:
        ref = self.event_a or self.event_b
        fault = next((e.fault_id for e in (self.event_a, self.event_b) if e and e.fault_id), None)
        where = f"tick {ref.tick}" if ref else "?"
        left = _dump(self.event_a.to_record()) if self.event_a else "<absent>"
        right = _dump(self.event_b.to_record()) if self.event_b else "<absent>"
        suffix = f" fault={fault}" if fault else ""
        return f"[{self.stream}] {where}{suffix}\n  - {left}\n  + {right}"


def _strip(value: Any, keys: frozenset) -> Any:
    if isinstance(value, dict):
        return {k: _strip(v, keys) for k, v in value.items() if k not in keys}
    if isinstance(value, list):
        return [_strip(v, keys) for v in value]
    return value


def _masked_streams(trace: Trace, mask: TraceMask) -> Dict[str, List[Tuple[int, TraceEvent, str]]]:
    dropped = set()
    if mask.ticks:
        dropped |= TICK_KEYS
    if mask.counters:
        dropped |= COUNTER_KEYS
    keys = frozenset(dropped)

    streams: Dict[str, List[Tuple[int, TraceEvent, str]]] = {}
    for index, event in enumerate(trace.events):
        if mask.counters and event.kind is EventKind.COUNTER_UPDATE:
            continue
        record = _strip(event.to_record(), keys)
        # Without tick offsets, interleaving across components is latency-dependent;
        # only each component's own order is meaningful.
        stream = event.source.value if mask.ticks else "all"
        streams.setdefault(stream, []).append((index, event, _dump(record)))
    return streams


def diff_traces(a: Trace, b: Trace, ignore: TraceMask = TraceMask()) -> List[TraceDifference]:
    """
    Compare two traces event by event.

    Args:
        a: First trace
        b: Second trace
        ignore: Mask of fields to ignore (tick values, counter bookkeeping)

    Returns:
        Differences in stream order; empty iff the traces are equal under the mask
    """
    streams_a = _masked_streams(a, ignore)
    streams_b = _masked_streams(b, ignore)
    names = list(streams_a)
    names.extend(name for name in streams_b if name not in streams_a)

    differences = []
    for name in names:
        left = streams_a.get(name, [])
        right = streams_b.get(name, [])
        matcher = difflib.SequenceMatcher(a=[x[2] for x in left], b=[x[2] for x in right], autojunk=False)
        for tag, i1, i2, j1, j2 in matcher.get_opcodes():
            if tag == 'equal':
                continue
            for k in range(max(i2 - i1, j2 - j1)):
                ea = left[i1 + k] if i1 + k < i2 else None
                eb = right[j1 + k] if j1 + k < j2 else None
                differences.append(TraceDifference(
                    stream=name,
                    index_a=ea[0] if ea else None,
                    index_b=eb[0] if eb else None,
                    event_a=ea[1] if ea else None,
                    event_b=eb[1] if eb else None,
                ))
    return differences


def _summarize(event: TraceEvent) -> str:
    d = event.detail
    kind = event.kind
    if kind in (EventKind.MSG_SENT, EventKind.MSG_FORWARDED):
        msg = d["message"]
        target = f" to {d['to']}" if "to" in d else ""
        return f"{msg['kind']} addr=0x{msg['address']:02x} data={msg['payload'] or '-'} txn={msg['txn']}{target}"
    if kind is EventKind.DEVICE_TRANSITION:
        return f"{d['from']} -> {d['to']}"
    if kind is EventKind.OBSERVATION:
        return f"request {d['request']}: {d['kind']} data={d['payload'] or '-'}"
    if kind is EventKind.COUNTER_UPDATE:
        c = d["counters"]
        return f"Writes={c['writes']} Reads={c['reads']} ({d['inbound']}) mode={d['mode']}"
    if kind is EventKind.MSG_TRANSFORMED:
        return f"{d['fault_id']} on {d['segment']}: {d['original']} -> {d['message']['payload']}"
    if kind is EventKind.MSG_HELD:
        return f"{d['fault_id']} holding {d['message']['kind']} until tick {d['release_tick']}"
    if kind is EventKind.MSG_RELEASED:
        return f"{d['fault_id']} released {d['message']['kind']}"
    if kind is EventKind.MSG_DROPPED:
        what = d['message']['kind'] if d.get('message') else 'nothing (empty slot)'
        return f"{d['fault_id']} dropped {what}"
    if kind is EventKind.FAULT_APPLICATION_ERROR:
        return f"{d['fault_id']}: {d['error']}"
    if kind is EventKind.RUN_END:
        return f"{d['reason']} obc={d['obc_phase']} slp={d['slp_mode']}"
    return _dump(d)


def render_monitor_log(trace: Trace, source: EventSource) -> str:
    """
    Render one component's events the way its serial monitor would show them.

    Args:
        trace: Trace to render
        source: Component whose events are rendered

    Returns:
        One line per event, newline-terminated
    """
    lines = [
        f"[{event.tick:>5}] {event.kind.value}: {_summarize(event)}"
        for _, event in trace.select(source=source)
    ]
    return "\n".join(lines) + ("\n" if lines else "")
