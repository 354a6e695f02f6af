"""
Robustness oracles: classify a finished run from its trace alone.

I2C carries no error detection of its own, so a fault either shows up in an
OBC observation (timeout, out-of-range value, all-0xFF read), reaches the OBC
as an accepted but corrupted value, or has no visible effect.
"""

import logging
from typing import List, NamedTuple, Optional

from src.bus.bus_core import MessageKind
from src.devices.obc_model import (
    DETECTION_KINDS,
    ExpectedMessage,
    ObcObservation,
    ObcPhase,
    ObservationKind,
    obc_expected_trace,
)
from src.fem.fem import FemCounters
from src.harness.outcome import Outcome, Verdict
from src.harness.scenario import Scenario
from src.harness.trace import FAULT_EVENT_KINDS, EventKind, EventSource, Trace, TraceEvent
from src.utils.bit_utils import from_hex

logger = logging.getLogger(__name__)

_DETECTION_VALUES = frozenset(k.value for k in DETECTION_KINDS)


def _run_end(trace: Trace) -> Optional[TraceEvent]:
    ends = trace.select(EventSource.BUS, EventKind.RUN_END)
    return ends[-1][1] if ends else None


def recount_counters(trace: Trace) -> FemCounters:
    """Writes and reads as recounted from the messages the devices sent."""
    return FemCounters(
        writes=len(trace.select(EventSource.OBC, EventKind.MSG_SENT)),
        reads=len(trace.select(EventSource.SLP, EventKind.MSG_SENT)),
    )


def fem_end_counters(trace: Trace) -> Optional[FemCounters]:
    end = _run_end(trace)
    if end is None or "counters" not in end.detail:
        return None
    counters = end.detail["counters"]
    return FemCounters(writes=counters["writes"], reads=counters["reads"])


class Conservation(NamedTuple):
    entered: int
    forwarded: int
    transformed: int
    dropped: int
    held: int
    released: int

    @property
    def balanced(self) -> bool:
        return self.entered == self.forwarded + self.transformed + self.dropped + self.held


def conservation(trace: Trace) -> Conservation:
    """
    Recount the messages that went through the FEM.

    Every message a device sends enters the FEM and leaves it exactly one way:
    plain forward, transformed, dropped or held (then released, or still held
    at run end). Deliveries of transformed and released messages are not
    plain forwards.
    """
    def count(source: EventSource, kind: EventKind) -> int:
        return len(trace.select(source, kind))

    transformed = count(EventSource.FEM, EventKind.MSG_TRANSFORMED)
    released = count(EventSource.FEM, EventKind.MSG_RELEASED)
    dropped = sum(1 for _, e in trace.select(EventSource.FEM, EventKind.MSG_DROPPED) if not e.detail.get("noop"))
    delivered = count(EventSource.BUS, EventKind.MSG_FORWARDED)
    return Conservation(
        entered=count(EventSource.OBC, EventKind.MSG_SENT) + count(EventSource.SLP, EventKind.MSG_SENT),
        forwarded=delivered - transformed - released,
        transformed=transformed,
        dropped=dropped,
        held=count(EventSource.FEM, EventKind.MSG_HELD),
        released=released,
    )


def _observation(event: TraceEvent) -> ObcObservation:
    d = event.detail
    return ObcObservation(at=d["at"], kind=ObservationKind(d["kind"]), payload=from_hex(d["payload"]),
                          request=d["request"], txn=d["txn"])


def observations(trace: Trace) -> List[ObcObservation]:
    return [_observation(e) for _, e in trace.select(EventSource.OBC, EventKind.OBSERVATION)]


def observation_for_request(trace: Trace, request: int) -> Optional[ObcObservation]:
    """First OBC observation recorded for the given 1-based data request."""
    return next((o for o in observations(trace) if o.request == request), None)


def _sent_shape(trace: Trace, sc: Scenario) -> List[ExpectedMessage]:
    shape = []
    for _, event in trace.select(kind=EventKind.MSG_SENT):
        message = event.detail["message"]
        kind = MessageKind(message["kind"])
        if kind is MessageKind.READ_RESPONSE:
            shape.append(ExpectedMessage(kind, None))
        else:
            payload = from_hex(message["payload"])
            shape.append(ExpectedMessage(kind, sc.commands.decode(payload[0]) if payload else None))
    return shape


def evaluate_oracles(trace: Trace, sc: Scenario) -> Verdict:
    """
    Judge a complete trace.

    Precedence: RunAborted, ScriptError, SutDetected, SutSilentCorruption,
    FaultMasked, FaultFreeNominal.

    Args:
        trace: Complete trace of the run, RunEnd included
        sc: Scenario the trace was produced from

    Returns:
        The Verdict, with the indices of the events supporting it
    """
    fired = [(i, e) for i, e in enumerate(trace.events)
             if e.source is EventSource.FEM and e.kind in FAULT_EVENT_KINDS and not e.detail.get("noop")]
    fault_id = fired[0][1].fault_id if fired else None
    shape_ok = _sent_shape(trace, sc) == obc_expected_trace(sc.n_requests)

    def verdict(outcome: Outcome, evidence, detected_by: Optional[str] = None) -> Verdict:
        return Verdict(scenario=sc.name, outcome=outcome, fault_id=fault_id, detected_by=detected_by,
                       evidence=tuple(sorted(set(evidence))), protocol_shape_ok=shape_ok)

    end = _run_end(trace)
    if end is None or end.detail.get("obc_phase") != ObcPhase.DONE.value:
        tail = [len(trace.events) - 1] if end is not None else []
        aborted = [i for i, e in trace.select(EventSource.OBC, EventKind.OBSERVATION)
                   if e.detail["kind"] == ObservationKind.PROTOCOL_VIOLATION.value]
        return verdict(Outcome.RUN_ABORTED, aborted + tail)

    errors = [i for i, _ in trace.select(EventSource.FEM, EventKind.FAULT_APPLICATION_ERROR)]
    if errors:
        return verdict(Outcome.SCRIPT_ERROR, errors)

    obc_observations = trace.select(EventSource.OBC, EventKind.OBSERVATION)
    detections = [(i, e) for i, e in obc_observations if e.detail["kind"] in _DETECTION_VALUES]
    fired_indices = [i for i, _ in fired]
    if detections:
        return verdict(Outcome.SUT_DETECTED, fired_indices + [i for i, _ in detections],
                       detected_by=detections[0][1].detail["kind"])

    corrupted = {}
    for i, event in trace.select(EventSource.FEM, EventKind.MSG_TRANSFORMED):
        message = event.detail["message"]
        if message["kind"] == MessageKind.READ_RESPONSE.value and message["payload"] != event.detail["original"]:
            corrupted[message["txn"]] = i
    accepted = [(corrupted[e.detail["txn"]], i) for i, e in obc_observations
                if e.detail["kind"] == ObservationKind.RESPONSE_OK.value and e.detail["txn"] in corrupted]
    if accepted:
        logger.info(f"Scenario {sc.name}: corrupted response accepted as valid")
        return verdict(Outcome.SUT_SILENT_CORRUPTION, [i for pair in accepted for i in pair])

    if fired:
        return verdict(Outcome.FAULT_MASKED, fired_indices)
    return verdict(Outcome.FAULT_FREE_NOMINAL, [i for i, _ in obc_observations])
