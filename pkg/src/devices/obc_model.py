"""
Behavioral model of the On-Board Computer (OBC), the I2C master.

The OBC runs one acquisition session against the SLP: it commands the start of
the analog read, requests the acquired data n times, then commands the end of
the transmission. It is strictly half-duplex: it asks, then waits. Every
response is checked against a timeout and an expected value range; I2C itself
detects nothing, so these checks are the only error detection in the system.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

from src.bus.bus_core import (
    BUS_DEFAULTS,
    Direction,
    Message,
    MessageKind,
    Segment,
    StepResult,
    Tick,
    default_read,
    message_to_record,
)
from src.config.config import (
    DEFAULT_EXPECTED_RANGE,
    DEFAULT_N_REQUESTS,
    DEFAULT_REQUEST_LEN,
    DEFAULT_RETRIES,
    DEFAULT_SLP_ADDRESS,
    DEFAULT_TIMEOUT_TICKS,
    MAX_ADDRESS,
)
from src.devices.protocol import CommandSet, ObcCommand
from src.harness.trace import EventKind, EventSource, TraceEvent, make_event
from src.utils.bit_utils import to_hex
from src.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


class ObcPhase(str, Enum):
    SEND_START = 'SendStart'
    REQUESTING = 'Requesting'
    SEND_END = 'SendEnd'
    DONE = 'Done'
    ABORTED = 'Aborted'


TERMINAL_PHASES = (ObcPhase.DONE, ObcPhase.ABORTED)


class ObservationKind(str, Enum):
    RESPONSE_OK = 'ResponseOk'
    TIMEOUT_DETECTED = 'TimeoutDetected'
    OUT_OF_RANGE_DETECTED = 'OutOfRangeDetected'
    ALL_FF = 'AllFF'
    PROTOCOL_VIOLATION = 'ProtocolViolation'


DETECTION_KINDS = (
    ObservationKind.TIMEOUT_DETECTED,
    ObservationKind.OUT_OF_RANGE_DETECTED,
    ObservationKind.ALL_FF,
)


@dataclass(frozen=True)
class ObcObservation:
    at: Tick
    kind: ObservationKind
    payload: bytes
    request: int
    txn: int


@dataclass(frozen=True)
class ObcConfig:
    address: int = DEFAULT_SLP_ADDRESS
    commands: CommandSet = CommandSet()
    n_requests: int = DEFAULT_N_REQUESTS
    timeout_ticks: Tick = DEFAULT_TIMEOUT_TICKS
    expected_range: Tuple[int, int] = DEFAULT_EXPECTED_RANGE
    request_len: int = DEFAULT_REQUEST_LEN
    retries: int = DEFAULT_RETRIES

    def __post_init__(self):
        lo, hi = self.expected_range
        if not 0 <= lo <= hi <= 0xFF:
            raise InvalidArgumentError(f"expected_range must satisfy 0 <= lo <= hi <= 0xFF, got {self.expected_range}")
        if not 0 <= self.address <= MAX_ADDRESS:
            raise InvalidArgumentError(f"address out of 7-bit range: {self.address}")
        if self.n_requests < 0 or self.timeout_ticks < 0 or self.retries < 0:
            raise InvalidArgumentError("n_requests, timeout_ticks and retries must be >= 0")
        if self.request_len < 1:
            raise InvalidArgumentError(f"request_len must be >= 1, got {self.request_len}")


class PendingRequest(NamedTuple):
    txn: int
    request: int
    sent_at: Tick
    attempt: int


@dataclass(frozen=True)
class ObcState:
    config: ObcConfig = ObcConfig()
    phase: ObcPhase = ObcPhase.SEND_START
    remaining: int = 0
    awaiting: Optional[PendingRequest] = None
    # (request ordinal, attempt) of a request that timed out and will be re-sent
    resend: Optional[Tuple[int, int]] = None
    next_txn: int = 1
    last_emit_tick: Tick = -1
    # request ordinal per issued txn (index txn - 1); 0 for writes
    txn_requests: Tuple[int, ...] = ()
    log: Tuple[ObcObservation, ...] = ()

    @classmethod
    def initial(cls, config: ObcConfig) -> 'ObcState':
        return cls(config=config, remaining=config.n_requests)

    @property
    def label(self) -> str:
        if self.phase is ObcPhase.REQUESTING:
            return f"Requesting({self.remaining})"
        return self.phase.value

    @property
    def finished(self) -> bool:
        return self.phase in TERMINAL_PHASES

    def request_of(self, txn: int) -> int:
        if 1 <= txn <= len(self.txn_requests):
            return self.txn_requests[txn - 1]
        return 0


class ExpectedMessage(NamedTuple):
    kind: MessageKind
    command: Optional[ObcCommand]


def obc_expected_trace(n_requests: int) -> List[ExpectedMessage]:
    """
    Fault-free message shape of one session.

    Args:
        n_requests: Number of data requests in the session

    Returns:
        [Write(Start), (ReadRequest, ReadResponse) x n_requests, Write(End)]
    """
    if n_requests < 0:
        raise InvalidArgumentError(f"n_requests must be >= 0, got {n_requests}")
    shape = [ExpectedMessage(MessageKind.WRITE, ObcCommand.START_ANALOG_READ)]
    for _ in range(n_requests):
        shape.append(ExpectedMessage(MessageKind.READ_REQUEST, ObcCommand.REQUEST_DATA))
        shape.append(ExpectedMessage(MessageKind.READ_RESPONSE, None))
    shape.append(ExpectedMessage(MessageKind.WRITE, ObcCommand.END_TRANSMISSION))
    return shape


def classify_response(payload: bytes, expected_range: Tuple[int, int]) -> ObservationKind:
    lo, hi = expected_range
    if payload and all(b == BUS_DEFAULTS.idle_byte for b in payload):
        return ObservationKind.ALL_FF
    if all(lo <= b <= hi for b in payload):
        return ObservationKind.RESPONSE_OK
    return ObservationKind.OUT_OF_RANGE_DETECTED


def _set_phase(state: ObcState, phase: ObcPhase, remaining: int, now: Tick,
               events: List[TraceEvent]) -> ObcState:
    updated = replace(state, phase=phase, remaining=remaining)
    if updated.label != state.label:
        events.append(make_event(now, EventSource.OBC, EventKind.DEVICE_TRANSITION,
                                 **{"from": state.label, "to": updated.label}))
    return updated


def _observe(state: ObcState, kind: ObservationKind, payload: bytes, request: int, txn: int,
             now: Tick, events: List[TraceEvent]) -> ObcState:
    observation = ObcObservation(at=now, kind=kind, payload=payload, request=request, txn=txn)
    events.append(make_event(now, EventSource.OBC, EventKind.OBSERVATION,
                             at=now, kind=kind.value, payload=to_hex(payload), request=request, txn=txn))
    if kind is not ObservationKind.RESPONSE_OK:
        logger.info(f"OBC request {request} (txn {txn}): {kind.value} [{to_hex(payload)}]")
    return replace(state, log=state.log + (observation,))


def _complete_request(state: ObcState, now: Tick, events: List[TraceEvent]) -> ObcState:
    remaining = state.remaining - 1
    phase = ObcPhase.REQUESTING if remaining > 0 else ObcPhase.SEND_END
    return _set_phase(replace(state, awaiting=None), phase, remaining, now, events)


def _resolve_timeout(state: ObcState, now: Tick, events: List[TraceEvent]) -> ObcState:
    pending = state.awaiting
    if pending is None or now <= pending.sent_at + state.config.timeout_ticks:
        return state
    idle = default_read(state.config.request_len)
    if pending.attempt < state.config.retries:
        state = _observe(state, ObservationKind.TIMEOUT_DETECTED, idle, pending.request, pending.txn, now, events)
        return replace(state, awaiting=None, resend=(pending.request, pending.attempt + 1))
    # No responder drove SDA: the master reads the idle bus.
    state = _observe(state, ObservationKind.ALL_FF, idle, pending.request, pending.txn, now, events)
    return _complete_request(state, now, events)


def _outbound(state: ObcState, kind: MessageKind, payload: bytes, now: Tick,
              requested_len: int = 0) -> Message:
    return Message(
        tick=now,
        segment=Segment.MASTER_SIDE,
        direction=Direction.MASTER_TO_SLAVE,
        kind=kind,
        address=state.config.address,
        payload=payload,
        requested_len=requested_len,
        txn=state.next_txn,
    )


def _emit(state: ObcState, now: Tick, events: List[TraceEvent]) -> Tuple[ObcState, Optional[Message]]:
    if state.last_emit_tick == now or state.finished:
        return state, None
    commands = state.config.commands
    message = None
    request = 0

    if state.phase is ObcPhase.SEND_START:
        message = _outbound(state, MessageKind.WRITE, bytes([commands.start]), now)
        n = state.config.n_requests
        state = _set_phase(state, ObcPhase.REQUESTING if n > 0 else ObcPhase.SEND_END, n, now, events)
    elif state.phase is ObcPhase.REQUESTING and state.awaiting is None:
        if state.resend is not None:
            request, attempt = state.resend
        else:
            request, attempt = state.config.n_requests - state.remaining + 1, 0
        message = _outbound(state, MessageKind.READ_REQUEST, bytes([commands.request]), now,
                            requested_len=state.config.request_len)
        state = replace(state, resend=None,
                        awaiting=PendingRequest(txn=message.txn, request=request, sent_at=now, attempt=attempt))
    elif state.phase is ObcPhase.SEND_END:
        message = _outbound(state, MessageKind.WRITE, bytes([commands.end]), now)
        state = _set_phase(state, ObcPhase.DONE, 0, now, events)

    if message is None:
        return state, None
    events.append(make_event(now, EventSource.OBC, EventKind.MSG_SENT, message=message_to_record(message)))
    state = replace(state, next_txn=state.next_txn + 1, last_emit_tick=now,
                    txn_requests=state.txn_requests + (request,))
    return state, message


def obc_step(state: ObcState, inbound: Optional[Message], now: Tick) -> StepResult:
    """
    Advance the OBC by one step.

    Args:
        state: Current OBC state
        inbound: ReadResponse delivered to the OBC this step, if any
        now: Current tick

    Returns:
        StepResult with the new state and at most one outbound message
    """
    events: List[TraceEvent] = []

    if state.finished:
        if inbound is not None and inbound.kind is MessageKind.READ_RESPONSE:
            state = _observe(state, ObservationKind.TIMEOUT_DETECTED, inbound.payload,
                             state.request_of(inbound.txn), inbound.txn, now, events)
        return StepResult(state, None, events)

    state = _resolve_timeout(state, now, events)

    if inbound is not None:
        if inbound.kind is not MessageKind.READ_RESPONSE:
            logger.error(f"OBC protocol violation: received {inbound.kind.value} at tick {now}")
            state = _observe(state, ObservationKind.PROTOCOL_VIOLATION, inbound.payload, 0, inbound.txn, now, events)
            state = _set_phase(replace(state, awaiting=None), ObcPhase.ABORTED, state.remaining, now, events)
            return StepResult(state, None, events)
        pending = state.awaiting
        if pending is not None and inbound.txn == pending.txn:
            kind = classify_response(inbound.payload, state.config.expected_range)
            state = _observe(state, kind, inbound.payload, pending.request, inbound.txn, now, events)
            state = _complete_request(state, now, events)
        else:
            # Response to a request the OBC already gave up on.
            state = _observe(state, ObservationKind.TIMEOUT_DETECTED, inbound.payload,
                             state.request_of(inbound.txn), inbound.txn, now, events)

    state, message = _emit(state, now, events)
    return StepResult(state, message, events)
