"""
Failure Emulator Mechanism (FEM).

The FEM sits serially on the bus: it is a slave toward the OBC and a master
toward the SLP. In Idle it relays traffic untouched. In Busy it counts Writes
(requests from the master) and Reads (responses from the slave), and when a
message matches an armed fault spec it flips a bit, replaces the payload,
holds the message back or drops it.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

from src.bus.bus_core import Message, MessageKind, Segment, StepResult, Tick, message_to_record
from src.faultload.faultload import (
    FaultSpec,
    Faultload,
    FlipFault,
    ProvisionFault,
    ReplaceFault,
    TimeFault,
    TriggerKind,
)
from src.harness.trace import EventKind, EventSource, TraceEvent, make_event
from src.utils.bit_utils import hamming_distance, to_hex
from src.utils.errors import FaultApplicationError, InvalidArgumentError

logger = logging.getLogger(__name__)


class FemTop(str, Enum):
    IDLE = 'Idle'
    BUSY = 'Busy'


class FemSub(str, Enum):
    NORMAL = 'Normal'
    FLIP = 'Flip'
    DELAY = 'Delay'
    OUT = 'Out'


@dataclass(frozen=True)
class FemMode:
    top: FemTop
    sub: Optional[FemSub] = None

    def __post_init__(self):
        if self.top is FemTop.IDLE and self.sub is not None:
            raise InvalidArgumentError("Idle has no sub-mode")
        if self.top is FemTop.BUSY and self.sub is None:
            raise InvalidArgumentError("Busy requires a sub-mode")

    @classmethod
    def at_start(cls, top: FemTop) -> 'FemMode':
        return cls(FemTop.BUSY, FemSub.NORMAL) if top is FemTop.BUSY else cls(FemTop.IDLE)

    @property
    def label(self) -> str:
        return self.top.value if self.sub is None else f"{self.top.value}/{self.sub.value}"


@dataclass(frozen=True)
class FemCounters:
    writes: int = 0
    reads: int = 0

    def count(self, msg: Message) -> 'FemCounters':
        if msg.kind is MessageKind.READ_RESPONSE:
            return replace(self, reads=self.reads + 1)
        return replace(self, writes=self.writes + 1)

    def to_record(self):
        return {"reads": self.reads, "writes": self.writes}


class HeldMessage(NamedTuple):
    message: Message
    release_tick: Tick
    fault_id: str


@dataclass(frozen=True)
class FemState:
    mode: FemMode = FemMode(FemTop.IDLE)
    counters: FemCounters = FemCounters()
    pending: Tuple[FaultSpec, ...] = ()
    held: Optional[HeldMessage] = None

    @classmethod
    def initial(cls, top: FemTop, faultload: Faultload = Faultload()) -> 'FemState':
        return cls(mode=FemMode.at_start(top), pending=tuple(replace(s, consumed=False) for s in faultload.specs))

    @property
    def busy(self) -> bool:
        return self.mode.top is FemTop.BUSY

    @property
    def consumed_ids(self) -> List[str]:
        return [s.id for s in self.pending if s.consumed]


def match_trigger(spec: FaultSpec, counters: FemCounters, msg: Message) -> bool:
    """
    Decide whether a spec fires on this message.

    Args:
        spec: Armed fault spec
        counters: Counters already updated for msg
        msg: Message on the leg being checked; its segment is that leg

    Returns:
        True iff the spec is unconsumed, targets msg's segment and its ordinal
        equals the just-updated counter for the kind it counts
    """
    if spec.consumed or spec.where is not msg.segment:
        return False
    if spec.when.kind is TriggerKind.WRITE_ORDINAL:
        return msg.kind is not MessageKind.READ_RESPONSE and counters.writes == spec.when.ordinal
    return msg.kind is MessageKind.READ_RESPONSE and counters.reads == spec.when.ordinal


def apply_bitflip(payload: bytes, byte_index: int, bit_index: int) -> bytes:
    """
    Flip one bit of a payload.

    Args:
        payload: Original bytes
        byte_index: Index of the byte to alter
        bit_index: Bit to flip, 0 = least significant

    Returns:
        The payload with payload[byte_index] XOR (1 << bit_index)

    Raises:
        FaultApplicationError: If either index is out of bounds
    """
    if not 0 <= bit_index <= 7:
        raise FaultApplicationError(f"bit_index {bit_index} out of range")
    if not 0 <= byte_index < len(payload):
        raise FaultApplicationError(f"byte_index {byte_index} out of bounds for a {len(payload)}-byte payload")
    flipped = bytearray(payload)
    flipped[byte_index] ^= 1 << bit_index
    return bytes(flipped)


def apply_replace(payload: bytes, replacement: bytes) -> bytes:
    if len(replacement) != len(payload):
        raise FaultApplicationError(
            f"length mismatch: replacement has {len(replacement)} byte(s), payload has {len(payload)}")
    return bytes(replacement)


def apply_delay(state: FemState, msg: Message, delay_ticks: Tick, now: Tick, fault_id: str = '') -> FemState:
    """
    Hold a message until now + delay_ticks.

    Raises:
        FaultApplicationError: If a message is already held or the delay is negative
    """
    if state.held is not None:
        raise FaultApplicationError(
            f"a message is already held until tick {state.held.release_tick} by {state.held.fault_id}")
    if delay_ticks < 0:
        raise FaultApplicationError(f"delay_ticks must be >= 0, got {delay_ticks}")
    return replace(state, held=HeldMessage(message=msg, release_tick=now + delay_ticks, fault_id=fault_id))


def apply_drop(msg: Optional[Message], now: Tick, fault_id: str = '') -> TraceEvent:
    """
    Swallow a message; returns the MsgDropped event recording it.

    With no message (an empty slot) the event is recorded as a no-op.
    """
    if msg is None:
        return make_event(now, EventSource.FEM, EventKind.MSG_DROPPED, fault_id=fault_id, message=None, noop=True)
    return make_event(now, EventSource.FEM, EventKind.MSG_DROPPED,
                      fault_id=fault_id, message=message_to_record(msg), noop=False)


def _release(state: FemState, now: Tick, events: List[TraceEvent]) -> Tuple[FemState, Optional[Message]]:
    held = state.held
    if held is None or held.release_tick > now:
        return state, None
    released = replace(held.message, tick=now)
    events.append(make_event(now, EventSource.FEM, EventKind.MSG_RELEASED,
                             fault_id=held.fault_id, message=message_to_record(released)))
    return replace(state, held=None), released


def _select_fault(state: FemState, inbound: Message, outbound: Message) -> Optional[Tuple[int, Segment]]:
    # Inbound leg first, then the outbound leg; first pending spec in faultload order wins.
    for leg in (inbound, outbound):
        for index, spec in enumerate(state.pending):
            if match_trigger(spec, state.counters, leg):
                return index, leg.segment
    return None


def _consume(state: FemState, index: int) -> FemState:
    pending = list(state.pending)
    pending[index] = replace(pending[index], consumed=True)
    return replace(state, pending=tuple(pending))


def _fault_error(spec: FaultSpec, error: FaultApplicationError, now: Tick) -> TraceEvent:
    logger.warning(f"Fault {spec.id} could not be applied: {error}")
    return make_event(now, EventSource.FEM, EventKind.FAULT_APPLICATION_ERROR, fault_id=spec.id, error=str(error))


def _apply(state: FemState, spec: FaultSpec, leg: Segment, msg: Message, now: Tick,
           events: List[TraceEvent]) -> Tuple[FemState, Optional[Message], FemSub]:
    what = spec.what
    try:
        if isinstance(what, (FlipFault, ReplaceFault)):
            if isinstance(what, FlipFault):
                payload, sub = apply_bitflip(msg.payload, what.byte_index, what.bit_index), FemSub.FLIP
            else:
                payload, sub = apply_replace(msg.payload, what.replacement), FemSub.OUT
            transformed = replace(msg, payload=payload)
            events.append(make_event(now, EventSource.FEM, EventKind.MSG_TRANSFORMED,
                                     fault_id=spec.id, segment=leg.value, original=to_hex(msg.payload),
                                     message=message_to_record(transformed),
                                     hamming=hamming_distance(msg.payload, payload)))
            return state, transformed, sub
        if isinstance(what, TimeFault):
            state = apply_delay(state, msg, what.delay_ticks, now, spec.id)
            events.append(make_event(now, EventSource.FEM, EventKind.MSG_HELD, fault_id=spec.id,
                                     release_tick=state.held.release_tick, message=message_to_record(msg)))
            state, released = _release(state, now, events)
            return state, released, FemSub.DELAY
        if isinstance(what, ProvisionFault):
            events.append(apply_drop(msg, now, spec.id))
            return state, None, FemSub.OUT
    except FaultApplicationError as e:
        events.append(_fault_error(spec, e, now))
        return state, msg, FemSub.NORMAL
    raise FaultApplicationError(f"unsupported fault nature for {spec.id}: {what!r}")


def fem_step(state: FemState, inbound: Optional[Message], now: Tick) -> StepResult:
    """
    Advance the FEM by one step.

    Args:
        state: Current FEM state
        inbound: Message arriving from either segment, or None to only release a due hold
        now: Current tick

    Returns:
        StepResult with the new state and the message to put on the other segment, if any
    """
    events: List[TraceEvent] = []
    if inbound is None:
        state, released = _release(state, now, events)
        if released is not None and state.busy:
            state = replace(state, mode=FemMode(FemTop.BUSY, FemSub.NORMAL))
        return StepResult(state, released, events)

    outbound = replace(inbound, segment=inbound.segment.other(), tick=now)
    if not state.busy:
        return StepResult(state, outbound, events)

    state = replace(state, counters=state.counters.count(inbound))
    sub = FemSub.NORMAL
    fault_events: List[TraceEvent] = []
    selected = _select_fault(state, inbound, outbound)
    if selected is not None:
        index, leg = selected
        spec = state.pending[index]
        logger.info(f"Fault {spec.id} fires on {inbound.kind.value} txn={inbound.txn} ({leg.value})")
        state = _consume(state, index)
        state, outbound, sub = _apply(state, spec, leg, outbound, now, fault_events)

    state = replace(state, mode=FemMode(FemTop.BUSY, sub))
    events.append(make_event(now, EventSource.FEM, EventKind.COUNTER_UPDATE,
                             counters=state.counters.to_record(), inbound=inbound.kind.value,
                             mode=state.mode.label))
    events.extend(fault_events)
    return StepResult(state, outbound, events)
