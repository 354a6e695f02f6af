"""
Behavioral model of the Langmuir sensor payload (SLP), the I2C slave.

The payload is an analog reader plus an A/D converter: it starts reading on
StartAnalogRead, serves samples on data requests and returns to Off on
EndTransmission. Real plasma readings are replaced by a documented 64-bit LCG.
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional

from src.bus.bus_core import (
    Direction,
    Message,
    MessageKind,
    Segment,
    StepResult,
    Tick,
    message_to_record,
)
from src.config.config import (
    DEFAULT_SEED,
    DEFAULT_SLP_ADDRESS,
    LCG_INCREMENT,
    LCG_MODULUS,
    LCG_MULTIPLIER,
    LCG_SHIFT,
    SAMPLE_MODULUS,
)
from src.devices.protocol import CommandSet, ObcCommand
from src.harness.trace import EventKind, EventSource, TraceEvent, make_event

logger = logging.getLogger(__name__)


class SlpMode(str, Enum):
    OFF = 'Off'
    READING = 'Reading'
    TRANSMITTING = 'Transmitting'


@dataclass(frozen=True)
class SlpConfig:
    address: int = DEFAULT_SLP_ADDRESS
    commands: CommandSet = CommandSet()
    seed: int = DEFAULT_SEED


@dataclass(frozen=True)
class SlpState:
    config: SlpConfig = SlpConfig()
    mode: SlpMode = SlpMode.OFF
    samples_emitted: int = 0

    @property
    def seed(self) -> int:
        return self.config.seed


def slp_sample(seed: int, index: int) -> int:
    """
    Deterministic stand-in for one A/D sample.

    x_0 = seed, x_{k+1} = (6364136223846793005 * x_k + 1442695040888963407) mod 2^64,
    sample = (x_{index+1} >> 33) mod 128.

    Args:
        seed: Generator seed (taken mod 2^64)
        index: Sample index, 0-based

    Returns:
        A byte in [0x00, 0x7F]
    """
    x = seed % LCG_MODULUS
    for _ in range(index + 1):
        x = (LCG_MULTIPLIER * x + LCG_INCREMENT) % LCG_MODULUS
    return (x >> LCG_SHIFT) % SAMPLE_MODULUS


def _transition(state: SlpState, mode: SlpMode, now: Tick, events: List[TraceEvent]) -> SlpState:
    if mode is not state.mode:
        events.append(make_event(now, EventSource.SLP, EventKind.DEVICE_TRANSITION,
                                 **{"from": state.mode.value, "to": mode.value}))
    return replace(state, mode=mode)


def slp_step(state: SlpState, inbound: Message, now: Tick) -> StepResult:
    """
    Handle one message delivered to the SLP.

    Args:
        state: Current SLP state
        inbound: Message delivered on the slave side
        now: Current tick

    Returns:
        StepResult with the new state and, for a served data request, the ReadResponse
    """
    events: List[TraceEvent] = []
    if inbound.address != state.config.address:
        logger.debug(f"SLP ignoring message for address 0x{inbound.address:02x}")
        return StepResult(state, None, events)

    commands = state.config.commands
    command: Optional[ObcCommand] = commands.decode(inbound.payload[0]) if inbound.payload else None

    if inbound.kind is MessageKind.WRITE:
        if command is ObcCommand.START_ANALOG_READ and state.mode is SlpMode.OFF:
            state = _transition(state, SlpMode.READING, now, events)
        elif command is ObcCommand.END_TRANSMISSION and state.mode is not SlpMode.OFF:
            state = _transition(state, SlpMode.OFF, now, events)
        else:
            logger.debug(f"SLP ignoring write {inbound.payload.hex()} in mode {state.mode.value}")
        return StepResult(state, None, events)

    if inbound.kind is MessageKind.READ_REQUEST:
        is_data_request = not inbound.payload or command is ObcCommand.REQUEST_DATA
        if not is_data_request or state.mode is SlpMode.OFF:
            # Silence: the master clocks in 0xFF from the idle bus.
            logger.debug(f"SLP silent on read request txn={inbound.txn} in mode {state.mode.value}")
            return StepResult(state, None, events)
        state = _transition(state, SlpMode.TRANSMITTING, now, events)
        start = state.samples_emitted
        payload = bytes(slp_sample(state.seed, start + i) for i in range(inbound.requested_len))
        state = replace(state, samples_emitted=start + inbound.requested_len)
        response = Message(
            tick=now,
            segment=Segment.SLAVE_SIDE,
            direction=Direction.SLAVE_TO_MASTER,
            kind=MessageKind.READ_RESPONSE,
            address=state.config.address,
            payload=payload,
            requested_len=inbound.requested_len,
            txn=inbound.txn,
        )
        events.append(make_event(now, EventSource.SLP, EventKind.MSG_SENT, message=message_to_record(response)))
        return StepResult(state, response, events)

    logger.debug(f"SLP ignoring {inbound.kind.value}")
    return StepResult(state, None, events)
