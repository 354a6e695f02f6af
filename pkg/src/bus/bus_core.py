"""
Transaction-level bus abstraction shared by the device models, the FEM and the harness.
This module defines the bus messages, the two segments around the FEM, the tick clock
and the rule that an unanswered read returns the idle byte (SDA held HIGH).
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, List, NamedTuple, Optional

from src.config.config import IDLE_BYTE, MAX_ADDRESS
from src.utils.bit_utils import from_hex, to_hex
from src.utils.errors import InvalidArgumentError, MessageValidationError

# Simulated time, in steps. Starts at 0 and never goes backward within a run.
Tick = int


class Segment(str, Enum):
    """Bus segment: OBC<->FEM is the master side, FEM<->SLP the slave side."""
    MASTER_SIDE = 'MasterSide'
    SLAVE_SIDE = 'SlaveSide'

    def other(self) -> 'Segment':
        return Segment.SLAVE_SIDE if self is Segment.MASTER_SIDE else Segment.MASTER_SIDE


class Direction(str, Enum):
    MASTER_TO_SLAVE = 'MasterToSlave'
    SLAVE_TO_MASTER = 'SlaveToMaster'


class MessageKind(str, Enum):
    WRITE = 'Write'
    READ_REQUEST = 'ReadRequest'
    READ_RESPONSE = 'ReadResponse'


_DIRECTION_OF_KIND = {
    MessageKind.WRITE: Direction.MASTER_TO_SLAVE,
    MessageKind.READ_REQUEST: Direction.MASTER_TO_SLAVE,
    MessageKind.READ_RESPONSE: Direction.SLAVE_TO_MASTER,
}


@dataclass(frozen=True)
class BusDefaults:
    idle_byte: int = IDLE_BYTE


BUS_DEFAULTS = BusDefaults()


@dataclass(frozen=True)
class Message:
    """
    One directed bus transfer.

    `segment` is the segment the message is currently travelling on; relays
    re-stamp it when the message crosses to the other side. `txn` is the OBC
    transaction number, echoed by the slave in its response.
    """
    tick: Tick
    segment: Segment
    direction: Direction
    kind: MessageKind
    address: int
    payload: bytes = b''
    requested_len: int = 0
    txn: int = 0

    @property
    def from_master(self) -> bool:
        return self.direction is Direction.MASTER_TO_SLAVE


def direction_for(kind: MessageKind) -> Direction:
    return _DIRECTION_OF_KIND[kind]


def default_read(requested_len: int) -> bytes:
    """
    Bytes a master clocks in when no slave drives SDA.

    Args:
        requested_len: Number of bytes the master reads

    Returns:
        `requested_len` copies of the idle byte (0xFF)

    Raises:
        InvalidArgumentError: If requested_len is 0 or negative
    """
    if requested_len < 1:
        raise InvalidArgumentError(f"requested_len must be >= 1, got {requested_len}")
    return bytes([BUS_DEFAULTS.idle_byte]) * requested_len


def message_violations(msg: Message) -> List[str]:
    violations = []
    if _DIRECTION_OF_KIND.get(msg.kind) is not msg.direction:
        violations.append("direction/kind mismatch")
    if not 0 <= msg.address <= MAX_ADDRESS:
        violations.append("address out of 7-bit range")
    if msg.tick < 0:
        violations.append("tick must be >= 0")
    if msg.kind is MessageKind.READ_REQUEST and msg.requested_len < 1:
        violations.append("requested_len must be >= 1")
    if msg.kind is MessageKind.READ_RESPONSE:
        if not msg.payload and msg.requested_len != 0:
            violations.append("empty ReadResponse against a nonzero request")
        elif not msg.payload:
            violations.append("empty ReadResponse")
        elif msg.requested_len and len(msg.payload) != msg.requested_len:
            violations.append("response length mismatch")
    if any(not 0 <= b <= 0xFF for b in msg.payload):
        violations.append("payload byte out of range")
    return violations


def validate_message(msg: Message) -> Message:
    """
    Check every Message invariant.

    Args:
        msg: Message to check

    Returns:
        The same message object when it is well-formed

    Raises:
        MessageValidationError: Naming every violated invariant
    """
    violations = message_violations(msg)
    if violations:
        raise MessageValidationError(violations)
    return msg


def message_to_record(msg: Message) -> Dict[str, Any]:
    """JSON-safe form of a message, payload in hex."""
    return {
        "address": msg.address,
        "direction": msg.direction.value,
        "kind": msg.kind.value,
        "payload": to_hex(msg.payload),
        "requested_len": msg.requested_len,
        "segment": msg.segment.value,
        "tick": msg.tick,
        "txn": msg.txn,
    }


def message_from_record(record: Dict[str, Any]) -> Message:
    return Message(
        tick=record["tick"],
        segment=Segment(record["segment"]),
        direction=Direction(record["direction"]),
        kind=MessageKind(record["kind"]),
        address=record["address"],
        payload=from_hex(record["payload"]),
        requested_len=record.get("requested_len", 0),
        txn=record.get("txn", 0),
    )


class StepResult(NamedTuple):
    """New component state, at most one outbound message, and the trace events of the step."""
    state: Any
    message: Optional[Message]
    events: List[Any]
