"""
Command vocabulary of the OBC <-> SLP session: start the analog read, request
the acquired data, end the transmission.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Optional

from src.config.config import CMD_END_TRANSMISSION, CMD_REQUEST_DATA, CMD_START_ANALOG_READ
from src.utils.errors import InvalidArgumentError


class ObcCommand(str, Enum):
    START_ANALOG_READ = 'StartAnalogRead'
    REQUEST_DATA = 'RequestData'
    END_TRANSMISSION = 'EndTransmission'


@dataclass(frozen=True)
class CommandSet:
    """Wire bytes of the three commands; pairwise distinct."""
    start: int = CMD_START_ANALOG_READ
    request: int = CMD_REQUEST_DATA
    end: int = CMD_END_TRANSMISSION

    def __post_init__(self):
        values = (self.start, self.request, self.end)
        if len(set(values)) != 3:
            raise InvalidArgumentError(f"command bytes must be pairwise distinct, got {values}")
        if any(not 0 <= v <= 0xFF for v in values):
            raise InvalidArgumentError(f"command bytes must fit in one byte, got {values}")

    def byte_for(self, command: ObcCommand) -> int:
        return {
            ObcCommand.START_ANALOG_READ: self.start,
            ObcCommand.REQUEST_DATA: self.request,
            ObcCommand.END_TRANSMISSION: self.end,
        }[command]

    def decode(self, value: int) -> Optional[ObcCommand]:
        """Map a wire byte back to its command, or None for an unknown byte."""
        table: Dict[int, ObcCommand] = {
            self.start: ObcCommand.START_ANALOG_READ,
            self.request: ObcCommand.REQUEST_DATA,
            self.end: ObcCommand.END_TRANSMISSION,
        }
        return table.get(value)
