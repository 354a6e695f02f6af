"""
Scenario configuration: the test-system setup of one run (devices, FEM mode,
faultload, tick budget) and the built-in scenarios reproducing the four
simulated behaviors: normal, timeout delay, bit-flip and out-of-range value.

Scenario documents are JSON objects whose keys mirror the Scenario fields.
The faultload is given either inline, as a list of spec objects, or through
`faultload_path`, a faultload file relative to the scenario document.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import jsonschema

from src.bus.bus_core import Segment
from src.config.config import (
    DEFAULT_EXPECTED_RANGE,
    DEFAULT_MAX_TICKS,
    DEFAULT_N_REQUESTS,
    DEFAULT_REQUEST_LEN,
    DEFAULT_RETRIES,
    DEFAULT_SEED,
    DEFAULT_SLP_ADDRESS,
    DEFAULT_TIMEOUT_TICKS,
    MAX_ADDRESS,
)
from src.devices.obc_model import ObcConfig
from src.devices.protocol import CommandSet
from src.devices.slp_model import SlpConfig
from src.faultload.faultload import (
    FaultSpec,
    Faultload,
    FlipFault,
    ReplaceFault,
    TimeFault,
    Trigger,
    TriggerKind,
    parse_faultload,
    spec_to_record,
    specs_from_records,
)
from src.fem.fem import FemTop
from src.harness.outcome import Outcome
from src.utils.errors import FaultloadError, FemSimError, ScenarioError

logger = logging.getLogger(__name__)


class Topology(str, Enum):
    FEM = 'fem'
    # OBC wired straight to the SLP; the transparency baseline
    DIRECT = 'direct'


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int = DEFAULT_SEED
    slp_address: int = DEFAULT_SLP_ADDRESS
    n_requests: int = DEFAULT_N_REQUESTS
    timeout_ticks: int = DEFAULT_TIMEOUT_TICKS
    expected_range: Tuple[int, int] = DEFAULT_EXPECTED_RANGE
    fem_mode_at_start: FemTop = FemTop.BUSY
    faultload: Faultload = field(default_factory=Faultload)
    max_ticks: int = DEFAULT_MAX_TICKS
    topology: Topology = Topology.FEM
    retries: int = DEFAULT_RETRIES
    request_len: int = DEFAULT_REQUEST_LEN
    commands: CommandSet = field(default_factory=CommandSet)
    expect: Optional[Outcome] = None

    def obc_config(self) -> ObcConfig:
        return ObcConfig(
            address=self.slp_address,
            commands=self.commands,
            n_requests=self.n_requests,
            timeout_ticks=self.timeout_ticks,
            expected_range=self.expected_range,
            request_len=self.request_len,
            retries=self.retries,
        )

    def slp_config(self) -> SlpConfig:
        return SlpConfig(address=self.slp_address, commands=self.commands, seed=self.seed)

    @property
    def min_ticks(self) -> int:
        """Budget a fault-free run needs: 4 * (2 + 2 * n_requests)."""
        return 4 * (2 + 2 * self.n_requests)


SCENARIO_SCHEMA = {
    "type": "object",
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "seed": {"type": "integer", "minimum": 0},
        "slp_address": {"type": "integer", "minimum": 0, "maximum": MAX_ADDRESS},
        "n_requests": {"type": "integer", "minimum": 0},
        "timeout_ticks": {"type": "integer", "minimum": 0},
        "expected_range": {
            "type": "array",
            "items": {"type": "integer", "minimum": 0, "maximum": 255},
            "minItems": 2,
            "maxItems": 2,
        },
        "fem_mode_at_start": {"enum": [t.value for t in FemTop]},
        "faultload": {"type": "array"},
        "faultload_path": {"type": "string"},
        "max_ticks": {"type": "integer", "minimum": 1},
        "topology": {"enum": [t.value for t in Topology]},
        "retries": {"type": "integer", "minimum": 0},
        "request_len": {"type": "integer", "minimum": 1},
        "commands": {
            "type": "object",
            "properties": {
                "start": {"type": "integer", "minimum": 0, "maximum": 255},
                "request": {"type": "integer", "minimum": 0, "maximum": 255},
                "end": {"type": "integer", "minimum": 0, "maximum": 255},
            },
            "additionalProperties": False,
        },
        "expect": {"enum": [o.value for o in Outcome]},
    },
    "required": ["name"],
    "additionalProperties": False,
}


def _load_faultload_file(path: Path) -> Tuple[Faultload, List[str]]:
    try:
        return parse_faultload(path.read_text(encoding="utf-8")), []
    except OSError as e:
        return Faultload(), [f"faultload_path: cannot read {path}: {e}"]
    except FaultloadError as e:
        return Faultload(), [f"faultload_path: {v}" for v in e.violations]


def parse_scenario(doc: Any, base_dir: Optional[Path] = None) -> Scenario:
    """
    Build a Scenario from a decoded scenario document.

    Args:
        doc: Decoded JSON object
        base_dir: Directory `faultload_path` is resolved against (default: cwd)

    Returns:
        The validated Scenario

    Raises:
        ScenarioError: Carrying every violation found
    """
    validator = jsonschema.Draft7Validator(SCENARIO_SCHEMA)
    violations = [
        f"{'.'.join(str(p) for p in e.absolute_path) or '<scenario>'}: {e.message}"
        for e in sorted(validator.iter_errors(doc), key=lambda e: [str(p) for p in e.absolute_path])
    ]
    if violations:
        raise ScenarioError(violations)

    faultload = Faultload()
    if "faultload" in doc and "faultload_path" in doc:
        violations.append("faultload and faultload_path are mutually exclusive")
    elif "faultload" in doc:
        specs, problems = specs_from_records((f"faultload[{i}]", r) for i, r in enumerate(doc["faultload"]))
        faultload = Faultload(specs=specs)
        violations.extend(problems)
    elif "faultload_path" in doc:
        path = Path(doc["faultload_path"])
        if not path.is_absolute():
            path = (base_dir or Path.cwd()) / path
        faultload, problems = _load_faultload_file(path)
        violations.extend(problems)

    lo, hi = doc.get("expected_range", DEFAULT_EXPECTED_RANGE)
    if lo > hi:
        violations.append(f"expected_range: lo {lo} > hi {hi}")

    topology = Topology(doc.get("topology", Topology.FEM.value))
    if topology is Topology.DIRECT and len(faultload):
        violations.append("a direct topology has no FEM to inject the faultload")

    commands = None
    try:
        commands = CommandSet(**doc.get("commands", {}))
    except FemSimError as e:
        violations.append(f"commands: {e}")

    if violations:
        raise ScenarioError(violations)

    scenario = Scenario(
        name=doc["name"],
        seed=doc.get("seed", DEFAULT_SEED),
        slp_address=doc.get("slp_address", DEFAULT_SLP_ADDRESS),
        n_requests=doc.get("n_requests", DEFAULT_N_REQUESTS),
        timeout_ticks=doc.get("timeout_ticks", DEFAULT_TIMEOUT_TICKS),
        expected_range=(lo, hi),
        fem_mode_at_start=FemTop(doc.get("fem_mode_at_start", FemTop.BUSY.value)),
        faultload=faultload,
        max_ticks=doc.get("max_ticks", DEFAULT_MAX_TICKS),
        topology=topology,
        retries=doc.get("retries", DEFAULT_RETRIES),
        request_len=doc.get("request_len", DEFAULT_REQUEST_LEN),
        commands=commands,
        expect=Outcome(doc["expect"]) if "expect" in doc else None,
    )
    check_scenario(scenario)
    return scenario


def check_scenario(sc: Scenario) -> Scenario:
    """Log the non-fatal findings about a scenario; returns it unchanged."""
    if sc.max_ticks < sc.min_ticks:
        logger.warning(
            f"Scenario {sc.name}: max_ticks {sc.max_ticks} is below the {sc.min_ticks} ticks "
            f"a fault-free run needs; the run may abort")
    if sc.fem_mode_at_start is FemTop.IDLE and len(sc.faultload):
        logger.warning(f"Scenario {sc.name}: FEM starts Idle, its {len(sc.faultload)} fault spec(s) will not fire")
    return sc


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ScenarioError([f"cannot read {path}: {e}"]) from e
    except json.JSONDecodeError as e:
        raise ScenarioError([f"{path}: invalid JSON: {e.msg} (line {e.lineno})"]) from e
    return parse_scenario(doc, base_dir=path.parent)


def scenario_to_record(sc: Scenario) -> Dict[str, Any]:
    """Scenario document with the faultload inlined; parse_scenario reads it back."""
    record: Dict[str, Any] = {
        "name": sc.name,
        "seed": sc.seed,
        "slp_address": sc.slp_address,
        "n_requests": sc.n_requests,
        "timeout_ticks": sc.timeout_ticks,
        "expected_range": list(sc.expected_range),
        "fem_mode_at_start": sc.fem_mode_at_start.value,
        "faultload": [spec_to_record(s) for s in sc.faultload.specs],
        "max_ticks": sc.max_ticks,
        "topology": sc.topology.value,
        "retries": sc.retries,
        "request_len": sc.request_len,
        "commands": {"start": sc.commands.start, "request": sc.commands.request, "end": sc.commands.end},
    }
    if sc.expect is not None:
        record["expect"] = sc.expect.value
    return record


def _single(spec: FaultSpec) -> Faultload:
    return Faultload(specs=(spec,))


def _read(ordinal: int) -> Trigger:
    return Trigger(kind=TriggerKind.READ_ORDINAL, ordinal=ordinal)


BUILTIN_SCENARIOS: Dict[str, Scenario] = {
    "fig4-normal": Scenario(name="fig4-normal", expect=Outcome.FAULT_FREE_NOMINAL),
    "fig4-timeout": Scenario(
        name="fig4-timeout",
        faultload=_single(FaultSpec(id="timeout-delay", where=Segment.SLAVE_SIDE, when=_read(2),
                                    what=TimeFault(delay_ticks=50))),
        expect=Outcome.SUT_DETECTED,
    ),
    # bit 7 always leaves [0x00, 0x7F]
    "fig4-flip": Scenario(
        name="fig4-flip",
        faultload=_single(FaultSpec(id="bit-flip", where=Segment.SLAVE_SIDE, when=_read(1),
                                    what=FlipFault(byte_index=0, bit_index=7))),
        expect=Outcome.SUT_DETECTED,
    ),
    "fig4-out": Scenario(
        name="fig4-out",
        faultload=_single(FaultSpec(id="out-of-range", where=Segment.SLAVE_SIDE, when=_read(1),
                                    what=ReplaceFault(replacement=bytes([0xC8])))),
        expect=Outcome.SUT_DETECTED,
    ),
}


def resolve_scenario(ref: str) -> Scenario:
    """A built-in scenario name, or else a path to a scenario document."""
    if ref in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[ref]
    return load_scenario(ref)
