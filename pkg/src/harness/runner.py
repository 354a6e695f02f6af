"""
Deterministic tick loop wiring OBC <-> FEM <-> SLP (or OBC <-> SLP directly).

Each tick:
  1. the FEM releases a held message whose release tick has come;
  2. messages due this tick are delivered in FIFO order, and the receiving
     component steps immediately (a device answers in the tick of delivery);
  3. the OBC takes its own step (timeouts, next request).
Every hop costs one tick. The run stops once the OBC is Done or Aborted with
nothing in flight or held, or when max_ticks ticks have elapsed.
"""

import heapq
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

from src.bus.bus_core import Message, Tick, message_to_record, validate_message
from src.config.config import HOP_LATENCY_TICKS
from src.devices.obc_model import ObcPhase, ObcState, obc_step
from src.devices.slp_model import SlpState, slp_step
from src.fem.fem import FemState, fem_step
from src.harness.oracles import evaluate_oracles
from src.harness.outcome import Verdict
from src.harness.scenario import Scenario, Topology
from src.harness.trace import EventKind, EventSource, Trace, TraceRecorder, make_event

logger = logging.getLogger(__name__)


class Node(str, Enum):
    OBC = 'OBC'
    FEM = 'FEM'
    SLP = 'SLP'


class _Delivery(NamedTuple):
    tick: Tick
    seq: int
    target: Node
    message: Message


class _Wire:
    """In-flight messages, delivered by (tick, send order)."""

    def __init__(self):
        self._queue: List[_Delivery] = []
        self._seq = 0

    def send(self, message: Message, target: Node, now: Tick) -> None:
        validate_message(message)
        heapq.heappush(self._queue, _Delivery(now + HOP_LATENCY_TICKS, self._seq, target, message))
        self._seq += 1

    def due(self, now: Tick) -> Optional[_Delivery]:
        if self._queue and self._queue[0].tick <= now:
            return heapq.heappop(self._queue)
        return None

    def __len__(self) -> int:
        return len(self._queue)


@dataclass(frozen=True)
class SimulationResult:
    trace: Trace
    obc: ObcState
    slp: SlpState
    fem: Optional[FemState]
    # the OBC reached Done before the tick budget ran out
    completed: bool
    ticks: Tick


def simulate(sc: Scenario) -> SimulationResult:
    """
    Run one scenario to completion or budget exhaustion.

    Args:
        sc: Scenario to run

    Returns:
        SimulationResult with the trace and the final component states
    """
    recorder = TraceRecorder(sc.name)
    wire = _Wire()
    obc = ObcState.initial(sc.obc_config())
    slp = SlpState(config=sc.slp_config())
    fem = FemState.initial(sc.fem_mode_at_start, sc.faultload) if sc.topology is Topology.FEM else None
    via_fem = fem is not None

    def route_from_obc(msg: Message, now: Tick) -> None:
        if via_fem:
            wire.send(msg, Node.FEM, now)
        else:
            wire.send(replace(msg, segment=msg.segment.other()), Node.SLP, now)

    def route_from_slp(msg: Message, now: Tick) -> None:
        if via_fem:
            wire.send(msg, Node.FEM, now)
        else:
            wire.send(replace(msg, segment=msg.segment.other()), Node.OBC, now)

    def route_from_fem(msg: Message, now: Tick) -> None:
        wire.send(msg, Node.SLP if msg.from_master else Node.OBC, now)

    now = 0
    reason = "max_ticks"
    for now in range(sc.max_ticks):
        if via_fem:
            fem, out, events = fem_step(fem, None, now)
            recorder.extend(events)
            if out is not None:
                route_from_fem(out, now)

        delivery = wire.due(now)
        while delivery is not None:
            msg = delivery.message
            if delivery.target is Node.FEM:
                fem, out, events = fem_step(fem, msg, now)
                recorder.extend(events)
                if out is not None:
                    route_from_fem(out, now)
            else:
                recorder.record(make_event(now, EventSource.BUS, EventKind.MSG_FORWARDED,
                                           to=delivery.target.value, message=message_to_record(msg)))
                if delivery.target is Node.SLP:
                    slp, out, events = slp_step(slp, msg, now)
                    recorder.extend(events)
                    if out is not None:
                        route_from_slp(out, now)
                else:
                    obc, out, events = obc_step(obc, msg, now)
                    recorder.extend(events)
                    if out is not None:
                        route_from_obc(out, now)
            delivery = wire.due(now)

        obc, out, events = obc_step(obc, None, now)
        recorder.extend(events)
        if out is not None:
            route_from_obc(out, now)

        held = fem is not None and fem.held is not None
        if obc.finished and not len(wire) and not held:
            reason = "completed"
            break

    completed = obc.phase is ObcPhase.DONE
    if reason != "completed":
        logger.warning(f"Scenario {sc.name}: tick budget of {sc.max_ticks} exhausted in phase {obc.label}")

    end = {"reason": reason, "obc_phase": obc.label, "slp_mode": slp.mode.value, "in_flight": len(wire)}
    if fem is not None:
        end["counters"] = fem.counters.to_record()
    recorder.record(make_event(now, EventSource.BUS, EventKind.RUN_END, **end))
    return SimulationResult(trace=recorder.freeze(), obc=obc, slp=slp, fem=fem, completed=completed, ticks=now)


def run_scenario(sc: Scenario) -> Tuple[Trace, Verdict]:
    """
    Run a scenario and judge it.

    Returns:
        (trace, verdict)
    """
    result = simulate(sc)
    verdict = evaluate_oracles(result.trace, sc)
    logger.info(f"Scenario {sc.name}: {verdict.outcome.value} after {result.ticks + 1} tick(s)")
    return result.trace, verdict
