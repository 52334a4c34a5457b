"""Deterministic discrete-event simulation of gradient following.

Every module is an actor that only reacts to messages and to the end of its
own deformations. The mobile module repeatedly picks the best motion on the
distance field, asks the helper modules to deform, waits for all
acknowledgements, moves, and asks the helpers to release.

Events are ordered by ``(time, sequence number)`` so identical inputs give
byte-identical traces.
"""

from __future__ import annotations

import heapq
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Callable

from .geometry import AXIS_NAMES
from .gradient import DistanceField, Stuck, best_next, compute_field
from .lattice import CellPos, Configuration, connector_toward, is_connected
from .motion import MotionAction

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    pass


class Deadlock(SimulationError):
    pass


class Unreachable(SimulationError):
    pass


# Message kinds
DEFORM = "DeformMsg"
ACK_DEFORM = "AckDeform"
RELEASE = "ReleaseMsg"
ACK_RELEASE = "AckRelease"

# Trace record kinds
MESSAGE_SENT = "MessageSent"
MESSAGE_DELIVERED = "MessageDelivered"
DEFORMATION_START = "DeformationStart"
DEFORMATION_END = "DeformationEnd"
CONNECTOR_SWAP = "ConnectorSwap"
MOTION_COMPLETE = "MotionComplete"


@dataclass(frozen=True)
class SimParams:
    l_msg: int = 1
    t_def: int = 10
    t_move: int = 20
    seed: int = 0  # reserved for latency jitter; unused by the default schedule

    def __post_init__(self):
        for name in ("l_msg", "t_def", "t_move"):
            value = getattr(self, name)
            if not isinstance(value, int) or value <= 0:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class Message:
    kind: str
    src: int
    dst: int
    send_time: int
    deliver_time: int
    seq: int
    piston: int | None = None
    phase: str | None = None


def _cell(c: CellPos) -> list[int]:
    return [c.i, c.j, c.k]


@dataclass
class SimTrace:
    records: list[dict[str, Any]] = field(default_factory=list)

    def add(self, t: int, kind: str, module: int, detail: dict[str, Any]) -> None:
        self.records.append(
            {"t": t, "seq": len(self.records), "kind": kind, "module": module, "detail": detail}
        )

    def of_kind(self, kind: str) -> list[dict[str, Any]]:
        return [r for r in self.records if r["kind"] == kind]

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in self.records)

    def __len__(self) -> int:
        return len(self.records)


class _Kernel:
    """Event queue, message transport and trace shared by all actors."""

    def __init__(self, params: SimParams):
        self.params = params
        self.now = 0
        self._queue: list[tuple[int, int, Callable, tuple]] = []
        self._seq = 0
        self._msg_seq = 0
        self.trace = SimTrace()
        self.actors: dict[int, Any] = {}

    def schedule(self, delay: int, fn: Callable, *args) -> None:
        heapq.heappush(self._queue, (self.now + delay, self._seq, fn, args))
        self._seq += 1

    def send(self, kind: str, src: int, dst: int, piston: int | None = None, phase: str | None = None) -> None:
        msg = Message(kind, src, dst, self.now, self.now + self.params.l_msg, self._msg_seq, piston, phase)
        self._msg_seq += 1
        detail: dict[str, Any] = {"msg": kind, "dst": dst, "msg_seq": msg.seq}
        if piston is not None:
            detail["axis"] = AXIS_NAMES[piston]
        if phase is not None:
            detail["phase"] = phase
        detail["deliver"] = msg.deliver_time
        self.trace.add(self.now, MESSAGE_SENT, src, detail)
        self.schedule(self.params.l_msg, self._deliver, msg)

    def _deliver(self, msg: Message) -> None:
        self.trace.add(
            self.now, MESSAGE_DELIVERED, msg.dst, {"msg": msg.kind, "src": msg.src, "msg_seq": msg.seq}
        )
        self.actors[msg.dst].on_message(msg)

    def step(self) -> bool:
        if not self._queue:
            return False
        t, _, fn, args = heapq.heappop(self._queue)
        self.now = t
        fn(*args)
        return True


class ModuleActor:
    """A module that deforms on request and acknowledges when done."""

    def __init__(self, kernel: _Kernel, module_id: int):
        self.k = kernel
        self.id = module_id
        self.sender_mobile: int | None = None
        self.axis: int | None = None
        self.fraction = 0.0
        self.is_mobile = False

    def on_message(self, msg: Message) -> None:
        if msg.kind == DEFORM:
            self.sender_mobile = msg.src
            detail = {"axis": AXIS_NAMES[msg.piston], "phase": msg.phase}
            if self.axis is not None and self.axis != msg.piston:
                detail["releases"] = AXIS_NAMES[self.axis]
            self.k.trace.add(self.k.now, DEFORMATION_START, self.id, detail)
            self.axis = msg.piston
            self.k.schedule(self.k.params.t_def, self.on_deformation_end, msg.piston, msg.phase)
        elif msg.kind == RELEASE:
            self.sender_mobile = msg.src
            self.k.trace.add(
                self.k.now, DEFORMATION_START, self.id, {"axis": AXIS_NAMES[self.axis], "phase": "release"}
            )
            self.k.schedule(self.k.params.t_def, self.on_deformation_end, self.axis, "release")
        else:
            raise SimulationError(f"module {self.id} cannot handle {msg.kind}")

    def on_deformation_end(self, axis: int, phase: str) -> None:
        if phase == "release":
            self.axis = None
            self.fraction = 0.0
            reply = ACK_RELEASE
        else:
            self.fraction = 1.0
            reply = ACK_DEFORM
        self.k.trace.add(
            self.k.now, DEFORMATION_END, self.id, {"axis": AXIS_NAMES[axis], "phase": phase, "fraction": self.fraction}
        )
        self.k.send(reply, self.id, self.sender_mobile)


class MobileActor(ModuleActor):
    """The module following the gradient (handlers of the follow-gradient loop)."""

    def __init__(self, kernel: _Kernel, module_id: int, sim: "Simulation"):
        super().__init__(kernel, module_id)
        self.is_mobile = True
        self.sim = sim
        self.nb_waited_answers = 0
        self.next_pos: CellPos | None = None
        self.action: MotionAction | None = None
        self.stage = "idle"

    @property
    def position(self) -> CellPos:
        return self.sim.config.by_id(self.id).pos

    def follow_gradient(self) -> None:
        try:
            action = best_next(self.sim.config, self.position, self.sim.field)
        except Stuck as exc:
            raise Deadlock(str(exc)) from None
        self.action = action
        self.next_pos = action.goal
        self.nb_waited_answers = 0
        self.stage = "helpers"
        for h in action.helper_deformations:
            if h.phase == "second-half":
                continue
            self.k.send(DEFORM, self.id, h.module, h.axis, h.phase)
            self.nb_waited_answers += 1
        if self.nb_waited_answers == 0:
            self.start_motion()

    def on_message(self, msg: Message) -> None:
        if msg.kind in (ACK_DEFORM, ACK_RELEASE):
            self.nb_waited_answers -= 1
            if self.nb_waited_answers < 0:
                raise SimulationError("unexpected acknowledgement")
            if self.nb_waited_answers == 0:
                if self.stage == "helpers":
                    self.start_motion()
                elif self.stage == "midpoint":
                    self.finish_motion()
                elif self.stage == "release":
                    self.complete()
            return
        super().on_message(msg)

    def start_motion(self) -> None:
        # The motion itself is modelled as a deformation event of the mobile.
        a = self.action
        self.stage = "moving"
        self.k.trace.add(
            self.k.now,
            DEFORMATION_START,
            self.id,
            {
                "axis": AXIS_NAMES[a.axis],
                "phase": "motion",
                "rule": str(a.kind),
                "pivot": self.sim.config.get(a.pivot).id,
                "to": _cell(a.goal),
            },
        )
        self.k.schedule(self.k.params.t_move // 2, self.on_midpoint)

    def on_midpoint(self) -> None:
        a = self.action
        self.k.trace.add(
            self.k.now,
            CONNECTOR_SWAP,
            self.id,
            {
                "pivot": self.sim.config.get(a.pivot).id,
                "release": [connector_toward(a.pivot, a.mover), connector_toward(a.mover, a.pivot)],
                "attach": [connector_toward(a.pivot, a.goal), connector_toward(a.goal, a.pivot)],
            },
        )
        self.stage = "midpoint"
        self.nb_waited_answers = 0
        for h in a.helper_deformations:
            if h.phase == "second-half":
                self.k.send(DEFORM, self.id, h.module, h.axis, h.phase)
                self.nb_waited_answers += 1
        if self.nb_waited_answers == 0:
            self.finish_motion()

    def finish_motion(self) -> None:
        self.stage = "finishing"
        self.k.schedule(self.k.params.t_move - self.k.params.t_move // 2, self.on_deformation_end, self.action.axis, "motion")

    def on_deformation_end(self, axis: int, phase: str) -> None:
        if phase != "motion":
            return super().on_deformation_end(axis, phase)
        self.k.trace.add(self.k.now, DEFORMATION_END, self.id, {"axis": AXIS_NAMES[axis], "phase": "motion"})
        self.release_helpers()

    def release_helpers(self) -> None:
        """Ask every helper of the last motion to return to rest."""
        self.stage = "release"
        self.nb_waited_answers = 0
        seen = []
        for h in self.action.helper_deformations:
            if h.module not in seen:
                seen.append(h.module)
        for module in seen:
            self.k.send(RELEASE, self.id, module)
            self.nb_waited_answers += 1
        if self.nb_waited_answers == 0:
            self.complete()

    def complete(self) -> None:
        a = self.action
        self.sim.commit(a)
        self.k.trace.add(
            self.k.now,
            MOTION_COMPLETE,
            self.id,
            {"from": _cell(a.mover), "to": _cell(a.goal), "rule": str(a.kind), "helpers": len(a.helper_deformations)},
        )
        self.stage = "idle"
        if self.sim.field[self.position] != 0:
            self.follow_gradient()
        else:
            self.stage = "done"


class Simulation:
    def __init__(self, config: Configuration, goal: CellPos, mobile_id: int, params: SimParams | None = None):
        self.params = params or SimParams()
        self.goal = CellPos(*goal)
        self.config = config.at_rest()
        self.mobile_id = mobile_id
        try:
            mobile = self.config.by_id(mobile_id)
        except KeyError:
            raise SimulationError(f"no module with id {mobile_id}") from None
        self.field: DistanceField = compute_field(self.config.without(mobile.pos), self.goal)
        if mobile.pos not in self.field:
            raise Unreachable(f"module {mobile_id} at {mobile.pos} cannot reach {self.goal}")
        self.kernel = _Kernel(self.params)
        for mid in self.config.ids():
            if mid == mobile_id:
                self.kernel.actors[mid] = MobileActor(self.kernel, mid, self)
            else:
                self.kernel.actors[mid] = ModuleActor(self.kernel, mid)
        self.plan: list[MotionAction] = []

    @property
    def trace(self) -> SimTrace:
        return self.kernel.trace

    def commit(self, action: MotionAction) -> None:
        new = self.config.moved(action.mover, action.goal)
        if not is_connected(new):
            raise SimulationError(f"configuration disconnected after {action.describe()}")
        self.config = new
        self.plan.append(action)

    def run(self) -> tuple[SimTrace, Configuration]:
        mobile: MobileActor = self.kernel.actors[self.mobile_id]
        if self.field[mobile.position] != 0:
            self.kernel.schedule(0, mobile.follow_gradient)
        else:
            mobile.stage = "done"
        while self.kernel.step():
            pass
        if mobile.stage != "done":
            raise Deadlock(f"event queue drained with mobile in stage {mobile.stage!r}")
        log.debug("simulation finished at t=%d after %d motions", self.kernel.now, len(self.plan))
        return self.trace, self.config


def run(
    config: Configuration, goal: CellPos, mobile_id: int, params: SimParams | None = None
) -> tuple[SimTrace, Configuration]:
    """Move ``mobile_id`` to ``goal`` by gradient following; returns trace and final configuration."""
    return Simulation(config, goal, mobile_id, params).run()
