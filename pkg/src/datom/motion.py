"""Motion rules of a module turning around a latched pivot.

A rule is expressed in the frame ``(U, R, F)`` of the pivot ``A``: ``U`` is
the pivot's compressed piston axis, ``R = BA x U`` and ``F = U x R``. The
mover ``B`` starts at ``U - F``. Every rule lists the cells it constrains,
each with the status the occupant must satisfy.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable

import numpy as np

from .lattice import (
    CellPos,
    Configuration,
    Vec,
    connected_with_broken_links,
    from_scaled,
    neighbors,
    real,
    to_scaled,
    vec_add,
    vec_sub,
)

# Scaled piston axis vectors, same order as geometry.PISTON_AXES.
AXIS_VECS: tuple[Vec, ...] = (
    (0, 0, 1),
    (0, 0, -1),
    (1, 1, 0),
    (-1, 1, 0),
    (-1, -1, 0),
    (1, -1, 0),
)
_AXIS_INDEX = {v: i for i, v in enumerate(AXIS_VECS)}


class MotionKind(str, enum.Enum):
    TURN_LEFT = "TurnLeft"
    TURN_RIGHT = "TurnRight"
    GO_AHEAD = "GoAhead"

    def __str__(self) -> str:
        return self.value


KINDS = (MotionKind.TURN_LEFT, MotionKind.TURN_RIGHT, MotionKind.GO_AHEAD)
_INVERSE_KIND = {
    MotionKind.TURN_LEFT: MotionKind.TURN_RIGHT,
    MotionKind.TURN_RIGHT: MotionKind.TURN_LEFT,
    MotionKind.GO_AHEAD: MotionKind.GO_AHEAD,
}


class Status(str, enum.Enum):
    EMPTY = "empty"
    EMPTY_OR_DEFORMED = "empty|def"
    EMPTY_OR_DOUBLE_DEFORMED = "empty|def2"


@dataclass(frozen=True)
class CellRequirement:
    """One tuple of a rule: a cell relative to the pivot and its status.

    ``rel`` holds the ``(U, R, F)`` coefficients of the offset; ``axes`` holds
    the required piston directions as frame-symbolic names (``"-R"``, ``"F"``).
    """

    label: str
    rel: tuple[int, int, int]
    status: Status
    axes: tuple[str, ...] = ()


def _req(label, u, r, f, *axes):
    if not axes:
        status = Status.EMPTY
    elif len(axes) == 1:
        status = Status.EMPTY_OR_DEFORMED
    else:
        status = Status.EMPTY_OR_DOUBLE_DEFORMED
    return CellRequirement(label, (u, r, f), status, tuple(axes))


_TEMPLATES = {
    MotionKind.TURN_LEFT: (
        _req("Goal", 1, -1, 0),
        _req("C", 1, 0, 1, "-F"),
        _req("D", 1, 1, 0, "-R"),
        _req("E", 2, 1, -1, "-R"),
        _req("F", 2, -1, -1, "R", "F"),
        _req("J", 2, -1, 1, "-F"),
        _req("K", 2, 0, 0),
    ),
    MotionKind.TURN_RIGHT: (
        _req("Goal", 1, 1, 0),
        _req("C", 1, -1, 0, "R"),
        _req("D", 1, 0, 1, "-F"),
        _req("E", 2, -1, -1, "R"),
        _req("F", 2, 1, -1, "-R", "F"),
        _req("H", 2, 1, 1, "-F"),
        _req("K", 2, 0, 0),
    ),
    MotionKind.GO_AHEAD: (
        _req("Goal", 1, 0, 1),
        _req("C", 1, -1, 0, "R"),
        _req("D", 1, 1, 0, "-R"),
        _req("E", 2, -1, -1, "R"),
        _req("F", 2, 1, -1, "-R"),
        _req("H", 2, 1, 1, "-R"),
        _req("J", 2, -1, 1, "R"),
        _req("K", 2, 0, 0),
    ),
}


def rule_template(kind: MotionKind | str) -> list[CellRequirement]:
    return list(_TEMPLATES[MotionKind(kind)])


def mirror_requirement(req: CellRequirement) -> CellRequirement:
    """Image of a requirement under ``R -> -R``."""
    u, r, f = req.rel

    def flip(name: str) -> str:
        if name.lstrip("-") != "R":
            return name
        return name[1:] if name.startswith("-") else "-" + name

    return replace(req, rel=(u, -r, f), axes=tuple(flip(a) for a in req.axes))


@dataclass(frozen=True)
class MotionFrame:
    axis: int
    U: Vec
    R: Vec
    F: Vec

    def offset(self, u: int, r: int, f: int) -> Vec:
        U, R, F = self.U, self.R, self.F
        return (
            u * U[0] + r * R[0] + f * F[0],
            u * U[1] + r * R[1] + f * F[1],
            u * U[2] + r * R[2] + f * F[2],
        )

    def direction(self, name: str) -> int:
        """Piston axis index of a frame direction such as ``"-R"``."""
        sign = -1 if name.startswith("-") else 1
        v = {"U": self.U, "R": self.R, "F": self.F}[name.lstrip("-")]
        return _AXIS_INDEX[(sign * v[0], sign * v[1], sign * v[2])]


def motion_frame(pivot: CellPos, mover: CellPos, axis: int) -> MotionFrame | None:
    """Frame of a motion of ``mover`` around ``pivot`` compressing ``axis``.

    Returns None when the mover is not on the square of cells surrounding
    that piston axis.
    """
    return _frame_from_offset(vec_sub(to_scaled(mover), to_scaled(pivot)), axis)


@lru_cache(maxsize=None)
def _frame_from_offset(offset: Vec, axis: int) -> MotionFrame | None:
    U = AXIS_VECS[axis]
    F = vec_sub(U, offset)
    if F not in _AXIS_INDEX:
        return None
    u_real, f_real = real(U), real(F)
    if abs(float(u_real @ f_real)) > 1e-9:
        return None
    r_real = np.cross(f_real, u_real) / np.sqrt(2.0)  # BA x U = F x U
    R = (int(round(r_real[0])), int(round(r_real[1])), int(round(r_real[2] / np.sqrt(2.0))))
    return MotionFrame(axis, U, R, F)


@lru_cache(maxsize=None)
def _action_shape(parity: int, frame: MotionFrame, kind: MotionKind):
    # Cell deltas (di, dj, dk) from a pivot of the given plane parity.
    origin = CellPos(0, 0, parity)
    base = to_scaled(origin)
    reqs = _TEMPLATES[kind]
    deltas = []
    for q in reqs:
        c = from_scaled(vec_add(base, frame.offset(*q.rel)))
        deltas.append((c[0], c[1], c[2] - parity))
    axis_ids = tuple(tuple(frame.direction(a) for a in q.axes) for q in reqs)
    return tuple(deltas), axis_ids


@dataclass(frozen=True)
class HelperDeformation:
    module: int
    axis: int
    phase: str  # "whole" | "first-half" | "second-half"
    cell: CellPos | None = None
    label: str = ""


@dataclass(frozen=True)
class MotionAction:
    kind: MotionKind
    pivot: CellPos
    mover: CellPos
    frame: MotionFrame
    goal: CellPos
    requirements: tuple[CellRequirement, ...]
    cells: tuple[CellPos, ...]
    axis_ids: tuple[tuple[int, ...], ...]
    helper_deformations: tuple[HelperDeformation, ...] = ()

    @property
    def axis(self) -> int:
        return self.frame.axis

    def describe(self) -> str:
        return f"{self.kind} {self.mover}->{self.goal} pivot {self.pivot} axis {self.axis}"


def make_action(kind: MotionKind, pivot: CellPos, mover: CellPos, frame: MotionFrame) -> MotionAction:
    deltas, axis_ids = _action_shape(pivot[2] % 2, frame, kind)
    i, j, k = pivot
    cells = tuple(CellPos(i + a, j + b, k + c) for a, b, c in deltas)
    return MotionAction(kind, pivot, mover, frame, cells[0], _TEMPLATES[kind], cells, axis_ids)


def candidate_actions(config: Configuration, mover: CellPos) -> list[MotionAction]:
    """All rule instances for ``mover``, valid or not, in canonical order.

    Order: pivot cell, then piston axis index, then rule kind.
    """
    out = []
    for pivot in sorted(q for q in neighbors(mover) if q in config.modules):
        for axis in range(6):
            frame = motion_frame(pivot, mover, axis)
            if frame is None:
                continue
            for kind in KINDS:
                out.append(make_action(kind, pivot, mover, frame))
    return out


@dataclass(frozen=True)
class Verdict:
    valid: bool
    reason: str | None = None
    helpers: tuple[HelperDeformation, ...] = ()

    def __bool__(self) -> bool:
        return self.valid


class InvalidAction(ValueError):
    pass


def validate(config: Configuration, action: MotionAction) -> Verdict:
    """Check every requirement of ``action`` against ``config``.

    Occupied optional cells become helper deformations. The action is also
    rejected when removing the mover, or compressing the pivot and helpers,
    would split the remaining modules (reasons ``"mover-articulation"`` and
    ``"helper-detach"``).
    """
    modules = config.modules
    if action.mover not in modules:
        return Verdict(False, "mover-missing")
    helpers: list[HelperDeformation] = []
    for req, cell, axes in zip(action.requirements, action.cells, action.axis_ids):
        occupant = modules.get(cell)
        if occupant is None:
            continue
        if req.status is Status.EMPTY:
            return Verdict(False, req.label)
        if occupant.deformation is not None and occupant.deformation.axis != axes[0]:
            return Verdict(False, req.label)
        if req.status is Status.EMPTY_OR_DEFORMED:
            helpers.append(HelperDeformation(occupant.id, axes[0], "whole", cell, req.label))
        else:
            helpers.append(HelperDeformation(occupant.id, axes[0], "first-half", cell, req.label))
            helpers.append(HelperDeformation(occupant.id, axes[1], "second-half", cell, req.label))

    if not config.connected_without(action.mover):
        return Verdict(False, "mover-articulation")

    if helpers:
        for phase in ("first-half", "second-half"):
            deforming = {action.pivot: action.axis}
            for h in helpers:
                if h.phase == "whole" or h.phase == phase:
                    deforming[h.cell] = h.axis
            if not connected_with_broken_links(config, deforming, exclude=action.mover):
                return Verdict(False, "helper-detach")
            if not any(h.phase != "whole" for h in helpers):
                break
    return Verdict(True, None, tuple(helpers))


def valid_actions(config: Configuration, mover: CellPos) -> list[MotionAction]:
    """Valid actions for ``mover`` with their helper deformations filled in."""
    out = []
    for action in candidate_actions(config, mover):
        verdict = validate(config, action)
        if verdict:
            out.append(replace(action, helper_deformations=verdict.helpers))
    return out


def apply(config: Configuration, action: MotionAction) -> Configuration:
    verdict = validate(config, action)
    if not verdict:
        raise InvalidAction(f"{action.describe()}: {verdict.reason}")
    return config.moved(action.mover, action.goal).at_rest()


def inverse(action: MotionAction) -> MotionAction:
    """The same pivot and axis, carrying the mover back to its start cell."""
    frame = motion_frame(action.pivot, action.goal, action.axis)
    assert frame is not None
    back = make_action(_INVERSE_KIND[action.kind], action.pivot, action.goal, frame)
    assert back.goal == action.mover, "inverse does not return to the start cell"
    return back


def reachable_goals(actions: Iterable[MotionAction]) -> list[CellPos]:
    seen = []
    for a in actions:
        if a.goal not in seen:
            seen.append(a.goal)
    return seen
