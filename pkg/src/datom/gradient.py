"""Motion-count distance field towards a goal cell, and greedy descent on it."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterator

from .lattice import CellPos, Configuration, ModuleState, neighbors
from .motion import MotionAction, valid_actions

VIRTUAL_ID = 0

#: Colour of each distance in the rendered field views.
DISTANCE_COLORS = (
    "red",
    "orange",
    "yellow",
    "green",
    "blue",
    "cyan",
    "pink",
    "grey",
    "salmon",
    "white",
)


class GradientError(RuntimeError):
    pass


class GoalNotOnSurface(GradientError):
    pass


class Stuck(GradientError):
    pass


@dataclass
class DistanceField:
    goal: CellPos
    dist: dict[CellPos, int] = field(default_factory=dict)

    def __contains__(self, cell) -> bool:
        return cell in self.dist

    def __getitem__(self, cell: CellPos) -> int:
        return self.dist[cell]

    def __len__(self) -> int:
        return len(self.dist)

    def __iter__(self) -> Iterator[CellPos]:
        return iter(self.dist)

    def get(self, cell: CellPos, default=None):
        return self.dist.get(cell, default)

    def rows(self) -> list[tuple[int, int, int, int]]:
        return [(c.i, c.j, c.k, d) for c, d in sorted(self.dist.items())]

    def to_csv(self) -> str:
        lines = ["i,j,k,dist"]
        lines += [f"{i},{j},{k},{d}" for i, j, k, d in self.rows()]
        return "\n".join(lines) + "\n"


def with_virtual_mover(config: Configuration, cell: CellPos) -> Configuration:
    """``config`` plus a placeholder module at ``cell`` (if it is free)."""
    if cell in config.modules:
        return config
    return config.with_module(ModuleState(VIRTUAL_ID, cell, role="virtual"))


def compute_field(config: Configuration, goal: CellPos) -> DistanceField:
    """Breadth-first motion distances from every reachable free cell to ``goal``.

    Each cell is expanded by placing a virtual module on it and enumerating
    its valid motions; the real configuration is never modified.
    """
    goal = CellPos(*goal)
    if goal in config.modules or not any(q in config.modules for q in neighbors(goal)):
        raise GoalNotOnSurface(f"goal {goal} is not a free cell on the surface")
    dist = {goal: 0}
    queue = deque([goal])
    while queue:
        cell = queue.popleft()
        probe = with_virtual_mover(config, cell)
        for action in valid_actions(probe, cell):
            if action.goal not in dist:
                dist[action.goal] = dist[cell] + 1
                queue.append(action.goal)
    return DistanceField(goal, dist)


def best_next(config: Configuration, start: CellPos, field: DistanceField) -> MotionAction:
    """The first valid action (canonical order) reaching the lowest distance."""
    start = CellPos(*start)
    if start not in field:
        raise Stuck(f"{start} is not in the distance field")
    here = field[start]
    probe = with_virtual_mover(config, start)
    best = None
    dmin = None
    for action in valid_actions(probe, start):
        d = field.get(action.goal)
        if d is not None and (dmin is None or d < dmin):
            best, dmin = action, d
    if best is None or dmin >= here:
        raise Stuck(f"no valid action from {start} decreases distance {here}")
    return best


def descend(config: Configuration, start: CellPos, field: DistanceField) -> list[MotionAction]:
    """Greedy plan from ``start`` to the field goal.

    Only the mover changes cell along the plan, so the other modules are
    taken from ``config`` unchanged.
    """
    start = CellPos(*start)
    if start in config.modules:
        mover = config.modules[start]
        config = config.without(start)
    else:
        mover = ModuleState(VIRTUAL_ID, start, role="virtual")
    plan = []
    cell = start
    while field[cell] != 0:
        action = best_next(config.with_module(replace(mover, pos=cell)), cell, field)
        plan.append(action)
        cell = action.goal
    return plan
