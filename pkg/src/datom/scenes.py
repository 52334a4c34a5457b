"""Bundled reference scenes and the builders that generate them.

The JSON files under ``scenes/`` are the committed fixtures; the builders
here regenerate them and tests check that both agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .lattice import CellPos, Configuration, ModuleState, dump_config, load_config

MOBILE_ID = 1

ARCH_GOAL = CellPos(6, 5, 2)
ARCH_START = CellPos(0, 0, 2)
ARCH_SIZE = 7
ARCH_BAND = (3, 4)  # rows i of the two-thick arch wall
ARCH_HOLE_J = 3
ARCH_HOLE_TOP = 3  # highest layer of the tunnel under the lintel
ARCH_TOP = 4  # layer of the lintel
ARCH_BLOCKER = CellPos(3, 3, 3)

TURN_PIVOT = CellPos(2, 2, 1)
TURN_START = CellPos(3, 2, 2)
TURN_GOAL = CellPos(3, 3, 2)


@dataclass(frozen=True)
class Scene:
    name: str
    path: Path
    goal: CellPos
    start: CellPos
    description: str

    def load(self) -> Configuration:
        config, _ = load_config(self.path)
        return config


def _assemble(mobile: CellPos, cells: list[CellPos]) -> Configuration:
    modules = [ModuleState(MOBILE_ID, mobile, role="mobile")]
    modules += [ModuleState(MOBILE_ID + 1 + n, c) for n, c in enumerate(cells)]
    return Configuration.from_modules(modules)


def arch_cells() -> list[CellPos]:
    """A 7x7x2 box under a two-thick wall pierced by a two-high tunnel."""
    n = ARCH_SIZE
    box = [CellPos(i, j, k) for k in range(2) for i in range(n) for j in range(n)]
    hole = {CellPos(i, ARCH_HOLE_J, k) for i in ARCH_BAND for k in (2, ARCH_HOLE_TOP)}
    wall = [
        CellPos(i, j, k)
        for k in (2, 3)
        for i in ARCH_BAND
        for j in range(n)
        if CellPos(i, j, k) not in hole
    ]
    lintel = [CellPos(ARCH_BAND[0], j, ARCH_TOP) for j in range(n)]
    return box + wall + lintel


def build_arch(blocked: bool = False) -> Configuration:
    cells = arch_cells()
    if blocked:
        cells.append(ARCH_BLOCKER)
    return _assemble(ARCH_START, cells)


def turn_cells(with_f: bool = False) -> list[CellPos]:
    """Two full layers and a partial third around a turn with four helpers.

    The mobile at TURN_START turns right around TURN_PIVOT on its +z piston;
    C, D, E and H are occupied, and with ``with_f`` the doubly deformed F
    cell is occupied too.
    """
    helpers = [CellPos(2, 2, 2), CellPos(2, 3, 2), CellPos(2, 1, 3), CellPos(2, 3, 3)]
    if with_f:
        helpers.append(CellPos(3, 2, 3))
    keep_free = {TURN_START, TURN_GOAL, *helpers[:2]}
    cells = [CellPos(i, j, k) for k in (0, 1) for i in range(5) for j in range(5)]
    cells += [CellPos(i, j, 2) for i in range(5) for j in range(5) if CellPos(i, j, 2) not in keep_free]
    return cells + helpers


def build_turn(with_f: bool = False) -> Configuration:
    return _assemble(TURN_START, turn_cells(with_f))


_BUILDERS = {
    "arch-a": (lambda: build_arch(False), ARCH_GOAL, ARCH_START, "7x7x2 box with an arch; the tunnel is open"),
    "arch-b": (lambda: build_arch(True), ARCH_GOAL, ARCH_START, "arch-a with one module blocking the tunnel"),
    "turn-helpers": (lambda: build_turn(False), TURN_GOAL, TURN_START, "turn right with helpers C, D, E and H"),
    "turn-double": (lambda: build_turn(True), TURN_GOAL, TURN_START, "turn-helpers plus a doubly deformed helper in F"),
}

SCENE_NAMES = tuple(_BUILDERS)


def scene_path(name: str) -> Path:
    return Path(str(resources.files("datom") / "scenes" / f"{name}.json"))


def get_scene(name: str) -> Scene:
    if name not in _BUILDERS:
        raise KeyError(f"unknown scene {name!r}; choose from {', '.join(SCENE_NAMES)}")
    _, goal, start, description = _BUILDERS[name]
    return Scene(name, scene_path(name), goal, start, description)


def build_scene(name: str) -> Configuration:
    return _BUILDERS[name][0]()


def scene_json(name: str) -> str:
    return dump_config(build_scene(name), [_BUILDERS[name][1]])


def write_scenes(directory: Path) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for name in SCENE_NAMES:
        (directory / f"{name}.json").write_text(scene_json(name))
