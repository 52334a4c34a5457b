"""FCC lattice cells, neighbourhoods and module configurations.

Cells are integer triples ``(i, j, k)``: ``k`` indexes square-lattice planes
stacked along z, odd planes being shifted by ``(r, r)``. Internally most
arithmetic happens in *scaled* integer coordinates ``(X, Y, Z)`` whose world
position is ``(r X, r Y, sqrt(2) r Z)``; every lattice vector, piston axis and
motion frame vector is integral there.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from .geometry import CONNECTOR_DIRECTIONS, PISTON_GROUPS

SQRT2 = math.sqrt(2.0)


class CellPos(NamedTuple):
    i: int
    j: int
    k: int

    def __str__(self) -> str:
        return f"({self.i},{self.j},{self.k})"


class LatticeError(ValueError):
    pass


class NotANeighbor(LatticeError):
    pass


class ConfigError(LatticeError):
    """Invalid configuration: duplicate cell, disconnected, bad record."""


Vec = tuple[int, int, int]


def to_scaled(pos: CellPos) -> Vec:
    p = pos[2] % 2
    return (2 * pos[0] + p, 2 * pos[1] + p, pos[2])


def from_scaled(v: Vec) -> CellPos:
    x, y, z = v
    p = z % 2
    if (x - p) % 2 or (y - p) % 2:
        raise LatticeError(f"scaled vector {v} is not a lattice cell")
    return CellPos((x - p) // 2, (y - p) // 2, z)


def vec_add(a: Vec, b: Vec) -> Vec:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def vec_sub(a: Vec, b: Vec) -> Vec:
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def vec_scale(a: Vec, s: int) -> Vec:
    return (a[0] * s, a[1] * s, a[2] * s)


def real(v: Vec) -> np.ndarray:
    """World vector (in units of r) of a scaled integer vector."""
    return np.array([v[0], v[1], SQRT2 * v[2]], dtype=float)


def world_position(pos: CellPos, r: float = 1.0) -> np.ndarray:
    return r * real(to_scaled(pos))


# Neighbour offsets as (di, dj, dk), 4 in-plane then upper then lower.
_INPLANE = ((1, 0, 0), (0, 1, 0), (-1, 0, 0), (0, -1, 0))
_EVEN_UP = ((0, 0, 1), (-1, 0, 1), (0, -1, 1), (-1, -1, 1))
_ODD_UP = ((0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 1))
NEIGHBOR_OFFSETS = {
    0: _INPLANE + _EVEN_UP + tuple((a, b, -c) for a, b, c in _EVEN_UP),
    1: _INPLANE + _ODD_UP + tuple((a, b, -c) for a, b, c in _ODD_UP),
}

# Scaled offsets of the 12 connectors: 2 P_i / r, with z divided by sqrt(2).
CONNECTOR_VECS: tuple[Vec, ...] = tuple(
    (int(round(2 * d[0])), int(round(2 * d[1])), int(round(SQRT2 * d[2])))
    for d in CONNECTOR_DIRECTIONS
)
_CONNECTOR_INDEX = {v: i for i, v in enumerate(CONNECTOR_VECS)}


@lru_cache(maxsize=1 << 16)
def neighbors(pos: CellPos) -> tuple[CellPos, ...]:
    i, j, k = pos
    return tuple(CellPos(i + a, j + b, k + c) for a, b, c in NEIGHBOR_OFFSETS[k % 2])


def connector_index(vec: Vec) -> int | None:
    """Connector index pointing along a scaled neighbour offset, if any."""
    return _CONNECTOR_INDEX.get(vec)


def connector_toward(pos: CellPos, nbr: CellPos, r: float = 1.0) -> int:
    idx = connector_index(vec_sub(to_scaled(nbr), to_scaled(pos)))
    if idx is None:
        raise NotANeighbor(f"{nbr} is not adjacent to {pos}")
    return idx


def are_adjacent(p: CellPos, q: CellPos) -> bool:
    return connector_index(vec_sub(to_scaled(q), to_scaled(p))) is not None


@dataclass(frozen=True)
class Deformation:
    axis: int
    fraction: float = 1.0


@dataclass(frozen=True)
class ModuleState:
    id: int
    pos: CellPos
    deformation: Deformation | None = None
    role: str = "fixed"

    def at_rest(self) -> "ModuleState":
        return self if self.deformation is None else replace(self, deformation=None)


ROLES = ("fixed", "mobile", "goal-marker")


@dataclass(frozen=True)
class Configuration:
    """Occupied cells of the lattice, treated as an immutable value.

    Mutating helpers return new configurations; the underlying dict is never
    modified after construction.
    """

    modules: Mapping[CellPos, ModuleState]
    radius: float = 1.0
    _by_id: dict = field(default=None, repr=False, compare=False)
    _memo: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        by_id = {}
        for pos, m in self.modules.items():
            if m.pos != pos:
                raise ConfigError(f"module {m.id} stored at {pos} but records {m.pos}")
            if m.id in by_id:
                raise ConfigError(f"duplicate module id {m.id}")
            by_id[m.id] = m
        object.__setattr__(self, "_by_id", by_id)
        object.__setattr__(self, "_memo", {})

    @classmethod
    def from_modules(cls, modules: Iterable[ModuleState], radius: float = 1.0) -> "Configuration":
        cells: dict[CellPos, ModuleState] = {}
        for m in modules:
            pos = CellPos(*m.pos)
            if pos in cells:
                raise ConfigError(f"cell {pos} occupied twice")
            cells[pos] = replace(m, pos=pos)
        return cls(cells, radius)

    @classmethod
    def from_cells(cls, cells: Iterable[Iterable[int]], radius: float = 1.0, first_id: int = 1) -> "Configuration":
        return cls.from_modules(
            (ModuleState(first_id + n, CellPos(*c)) for n, c in enumerate(cells)), radius
        )

    def __len__(self) -> int:
        return len(self.modules)

    def __contains__(self, pos) -> bool:
        return pos in self.modules

    def __iter__(self) -> Iterator[CellPos]:
        return iter(self.modules)

    def get(self, pos: CellPos) -> ModuleState | None:
        return self.modules.get(pos)

    def by_id(self, module_id: int) -> ModuleState:
        return self._by_id[module_id]

    def connected_without(self, cell: CellPos | None) -> bool:
        """Whether the other modules stay connected once ``cell`` is vacated."""
        key = ("without", cell)
        if key not in self._memo:
            rest = [p for p in self.modules if p != cell]
            self._memo[key] = (
                _bfs_count(self.modules, rest[0], exclude=cell) == len(rest) if rest else True
            )
        return self._memo[key]

    def ids(self) -> list[int]:
        return sorted(self._by_id)

    def cells(self) -> list[CellPos]:
        return sorted(self.modules)

    def with_module(self, module: ModuleState) -> "Configuration":
        if module.pos in self.modules:
            raise ConfigError(f"cell {module.pos} already occupied")
        cells = dict(self.modules)
        cells[module.pos] = module
        return Configuration(cells, self.radius)

    def without(self, pos: CellPos) -> "Configuration":
        cells = dict(self.modules)
        del cells[pos]
        return Configuration(cells, self.radius)

    def moved(self, src: CellPos, dst: CellPos) -> "Configuration":
        if dst in self.modules:
            raise ConfigError(f"cell {dst} already occupied")
        cells = dict(self.modules)
        m = cells.pop(src)
        cells[dst] = replace(m, pos=dst)
        return Configuration(cells, self.radius)

    def with_deformation(self, pos: CellPos, deformation: Deformation | None) -> "Configuration":
        cells = dict(self.modules)
        cells[pos] = replace(cells[pos], deformation=deformation)
        return Configuration(cells, self.radius)

    def at_rest(self) -> "Configuration":
        return Configuration({p: m.at_rest() for p, m in self.modules.items()}, self.radius)

    def without_role(self, role: str) -> "Configuration":
        return Configuration(
            {p: m for p, m in self.modules.items() if m.role != role}, self.radius
        )


def components(cells: Iterable[CellPos]) -> list[set[CellPos]]:
    remaining = set(cells)
    out = []
    while remaining:
        start = min(remaining)
        seen = {start}
        queue = deque([start])
        while queue:
            p = queue.popleft()
            for q in neighbors(p):
                if q in remaining and q not in seen:
                    seen.add(q)
                    queue.append(q)
        remaining -= seen
        out.append(seen)
    return out


def is_connected(config: Configuration | Iterable[CellPos]) -> bool:
    cells = config.modules if isinstance(config, Configuration) else set(config)
    if not cells:
        return True
    start = next(iter(cells))
    seen = {start}
    stack = [start]
    while stack:
        p = stack.pop()
        for q in neighbors(p):
            if q in cells and q not in seen:
                seen.add(q)
                stack.append(q)
    return len(seen) == len(cells)


def _bfs_count(cells, start, exclude=None) -> int:
    seen = {start}
    stack = [start]
    while stack:
        p = stack.pop()
        for q in neighbors(p):
            if q in cells and q != exclude and q not in seen:
                seen.add(q)
                stack.append(q)
    return len(seen)


def connected_with_broken_links(
    config: Configuration, deforming: Mapping[CellPos, int], exclude: CellPos | None = None
) -> bool:
    """Connectivity when deformed modules lose the links of their piston group.

    ``deforming`` maps a cell to the piston axis it compresses. A link between
    two adjacent modules is lost if the connector on either side belongs to
    the compressed group of its module. ``exclude`` is left out of the graph.
    """
    if not config.connected_without(exclude):
        return False
    cells = config.modules
    blocked = set()
    ends = set()
    for p, ax in deforming.items():
        if p not in cells or p == exclude:
            continue
        nbrs = _ordered_neighbors(p)
        for idx in PISTON_GROUPS[ax]:
            q = nbrs[idx]
            if q in cells and q != exclude:
                blocked.add((p, q))
                blocked.add((q, p))
                ends.add(p)
                ends.add(q)
    if not ends:
        return True
    # The graph was connected before the links broke, so it stays connected
    # iff the endpoints of every broken link can still reach each other.
    start = min(ends)
    remaining = set(ends)
    remaining.discard(start)
    seen = {start}
    stack = [start]
    while stack:
        p = stack.pop()
        for q in neighbors(p):
            if q in cells and q != exclude and q not in seen and (p, q) not in blocked:
                seen.add(q)
                remaining.discard(q)
                if not remaining:
                    return True
                stack.append(q)
    return not remaining


@lru_cache(maxsize=1 << 16)
def _ordered_neighbors(pos: CellPos) -> tuple[CellPos, ...]:
    """Neighbours indexed by connector number."""
    base = to_scaled(pos)
    return tuple(from_scaled(vec_add(base, v)) for v in CONNECTOR_VECS)


def neighbor_by_connector(pos: CellPos, idx: int) -> CellPos:
    return _ordered_neighbors(pos)[idx]


def free_surface_cells(config: Configuration) -> set[CellPos]:
    out = set()
    for p in config.modules:
        for q in neighbors(p):
            if q not in config.modules:
                out.add(q)
    return out


# -- JSON configuration files ----------------------------------------------


def parse_cell(text: str) -> CellPos:
    parts = [int(x) for x in text.replace("(", "").replace(")", "").split(",")]
    if len(parts) != 3:
        raise ValueError(f"expected i,j,k, got {text!r}")
    return CellPos(*parts)


def config_from_dict(data: dict, check_connected: bool = True) -> tuple[Configuration, list[CellPos]]:
    """Build a configuration from its JSON form.

    Returns the configuration and the cells of any ``goal-marker`` entries,
    which are not modules and do not occupy cells.
    """
    try:
        radius = float(data.get("radius", 1.0))
        records = data["modules"]
    except (KeyError, TypeError, AttributeError) as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    modules = []
    markers = []
    for rec in records:
        role = rec.get("role", "fixed")
        if role not in ROLES:
            raise ConfigError(f"unknown role {role!r}")
        pos = CellPos(*(int(x) for x in rec["pos"]))
        if role == "goal-marker":
            markers.append(pos)
            continue
        deformation = None
        if rec.get("deformation"):
            d = rec["deformation"]
            deformation = Deformation(int(d["axis"]), float(d.get("fraction", 1.0)))
        modules.append(ModuleState(int(rec["id"]), pos, deformation, role))
    config = Configuration.from_modules(modules, radius)
    if check_connected and not is_connected(config):
        raise ConfigError("configuration is not connected")
    return config, markers


def config_to_dict(config: Configuration, markers: Iterable[CellPos] = ()) -> dict:
    records = []
    for m in sorted(config.modules.values(), key=lambda m: m.id):
        rec: dict = {"id": m.id, "pos": list(m.pos)}
        if m.role != "fixed":
            rec["role"] = m.role
        if m.deformation is not None:
            rec["deformation"] = {"axis": m.deformation.axis, "fraction": m.deformation.fraction}
        records.append(rec)
    for n, pos in enumerate(markers):
        records.append({"id": 0, "pos": list(pos), "role": "goal-marker"})
    return {"radius": config.radius, "modules": records}


def load_config(path: str | Path, check_connected: bool = True) -> tuple[Configuration, list[CellPos]]:
    with open(path) as fh:
        return config_from_dict(json.load(fh), check_connected)


def dump_config(config: Configuration, markers: Iterable[CellPos] = ()) -> str:
    return json.dumps(config_to_dict(config, markers), indent=1) + "\n"
