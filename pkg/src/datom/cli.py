"""Command-line entry point: ``datom <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 bad configuration, 3 goal not on
the surface, 4 plan start unreachable, 5 simulation start unreachable,
6 element thickness too large.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .geometry import AXIS_NAMES, ThicknessTooLarge, derive_params
from .gradient import DISTANCE_COLORS, GoalNotOnSurface, compute_field, descend
from .lattice import CellPos, Configuration, dump_config, free_surface_cells, load_config, parse_cell
from .motion import MotionAction
from .scenes import SCENE_NAMES, get_scene
from .simkernel import SimParams, Unreachable, run

EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_GOAL = 3
EXIT_PLAN_UNREACHABLE = 4
EXIT_SIM_UNREACHABLE = 5
EXIT_THICKNESS = 6

#: Render glyph of a module compressed along each piston axis.
AXIS_GLYPHS = {0: "+", 1: "-", 2: ">", 3: "^", 4: "<", 5: "v"}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cell_arg(text: str) -> CellPos:
    try:
        return parse_cell(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


class _Inputs:
    """Configuration, goal and start resolved from ``--config``/``--scene`` and flags."""

    def __init__(self, args):
        scene = None
        if getattr(args, "scene", None):
            scene = get_scene(args.scene)
            path = scene.path
        elif getattr(args, "config", None):
            path = Path(args.config)
        else:
            raise CliError("one of --config or --scene is required", EXIT_USAGE)
        try:
            self.config, markers = load_config(path)
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise CliError(f"cannot load {path}: {exc}", EXIT_CONFIG) from None
        self.goal = getattr(args, "goal", None)
        if self.goal is None:
            self.goal = scene.goal if scene else (markers[0] if markers else None)
        mobile_id = getattr(args, "mobile", None)
        if mobile_id is None:
            mobiles = [m.id for m in self.config.modules.values() if m.role == "mobile"]
            mobile_id = mobiles[0] if mobiles else None
        self.mobile_id = mobile_id
        self.start = getattr(args, "start", None)
        if self.start is None and mobile_id is not None:
            try:
                self.start = self.config.by_id(mobile_id).pos
            except KeyError:
                raise CliError(f"no module with id {mobile_id}", EXIT_CONFIG) from None

    def require_goal(self) -> CellPos:
        if self.goal is None:
            raise CliError("no goal: pass --goal or add a goal-marker to the configuration", EXIT_USAGE)
        return self.goal

    def static(self) -> Configuration:
        """The configuration without the module that is going to move."""
        if self.start is not None and self.start in self.config:
            return self.config.without(self.start)
        return self.config


def _field(config: Configuration, goal: CellPos):
    try:
        return compute_field(config, goal)
    except GoalNotOnSurface as exc:
        raise CliError(str(exc), EXIT_GOAL) from None


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_geometry(args) -> int:
    try:
        params = derive_params(args.radius, args.thickness, outward_offset=args.outward_offset)
    except ThicknessTooLarge as exc:
        raise CliError(str(exc), EXIT_THICKNESS) from None
    for key, value in params.as_dict().items():
        print(f"{key}={value:.10g}")
    print(f"outward_offset={str(params.outward_offset).lower()}")
    return 0


def cmd_field(args) -> int:
    inputs = _Inputs(args)
    field = _field(inputs.static(), inputs.require_goal())
    csv = field.to_csv()
    if args.csv:
        Path(args.csv).write_text(csv)
        print(f"{len(field)} cells, max distance {max(field.dist.values())}", file=sys.stderr)
    else:
        sys.stdout.write(csv)
    return 0


def action_record(step: int, action: MotionAction, config: Configuration, dist: int) -> dict:
    helpers = [
        {"module": h.module, "cell": list(h.cell), "label": h.label, "axis": AXIS_NAMES[h.axis], "phase": h.phase}
        for h in action.helper_deformations
    ]
    return {
        "step": step,
        "rule": str(action.kind),
        "from": list(action.mover),
        "to": list(action.goal),
        "pivot": list(action.pivot),
        "pivot_module": config.get(action.pivot).id,
        "axis": AXIS_NAMES[action.axis],
        "dist": dist,
        "helpers": helpers,
    }


def cmd_plan(args) -> int:
    inputs = _Inputs(args)
    goal = inputs.require_goal()
    if inputs.start is None:
        raise CliError("no start: pass --start or mark a module as mobile", EXIT_USAGE)
    static = inputs.static()
    field = _field(static, goal)
    if inputs.start not in field:
        raise CliError(f"start {inputs.start} cannot reach {goal}", EXIT_PLAN_UNREACHABLE)
    plan = descend(inputs.config, inputs.start, field)
    lines = [
        json.dumps(action_record(n + 1, a, static, field[a.goal]), separators=(",", ":")) + "\n"
        for n, a in enumerate(plan)
    ]
    _write(None, "".join(lines))
    return 0


def cmd_simulate(args) -> int:
    inputs = _Inputs(args)
    goal = inputs.require_goal()
    if inputs.mobile_id is None:
        raise CliError("no mobile: pass --mobile or mark a module as mobile", EXIT_USAGE)
    params = SimParams(args.lmsg, args.tdef, args.tmove, args.seed)
    try:
        trace, final = run(inputs.config, goal, inputs.mobile_id, params)
    except GoalNotOnSurface as exc:
        raise CliError(str(exc), EXIT_GOAL) from None
    except Unreachable as exc:
        raise CliError(str(exc), EXIT_SIM_UNREACHABLE) from None
    _write(args.trace, trace.to_jsonl())
    if args.out:
        Path(args.out).write_text(dump_config(final))
    moves = len(trace.of_kind("MotionComplete"))
    print(f"module {inputs.mobile_id} at {final.by_id(inputs.mobile_id).pos} after {moves} motions", file=sys.stderr)
    return 0


def render_layer(config: Configuration, layer: int, goal: CellPos | None = None, mobile_id: int | None = None) -> str:
    """ASCII view of one layer; rows are j (top = highest), columns are i."""
    cells = list(config.modules) + ([goal] if goal is not None else [])
    if cells:
        i_lo, i_hi = min(c.i for c in cells), max(c.i for c in cells)
        j_lo, j_hi = min(c.j for c in cells), max(c.j for c in cells)
    else:
        i_lo = i_hi = j_lo = j_hi = 0
    lines = [f"layer k={layer}  i={i_lo}..{i_hi}  j={j_lo}..{j_hi}"]
    for j in range(j_hi, j_lo - 1, -1):
        row = []
        for i in range(i_lo, i_hi + 1):
            cell = CellPos(i, j, layer)
            m = config.get(cell)
            if m is None:
                row.append("G" if cell == goal else ".")
            elif m.deformation is not None and m.deformation.fraction > 0:
                row.append(AXIS_GLYPHS[m.deformation.axis])
            elif m.role == "mobile" or m.id == mobile_id:
                row.append("@")
            else:
                row.append("#")
        lines.append(f"{j:>3} " + "".join(row))
    return "\n".join(lines) + "\n"


def cmd_render(args) -> int:
    inputs = _Inputs(args)
    _write(None, render_layer(inputs.config, args.layer, inputs.goal, inputs.mobile_id))
    return 0


def cmd_surface(args) -> int:
    """Which free surface cells can reach the goal."""
    inputs = _Inputs(args)
    static = inputs.static()
    field = _field(static, inputs.require_goal())
    surface = sorted(free_surface_cells(static))
    unreachable = [c for c in surface if c not in field]
    reached = len(surface) - len(unreachable)
    fraction = reached / len(surface) if surface else 1.0
    print(f"surface_cells={len(surface)}")
    print(f"reachable={reached}")
    print(f"unreachable={len(unreachable)}")
    print(f"reachable_fraction={fraction:.6f}")
    print(f"max_distance={max(field.dist.values())}")
    for c in unreachable:
        print(f"unreachable {c.i},{c.j},{c.k}")
    return 0


def cmd_scenes(args) -> int:
    for name in SCENE_NAMES:
        s = get_scene(name)
        print(f"{name}\tgoal={s.goal.i},{s.goal.j},{s.goal.k}\tstart={s.start.i},{s.start.j},{s.start.k}\t{s.description}")
    return 0


def cmd_colors(args) -> int:
    for d, color in enumerate(DISTANCE_COLORS):
        print(f"{d}\t{color}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="datom", description="Deformable-module lattice kernel.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(p, goal=True, start=False, mobile=False):
        src = p.add_mutually_exclusive_group()
        src.add_argument("--config", metavar="PATH", help="configuration JSON file")
        src.add_argument("--scene", choices=SCENE_NAMES, help="bundled scene")
        if goal:
            p.add_argument("--goal", type=_cell_arg, metavar="i,j,k")
        if start:
            p.add_argument("--start", type=_cell_arg, metavar="i,j,k")
        if mobile:
            p.add_argument("--mobile", type=int, metavar="ID")
        return p

    p = sub.add_parser("geometry", help="derived module dimensions")
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--thickness", type=float, default=0.0)
    p.add_argument("--outward-offset", action="store_true", help="use r' = r + t/2 for thick elements")
    p.set_defaults(func=cmd_geometry)

    p = with_config(sub.add_parser("field", help="distance field as CSV"), start=True)
    p.add_argument("--csv", metavar="PATH")
    p.set_defaults(func=cmd_field)

    p = with_config(sub.add_parser("plan", help="greedy descent as JSONL"), start=True, mobile=True)
    p.set_defaults(func=cmd_plan)

    p = with_config(sub.add_parser("simulate", help="message-passing simulation"), mobile=True)
    p.add_argument("--lmsg", type=_positive, default=1)
    p.add_argument("--tdef", type=_positive, default=10)
    p.add_argument("--tmove", type=_positive, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trace", metavar="PATH", help="trace JSONL (default: stdout)")
    p.add_argument("--out", metavar="PATH", help="final configuration JSON")
    p.set_defaults(func=cmd_simulate)

    p = with_config(sub.add_parser("render", help="ASCII view of one layer"), mobile=True)
    p.add_argument("--layer", "-k", type=int, default=0)
    p.set_defaults(func=cmd_render)

    p = with_config(sub.add_parser("surface", help="reachability of every surface cell"), start=True, mobile=True)
    p.set_defaults(func=cmd_surface)

    sub.add_parser("scenes", help="list bundled scenes").set_defaults(func=cmd_scenes)
    sub.add_parser("colors", help="distance colour table").set_defaults(func=cmd_colors)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"datom: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
