"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line that is printed at the end of the
pytest run (see ``conftest.py``). Run on its own with::

    pytest tests/test_acceptance.py -v
"""

import math
import random
import time

import numpy as np
import pytest

import oracles
from trace_check import TraceViolation, check_trace
from datom.geometry import COMPRESSED_ANGLES, REST_ANGLES, derive_params, linkage_pose, thickness_limit
from datom.gradient import compute_field, descend
from datom.lattice import CellPos, Configuration, free_surface_cells
from datom.motion import KINDS, apply, inverse, mirror_requirement, rule_template, valid_actions, validate
from datom.scenes import ARCH_GOAL, ARCH_HOLE_TOP, ARCH_START, ARCH_TOP, get_scene
from datom.simkernel import run

CORPUS_SIZE = 1000
CORPUS_SEED = 2024

# Frozen path lengths of the committed arch fixtures.
ARCH_A_STEPS = 6
ARCH_B_STEPS = 9

RESULTS: list[str] = []


def report(name, ok, detail):
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def corpus():
    return oracles.corpus(CORPUS_SIZE, seed=CORPUS_SEED, max_size=30)


def test_geometry_constants():
    p = derive_params(1.0, 0.0)
    ok = abs(p.c - 0.61678) < 1e-5 and abs(p.e - 0.18065) < 1e-5 and p.a == p.c
    report("geometry constants", ok, f"c={p.c:.8f} e={p.e:.8f} a==c {p.a == p.c}")


def test_thickness_bound():
    compat = thickness_limit(1.0, outward_offset=True)
    strict = thickness_limit(1.0)
    # independent linear solve of t = k (r -/+ t/2)
    k = (2 - math.sqrt(2)) / (3 * math.sqrt(2) - 1)
    strict_oracle = np.linalg.solve([[1 + k / 2]], [k])[0]
    ok = abs(compat - 0.19859) < 1e-5 and abs(strict - 0.165685) < 1e-6 and abs(strict - strict_oracle) < 1e-12
    report("thickness bound", ok, f"compat={compat:.7f} strict={strict:.7f}")


def test_linkage_endpoints():
    t0 = time.perf_counter()
    p = derive_params(1.0)
    rest, full = linkage_pose(p, 0.0), linkage_pose(p, 1.0)
    ends = (rest.angle_P0, rest.angle_Q0, rest.angle_Q1) == REST_ANGLES and (
        full.angle_P0,
        full.angle_Q0,
        full.angle_Q1,
    ) == COMPRESSED_ANGLES
    worst = max(abs(linkage_pose(p, float(f)).residual) for f in np.linspace(0, 1, 1000))
    dt = time.perf_counter() - t0
    ok = ends and worst < 1e-9 * p.r and dt < 1.0
    report("linkage endpoints", ok, f"endpoints exact={ends} max residual={worst:.2e} time={dt:.2f}s")


def test_table_mirror():
    def shape(reqs):
        return sorted((q.rel, q.status, q.axes) for q in reqs)

    left, right, ahead = (rule_template(k) for k in KINDS)
    ok = (
        shape(map(mirror_requirement, left)) == shape(right)
        and shape(map(mirror_requirement, right)) == shape(left)
        and shape(map(mirror_requirement, ahead)) == shape(ahead)
    )
    report("rule table mirror", ok, "TurnLeft<->TurnRight under R->-R, GoAhead self-mirrored")


def test_bidirectionality(corpus):
    t0 = time.perf_counter()
    checked = violations = 0
    for cells in corpus:
        config = Configuration.from_cells(cells)
        for mover in config.cells():
            for action in valid_actions(config, mover):
                checked += 1
                if not validate(apply(config, action), inverse(action)):
                    violations += 1
    dt = time.perf_counter() - t0
    ok = violations == 0 and checked > 0
    report(
        "bidirectionality",
        ok,
        f"{len(corpus)} configs, {checked} valid actions, {violations} violations, {dt:.1f}s (target < 60s)",
    )


def test_field_oracle(corpus):
    t0 = time.perf_counter()
    small = [c for c in corpus if len(c) <= 12]
    mismatches = 0
    rng = random.Random(1)
    for cells in small:
        config = Configuration.from_cells(cells)
        goal = rng.choice(sorted(free_surface_cells(config)))
        got = {tuple(c): d for c, d in compute_field(config, goal).dist.items()}
        if got != oracles.distance_field(cells, goal):
            mismatches += 1
    dt = time.perf_counter() - t0
    report(
        "field/oracle equivalence",
        mismatches == 0,
        f"{len(small)} configs with <= 12 modules, {mismatches} mismatches, {dt:.1f}s (target < 60s)",
    )


def test_arch_experiment():
    t0 = time.perf_counter()
    out = {}
    for name in ("arch-a", "arch-b"):
        config = get_scene(name).load()
        field = compute_field(config.without(ARCH_START), ARCH_GOAL)
        plan = descend(config, ARCH_START, field)
        out[name] = (len(config), field[ARCH_START], [field[a.goal] for a in plan], max(a.goal.k for a in plan))
    dt = time.perf_counter() - t0
    size_a, dist_a, path_a, top_a = out["arch-a"]
    size_b, dist_b, path_b, top_b = out["arch-b"]
    ok = (
        size_a == 130
        and size_b == 131
        and path_a == list(range(dist_a - 1, -1, -1))
        and path_b == list(range(dist_b - 1, -1, -1))
        and top_a <= ARCH_HOLE_TOP
        and dist_b > dist_a
        and top_b > ARCH_TOP
        and (len(path_a), len(path_b)) == (ARCH_A_STEPS, ARCH_B_STEPS)
        and dt < 10
    )
    report(
        "arch experiment",
        ok,
        f"arch-a dist {dist_a}, max k {top_a} <= hole top {ARCH_HOLE_TOP}; "
        f"arch-b dist {dist_b}, max k {top_b} > obstacle top {ARCH_TOP}; {dt:.1f}s",
    )


def test_algorithm_fidelity():
    scene = get_scene("turn-helpers")
    config = scene.load()
    trace6, _ = run(config, scene.goal, 1)
    recs = trace6.records
    first = next(n for n, r in enumerate(recs) if r["kind"] == "MotionComplete")
    sent = [r["detail"]["msg"] for r in recs[:first] if r["kind"] == "MessageSent"]
    n_deform, n_ack = sent.count("DeformMsg"), sent.count("AckDeform")

    scene7 = get_scene("turn-double")
    config7 = scene7.load()
    trace7, _ = run(config7, scene7.goal, 1)
    f_id = config7.get(CellPos(3, 2, 3)).id
    phases = [
        r
        for r in trace7.records
        if r["kind"] == "DeformationStart" and r["module"] == f_id and r["detail"]["phase"] != "release"
    ]
    swap_t = trace7.of_kind("ConnectorSwap")[0]["t"]
    two_phase = len(phases) == 2 and phases[0]["detail"]["axis"] != phases[1]["detail"]["axis"] and phases[1]["t"] > swap_t

    same = all(run(c, s.goal, 1)[0].to_jsonl() == t.to_jsonl() for c, s, t in ((config, scene, trace6), (config7, scene7, trace7)))
    ok = n_deform == 4 and n_ack == 4 and two_phase and same
    report(
        "algorithm fidelity",
        ok,
        f"turn-helpers {n_deform} DeformMsg/{n_ack} AckDeform before first MotionComplete; "
        f"turn-double F axis switch after mid-position={two_phase}; byte-identical reruns={same}",
    )


def test_connectivity_safety():
    runs = commits = violations = 0
    jobs = []
    for name in ("arch-a", "arch-b", "turn-helpers", "turn-double"):
        scene = get_scene(name)
        jobs.append((scene.load(), scene.goal, 1))
    rng = random.Random(8)
    for cells in oracles.corpus(80, seed=77, max_size=25):
        config = Configuration.from_cells(cells)
        mobile = rng.choice(config.cells())
        rest = config.without(mobile)
        if len(rest) and oracles.connected(rest.modules):
            goal = rng.choice(sorted(free_surface_cells(rest) - {mobile}))
            if mobile in compute_field(rest, goal):
                jobs.append((config, goal, config.get(mobile).id))
    for config, goal, mobile_id in jobs:
        trace, _ = run(config, goal, mobile_id)
        field = compute_field(config.without(config.by_id(mobile_id).pos), goal)
        cells = {c: m.id for c, m in config.modules.items()}
        try:
            summary = check_trace(trace.records, cells, mobile_id, {tuple(c): d for c, d in field.dist.items()})
            commits += summary["commits"]
        except TraceViolation:
            violations += 1
        runs += 1
    report(
        "connectivity safety",
        violations == 0,
        f"{runs} simulations, {commits} committed states, {violations} violations",
    )
