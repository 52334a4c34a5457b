import random

import pytest

import oracles
from trace_check import check_trace
from datom.gradient import compute_field
from datom.lattice import CellPos, Configuration, ModuleState, free_surface_cells, neighbors
from datom.scenes import get_scene
from datom.simkernel import SimParams, Simulation, Unreachable, run


def simulate(name, params=None):
    scene = get_scene(name)
    config = scene.load()
    trace, final = run(config, scene.goal, 1, params)
    return scene, config, trace, final


def distances(config, goal, mobile_id=1):
    mobile = config.by_id(mobile_id)
    return {tuple(c): d for c, d in compute_field(config.without(mobile.pos), goal).dist.items()}


def checked(config, goal, trace, mobile_id=1):
    cells = {c: m.id for c, m in config.modules.items()}
    return check_trace(trace.records, cells, mobile_id, distances(config, goal, mobile_id))


def is_deform(rec, msg):
    return rec["kind"] == "MessageSent" and rec["detail"]["msg"] == msg


def test_lone_pair():
    config = Configuration.from_modules([ModuleState(1, CellPos(1, 0, 0), role="mobile"), ModuleState(2, CellPos(0, 0, 0))])
    goal = CellPos(0, 1, 0)
    trace, final = run(config, goal, 1)
    assert not any(is_deform(r, "DeformMsg") for r in trace.records)
    assert not any(r["kind"] == "DeformationStart" and r["detail"]["phase"] == "release" for r in trace.records)
    assert len(trace.of_kind("MotionComplete")) == 1
    assert final.by_id(1).pos == goal


def test_helpers_ack_before_motion():
    scene, config, trace, final = simulate("turn-helpers")
    recs = trace.records
    first_complete = next(n for n, r in enumerate(recs) if r["kind"] == "MotionComplete")
    before = recs[:first_complete]
    assert sum(is_deform(r, "DeformMsg") for r in before) == 4
    assert sum(is_deform(r, "AckDeform") for r in before) == 4
    acks = [n for n, r in enumerate(recs) if r["kind"] == "MessageDelivered" and r["detail"]["msg"] == "AckDeform"]
    motion = next(
        n for n, r in enumerate(recs) if r["kind"] == "DeformationStart" and r["detail"]["phase"] == "motion"
    )
    assert len(acks) == 4 and motion > acks[-1]
    assert recs[motion]["t"] >= recs[acks[-1]]["t"]
    released = {r["module"] for r in before if r["kind"] == "DeformationEnd" and r["detail"]["phase"] == "release"}
    helpers = {r["detail"]["dst"] for r in before if is_deform(r, "DeformMsg")}
    assert released == helpers and len(helpers) == 4
    assert final.by_id(1).pos == scene.goal
    checked(config, scene.goal, trace)


def test_double_helper_switches_piston():
    scene, config, trace, final = simulate("turn-double")
    recs = trace.records
    f_module = config.get(CellPos(3, 2, 3)).id
    starts = [r for r in recs if r["kind"] == "DeformationStart" and r["module"] == f_module]
    deforms = [r for r in starts if r["detail"]["phase"] != "release"]
    assert [r["detail"]["phase"] for r in deforms] == ["first-half", "second-half"]
    assert deforms[0]["detail"]["axis"] != deforms[1]["detail"]["axis"]
    swap = trace.of_kind("ConnectorSwap")[0]
    assert deforms[1]["t"] > swap["t"]
    assert deforms[1]["detail"]["releases"] == deforms[0]["detail"]["axis"]
    summary = checked(config, scene.goal, trace)
    assert summary["commits"] == 1


@pytest.mark.parametrize("name", ["arch-a", "arch-b"])
def test_arch_runs(name):
    scene, config, trace, final = simulate(name)
    assert final.by_id(1).pos == scene.goal
    assert final.ids() == config.ids()
    assert all(m.deformation is None for m in final.modules.values())
    summary = checked(config, scene.goal, trace)
    field = distances(config, scene.goal)
    assert summary["commits"] == field[tuple(scene.start)]
    # release of one motion completes before the next DeformMsg batch
    recs = trace.records
    for n, r in enumerate(recs):
        if r["kind"] == "MotionComplete":
            later = [x for x in recs[n + 1 :] if is_deform(x, "DeformMsg")]
            released = [x for x in recs[:n] if x["kind"] == "DeformationEnd" and x["detail"]["phase"] == "release"]
            if later and released:
                assert released[-1]["seq"] < later[0]["seq"]


def test_deterministic():
    a = simulate("arch-b")[2].to_jsonl()
    b = simulate("arch-b")[2].to_jsonl()
    assert a == b
    assert simulate("arch-b", SimParams(seed=99))[2].to_jsonl() == a


def test_timing_changes_only_timestamps():
    base = simulate("turn-double")[2].records
    slow = simulate("turn-double", SimParams(l_msg=3, t_def=7, t_move=31))[2].records

    def strip(recs):
        out = []
        for r in recs:
            d = {k: v for k, v in r["detail"].items() if k != "deliver"}
            out.append((r["kind"], r["module"], tuple(sorted(map(str, d.items())))))
        return out

    assert strip(base) == strip(slow)
    assert slow[-1]["t"] > base[-1]["t"]


def test_message_latency():
    trace = simulate("turn-helpers", SimParams(l_msg=4))[2]
    for r in trace.of_kind("MessageSent"):
        assert r["detail"]["deliver"] == r["t"] + 4


def test_already_at_goal():
    config = Configuration.from_modules([ModuleState(1, CellPos(1, 0, 0), role="mobile"), ModuleState(2, CellPos(0, 0, 0))])
    trace, final = run(config, CellPos(1, 0, 0), 1)
    assert len(trace) == 0 and final == config


def test_unreachable():
    # A cavity sealed on all sides cannot be entered.
    center = CellPos(0, 0, 0)
    shell = [c for c in _ball(center) if c != center]
    modules = [ModuleState(1, CellPos(5, 0, 0), role="mobile")]
    modules += [ModuleState(n + 2, c) for n, c in enumerate(shell)]
    chain = [CellPos(2, 0, 0), CellPos(3, 0, 0), CellPos(4, 0, 0)]
    modules += [ModuleState(100 + n, c) for n, c in enumerate(chain) if c not in shell]
    config = Configuration.from_modules(modules)
    with pytest.raises(Unreachable):
        Simulation(config, center, 1)


def _ball(center):
    return [center, *neighbors(center)]


def test_bad_params():
    with pytest.raises(ValueError):
        SimParams(l_msg=0)


def test_random_simulations_keep_invariants():
    rng = random.Random(5)
    runs = 0
    for cells in oracles.corpus(60, seed=31, max_size=20):
        config = Configuration.from_cells(cells)
        mobile = rng.choice(config.cells())
        rest = config.without(mobile)
        if len(rest) == 0 or not oracles.connected(rest.modules):
            continue
        goals = sorted(free_surface_cells(rest) - {mobile})
        goal = rng.choice(goals)
        field = compute_field(rest, goal)
        mobile_id = config.get(mobile).id
        if mobile not in field:
            with pytest.raises(Unreachable):
                run(config, goal, mobile_id)
            continue
        trace, final = run(config, goal, mobile_id)
        summary = checked(config, goal, trace, mobile_id)
        assert summary["commits"] == field[mobile]
        assert final.by_id(mobile_id).pos == goal
        runs += 1
    assert runs > 20
