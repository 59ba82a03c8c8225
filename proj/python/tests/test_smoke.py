import itertools
import random

import pytest

import occsp


def small_instance(rng, n, T, cap=0):
    evs = []
    for i in range(n):
        a, b = sorted((rng.randint(1, T), rng.randint(1, T)))
        evs.append({"id": i + 1, "ar": a, "d": b, "l": rng.randint(1, b - a + 1)})
    evs.sort(key=lambda e: (e["ar"], e["id"]))
    return {"horizon": {"T": T, "slot_minutes": 15}, "evs": evs, "cap": cap or n,
            "scenario_id": "py", "seed": 0}


def spread(inst, schedule):
    load = [0] * inst["horizon"]["T"]
    for e in inst["evs"]:
        s = schedule[str(e["id"])]
        for j in range(s, s + e["l"]):
            load[j - 1] += 1
    return max(load) - min(load)


def test_generate_is_deterministic():
    a = occsp.generate(1, 11)
    b = occsp.generate(1, 11)
    assert a == b
    assert a["horizon"]["T"] == 96
    assert len(a["evs"]) > 0
    assert occsp.generate(1, 12) != a


def test_oracle_matches_enumeration():
    rng = random.Random(3)
    for _ in range(30):
        inst = small_instance(rng, rng.randint(1, 4), rng.randint(2, 8))
        r = occsp.solve(inst)
        assert r["status"] == "optimal"
        ranges = [range(e["ar"], e["d"] - e["l"] + 2) for e in inst["evs"]]
        best = min(
            spread(inst, {str(e["id"]): s for e, s in zip(inst["evs"], combo)})
            for combo in itertools.product(*ranges)
        )
        assert r["objective"] == best
        assert occsp.metrics(inst, r["schedule"])["max_min"] == best


def test_policies_are_feasible_and_bounded_by_oracle():
    inst = occsp.generate({"id": 2, "T": 24, "n_evs": 10}, 5)
    cal = [occsp.generate({"id": 2, "T": 24, "n_evs": 10}, 100 + k) for k in range(3)]
    opt = occsp.solve(inst)["objective"]
    for name in ["plugin", "rowfill", "reopt", "alpha", "beta", "random", "threshold:3"]:
        s = occsp.run_policy(inst, name, calibration=cal)
        m = occsp.metrics(inst, s)
        assert m["feasible"], name
        assert m["max_min"] >= opt, name


def test_game_replays_schedule():
    inst = occsp.generate({"id": 1, "T": 24, "n_evs": 8}, 2)
    sched = occsp.solve(inst)["schedule"]
    actions = occsp.actions_for_schedule(inst, sched)
    r = occsp.replay(inst, actions)
    assert r["terminal"]
    assert r["schedule"] == sched
    assert r["score"] == sum(t["reward"] for t in r["trace"] if t.get("reward") is not None)

    ep = occsp.Episode(inst)
    for a in actions:
        out = ep.step(a)
    assert out["state"]["terminal"]
    assert out["state"]["schedule"] == sched
    assert out["state"]["score"] == r["score"]


def test_episode_observation():
    inst = {"horizon": {"T": 10}, "evs": [{"id": 1, "ar": 3, "d": 9, "l": 2}], "cap": 0}
    ep = occsp.Episode(inst)
    st = ep.state()
    assert st["candidate"] == 3
    assert st["legal_actions"] == ["RIGHT", "DOWN"]
    img = ep.image()
    assert len(img) == 3
    assert len(img[0][0]) == 10
    with pytest.raises(occsp.OccspError):
        ep.step("UP")


def test_train_and_rollout():
    scen = {"id": 1, "T": 24, "n_evs": 6}
    arch = {"conv_channels": [2, 2, 2], "cnn_hidden": [8, 8], "mlp_hidden": [8, 8]}
    out = occsp.train_sl(scen, "V2S", 1, 2, train={"max_iterations": 2, "batch_size": 16}, arch=arch)
    again = occsp.train_sl(scen, "V2S", 1, 2, train={"max_iterations": 2, "batch_size": 16}, arch=arch)
    assert out == again
    assert out["samples"] > 0
    inst = occsp.generate(scen, 9)
    r = occsp.rollout(out["model"], inst)
    assert occsp.metrics(inst, r["schedule"])["feasible"]


def test_analysis_numbers():
    e = occsp.economics(75, 35)
    assert (e["peak_kw"], e["per_feeder_cad"], e["regional_cad"]) == (280.0, 45920.0, 32144000.0)
    assert occsp.economics(116, 42)["regional_millions"] == 59.47
    g = occsp.gma_calibration()
    assert (g["feeders"], g["in_service_rounded"], g["sessions_per_feeder_2dp"]) == (803, 703, 208.86)
    assert occsp.mlp_param_count(118, 256, 2, 3) == 96512
    assert round(occsp.exact_threshold(1, 96, 3, 1), 2) == 4.15


def test_errors_are_value_errors():
    with pytest.raises(ValueError):
        occsp.generate(9, 1)
    with pytest.raises(ValueError):
        occsp.run_policy(occsp.generate(1, 1), "nonsense")
