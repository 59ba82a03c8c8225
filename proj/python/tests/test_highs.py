"""Cross-checks the exact solver against HiGHS on small instances."""

import random

import pytest

import occsp

highspy = pytest.importorskip("highspy")

from test_smoke import small_instance  # noqa: E402


def highs_optimum(inst):
    """min P - V over start binaries, built independently of the exported model."""
    T = inst["horizon"]["T"]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    inf = highspy.kHighsInf
    P = h.addVariable(lb=0, ub=inf)
    V = h.addVariable(lb=0, ub=inf)
    x = {}
    for e in inst["evs"]:
        for s in range(e["ar"], e["d"] - e["l"] + 2):
            x[e["id"], s] = h.addVariable(lb=0, ub=1, type=highspy.HighsVarType.kInteger)
        h.addConstr(sum(x[e["id"], s] for s in range(e["ar"], e["d"] - e["l"] + 2)) == 1)
    for j in range(1, T + 1):
        load = [x[e["id"], s] for e in inst["evs"] for s in range(max(e["ar"], j - e["l"] + 1), j + 1)
                if (e["id"], s) in x]
        expr = sum(load) if load else None
        if expr is None:
            h.addConstr(V <= 0)
            continue
        h.addConstr(expr - P <= 0)
        h.addConstr(expr - V >= 0)
        h.addConstr(expr <= inst["cap"])
    h.minimize(P - V)
    assert h.getModelStatus() == highspy.HighsModelStatus.kOptimal
    return round(h.getInfo().objective_function_value)


def test_oracle_equals_highs():
    rng = random.Random(17)
    for _ in range(40):
        n = rng.randint(1, 8)
        T = rng.randint(2, 24)
        inst = small_instance(rng, n, T, cap=rng.choice([0, max(1, n - 1)]))
        r = occsp.solve(inst)
        if r["status"] == "infeasible":
            continue
        assert r["objective"] == highs_optimum(inst)


def test_exported_lp_solves_to_the_oracle(tmp_path):
    rng = random.Random(5)
    for k in range(10):
        inst = small_instance(rng, rng.randint(1, 6), rng.randint(2, 16))
        path = tmp_path / f"m{k}.lp"
        path.write_text(occsp.export_lp(inst))
        h = highspy.Highs()
        h.setOptionValue("output_flag", False)
        assert h.readModel(str(path)) == highspy.HighsStatus.kOk
        h.run()
        assert h.getModelStatus() == highspy.HighsModelStatus.kOptimal
        assert round(h.getInfo().objective_function_value) == occsp.solve(inst)["objective"]
