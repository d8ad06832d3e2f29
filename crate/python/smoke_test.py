"""Smoke test for the `apsel` extension module.

Build and install it first:

    pip install --no-build-isolation -e crates/python
    python python/smoke_test.py
"""

import itertools
import tempfile

import apsel


def check_objective():
    inst = apsel.QuboInstance([0.9, 0.8, 0.1], [[0, 0.9, 0.1], [0.9, 0, 0.2], [0.1, 0.2, 0]], alpha=0.6)
    p = inst.matrix()
    for x in itertools.product([0, 1], repeat=3):
        quad = sum(x[i] * p[i][j] * x[j] for i in range(3) for j in range(3))
        assert abs(inst.energy(list(x)) - quad) < 1e-12
    exact = apsel.solve_exhaustive(inst)
    sa = apsel.solve_sa(inst, {"seed": 3, "sweeps": 200})
    assert sa.energy <= exact.energy + 1e-9, (sa, exact)
    assert apsel.solve_exhaustive(inst.with_alpha(1.0)).k == 3
    assert apsel.constrained_min(inst, 1).k <= 1


def check_stats():
    assert apsel.cramers_v([[2, 0], [0, 2]]) == 1.0
    assert apsel.cramers_v([[1, 1], [1, 1]]) == 0.0
    assert apsel.cramers_v([[3, 1], [1, 3]]) == 0.5
    assert abs(apsel.pearson([1, 2, 3], [2, 4, 7]) - 0.9933992677987828) < 1e-12


def check_search():
    data, layout = apsel.generate_synthetic({"samples": 600, "informative": 4, "floors": 4, "redundant": 8, "noise": 4})
    assert data.n_aps == 16 and len(data) == 600
    train, test = apsel.split(data, 0.3, seed=5)
    inst = apsel.QuboInstance.from_dataset(train)
    full = apsel.evaluate([1] * 16, train, test)
    trace = apsel.binary_search_alpha(inst, train, test, anneal={"sweeps": 300, "seed": 5})
    assert trace["result_k"] < 16
    assert trace["result_accuracy"] >= full["accuracy"] - 0.01 - 1e-9
    assert not set(trace["result_selected"]) & set(layout["noise"])
    sweep = apsel.sweep_alpha(inst, train, test, points=11, solver="exhaustive")
    assert len(sweep["iterations"]) == 11


def check_pipeline_and_errors():
    with tempfile.TemporaryDirectory() as out:
        report = apsel.run_pipeline({"out": out, "dataset": {"synthetic": {"samples": 600}}})
        assert report["selection"]["k"] == report["search"]["result_k"]
        data, _ = apsel.generate_synthetic()
        path = f"{out}/data.csv"
        data.save_csv(path)
        again = apsel.FingerprintDataset.load_csv(path)
        assert again.rows() == data.rows() and again.floors == data.floors
    try:
        apsel.run_pipeline({"bins": 1})
    except apsel.ConfigError as e:
        assert isinstance(e, apsel.ApselError)
    else:
        raise AssertionError("bins = 1 accepted")
    try:
        apsel.FingerprintDataset.load_csv("/nonexistent.csv")
    except apsel.DataError:
        pass
    else:
        raise AssertionError("missing file accepted")


if __name__ == "__main__":
    for check in (check_objective, check_stats, check_search, check_pipeline_and_errors):
        check()
        print(f"ok  {check.__name__}")
    print(f"apsel {apsel.__version__}: smoke test passed")
