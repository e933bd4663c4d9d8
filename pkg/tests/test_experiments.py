import json
import os

import numpy as np
import pytest

from holderlevels import errors
from holderlevels import experiments as E
from holderlevels.grid import GridSet
from holderlevels.holder import GridFunction


@pytest.fixture(scope="module")
def small_sponge():
    return E.sponge_theorem(alpha=1.0, N=9, level_count=32)


def test_report_schema(small_sponge):
    doc = json.loads(small_sponge.to_json())
    assert set(doc) == {"name", "parameters", "measurements", "verdicts", "artifacts"}
    assert "tolerances" in doc["parameters"]
    for v in doc["verdicts"].values():
        assert v["measurement"] in doc["measurements"]
        assert v["tolerance"] in doc["parameters"]["tolerances"]


def test_sponge_small_run_values(small_sponge):
    m = small_sponge.measurements
    assert small_sponge.parameters["minimal_k"] == 4
    assert small_sponge.verdicts["minimal_k_condition"]["passed"]
    assert all(small_sponge.verdicts[f"fubini_area[tau={t}]"]["passed"] for t in ("0", "0.05", "0.1"))
    assert all(small_sponge.verdicts[f"column_bound[tau={t}]"]["passed"] for t in ("0", "0.05", "0.1"))
    assert m["column_oracle_bound"] > 0.9 * m["p_mk"]


def test_sponge_rejects_coarse_grid():
    with pytest.raises(errors.ResolutionTooLow):
        E.sponge_theorem(N=8)


def test_report_files_are_deterministic(tmp_path, small_sponge):
    again = E.sponge_theorem(alpha=1.0, N=9, level_count=32)
    d1 = small_sponge.write(tmp_path / "a")
    d2 = again.write(tmp_path / "b")
    assert os.path.basename(d1) == os.path.basename(d2)
    names = sorted(os.listdir(d1))
    assert names == sorted(os.listdir(d2)) and "report.json" in names
    for name in names:
        with open(os.path.join(d1, name), "rb") as a, open(os.path.join(d2, name), "rb") as b:
            assert a.read() == b.read()


def test_run_id_tracks_parameters():
    a = E.ExperimentReport("x", {"n": 1, "tolerances": {}})
    b = E.ExperimentReport("x", {"n": 2, "tolerances": {}})
    assert a.run_id() != b.run_id()
    assert a.run_id() == E.ExperimentReport("x", {"tolerances": {}, "n": 1}).run_id()


def test_verdict_needs_recorded_tolerance():
    rep = E.ExperimentReport("x", {"tolerances": {"t": 1.0}})
    rep.measure("m", 0.5)
    with pytest.raises(errors.InvalidArgument):
        rep.verdict("v", True, "m", "missing")
    with pytest.raises(errors.InvalidArgument):
        rep.verdict("v", True, "absent", "t")


def test_upper_bound_full_square_equality_case():
    f = GridFunction.from_callable(lambda x: x[:, 1], 2, 8)
    rep = E.upper_bound_audit(GridSet.full(2, 8), [f], range(3, 9), level_count=32, label="square")
    assert rep.measurements["mask_dimension"] == pytest.approx(2.0)
    assert rep.measurements["dstar_max"] == pytest.approx(1.0, abs=0.02)
    assert rep.passed


def test_upper_bound_empty_mask_is_vacuous():
    f = GridFunction(np.zeros((65, 65)))
    rep = E.upper_bound_audit(GridSet.empty(2, 6), [f], range(2, 7))
    assert rep.passed and rep.measurements["dstar_max"] == 0.0


def test_upper_bound_needs_functions():
    with pytest.raises(errors.InvalidArgument):
        E.upper_bound_audit(GridSet.full(2, 4), [], range(2, 5))


def test_witnesses_are_seeded_and_valid():
    mask = E.sierpinski_mask(6)
    a = E.mcshane_witnesses(mask, 4, seed=5)
    b = E.mcshane_witnesses(mask, 4, seed=5)
    assert all(x == y for x, y in zip(a, b))
    for w in a:
        assert w.c == 1.0


def test_slicing_full_square():
    rep = E.slicing_audit(GridSet.full(2, 8), eps_list=(0.1, 0.3))
    fractions = [v for k, v in rep.measurements.items() if k.startswith("fraction")]
    assert fractions and all(v == 0.0 for v in fractions)
    assert rep.passed


def test_slicing_product_set_is_recorded():
    cells = np.zeros((64, 64), dtype=bool)
    cells[::8, :] = True
    rep = E.slicing_audit(GridSet(cells), axes=(1,), eps_list=(0.25,))
    per_slice = [v for k, v in rep.measurements.items() if k.startswith("fraction")]
    assert all(v in (0.0, 1.0) for v in per_slice)


def test_monotone_single_alpha_is_vacuous():
    rep = E.monotonicity_sweep(GridSet.full(2, 6), [0.5], sample_seed=3, count=2)
    assert rep.passed and rep.measurements["largest_drop"] == 0.0


def test_monotone_rejects_unsorted_alphas():
    with pytest.raises(errors.InvalidArgument):
        E.monotonicity_sweep(GridSet.full(2, 6), [0.6, 0.3])


def test_copy_experiment_verdicts():
    rep = E.selfsimilar_copy_experiment(N=9, level_count=64)
    assert rep.passed, {k: v for k, v in rep.verdicts.items() if not v["passed"]}
    assert rep.measurements["copies"] == rep.measurements["L"] - 1
