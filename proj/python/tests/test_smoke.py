import json

import pytest

import amdyn


def test_prox_closed_form():
    value, d_a, d_b, d_y = amdyn.prox("v", 1.0, 2.0, 4.0, 0.5)
    # chi a (y - a b) / (1 + chi a^2)
    assert value == pytest.approx(2.0 / 3.0)
    assert d_y == pytest.approx(1.0 / 3.0)


def test_delta_m2_and_normalize():
    value, se = amdyn.delta_m2([0.5] * 20, [[0.6] * 20], 20)
    assert value == pytest.approx(0.2)
    assert se == 0.0
    curve, integral = amdyn.normalize_delta([4.0, 5.0, 6.0], [0.7, 0.7, 0.7], (4.0, 6.0))
    assert integral == pytest.approx(1.4)
    assert curve == pytest.approx([0.5, 0.5, 0.5])
    assert amdyn.default_kappa_window(0.3) == (4.0, 6.0)


def test_validation_errors_name_the_field():
    with pytest.raises(amdyn.ContractViolation, match="m0"):
        amdyn.theory(3.0, 1.5, T=2, n_mc=1000)
    with pytest.raises(ValueError):
        amdyn.delta_m2([0.5] * 3, [[0.5] * 3], 5)


def test_theory_simulate_compare():
    th = amdyn.theory(3.0, 0.3, T=3, n_mc=5000)
    assert len(th["per_t"]) == 3
    runs = amdyn.simulate(60, 3.0, 0.3, T=3, seeds=3)
    assert sorted(runs) == [1, 2, 3]
    assert len(runs[1]["m_cos"]) == 3
    csv_text = amdyn.simulate_csv(60, 3.0, 0.3, 0.01, 3, 3)
    report = amdyn.compare(th, csv_text, 3)
    assert report["delta_m2"]["value"] >= 0.0
    assert report["seeds"] == 3


def test_simulation_is_reproducible():
    a = amdyn.simulate_csv(50, 3.0, 0.3, 0.01, 3, 2, 1, "online", 1)
    b = amdyn.simulate_csv(50, 3.0, 0.3, 0.01, 3, 2, 1, "online", 2)
    assert a == b


def test_sweep_resumes(tmp_path):
    spec = {"m0": [0.3], "kappa": {"start": 3.0, "stop": 3.0, "step": 0.5},
            "n": [30], "seeds": 2, "T": 2, "theory_opts": {"n_mc": 1000}}
    first = amdyn.run_sweep(spec, tmp_path)
    assert first["computed"] == 2 and first["failed"] == 0
    second = amdyn.run_sweep(spec, tmp_path)
    assert second["skipped"] == 2
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["kind"] == "amdyn.sweep"


def test_cli_exit_codes():
    code, _, err = amdyn.cli("theory", "--damping", "2")
    assert code == 1 and "--damping" in err
