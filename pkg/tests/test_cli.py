import json
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from eosim import __version__
from eosim.cli import OUTPUT_SCHEMA, main, read_csv
from eosim.pulsekit import Schedule


def run(tmp_path, *argv, fmt="csv"):
    out = tmp_path / f"out.{fmt}"
    code = main([*argv, "--format", fmt, "--out", str(out)])
    text = out.read_text() if out.exists() else ""
    return code, text


def load_json(tmp_path, *argv):
    code, text = run(tmp_path, *argv, fmt="json")
    assert code == 0
    doc = json.loads(text)
    jsonschema.validate(doc, OUTPUT_SCHEMA)
    return doc


def test_gate_table_json_and_idle(tmp_path):
    doc = load_json(tmp_path, "gate-table", "--gates", "X,Z")
    x = {r["strategy"]: r for r in doc["rows"] if r["gate"] == "X"}
    assert x["sequential"]["wall_clock_ns"] == pytest.approx(50.52, abs=0.01)
    assert x["linear"]["wall_clock_ns"] == pytest.approx(36.28, abs=0.01)
    assert set(doc["averages_ns"]) == {"sequential", "linear", "all_to_all"}
    doc = load_json(tmp_path, "gate-table", "--gates", "X", "--tau-idle", "10")
    x = {r["strategy"]: r for r in doc["rows"] if r["gate"] == "X"}
    assert x["sequential"]["wall_clock_ns"] == pytest.approx(80.52, abs=0.01)
    assert x["linear"]["wall_clock_ns"] == pytest.approx(46.28, abs=0.01)


def test_csv_header_carries_metadata(tmp_path):
    code, text = run(tmp_path, "gate-table", "--gates", "Z")
    assert code == 0
    assert text.startswith(f"# eosim {__version__}\n")
    meta, rows = read_csv(text)
    assert meta["metadata"]["argv"][:3] == ["gate-table", "--gates", "Z"]
    assert meta["metadata"]["config"]["jmax"] == 0.1
    assert {r["strategy"] for r in rows} >= {"sequential", "linear", "all_to_all"}


def test_subsequences(tmp_path):
    doc = load_json(tmp_path, "subsequences")
    first = doc["rows"][0]
    assert first["linear_time_ns"] * 0.1 / np.pi == pytest.approx(2.887, rel=1e-2)
    assert first["break_even_tau_idle_ns"] * 0.1 / np.pi == pytest.approx(1.387, rel=1e-2)
    assert any(r["mirror_replaceable"] for r in doc["rows"])
    doc = load_json(tmp_path, "subsequences", "--sequence", "nzn:0.5,0.3,0.4")
    assert doc["rows"][0]["linear_feasible"] is False
    assert doc["rows"][0]["all_to_all_feasible"] is False


def test_noise_sweep_reproducible_and_monotone(tmp_path):
    args = ("noise-sweep", "--grid", "0,0.01,0.02,0.05,0.1", "--shots", "500", "--seed", "4")
    code1, a = run(tmp_path, *args)
    code2, b = run(tmp_path, *args)
    assert code1 == code2 == 0 and a == b
    _, rows = read_csv(a)
    for scheme in ("sequential", "simultaneous"):
        pick = [r for r in rows if r["scheme"] == scheme]
        mean = np.array([float(r["mean_fidelity"]) for r in pick]).reshape(5, 5)
        err = np.array([float(r["std_err"]) for r in pick]).reshape(5, 5)
        # single-bond sweeps fall strictly
        assert np.all(np.diff(mean[:, 0]) < 0) and np.all(np.diff(mean[0, :]) < 0)
        # with both bonds noisy, monotone within two standard errors
        assert np.all(np.diff(mean, axis=0) <= 2 * err[1:, :])
        assert np.all(np.diff(mean, axis=1) <= 2 * err[:, 1:])


def test_fingerpinch_default_slope(tmp_path):
    doc = load_json(tmp_path, "fingerpinch")
    assert doc["dark_locus_slope"] == pytest.approx(2.0, abs=0.05)
    assert doc["experiment"]["prep"] == "x" and doc["experiment"]["pulse_time"] == 100.0
    assert set(doc["rows"][0]) == {"V_or_J_z", "V_or_J_n", "signal"}
    assert len(doc["rows"]) == 41 * 81


def test_fingerpinch_noisy_echo(tmp_path):
    doc = load_json(tmp_path, "fingerpinch", "--grid", "0.1:5,0.2:9", "--sigma", "0.02",
                    "--echo-repeats", "4", "--shots", "50", "--seed", "2")
    assert doc["experiment"]["seed"] == 2 and doc["experiment"]["echo_repeats"] == 4


def test_time_domain(tmp_path):
    doc = load_json(tmp_path, "time-domain", "--grid", "600:200")
    assert doc["fit"]["frequency"] == pytest.approx(doc["noiseless_frequency"], abs=1e-6)
    assert set(doc["rows"][0]) == {"t_ns", "probability"}


def test_sweet_spot(tmp_path):
    doc = load_json(tmp_path, "sweet-spot")
    assert doc["detunings"] == {"eps2_minus_eps1": 0.0, "eps3_minus_eps1": 0.0}
    assert doc["sweet_spot_ok"] and doc["generic_ok"]
    doc = load_json(tmp_path, "sweet-spot", "--U", "1.0,1.3,0.9", "--V", "0.25,0.15,0.05",
                    "--t", "0.04,0.06,0.02")
    assert doc["detunings"]["eps2_minus_eps1"] != 0.0
    assert doc["sweet_spot_ok"] and doc["generic_ok"]


def test_synth_and_evolve(tmp_path):
    sched_path = tmp_path / "x.json"
    doc = load_json(tmp_path, "synth", "--gate", "X", "--connectivity", "linear",
                    "--schedule-out", str(sched_path))
    assert doc["result"]["pulses"] == 1
    sched = Schedule.from_json(sched_path.read_text())
    assert sched.pulse_time == pytest.approx(36.276, abs=1e-3)
    doc = load_json(tmp_path, "evolve", "--schedule", str(sched_path), "--gate", "X")
    assert doc["fidelity"] == pytest.approx(1.0, abs=1e-12)


def test_exit_codes(tmp_path, capsys):
    assert run(tmp_path, "synth", "--gate", "H", "--connectivity", "linear")[0] == 3
    assert run(tmp_path, "synth", "--gate", "H", "--connectivity", "all")[0] == 0
    assert run(tmp_path, "synth", "--gate", "nope")[0] == 2
    assert run(tmp_path, "gate-table", "--jmax", "0")[0] == 2
    assert run(tmp_path, "gate-table", "--tau-idle", "-1")[0] == 2
    assert run(tmp_path, "noise-sweep", "--grid", "0,-0.1")[0] == 2
    assert run(tmp_path, "fingerpinch", "--grid", "0.1:x,0.2:3")[0] == 2
    assert run(tmp_path, "fingerpinch", "--echo-repeats", "3")[0] == 2
    assert run(tmp_path, "time-domain", "--grid", "0:10")[0] == 2
    assert run(tmp_path, "evolve", "--schedule", str(tmp_path / "missing.json"))[0] == 2
    with pytest.raises(SystemExit) as exc:
        main(["fingerpinch", "--prep", "triplet"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "eosim", "--version"], capture_output=True,
                          text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
