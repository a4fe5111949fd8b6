import numpy as np
import pytest

from eosim.noise import (NoiseModel, fidelity_sweep, noisy_fidelities, sample_noisy_schedule,
                         sample_noisy_schedules, x_gate_schedules)
from eosim.pulsekit import SIGMA_X, QUBIT_A, Schedule
from eosim.synth import gate_spec


def test_validation():
    with pytest.raises(ValueError):
        NoiseModel({(1, 2): -0.1})
    with pytest.raises(ValueError):
        NoiseModel({(1, 2): float("nan")})
    assert NoiseModel({"2-1": 0.1}).sigma((1, 2)) == 0.1


def test_deterministic_for_fixed_seed():
    a = NoiseModel({(1, 2): 0.05}, seed=3).factors(3, 100)[1]
    b = NoiseModel({(1, 2): 0.05}, seed=3).factors(3, 100)[1]
    c = NoiseModel({(1, 2): 0.05}, seed=4).factors(3, 100)[1]
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_common_random_numbers():
    _, z1 = NoiseModel({(1, 2): 0.01}, 9).standard_normals(3, 50)
    _, z2 = NoiseModel({(2, 3): 0.3}, 9).standard_normals(3, 50)
    assert np.array_equal(z1, z2)


def test_factor_statistics():
    bonds, f = NoiseModel({(1, 2): 0.05}, 1).factors(3, 200_000)
    col = f[:, bonds.index((1, 2))]
    assert col.mean() == pytest.approx(1.0, abs=5e-4)
    assert col.std() == pytest.approx(0.05, rel=1e-2)
    assert np.all(f[:, bonds.index((2, 3))] == 1.0)


def test_clipping_at_zero():
    _, f = NoiseModel({(1, 2): 2.0}, 0).factors(3, 5000)
    assert f.min() == 0.0
    # a clipped schedule is still valid
    sched = x_gate_schedules()["sequential"]
    for s in sample_noisy_schedules(sched, NoiseModel({(1, 2): 2.0, (2, 3): 2.0}, 0), 50):
        assert isinstance(s, Schedule)


def test_sampled_schedule_is_quasi_static():
    sched = x_gate_schedules()["sequential"]
    noise = NoiseModel({(2, 3): 0.1}, 2)
    s = sample_noisy_schedule(sched, noise, shot=7)
    ratio = [seg.J_values[(2, 3)] / 0.1 for seg in s.segments if (2, 3) in seg.J_values]
    assert len(ratio) == 2 and ratio[0] == pytest.approx(ratio[1])
    bonds, f = noise.factors(3, 8)
    assert ratio[0] == pytest.approx(f[7, bonds.index((2, 3))])


@pytest.mark.parametrize("scheme", ["sequential", "simultaneous"])
def test_closed_form_matches_full_space(scheme):
    sched = x_gate_schedules()[scheme]
    noise = NoiseModel({(1, 2): 0.05, (2, 3): 0.08}, 5)
    fast = noisy_fidelities(sched, SIGMA_X, noise, 40)
    exact = noisy_fidelities(sched, SIGMA_X, noise, 40, exact=True)
    assert np.allclose(fast, exact, atol=1e-12)


def test_noiseless_fidelity_is_one():
    for sched in x_gate_schedules().values():
        f = noisy_fidelities(sched, SIGMA_X, NoiseModel({}), 10)
        assert np.allclose(f, 1.0, atol=1e-12)


def test_sweep_columns_monotone():
    grid = (0.0, 0.01, 0.02, 0.05, 0.10)
    for scheme, sched in x_gate_schedules().items():
        res = fidelity_sweep(sched, gate_spec("X"), grid, grid, shots=1000, seed=0, scheme=scheme)
        assert res.mean[0, 0] == pytest.approx(1.0)
        assert np.all(np.diff(res.mean[:, 0]) < 0) and np.all(np.diff(res.mean[0, :]) < 0)
        assert np.all(np.diff(res.mean, axis=0) <= 2 * res.std_err[1:, :])
        assert np.all(np.diff(res.mean, axis=1) <= 2 * res.std_err[:, 1:])
        rows = res.rows()
        assert len(rows) == 25 and rows[0]["scheme"] == scheme


def test_sweep_validation():
    sched = x_gate_schedules()["sequential"]
    with pytest.raises(ValueError):
        fidelity_sweep(sched, SIGMA_X, shots=1)
    assert QUBIT_A.n_bond == (2, 3)
