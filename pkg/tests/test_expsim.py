import math

import numpy as np
import pytest

from eosim.expsim import (ExperimentConfig, Prep, VoltageMap, dark_locus, evolve_reference,
                          fingerpinch, fingerpinch_echoed, fingerpinch_schedule,
                          ground_probability, noiseless_frequency, prepare_state, region_contrast,
                          singlet_state, time_domain_trace, y_half_schedules)
from eosim.noise import NoiseModel
from eosim.pulsekit import evolve_full
from eosim.spinspace import total_s2, total_sz

SMALL = dict(z_values=np.linspace(0, 0.1, 11), n_values=np.linspace(0, 0.2, 21))


def test_singlet_state_is_qubit_zero():
    psi = singlet_state()
    assert psi.conj() @ total_s2(3) @ psi == pytest.approx(0.75)
    assert psi.conj() @ total_sz(3) @ psi == pytest.approx(-0.5)
    assert ground_probability(psi) == pytest.approx(1.0)


def test_x_prep_is_undone_by_readout():
    psi = prepare_state("x")
    assert ground_probability(psi) == pytest.approx(0.5, abs=1e-9)
    assert ground_probability(psi, y_half_schedules()[1]) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("prep", ["singlet", "x"])
def test_grid_matches_full_space(prep):
    res = fingerpinch(ExperimentConfig(prep=prep, **SMALL))
    for i, k in [(0, 0), (3, 7), (10, 20), (5, 2)]:
        p = evolve_reference(prep, res.J_z[i], res.J_n[k], 100.0)
        assert 1 - res.signal[i, k] == pytest.approx(p, abs=1e-12)


def test_echoed_grid_matches_full_space():
    cfg = ExperimentConfig(prep="x", echo_repeats=2, **SMALL)
    res = fingerpinch(cfg)
    pre, undo = y_half_schedules()
    for i, k in [(2, 5), (7, 13)]:
        sched = fingerpinch_schedule(res.J_z[i], res.J_n[k], cfg)
        psi = evolve_full(sched) @ prepare_state("x")
        assert 1 - res.signal[i, k] == pytest.approx(ground_probability(psi, undo), abs=1e-12)
    assert len(pre) >= 1


def test_singlet_stationary_under_j12():
    res = fingerpinch(ExperimentConfig(prep="singlet", **SMALL))
    assert np.abs(res.signal[:, 0]).max() < 1e-12


def test_x_dark_locus_slope_two():
    res = fingerpinch(ExperimentConfig(prep="x"))
    jz, jn, slope = dark_locus(res, min_z=0.01)
    assert slope == pytest.approx(2.0, abs=0.02)
    assert np.allclose(jn, 2 * jz, atol=res.n_values[1] - res.n_values[0])


def test_echo_restores_contrast_under_noise():
    noise = NoiseModel({(1, 2): 0.02, (2, 3): 0.02}, 0)
    base = ExperimentConfig(prep="x", noise=noise, shots=200)
    plain = fingerpinch(base)
    echoed = fingerpinch_echoed(base)
    assert echoed.config.echo_repeats == 4
    column = np.zeros_like(plain.signal, dtype=bool)
    column[0, :] = True
    assert region_contrast(echoed, column) > region_contrast(plain, column) + 0.3


def test_rows_and_metadata():
    cfg = ExperimentConfig(**SMALL)
    rows = fingerpinch(cfg).rows()
    assert len(rows) == 11 * 21 and set(rows[0]) == {"V_or_J_z", "V_or_J_n", "signal"}
    meta = cfg.metadata()
    assert meta["prep"] == "singlet" and meta["pulse_time"] == 100.0 and meta["seed"] is None


def test_voltage_maps():
    vm = VoltageMap(0.001, 0.05)
    assert vm.V(vm.J(37.0)) == pytest.approx(37.0)
    res = fingerpinch(ExperimentConfig(z_values=[0, 10], n_values=[0, 20]),
                      maps=(vm, VoltageMap(0.002, 0.04, (2, 3))))
    assert res.J_z[1] == pytest.approx(0.001 * math.exp(0.5))
    with pytest.raises(ValueError):
        VoltageMap(0.0, 1.0)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(pulse_time=0)
    with pytest.raises(ValueError):
        ExperimentConfig(echo_repeats=-1)
    with pytest.raises(ValueError):
        ExperimentConfig(prep="triplet")
    with pytest.raises(ValueError):
        fingerpinch(ExperimentConfig(z_values=[-0.1], n_values=[0.1]))


def test_time_trace_frequency():
    tr = time_domain_trace("singlet", 0.0, 0.213, 600.0, 300)
    assert tr.fit.frequency == pytest.approx(noiseless_frequency(0.0, 0.213), abs=1e-6)
    assert noiseless_frequency(0.0, 0.213) == pytest.approx(0.213 / (2 * math.pi))
    assert len(tr.rows()) == 300 and tr.rows()[0]["t_ns"] == 0.0


def test_noisy_trace_decays():
    noise = NoiseModel({(2, 3): 0.02}, 1)
    tr = time_domain_trace("singlet", 0.0, 0.213, 1500.0, 400, noise=noise, shots=1000)
    assert np.isfinite(tr.fit.decay_time) and 5 < tr.quality_factor < 50


def test_x_prep_flat_on_locus():
    tr = time_domain_trace(Prep.X, 0.05, 0.1, 500.0, 100)
    assert np.ptp(tr.probability) < 1e-9 and not tr.fit.oscillating


def test_x_prep_sigma_x_expectation():
    from eosim.spinspace import build_coupled_basis
    b = build_coupled_basis(3)
    c = b.to_product.conj().T @ prepare_state("x")
    # qubit amplitudes live in the Sz = -1/2 copy
    q = c[0:2]
    assert np.linalg.norm(c[2:]) < 1e-9
    sx = np.array([[0, 1], [1, 0]])
    assert np.real(q.conj() @ sx @ q) == pytest.approx(1.0, abs=1e-9)
