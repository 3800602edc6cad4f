import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from onequmode.estimation import (
    ExperimentConfig,
    PosteriorUnderflowError,
    additive_split,
    eigenvector_posterior,
    estimate_phases,
    measurement_budget,
    posterior_concentration,
    success_probability,
    time_energy_check,
)
from onequmode.qumode import sample_momentum
from onequmode.spectrum import PhaseSpectrum, modular_spectrum, random_spectrum, single_phase
from oracles import quad_window_mass


@given(st.floats(-10, 10), st.floats(1, 100), st.floats(0.05, 5), st.floats(1e-4, 1.0))
def test_single_phase_success_is_erf(phi, s0, tau, dE):
    cfg = ExperimentConfig(s0=s0, tau=tau, delta_E=dE)
    assert success_probability(single_phase(phi, 2), cfg) == pytest.approx(math.erf(s0 * tau * dE), rel=1e-10, abs=1e-14)


def test_success_probability_limits():
    spec = modular_spectrum(15, 2)
    assert success_probability(single_phase(0.0), ExperimentConfig(s0=1, tau=1, delta_E=1)) == pytest.approx(0.8427007929497149)
    assert success_probability(spec, ExperimentConfig(delta_E=1e-12)) < 1e-10
    assert success_probability(spec, ExperimentConfig(delta_E=1e6)) == pytest.approx(1.0, abs=1e-9)


@given(st.integers(1, 4), st.integers(0, 500), st.floats(1, 10), st.floats(0.01, 1.5))
def test_success_probability_matches_quadrature(n, seed, s0, dE):
    spec = random_spectrum(n, seed)
    cfg = ExperimentConfig(s0=s0, tau=1.0, delta_E=dE)
    mix = cfg.mixture(spec)
    # Oracle: integrate the density over the union of windows, split at every window edge.
    edges = sorted({p - dE for p in spec.phases} | {p + dE for p in spec.phases})
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        if np.any(np.abs(spec.phases - mid) <= dE):
            total += quad_window_mass(mix.means, mix.weights, mix.sigma, a, b)
    assert success_probability(spec, cfg) == pytest.approx(total, abs=1e-9)


def test_additive_split():
    spec = PhaseSpectrum.from_phases([0.0, 1.0])
    cfg = ExperimentConfig(s0=20, tau=5, delta_E=0.01)
    diag, cross = additive_split(spec, cfg)
    assert diag == pytest.approx(math.erf(1.0))
    assert cross < 1e-100
    assert diag + cross == pytest.approx(success_probability(spec, cfg), abs=1e-15)


@pytest.mark.parametrize("P,T", [(1.0, 1), (0.8427, 2), (0.01, 100), (math.erf(1), 2)])
def test_measurement_budget(P, T):
    assert measurement_budget(P) == T


@pytest.mark.parametrize("P", [0.0, -0.1, 1.5])
def test_measurement_budget_rejects(P):
    with pytest.raises(ValueError):
        measurement_budget(P)


def test_time_energy_examples():
    c = time_energy_check(ExperimentConfig(T_bound=1, s0=100, tau=1, delta_E=1))
    assert c.satisfied and c.margin == pytest.approx(1.0)
    c = time_energy_check(ExperimentConfig(T_bound=100, s0=1, tau=1, delta_E=0.01))
    assert c.satisfied and c.margin == pytest.approx(100 * 0.011283415555849618, rel=1e-12)
    assert not time_energy_check(ExperimentConfig(T_bound=1, s0=1, tau=1, delta_E=0.01)).satisfied


@pytest.mark.parametrize("field,value", [("s0", 0.5), ("tau", 0.0), ("x0", -1), ("samples", 0),
                                         ("delta_E", 0.0), ("T_bound", 0)])
def test_config_validation(field, value):
    with pytest.raises(ValueError):
        ExperimentConfig(**{field: value})


def test_estimate_single_peak():
    cfg = ExperimentConfig(s0=10, tau=1, samples=10**5, seed=3)
    x = sample_momentum(cfg.mixture(single_phase(1.5)), cfg.samples, cfg.seed)
    rep = estimate_phases(x, cfg)
    assert len(rep.peaks) == 1
    est, mass = rep.peaks[0]
    assert abs(est - 1.5) < 5 * (1 / (math.sqrt(2) * 10)) / math.sqrt(cfg.samples * mass)


@given(st.integers(0, 10_000), st.floats(0.5, 5.0))
def test_estimate_two_separated_peaks(seed, gap):
    cfg = ExperimentConfig(s0=20, tau=1, seed=seed)
    spec = PhaseSpectrum.from_phases([1.0, 1.0 + gap], [3, 1])
    x = sample_momentum(cfg.mixture(spec), 20_000, seed)
    rep = estimate_phases(x, cfg)
    assert len(rep.peaks) == 2
    ests = sorted(e for e, _ in rep.peaks)
    assert abs(ests[0] - 1.0) < 0.02 and abs(ests[1] - 1.0 - gap) < 0.02


def test_estimate_degenerate_input():
    rep = estimate_phases(np.full(50, 0.7), ExperimentConfig())
    assert rep.peaks == [(0.7, 1.0)]
    with pytest.raises(ValueError):
        estimate_phases([], ExperimentConfig())


def test_report_exports(tmp_path):
    cfg = ExperimentConfig(s0=5, seed=1)
    x = sample_momentum(cfg.mixture(modular_spectrum(15, 2)), 5000, 1)
    rep = estimate_phases(x, cfg)
    data = json.loads(rep.to_json())
    assert data["samples_used"] == 5000 and len(data["peaks"]) == len(rep.peaks)
    rep.write_histogram_csv(tmp_path / "h.csv")
    rows = list(csv.reader(open(tmp_path / "h.csv")))
    assert rows[0] == ["bin_center", "mass"]
    assert sum(float(m) for _, m in rows[1:]) == pytest.approx(1.0)


def test_posterior_examples():
    w = eigenvector_posterior(single_phase(2.0, 3), 7.0, ExperimentConfig())
    np.testing.assert_array_equal(w, [1.0])
    spec = PhaseSpectrum.from_phases([0.0, math.pi], [2, 2])
    w = eigenvector_posterior(spec, 0.0, ExperimentConfig(s0=10))
    assert w[0] == pytest.approx(1.0, abs=1e-300) and w[1] < 1e-300 + math.exp(-100 * math.pi**2) * 2
    w = eigenvector_posterior(spec, math.pi / 2, ExperimentConfig(s0=3))
    np.testing.assert_allclose(w, [0.5, 0.5], rtol=1e-14)


def test_posterior_underflow():
    spec = PhaseSpectrum.from_phases([0.0, 1.0])
    with pytest.raises(PosteriorUnderflowError):
        eigenvector_posterior(spec, 1e6, ExperimentConfig(s0=100))


@given(st.integers(1, 5), st.integers(0, 1000), st.floats(-0.5, 0.5), st.floats(1, 30))
def test_posterior_is_distribution(n, seed, offset, s0):
    spec = random_spectrum(n, seed)
    w = eigenvector_posterior(spec, spec.phases[0] + offset, ExperimentConfig(s0=s0))
    assert np.all(w >= 0) and w.sum() == pytest.approx(1.0)


def test_posterior_concentration_limits():
    spec = PhaseSpectrum.from_phases([0.0, 1.0])
    assert posterior_concentration(single_phase(0.4), 0, 1.0) == pytest.approx(1.0)
    assert posterior_concentration(spec, 0, 64.0) == pytest.approx(1.0, abs=1e-12)
    assert 0.5 < posterior_concentration(spec, 0, 1.0) < 1.0


@given(st.integers(1, 5), st.integers(0, 1000), st.floats(1, 20), st.floats(0.01, 0.3))
def test_success_at_least_own_window_when_windows_disjoint(n, seed, s0, dE):
    spec = random_spectrum(n, seed)
    gaps = np.diff(np.sort(spec.phases))
    if gaps.size and gaps.min() <= 2 * dE:
        return
    cfg = ExperimentConfig(s0=s0, delta_E=dE)
    assert success_probability(spec, cfg) >= math.erf(s0 * dE) * (1 - 1e-10)


def test_success_equals_own_window_when_far_apart():
    spec = PhaseSpectrum.from_phases([0.0, 2.0, 4.0, 6.0])
    cfg = ExperimentConfig(s0=50, tau=1, delta_E=0.02)
    assert abs(success_probability(spec, cfg) - math.erf(1.0)) < 1e-6


@pytest.mark.parametrize("spec", [modular_spectrum(15, 2), random_spectrum(4, 8)])
def test_success_probability_empirical(spec):
    cfg = ExperimentConfig(s0=3, tau=1, delta_E=0.1)
    x = sample_momentum(cfg.mixture(spec), 10**5, 77)
    hit = np.min(np.abs(x[:, None] - spec.phases[None, :]), axis=1) <= cfg.delta_E
    P = success_probability(spec, cfg)
    assert abs(hit.mean() - P) < 5 * math.sqrt(P * (1 - P) / x.size)
