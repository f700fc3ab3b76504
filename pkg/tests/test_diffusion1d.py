from __future__ import annotations

import math

import numpy as np
import pytest

from src.config import HAIGH_PREFACTOR, PHASE_ONE_END_FACTOR
from src.core import RatchetParams, Regime, solve_s_for_gamma
from src.diffusion1d import (
    DiffusionSpec,
    drift,
    drift_start,
    green_object,
    reset_value,
    rescale,
    simulate_clicks,
    simulate_diffusion,
)
from src.diffusion1d.simulate import default_occupation_edges, phase_one_end, phase_one_start
from src.errors import InsufficientDataError, RatchetValueError
from src.utils import make_rng

P = RatchetParams(N=10_000, lam=0.1, s=0.02)  # theta = 5
PI0 = P.pi0
LOGISTIC = [Regime.a_equals_one(), Regime.large_a(), Regime.generic(0.5), Regime.interpolated(0.8)]


# -----------------------------------------
# Drifts
# -----------------------------------------
@pytest.mark.parametrize("regime", LOGISTIC + [Regime.small_a(), Regime.neutral()])
def test_drift_vanishes_at_pi0(regime):
    assert drift(regime, PI0, P) == pytest.approx(0.0, abs=1e-18)


def test_drift_reference_values():
    assert drift(Regime.a_equals_one(), PI0 / 2, P) == pytest.approx(
        HAIGH_PREFACTOR * P.s * PI0 / 4, rel=1e-12
    )
    assert drift(Regime.a_equals_one(), PI0 / 2, P) == pytest.approx(0.58198 * P.s * PI0 / 4, rel=1e-5)
    assert drift(Regime.small_a(), PI0 / 2, P) == pytest.approx(P.lam * PI0 ** 2 / 4, rel=1e-12)


@pytest.mark.parametrize("regime", LOGISTIC + [Regime.small_a()])
def test_drift_is_logistic(regime):
    below = np.linspace(0.01, 0.99, 20) * PI0
    above = np.linspace(1.01, 8.0, 20) * PI0
    assert np.all(drift(regime, below, P) > 0)
    assert np.all(drift(regime, above, P) < 0)


def test_generic_drift_limits():
    ys = np.linspace(0.0, 5 * PI0, 17)
    assert np.allclose(drift(Regime.generic(1.0), ys, P), drift(Regime.a_equals_one(), ys, P), rtol=1e-12, atol=0)
    assert np.allclose(drift(Regime.generic(60.0), ys, P), drift(Regime.large_a(), ys, P), rtol=1e-12, atol=0)


# -----------------------------------------
# Spec and rescaling
# -----------------------------------------
def test_default_upper_cap():
    assert DiffusionSpec(Regime.a_equals_one(), P).y_max == pytest.approx(8 * PI0)
    small = DiffusionSpec(Regime.small_a(), P)
    assert small.y_max == pytest.approx(2 * phase_one_start(P))
    wide = DiffusionSpec(Regime.large_a(), RatchetParams(N=100, lam=0.01, s=0.1))
    assert wide.y_max == 1.0


@pytest.mark.parametrize("y_max", [0.0, 1.5])
def test_upper_cap_validation(y_max):
    with pytest.raises(RatchetValueError):
        DiffusionSpec(Regime.a_equals_one(), P, y_max)


@pytest.mark.parametrize("regime", LOGISTIC + [Regime.small_a(), Regime.neutral()])
def test_affine_coefficients_match_drift(regime):
    spec = DiffusionSpec(regime, P)
    alpha, beta = spec.affine_coefficients()
    for y in (0.3 * PI0, PI0, 3 * PI0):
        assert 2 * spec.drift(y) / spec.sigma2(y) == pytest.approx(alpha - beta * y, rel=1e-12, abs=1e-12)


def test_rescale_examples():
    s = solve_s_for_gamma(10_000, 0.01, 0.5)
    coefficient, description = rescale(Regime.small_a(), RatchetParams(N=10_000, lam=0.01, s=s))
    assert coefficient == pytest.approx(1.0, rel=1e-12)
    assert "small-a" in description

    s = solve_s_for_gamma(10_000, 0.09, 0.5)
    coefficient, _ = rescale(Regime.a_equals_one(), RatchetParams(N=10_000, lam=0.09, s=s))
    assert coefficient == pytest.approx(5.1, abs=0.1)

    s = solve_s_for_gamma(10 ** 27, 0.8, 0.9)
    coefficient, _ = rescale(Regime.a_equals_one(), RatchetParams(N=10 ** 27, lam=0.8, s=s))
    assert coefficient == pytest.approx(5.0, abs=0.25)


def test_small_a_rescale_crosses_one_at_gamma_half():
    for gamma, above_one in ((0.3, True), (0.45, True), (0.55, False), (0.8, False)):
        s = solve_s_for_gamma(10_000, 0.1, gamma)
        coefficient, _ = rescale(Regime.small_a(), RatchetParams(N=10_000, lam=0.1, s=s))
        assert (coefficient > 1) is above_one


# -----------------------------------------
# Monte Carlo clicks
# -----------------------------------------
def test_reset_values():
    assert reset_value(Regime.large_a(), P) == PI0
    assert reset_value(Regime.neutral(), P) == PI0
    assert reset_value(Regime.a_equals_one(), P) == pytest.approx(PHASE_ONE_END_FACTOR * PI0)
    assert reset_value(Regime.small_a(), P) == pytest.approx(5 * PI0 / (1 - PI0))


def test_noiseless_equilibrium_never_clicks():
    for regime in (Regime.a_equals_one(), Regime.large_a(), Regime.small_a()):
        spec = DiffusionSpec(regime, P)
        run = simulate_diffusion(spec, 2_000.0, 0.1, make_rng(1), start=PI0, noise=False, replicates=3)
        assert run.total_clicks == 0
        with pytest.raises(InsufficientDataError):
            run.mean_waiting_time()


def test_noiseless_phase_one_duration():
    spec = DiffusionSpec(Regime.small_a(), P)
    run = simulate_diffusion(spec, 500.0, 0.1, make_rng(1), noise=False)
    expected = math.log((5 / (1 - PI0) - 1) / (PHASE_ONE_END_FACTOR - 1)) / P.s
    assert run.phase_one_time == pytest.approx(expected, abs=0.5)
    assert run.total_clicks == 0


def test_drift_start_skips_phase_one_for_small_a():
    assert drift_start(Regime.small_a(), P) == pytest.approx(phase_one_end(P))
    for regime in (Regime.a_equals_one(), Regime.large_a(), Regime.neutral()):
        assert drift_start(regime, P) == reset_value(regime, P)


def test_phase_one_time_is_left_out_of_the_occupation_histogram():
    spec = DiffusionSpec(Regime.small_a(), P)
    run = simulate_diffusion(spec, 500.0, 0.1, make_rng(1), noise=False, replicates=2)
    assert run.phase_one_time > 100.0
    assert run.histogram.total == pytest.approx(2 * 500.0 - run.phase_one_time, abs=1e-6)
    # no recorded occupation above the phase-one end level
    edges = run.histogram.edges
    assert run.histogram.weights[edges[:-1] > phase_one_end(P)].sum() == 0.0


def test_noisy_run_records_stacked_clicks():
    p = RatchetParams(N=200, lam=0.1, s=0.05)
    spec = DiffusionSpec(Regime.a_equals_one(), p)
    run = simulate_diffusion(spec, 200.0, 0.1, make_rng(21), replicates=8, seed=21)
    assert run.total_clicks > 0
    times = [c.time for c in run.clicks]
    assert times == sorted(times)
    assert times[-1] <= 8 * 200.0
    assert all(c.new_best_freq == pytest.approx(reset_value(spec.regime, p)) for c in run.clicks)
    assert run.waiting_times.size == run.total_clicks
    assert run.histogram.total == pytest.approx(8 * 200.0)
    assert run.click_rate_per_n_generations() == pytest.approx(run.total_clicks * p.N / 1_600.0)
    assert run.summary()["clicks"] == run.total_clicks


def test_runs_are_reproducible():
    p = RatchetParams(N=200, lam=0.1, s=0.05)
    a = simulate_clicks(Regime.small_a(), p, 100.0, 0.1, make_rng(4), replicates=4)
    b = simulate_clicks(Regime.small_a(), p, 100.0, 0.1, make_rng(4), replicates=4)
    assert a == b


def test_simulate_rejects_bad_arguments():
    spec = DiffusionSpec(Regime.a_equals_one(), P)
    with pytest.raises(RatchetValueError):
        simulate_diffusion(spec, 10.0, 1.5, make_rng(1))
    with pytest.raises(RatchetValueError):
        simulate_diffusion(spec, 10.0, 0.1, make_rng(1), start=1.0)
    with pytest.raises(RatchetValueError):
        simulate_diffusion(spec, 10.0, 0.1, None)


def test_occupation_edges_cover_the_domain():
    spec = DiffusionSpec(Regime.a_equals_one(), P)
    edges = default_occupation_edges(spec)
    assert edges[0] == 0.0
    assert edges[-1] == pytest.approx(spec.y_max)
    assert np.diff(edges).max() <= PI0 / 10 + 1e-15


def test_neutral_absorption_time_matches_closed_form():
    # theta = log 4 puts the neutral reset at pi0 = 0.25
    p = RatchetParams(N=100, lam=0.1 * math.log(4.0), s=0.1)
    spec = DiffusionSpec(Regime.neutral(), p, y_max=1.0)
    run = simulate_diffusion(spec, 6_000.0, 0.1, make_rng(77), replicates=500)
    expected = 2 * 100 * 0.25 * (1 - math.log(0.25))
    assert run.mean_waiting_time() == pytest.approx(expected, rel=0.1)


@pytest.mark.slow
def test_a1_click_time_against_green_function_and_step_size():
    s = solve_s_for_gamma(10_000, 0.01, 0.5)
    p = RatchetParams(N=10_000, lam=0.01, s=s)
    spec = DiffusionSpec(Regime.a_equals_one(), p)
    T = green_object(spec, reset_value(spec.regime, p)).expected_time
    horizon = 4 * T
    coarse = simulate_diffusion(spec, horizon, 0.1, make_rng(5), replicates=400).mean_waiting_time()
    fine = simulate_diffusion(spec, horizon, 0.05, make_rng(6), replicates=400).mean_waiting_time()
    assert T / 2 <= coarse <= 2 * T
    assert fine == pytest.approx(coarse, rel=0.1)
