from __future__ import annotations

import math

import numpy as np
import pytest

from src.core import RatchetParams, Regime, solve_s_for_gamma
from src.diffusion1d import DiffusionSpec, simulate_clicks
from src.diffusion1d.simulate import phase_one_end
from src.errors import InsufficientDataError, RatchetValueError
from src.experiments import (
    RateCurve,
    SweepPoint,
    click_entry_histogram,
    fit_power_law,
    occupation_compare,
    phase_plane,
    power_law_sweep,
    rate_upper_bound,
    rate_vs_gamma,
    regime_fit_to_wf,
    run_jobs,
)
from src.experiments.click_entry import mode_near
from src.experiments.occupation import green_for
from src.experiments.phase_plane import regress_phase_plane
from src.experiments.rate_vs_gamma import RatePoint
from src.experiments.sweep import measure_rate
from src.forward_sim.recorders import RecorderConfig
from src.forward_sim.wright_fisher import wf_run
from src.utils import make_rng


def _draw(rng: np.random.Generator, scale: float) -> float:
    return float(rng.random()) * scale


def _point(n_lambda: float, rate: float, clicks: int = 100) -> SweepPoint:
    N = 10_000
    return SweepPoint(
        N=N, lam=n_lambda / N, s=0.01, gamma=0.7, n_lambda=n_lambda, clicks=clicks,
        generations=1e6, rate_per_N_generations=rate, standard_error=0.1, rule_of_thumb=None,
    )


def _rate_point(gamma: float, rate: float, se: float) -> RatePoint:
    return RatePoint(
        gamma=gamma, s=0.01, clicks=10, generations=1e6,
        rate_per_N_generations=rate, standard_error=se, upper_bound=2 * rate,
    )


# -----------------------------------------
# Job pool
# -----------------------------------------
def test_run_jobs_keeps_job_order_and_streams():
    jobs = [{"scale": float(k)} for k in range(1, 7)]
    serial = run_jobs(_draw, jobs, seed=9, workers=1)
    pooled = run_jobs(_draw, jobs, seed=9, workers=3)
    assert serial == pooled
    assert serial[2] == _draw(make_rng(9, 2), 3.0)
    assert run_jobs(_draw, [], seed=9) == []


# -----------------------------------------
# Power-law fit and sweep
# -----------------------------------------
def test_fit_recovers_exact_power_law():
    points = [_point(x, 0.3 * x ** 0.7) for x in (10.0, 30.0, 100.0, 300.0)]
    fit = fit_power_law(points)
    assert fit.slope == pytest.approx(0.7, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(0.3), abs=1e-12)
    assert fit.points_used == 4
    assert all(abs(r) < 1e-12 for r in fit.residuals.values())


def test_fit_skips_points_with_few_clicks():
    points = [_point(x, x ** 0.5) for x in (10.0, 30.0, 100.0)]
    points.append(_point(1_000.0, 1e6, clicks=3))
    fit = fit_power_law(points)
    assert fit.points_used == 3
    assert fit.slope == pytest.approx(0.5, abs=1e-12)


def test_fit_needs_three_usable_points():
    points = [_point(10.0, 1.0), _point(100.0, 5.0), _point(1_000.0, 9.0, clicks=9)]
    with pytest.raises(InsufficientDataError):
        fit_power_law(points)


def test_measure_rate_rejects_unknown_simulator():
    with pytest.raises(RatchetValueError, match="simulator"):
        measure_rate(make_rng(1), 1_000, 0.1, 0.02, 100, "moran")


def test_sweep_rejects_small_n_lambda():
    with pytest.raises(RatchetValueError):
        power_law_sweep(100, 0.7, [0.001, 0.1], generations=100)
    with pytest.raises(RatchetValueError):
        power_law_sweep(100, 0.7, [], generations=100)


def test_sweep_on_moderate_population():
    result = power_law_sweep(1_000, 0.7, [0.05, 0.1, 0.2, 0.4], generations=20_000, seed=3)
    assert [pt.n_lambda for pt in result.points] == pytest.approx([50.0, 100.0, 200.0, 400.0])
    for pt in result.points:
        assert pt.gamma == pytest.approx(0.7, abs=1e-9)
        assert pt.rate_per_N_generations == pytest.approx(pt.clicks * pt.N / pt.generations)
    assert result.fit is not None
    assert result.fit.slope > 0
    frame = result.to_frame()
    assert list(frame["lambda"]) == pytest.approx([0.05, 0.1, 0.2, 0.4])
    assert frame["used_in_fit"].all()
    assert result.manifest()["simulator"] == "wf"


def test_sweep_is_reproducible_across_worker_counts():
    kwargs = dict(generations=500, seed=11, simulator="diff:a1")
    try:
        a = power_law_sweep(1_000, 0.7, [0.05, 0.1, 0.2], workers=1, **kwargs).points
    except InsufficientDataError as exc:
        a = exc.partial.points
    try:
        b = power_law_sweep(1_000, 0.7, [0.05, 0.1, 0.2], workers=2, **kwargs).points
    except InsufficientDataError as exc:
        b = exc.partial.points
    assert a == b


def test_sweep_without_enough_clicks_keeps_partial_points():
    with pytest.raises(InsufficientDataError) as info:
        power_law_sweep(1_000, 0.3, [0.01, 0.02, 0.04], generations=20, seed=1)
    partial = info.value.partial
    assert len(partial.points) == 3
    assert partial.fit is None
    assert partial.to_frame()["fitted_slope"].isna().all()


@pytest.mark.slow
def test_sweep_slope_matches_gamma():
    result = power_law_sweep(
        10_000, 0.7, [1e-3, 3e-3, 1e-2, 3e-2, 1e-1], generations=1_000_000, seed=1, workers=None
    )
    assert result.fit.slope == pytest.approx(0.7, abs=0.15)


@pytest.mark.slow
def test_sweep_at_gamma_half_falls_below_fit_past_one_thousand():
    result = power_law_sweep(
        10_000, 0.5, [1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1, 1.0],
        generations=1_000_000, seed=3, workers=None,
    )
    inside = [pt for pt in result.points if pt.n_lambda < 1_500]
    beyond = [pt for pt in result.points if pt.n_lambda >= 1_500]
    fit = fit_power_law(inside)
    assert len(beyond) == 2
    for pt in beyond:
        assert pt.rate_per_N_generations < math.exp(fit.intercept) * pt.n_lambda ** fit.slope


# -----------------------------------------
# Rate against gamma
# -----------------------------------------
def test_zero_click_upper_bound():
    assert rate_upper_bound(0, 1_000_000, 10_000) == pytest.approx(0.03)
    assert rate_upper_bound(0, 0, 10_000) == math.inf


def test_poisson_upper_bound_exceeds_observed_rate():
    for clicks in (1, 10, 100):
        bound = rate_upper_bound(clicks, 1e5, 1_000)
        assert bound > clicks * 1_000 / 1e5
    assert rate_upper_bound(10, 1e5, 1_000, level=0.99) > rate_upper_bound(10, 1e5, 1_000)


def test_rate_curve_monotonicity_check():
    rising = RateCurve(1_000, 100.0, "wf", 1, [_rate_point(0.5, 1.0, 0.1), _rate_point(0.7, 3.0, 0.2)])
    assert rising.is_nondecreasing()
    assert rising.rate(0.7) == 3.0
    with pytest.raises(KeyError):
        rising.rate(0.6)

    noisy = RateCurve(1_000, 100.0, "wf", 1, [_rate_point(0.5, 1.0, 0.3), _rate_point(0.7, 0.8, 0.3)])
    assert noisy.is_nondecreasing()
    falling = RateCurve(1_000, 100.0, "wf", 1, [_rate_point(0.5, 3.0, 0.1), _rate_point(0.7, 1.0, 0.1)])
    assert not falling.is_nondecreasing()


def test_rate_vs_gamma_points():
    curve = rate_vs_gamma(1_000, 100.0, [0.6, 0.8], generations=2_000, seed=5)
    assert [pt.gamma for pt in curve.points] == [0.6, 0.8]
    assert curve.points[0].s > curve.points[1].s
    for pt in curve.points:
        assert pt.upper_bound >= pt.rate_per_N_generations
    assert set(curve.to_frame().columns) >= {"gamma", "clicks", "upper_bound"}
    assert curve.manifest()["gammas"] == [0.6, 0.8]


@pytest.mark.slow
def test_rate_rises_steeply_through_gamma_half():
    curve = rate_vs_gamma(
        10_000, 100.0, [0.3, 0.4, 0.6, 0.7], generations=1_000_000, seed=2, workers=None
    )
    assert curve.rate(0.4) <= curve.rate(0.6) / 10
    assert curve.is_nondecreasing()


@pytest.mark.slow
def test_gamma_point_three_gives_zero_click_rate():
    N, lam = 10_000, 0.01
    pt = measure_rate(make_rng(3), N, lam, solve_s_for_gamma(N, lam, 0.3), 1_000_000, "wf")
    assert pt.clicks == 0
    assert pt.rate_per_N_generations == 0.0
    assert rate_upper_bound(pt.clicks, pt.generations, N) == pytest.approx(3 * N / pt.generations)


# -----------------------------------------
# Phase plane
# -----------------------------------------
def test_regression_on_synthetic_line():
    rng = make_rng(3)
    pi0, theta, slope = 0.02, 3.9, -30.0
    y0 = rng.uniform(0.5 * pi0, 1.5 * pi0, 5_000)
    m1 = theta + slope * (y0 - pi0) + rng.normal(0.0, 0.05, y0.size)
    fitted, _, fitted_se, _, at_pi0, at_pi0_se = regress_phase_plane(y0, m1, pi0)
    assert abs(fitted - slope) <= 4 * fitted_se
    assert abs(at_pi0 - theta) <= 4 * at_pi0_se
    assert at_pi0_se < 0.01


def test_phase_plane_needs_enough_samples():
    p = RatchetParams(N=1_000, lam=0.1, s=solve_s_for_gamma(1_000, 0.1, 0.6))
    with pytest.raises(InsufficientDataError):
        phase_plane(p, 500, make_rng(1))


def test_phase_plane_reports_regime_comparison():
    p = RatchetParams(N=1_000, lam=0.1, s=solve_s_for_gamma(1_000, 0.1, 0.6))
    result = phase_plane(p, 12_000, make_rng(4), seed=4)
    assert result.samples == 1_200
    assert set(result.predictions) == {"small-a", "a1", "large-a"}
    assert result.best_regime in result.predictions
    frame = result.to_frame()
    assert list(frame["regime"]) == ["fitted", "small-a", "a1", "large-a"]
    assert len(result.samples_frame()) == 1_200
    assert result.manifest()["samples"] == 1_200


@pytest.mark.slow
def test_phase_plane_slope_near_a1_prediction():
    p = RatchetParams(N=10_000, lam=0.1, s=solve_s_for_gamma(10_000, 0.1, 0.58))
    result = phase_plane(p, 300_000, make_rng(8), seed=8)
    assert result.slope == pytest.approx(-0.582 / p.pi0, rel=0.3)
    assert result.value_at_pi0 == pytest.approx(p.theta, rel=0.1)


@pytest.mark.slow
def test_phase_plane_prefers_large_a_when_clicks_are_rare():
    p = RatchetParams(N=10_000, lam=0.1, s=solve_s_for_gamma(10_000, 0.1, 0.4))
    result = phase_plane(p, 300_000, make_rng(9), seed=9)
    assert result.best_regime == "large-a"


# -----------------------------------------
# Occupation density
# -----------------------------------------
def test_occupation_compare_small_run():
    p = RatchetParams(N=200, lam=0.1, s=0.05)
    result = occupation_compare(
        p, Regime.a_equals_one(), 40, make_rng(6), replicates=16, wf_generations=2_000, seed=6
    )
    assert result.partial == (result.clicks < 40)
    assert result.mc_masses.sum() == pytest.approx(1.0, abs=1e-9)
    assert result.green_masses.sum() == pytest.approx(1.0, abs=1e-6)
    assert 0.0 <= result.l1_green <= 2.0
    assert result.wf_masses.sum() == pytest.approx(1.0, abs=1e-9)
    assert list(result.to_frame().columns) == ["bin_lo", "bin_hi", "diffusion_mc", "green", "wf"]
    assert result.manifest()["regime"] == "a1"


def test_regime_fit_to_wf_scores_every_regime():
    p = RatchetParams(N=500, lam=0.1, s=0.04)
    scores = regime_fit_to_wf(p, [Regime.a_equals_one(), Regime.large_a()], 2_000, make_rng(2))
    assert set(scores) == {"a1", "large-a"}
    assert all(0.0 <= v <= 2.0 for v in scores.values())


@pytest.mark.slow
def test_occupation_monte_carlo_matches_green_function():
    p = RatchetParams(N=1_000, lam=0.1, s=0.03)
    result = occupation_compare(
        p, Regime.a_equals_one(), 100_000, make_rng(12), replicates=1_024, seed=12
    )
    assert not result.partial
    assert result.l1_green <= 0.1


def test_small_a_green_function_starts_after_phase_one():
    p = RatchetParams(N=1_000, lam=0.1, s=0.03)
    green = green_for(DiffusionSpec(Regime.small_a(), p))
    assert green.x0 == pytest.approx(phase_one_end(p))
    assert green_for(DiffusionSpec(Regime.large_a(), p)).x0 == p.pi0


@pytest.mark.slow
def test_small_a_monte_carlo_matches_its_green_function():
    p = RatchetParams(N=1_000, lam=0.1, s=0.03)
    result = occupation_compare(
        p, Regime.small_a(), 100_000, make_rng(13), replicates=1_024, seed=13
    )
    assert not result.partial
    assert result.l1_green <= 0.1


@pytest.mark.slow
@pytest.mark.parametrize("gamma,better,worse", [(0.5, "a1", "small-a"), (0.9, "small-a", "a1")])
def test_regime_fit_ordering_follows_clicking_frequency(gamma, better, worse):
    p = RatchetParams(N=10_000, lam=0.1, s=solve_s_for_gamma(10_000, 0.1, gamma))
    scores = regime_fit_to_wf(p, [Regime.small_a(), Regime.a_equals_one()], 500_000, make_rng(14))
    assert scores[better] < scores[worse]


# -----------------------------------------
# Diffusion against Wright-Fisher
# -----------------------------------------
@pytest.mark.slow
@pytest.mark.parametrize("n_lambda", [30.0, 100.0])
def test_a1_click_time_within_factor_two_of_wright_fisher(n_lambda):
    N = 10_000
    lam = n_lambda / N
    p = RatchetParams(N=N, lam=lam, s=solve_s_for_gamma(N, lam, 0.5))
    quiet = RecorderConfig(scatter_interval=400_000, fitness_interval=400_000)
    wf_time = wf_run(p, 400_000, quiet, make_rng(40)).mean_interclick_time()
    assert wf_time is not None

    replicates, horizon = 64, 50_000.0
    clicks = simulate_clicks(Regime.a_equals_one(), p, horizon, 0.5, make_rng(41), replicates=replicates)
    assert len(clicks) >= 20
    diffusion_time = replicates * horizon / len(clicks)
    assert wf_time / 2 <= diffusion_time <= 2 * wf_time


# -----------------------------------------
# Click entry
# -----------------------------------------
def test_click_entry_histogram():
    p = RatchetParams(N=1_000, lam=0.1, s=solve_s_for_gamma(1_000, 0.1, 0.7))
    result = click_entry_histogram(p, 20, make_rng(5), max_generations=50_000, seed=5)
    assert result.clicks >= 20
    assert not result.partial
    assert result.histogram.masses().sum() == pytest.approx(1.0, abs=1e-9)
    assert result.pi1 == pytest.approx(p.theta * p.pi0)
    assert len(result.to_frame()) == 60


def test_click_entry_without_clicks():
    with pytest.raises(InsufficientDataError):
        click_entry_histogram(RatchetParams.degenerate(100, 0.0, 0.05), 5, make_rng(1), max_generations=100)


def test_mode_near():
    assert mode_near(1.0, 1.0)
    assert not mode_near(2.0, 1.0)
    assert not mode_near(math.nan, 1.0)


@pytest.mark.slow
def test_click_entry_mode_follows_clicking_frequency():
    frequent = RatchetParams(N=10_000, lam=0.1, s=solve_s_for_gamma(10_000, 0.1, 0.8))
    result = click_entry_histogram(frequent, 1_000, make_rng(31), seed=31)
    assert mode_near(result.mode(), result.pi1)

    rare = RatchetParams(N=10_000, lam=0.01, s=solve_s_for_gamma(10_000, 0.01, 0.45))
    result = click_entry_histogram(rare, 300, make_rng(32), max_generations=5_000_000, seed=32)
    assert mode_near(result.mode(), result.pi0)
