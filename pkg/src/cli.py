# src/cli.py
"""
Command-line entry point.

Exit codes: 0 success, 2 invalid input (including argparse usage errors),
3 numerical failure. Artifacts are `<out>.<name>.csv` plus `<out>.manifest`.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.artifacts import ArtifactWriter, build_manifest, params_dict, read_profile
from src.config import TOOL_NAME, TOOL_VERSION, DiffusionDefaults, ExperimentDefaults, WindowLimits
from src.core import (
    Regime,
    derive_params,
    haigh_click_time,
    rule_of_thumb_rate,
    threshold_n_lambda,
)
from src.deterministic import (
    TypeProfile,
    cumulants_of,
    evolve_closed,
    evolve_discrete,
    evolve_ode,
    mean_fitness,
    pi_tilde,
    poisson_profile,
    ppa,
)
from src.diffusion1d.green import green_object
from src.diffusion1d.simulate import drift_start, simulate_diffusion
from src.diffusion1d.model import DiffusionSpec, rescale
from src.errors import InsufficientDataError, NumericalError, RatchetValueError
from src.experiments.click_entry import click_entry_histogram
from src.experiments.occupation import occupation_compare
from src.experiments.phase_plane import phase_plane
from src.experiments.rate_vs_gamma import rate_vs_gamma
from src.experiments.sweep import power_law_sweep
from src.forward_sim.diagnostics import moment_diagnostics
from src.forward_sim.fleming_viot import fv_path, fv_run
from src.forward_sim.recorders import RunStats
from src.forward_sim.wright_fisher import wf_run
from src.plotting import plot_csv
from src.run_config import RunConfig, resolve_config
from src.utils import make_rng, poisson_window

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3


# =============================================================================
# Parser
# =============================================================================
def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from None


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run configuration")
    g.add_argument("--n", type=int, default=None, help="population size N")
    g.add_argument("--lambda", dest="lambda", type=float, default=None, help="mutation rate per generation")
    g.add_argument("--s", type=float, default=None, help="selection coefficient (or give --gamma)")
    g.add_argument("--gamma", type=float, default=None, help="derive s from gamma at fixed N, lambda")
    g.add_argument("--generations", type=float, default=None)
    g.add_argument("--horizon", type=float, default=None, help="time horizon in generations")
    g.add_argument("--dt", type=float, default=None)
    g.add_argument("--regime", default=None, help="small-a | a1 | large-a | neutral | generic:<A> | interp:<k>")
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out", default=None, help="output path prefix")
    g.add_argument("--workers", type=int, default=None)
    g.add_argument("--format", default=None, help="csv, svg or csv,svg")
    g.add_argument("--config", type=Path, default=None, help="flat key = value config file")
    g.add_argument("-v", "--verbose", action="store_true")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="ratchet", description="Muller's ratchet toolkit: simulators, diffusions and experiments."
    )
    parser.add_argument("--version", action="version", version=f"{TOOL_NAME} {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("derive", parents=[common], help="derived parameters and rescalings")

    sub.add_parser("wf", parents=[common], help="Wright-Fisher run")

    fv = sub.add_parser("fv", parents=[common], help="Fleming-Viot run")
    fv.add_argument("--diagnostics-steps", type=int, default=None,
                    help="also run moment diagnostics on a path of this many steps")

    det = sub.add_parser("det", parents=[common], help="deterministic evolution of a profile")
    det.add_argument("--t", type=float, required=True, help="time (generations)")
    det.add_argument("--start", choices=["pi-tilde", "poisson", "ppa"], default="pi-tilde")
    det.add_argument("--y0", type=float, default=None, help="best-class frequency for --start ppa")
    det.add_argument("--profile", type=Path, default=None, help="start from a profile CSV")
    det.add_argument("--method", choices=["closed", "ode", "discrete"], default="closed")
    det.add_argument("--ode-dt", type=float, default=None)
    det.add_argument("--cumulants", type=int, default=4, help="cumulant order reported")

    d1 = sub.add_parser("diff1d", parents=[common], help="one-dimensional diffusion clicks")
    d1.add_argument("--replicates", type=int, default=DiffusionDefaults.REPLICATES)
    d1.add_argument("--threshold", type=float, default=0.0, help="click threshold (e.g. 1/(2N))")
    d1.add_argument("--start", type=float, default=None)
    d1.add_argument("--y-max", type=float, default=None)

    gr = sub.add_parser("green", parents=[common], help="Green function and expected click time")
    gr.add_argument("--x0", type=float, default=None)
    gr.add_argument("--grid-points", type=int, default=200)
    gr.add_argument("--y-max", type=float, default=None)

    sw = sub.add_parser("sweep", parents=[common], help="power-law sweep over lambda")
    sw.add_argument("--lambdas", type=_float_list, required=True)
    sw.add_argument("--simulator", default="wf", help="wf | fv | diff:<regime>")

    rg = sub.add_parser("rate-vs-gamma", parents=[common], help="click rate across gamma")
    rg.add_argument("--n-lambda", type=float, required=True)
    rg.add_argument("--gammas", type=_float_list, required=True)
    rg.add_argument("--simulator", default="wf")

    ph = sub.add_parser("phase", parents=[common], help="M1 on Y0 regression")
    ph.add_argument("--scatter-interval", type=int, default=10)

    oc = sub.add_parser("occupation", parents=[common], help="occupation density comparison")
    oc.add_argument("--clicks", type=int, default=10_000)
    oc.add_argument("--replicates", type=int, default=DiffusionDefaults.REPLICATES)
    oc.add_argument("--wf-generations", type=int, default=None)

    ch = sub.add_parser("click-hist", parents=[common], help="best-class frequency at clicks")
    ch.add_argument("--clicks", type=int, default=1_000)

    pl = sub.add_parser("plot", parents=[common], help="render artifact CSVs to SVG")
    pl.add_argument("csv", nargs="+", type=Path)
    pl.add_argument("--x", default=None)
    pl.add_argument("--y", type=lambda t: [c for c in t.split(",") if c], default=None)
    pl.add_argument("--logx", action="store_true")
    pl.add_argument("--logy", action="store_true")
    return parser


# =============================================================================
# Output helpers
# =============================================================================
class Emitter:
    """Writes CSVs (and SVGs when requested) for one command."""

    def __init__(self, cfg: RunConfig, default_prefix: str, manifest: Dict[str, Any]):
        self.cfg = cfg
        manifest = dict(manifest)
        manifest["config"] = cfg.as_dict()
        self.writer = ArtifactWriter(cfg.out or default_prefix, manifest)
        self.svgs: List[Path] = []

    def emit(self, name: str, frame: pd.DataFrame, log_x: bool = False, log_y: bool = False,
             x: Optional[str] = None, ys: Optional[List[str]] = None) -> None:
        path = self.writer.write(name, frame)
        if "svg" in self.cfg.formats and len(frame):
            self.svgs.append(plot_csv(path, x=x, ys=ys, log_x=log_x, log_y=log_y))

    def finish(self, **extra: Any) -> None:
        self.writer.finish(**extra)
        for path in self.writer.paths + self.svgs:
            print(f"wrote {path}")


def _rng(cfg: RunConfig) -> np.random.Generator:
    return make_rng(cfg.seed)


def _regime(cfg: RunConfig, default: Optional[str] = None) -> Regime:
    text = cfg.regime or default
    if text is None:
        raise RatchetValueError(f"'{cfg.command}' needs --regime")
    return Regime.parse(text)


def _run_frames(em: Emitter, run: RunStats) -> None:
    em.emit("clicks", run.clicks_frame(), x="time", ys=["new_best_freq"])
    em.emit("hist", run.hist_frame(), x="bin_lo", ys=["mass"])
    em.emit("scatter", run.scatter_frame(), x="y0", ys=["m1"])
    em.emit("fitness", run.fitness_frame(), x="generation", ys=["mean_fitness"])


# =============================================================================
# Commands
# =============================================================================
def cmd_derive(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.params()
    d = derive_params(p, require_gamma=False)
    lines = {
        "theta": d.theta,
        "pi0": d.pi0,
        "n0": d.n0,
        "gamma": d.gamma,
        "tau": d.tau,
        "haigh": haigh_click_time(p),
    }
    if d.gamma is not None:
        lines["rule_of_thumb_rate"] = rule_of_thumb_rate(p)
        if 0 < d.gamma < 1:
            lines["threshold_n_lambda"] = threshold_n_lambda(d.gamma)
        if cfg.regime:
            coefficient, description = rescale(_regime(cfg), p)
            lines["rescaled_coefficient"] = coefficient
            print(description)
    for key, value in lines.items():
        print(f"{key}={'NA' if value is None else format(value, '.10g')}")
    if cfg.out:
        em = Emitter(cfg, "derive", build_manifest("derive", cfg.seed, params=params_dict(p)))
        em.emit("derive", pd.DataFrame([lines]))
        em.finish()
    return EXIT_OK


def cmd_wf(cfg: RunConfig, args: argparse.Namespace) -> int:
    cfg.require("generations")
    p = cfg.params()
    run = wf_run(p, int(cfg.generations), None, _rng(cfg), seed=cfg.seed)
    em = Emitter(cfg, "wf", build_manifest("wf", cfg.seed, params=params_dict(p)))
    _run_frames(em, run)
    em.finish(summary=run.summary())
    print(f"clicks={run.total_clicks} rate_per_N_generations={run.click_rate_per_n_generations():.10g}")
    return EXIT_OK


def cmd_fv(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.params()
    horizon = cfg.horizon or cfg.generations
    if horizon is None:
        raise RatchetValueError("'fv' needs --horizon or --generations")
    rng = _rng(cfg)
    run = fv_run(p, horizon, cfg.dt, None, rng, seed=cfg.seed)
    em = Emitter(cfg, "fv", build_manifest("fv", cfg.seed, params=params_dict(p), dt=cfg.dt))
    _run_frames(em, run)
    extra: Dict[str, Any] = {"summary": run.summary()}
    if args.diagnostics_steps:
        path = fv_path(poisson_profile(p.theta), p, args.diagnostics_steps, cfg.dt, rng)
        report = moment_diagnostics(path, p, cfg.dt)
        em.emit("moments", report.to_frame())
        extra["moments_within_4se"] = report.within(4.0)
    em.finish(**extra)
    print(f"clicks={run.total_clicks} rate_per_N_generations={run.click_rate_per_n_generations():.10g}")
    return EXIT_OK


def _det_start(cfg: RunConfig, args: argparse.Namespace, theta: float) -> TypeProfile:
    if args.profile is not None:
        return read_profile(args.profile)
    if args.start == "poisson":
        return poisson_profile(theta)
    if args.start == "ppa":
        if args.y0 is None:
            raise RatchetValueError("--start ppa needs --y0")
        return ppa(args.y0, theta)
    return pi_tilde(theta)


def cmd_det(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.params()
    x0 = _det_start(cfg, args, p.theta)
    if args.method == "closed":
        x = evolve_closed(x0, p, args.t)
    elif args.method == "ode":
        dt = args.ode_dt or 0.1 / max(p.s * (len(x0) + poisson_window(p.theta)), p.lam)
        x = evolve_ode(x0, p, args.t, dt)
    else:
        x = evolve_discrete(x0, p, int(round(args.t)))
    kappa = cumulants_of(x, min(int(args.cumulants), WindowLimits.MAX_CUMULANT_ORDER))
    summary = {
        "t": args.t,
        "method": args.method,
        "offset": x.offset,
        "x0": x.best,
        "m1": x.mean(),
        "absolute_m1": x.absolute_mean(),
        "mean_fitness": mean_fitness(x, p.s),
    }
    summary.update({f"kappa_{k}": kappa[k] for k in range(kappa.order + 1)})
    em = Emitter(cfg, "det", build_manifest("det", cfg.seed, params=params_dict(p), t=args.t,
                                             method=args.method, start=args.start))
    em.emit("profile", x.to_frame(), x="absolute_class_index", ys=["frequency"])
    em.emit("summary", pd.DataFrame([summary]))
    em.finish()
    print(f"x0={x.best:.10g} m1={x.mean():.10g}")
    return EXIT_OK


def cmd_diff1d(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.params()
    horizon = cfg.horizon or cfg.generations
    if horizon is None:
        raise RatchetValueError("'diff1d' needs --horizon or --generations")
    spec = DiffusionSpec(_regime(cfg), p, args.y_max)
    run = simulate_diffusion(
        spec, horizon, cfg.dt, _rng(cfg),
        replicates=args.replicates, start=args.start, threshold=args.threshold, seed=cfg.seed,
    )
    em = Emitter(cfg, "diff1d", build_manifest("diff1d", cfg.seed, params=params_dict(p),
                                               **run.summary()))
    em.emit("clicks", run.clicks_frame(), x="time", ys=["new_best_freq"])
    em.emit("waiting", run.waiting_frame().reset_index(), x="index", ys=["waiting_time"])
    em.emit("hist", run.histogram.to_frame(), x="bin_lo", ys=["mass"])
    em.finish()
    print(f"clicks={run.total_clicks} mean_waiting_time={run.summary()['mean_waiting_time']}")
    return EXIT_OK


def cmd_green(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.params()
    spec = DiffusionSpec(_regime(cfg), p, args.y_max)
    x0 = args.x0 if args.x0 is not None else min(drift_start(spec.regime, p), spec.y_max)
    green = green_object(spec, x0)
    grid = np.linspace(spec.y_max / args.grid_points, spec.y_max, args.grid_points)
    em = Emitter(cfg, "green", build_manifest("green", cfg.seed, params=params_dict(p),
                                              regime=spec.regime.label, x0=x0, y_max=spec.y_max,
                                              expected_click_time=green.expected_time))
    em.emit("green", green.to_frame(grid), x="y", ys=["occupation_density"])
    em.finish()
    print(f"expected_click_time={green.expected_time:.10g}")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig, args: argparse.Namespace) -> int:
    cfg.require("N", "gamma")
    generations = cfg.generations or ExperimentDefaults.GENERATIONS
    em_prefix = "sweep"
    try:
        result = power_law_sweep(cfg.N, cfg.gamma, args.lambdas, generations,
                                 args.simulator, cfg.seed, cfg.workers, cfg.dt)
    except InsufficientDataError as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None:
            em = Emitter(cfg, em_prefix, partial.manifest())
            em.emit(em_prefix, partial.to_frame(), log_x=True, log_y=True,
                    x="n_lambda", ys=["rate_per_N_generations"])
            em.finish(fit_error=str(exc))
        raise
    em = Emitter(cfg, em_prefix, result.manifest())
    em.emit(em_prefix, result.to_frame(), log_x=True, log_y=True,
            x="n_lambda", ys=["rate_per_N_generations"])
    em.finish()
    print(f"slope={result.fit.slope:.6g} slope_se={result.fit.slope_se:.3g}")
    return EXIT_OK


def cmd_rate_vs_gamma(cfg: RunConfig, args: argparse.Namespace) -> int:
    cfg.require("N")
    generations = cfg.generations or ExperimentDefaults.GENERATIONS
    curve = rate_vs_gamma(cfg.N, args.n_lambda, args.gammas, generations, cfg.seed,
                          cfg.workers, args.simulator, cfg.dt)
    em = Emitter(cfg, "rates", curve.manifest())
    em.emit("rates", curve.to_frame(), x="gamma", ys=["rate_per_N_generations", "upper_bound"])
    em.finish()
    for pt in curve.points:
        print(f"gamma={pt.gamma:g} rate={pt.rate_per_N_generations:.6g} upper={pt.upper_bound:.6g}")
    return EXIT_OK


def cmd_phase(cfg: RunConfig, args: argparse.Namespace) -> int:
    cfg.require("generations")
    p = cfg.params()
    result = phase_plane(p, int(cfg.generations), _rng(cfg), args.scatter_interval, seed=cfg.seed)
    em = Emitter(cfg, "phase", result.manifest())
    em.emit("phase", result.to_frame())
    em.emit("samples", result.samples_frame(), x="y0", ys=["m1"])
    em.finish()
    print(f"slope={result.slope:.6g} slope_se={result.slope_se:.3g} best={result.best_regime}")
    return EXIT_OK


def cmd_occupation(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.params()
    result = occupation_compare(
        p, _regime(cfg, "a1"), args.clicks, _rng(cfg),
        replicates=args.replicates, dt=cfg.dt, horizon=cfg.horizon,
        wf_generations=args.wf_generations, seed=cfg.seed,
    )
    em = Emitter(cfg, "occupation", result.manifest())
    em.emit("occupation", result.to_frame(), x="bin_lo")
    em.finish()
    print(f"l1_green={result.l1_green:.6g} clicks={result.clicks} partial={result.partial}")
    return EXIT_OK


def cmd_click_hist(cfg: RunConfig, args: argparse.Namespace) -> int:
    p = cfg.params()
    generations = int(cfg.generations or ExperimentDefaults.GENERATIONS)
    result = click_entry_histogram(p, args.clicks, _rng(cfg), max_generations=generations,
                                   seed=cfg.seed)
    em = Emitter(cfg, "click-hist", result.manifest())
    em.emit("click-hist", result.to_frame(), x="bin_lo", ys=["mass"])
    em.finish()
    print(f"mode={result.mode():.6g} pi0={result.pi0:.6g} pi1={result.pi1:.6g}")
    return EXIT_OK


def cmd_plot(cfg: RunConfig, args: argparse.Namespace) -> int:
    for csv_path in args.csv:
        out = None
        if cfg.out and len(args.csv) == 1:
            out = Path(cfg.out).with_suffix(".svg")
        path = plot_csv(csv_path, out, x=args.x, ys=args.y, log_x=args.logx, log_y=args.logy)
        print(f"wrote {path}")
    return EXIT_OK


COMMANDS: Dict[str, Callable[[RunConfig, argparse.Namespace], int]] = {
    "derive": cmd_derive,
    "wf": cmd_wf,
    "fv": cmd_fv,
    "det": cmd_det,
    "diff1d": cmd_diff1d,
    "green": cmd_green,
    "sweep": cmd_sweep,
    "rate-vs-gamma": cmd_rate_vs_gamma,
    "phase": cmd_phase,
    "occupation": cmd_occupation,
    "click-hist": cmd_click_hist,
    "plot": cmd_plot,
}


# =============================================================================
# Entry
# =============================================================================
def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def run_command(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else EXIT_INVALID
        return EXIT_OK if code == 0 else EXIT_INVALID

    _configure_logging(args.verbose)
    try:
        flags = {k: v for k, v in vars(args).items() if k != "config"}
        cfg = resolve_config(args.command, flags, args.config)
        if cfg.dt is not None and not 0 < cfg.dt <= DiffusionDefaults.MAX_DT:
            raise RatchetValueError(f"--dt must lie in (0, {DiffusionDefaults.MAX_DT:g}], got {cfg.dt}")
        logger.info("command=%s seed=%d", cfg.command, cfg.seed)
        return COMMANDS[args.command](cfg, args)
    except RatchetValueError as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        if args.verbose:
            logger.exception("numerical failure in '%s'", args.command)
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        logger.exception("I/O failure in '%s'", args.command)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> int:
    return run_command(sys.argv[1:])


if __name__ == "__main__":
    sys.exit(main())
