"""heatid command-line interface.

    heatid simulate|identify|regress|validate|baseline --config CFG [--data CSV] [--out DIR] [--seed N]

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .hyperlaplace import laplace_precision, map_estimate
from .io import (
    DataFormatError, ResultsDocument, read_measurements, read_smoothed, write_csv,
    write_measurements, write_smoothed,
)
from .regression import PolyRegressionPosterior, fit_components, posterior_predictive
from .simulator import (
    IntegrationBlowup, identified_convection, residual_baseline, simulate, synthesize_measurements,
    true_convection, validate_forward, zero_convection,
)
from .smoother import run_smoother

logger = logging.getLogger("heatid")

MEASUREMENTS = "measurements.csv"
TRUTH = "truth.csv"
SMOOTHED = "smoothed_states.csv"
RESULTS = "results.json"
RHAT_GRID = "rhat_grid.csv"
ABS_ERROR = "abs_error.csv"
RESIDUALS = "residuals.csv"


def _results(out: Path, cfg: RunConfig, fresh: bool = False) -> ResultsDocument:
    doc = ResultsDocument() if fresh else ResultsDocument.load(out / RESULTS)
    if doc.provenance.get("config_hash") not in (None, cfg.hash):
        logger.warning("results.json was produced with a different config; starting a new document")
        doc = ResultsDocument()
    doc.stamp(cfg.hash, cfg.seed)
    return doc


def _data(args, cfg: RunConfig, out: Path):
    path = Path(args.data) if args.data else out / MEASUREMENTS
    return read_measurements(path, cfg.n_components, cfg.measured, cfg.allow_dropout)


def cmd_simulate(cfg: RunConfig, args, out: Path) -> dict:
    sc = cfg.training
    conv = true_convection if cfg.training_convection == "cubic" else zero_convection
    traj = simulate(sc, conv)
    data = synthesize_measurements(sc, traj, seed=cfg.seed)
    y = data.measurements[:, cfg.measured]
    data = type(data)(dt=data.dt, inputs=data.inputs, measurements=y)
    write_measurements(out / MEASUREMENTS, data, cfg.measured)
    D = cfg.n_components
    write_csv(out / TRUTH, ["t"] + [f"T_{i + 1}" for i in range(D)], np.column_stack([sc.times, traj]))
    return {"rows": data.n_steps, "path": str(out / MEASUREMENTS)}


def cmd_identify(cfg: RunConfig, args, out: Path) -> dict:
    data = _data(args, cfg, out)
    mc = cfg.model_config()
    opt = map_estimate(data, mc, cfg.priors, cfg.init_psi, xatol=cfg.xatol, max_evals=cfg.max_evals)
    lap = laplace_precision(opt.psi, data, mc, cfg.priors, cfg.fd_rel_step, cfg.fd_abs_floor)
    res = run_smoother(data, mc.system(opt.psi, data.dt))
    write_smoothed(out / SMOOTHED, data.times, data.ambient, res.smoothed_means, res.smoothed_covs)

    doc = _results(out, cfg, fresh=True)
    doc.psi_hat = {"gamma": opt.psi.gamma, "length": opt.psi.length}
    doc.laplace = {
        "precision": lap.precision.tolist(),
        "covariance": None if lap.covariance is None else lap.covariance.tolist(),
        "std": None if lap.covariance is None else lap.std.tolist(),
        "coefficient_of_variation": None if lap.covariance is None else lap.coefficient_of_variation.tolist(),
        "reliable": lap.reliable,
    }
    doc.log_marginal = res.log_marginal
    doc.log_posterior = lap.log_posterior
    doc.optimizer = {"converged": opt.converged, "n_evals": opt.n_evals}
    doc.save(out / RESULTS)
    return {"gamma": opt.psi.gamma, "length": opt.psi.length, "log_marginal": res.log_marginal,
            "laplace_reliable": lap.reliable}


def cmd_regress(cfg: RunConfig, args, out: Path) -> dict:
    D = cfg.n_components
    path = Path(args.data) if args.data else out / SMOOTHED
    times, ambient, means, var = read_smoothed(path, D)
    covs = np.zeros((means.shape[0], 2 * D, 2 * D))
    idx = np.arange(2 * D)
    covs[:, idx, idx] = var
    posts = fit_components(means, covs, ambient, D, cfg.basis, cfg.reg_prior_mean, cfg.reg_prior_cov)

    rows = []
    Ta = float(np.median(ambient))
    for i, post in enumerate(posts):
        grid = np.linspace(means[:, i].min(), means[:, i].max(), cfg.grid_points)
        mean, pvar = posterior_predictive(post, grid, Ta)
        rows += [(i + 1, T, Ta, mu, np.sqrt(v)) for T, mu, v in zip(grid, mean, pvar)]
    write_csv(out / RHAT_GRID, ["component", "T", "T_a", "mean", "std"], rows)

    doc = _results(out, cfg)
    doc.regression = [p.to_dict() for p in posts]
    doc.save(out / RESULTS)
    return {"mu": [p.mu.tolist() for p in posts], "noise_var": [p.noise_var for p in posts]}


def _validation_scenario(cfg: RunConfig):
    if cfg.validation is None:
        raise ConfigError("scenarios.validation is required for this command")
    return cfg.validation


def cmd_validate(cfg: RunConfig, args, out: Path) -> dict:
    doc = _results(out, cfg)
    if not doc.regression:
        raise ConfigError(f"{out / RESULTS} has no regression posteriors; run 'regress' first")
    posts = [PolyRegressionPosterior.from_dict(d) for d in doc.regression]
    val = validate_forward(identified_convection(posts), _validation_scenario(cfg))
    D = cfg.n_components
    header = (["t"] + [f"T_true_{i + 1}" for i in range(D)] + [f"T_id_{i + 1}" for i in range(D)]
              + [f"abs_err_{i + 1}" for i in range(D)])
    write_csv(out / ABS_ERROR, header, np.column_stack([val.times, val.reference, val.trajectory, val.abs_error]))
    doc.rmse["gplfm"] = val.rmse
    doc.save(out / RESULTS)
    return {"gplfm_rmse": val.rmse}


def cmd_baseline(cfg: RunConfig, args, out: Path) -> dict:
    data = _data(args, cfg, out)
    if cfg.measured != list(range(cfg.n_components)):
        raise ConfigError("the residual baseline needs every component measured, in order")
    bl = residual_baseline(data, cfg.model, cfg.m0_temps, cfg.S0_temps, cfg.R, _validation_scenario(cfg),
                           order=cfg.baseline_order, q=cfg.baseline_q)
    D = cfg.n_components
    header = ["t", "T_a"] + [f"m_T_{i + 1}" for i in range(D)] + [f"residual_{i + 1}" for i in range(D)]
    write_csv(out / RESIDUALS, header, np.column_stack([data.times, data.ambient, bl.smoothed_temps, bl.residuals]))
    doc = _results(out, cfg)
    doc.rmse["baseline"] = bl.validation.rmse
    doc.save(out / RESULTS)
    return {"baseline_rmse": bl.validation.rmse, "coefficients": bl.coefficients.tolist()}


COMMANDS = {
    "simulate": cmd_simulate,
    "identify": cmd_identify,
    "regress": cmd_regress,
    "validate": cmd_validate,
    "baseline": cmd_baseline,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heatid", description=__doc__.splitlines()[0] if __doc__ else None,
                                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("command", choices=list(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--data", help="input CSV (measurements, or smoothed states for 'regress')")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out.mkdir(parents=True, exist_ok=True)
        summary = COMMANDS[args.command](cfg, args, out)
    except (ConfigError, DataFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (np.linalg.LinAlgError, IntegrationBlowup, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    for key, value in summary.items():
        print(f"{key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
