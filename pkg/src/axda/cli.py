"""Command-line front end: ``axda <experiment> --config <path> [--set k=v ...] --out <dir>``.

Exit codes: 0 on success, 2 on configuration errors, 3 on numerical failures.
"""

import argparse
import logging
import math
import os
import sys

import numpy as np

from . import bounds as bnd
from .exceptions import ConfigError, ConvergenceError, FormatError, NumericError
from .io import ensure_dir, read_pgm, write_csv, write_matrix_csv, write_pgm
from .kernels import KernelFamily
from .samplers.diagnostics import ess, estimate_tv_mc, hpd_threshold
from .samplers.gibbs import run_split_gibbs, stream

log = logging.getLogger("axda")


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


# key -> (parser, default as text)
SCHEMAS = {
    "bounds": {
        "d": (_ints, "1,10,100,10000,1000000"),
        "L": (float, "1"),
        "M": (float, "1"),
        "Msf": (float, "1"),
        "rho": (_floats, ""),
        "rho_min": (float, "1e-4"),
        "rho_max": (float, str(10 ** 0.5)),
        "n_rho": (int, "50"),
        "kernel": (str, "Gaussian"),
        "p": (int, "2"),
        "seed": (int, "0"),
    },
    "gaussian": {
        "d": (int, "10"),
        "a": (float, "1.5"),
        "rho": (_floats, ""),
        "rho_min": (float, "1e-5"),
        "rho_max": (float, "1"),
        "n_rho": (int, "15"),
        "n_mc": (int, "100000"),
        "seed": (int, "0"),
    },
    "lasso": {
        "tau": (float, "1"),
        "y": (float, "1"),
        "x": (float, "2"),
        "sigma": (float, "1"),
        "rho_plot": (_floats, "0.01,0.1,1"),
        "rho_table": (_floats, "0.001,0.01,0.1,1"),
        "alpha": (float, "0.05"),
        "lipschitz": (float, "1"),
        "grid_min": (float, "-3"),
        "grid_max": (float, "3"),
        "n_grid": (int, "200"),
        "hpd_step": (float, "1e-4"),
        "seed": (int, "0"),
    },
    "inpaint": {
        "image": (str, ""),
        "size": (int, "32"),
        "observed": (float, "0.9"),
        "sigma": (float, "0.07"),
        "tau": (float, "5"),
        "rho": (float, "0.1"),
        "iters": (int, "10000"),
        "burnin": (int, "5000"),
        "n_alpha": (int, "99"),
        "seed": (int, "0"),
    },
    "logistic": {
        "d": (int, "10"),
        "n": (_ints, "1,10,100,1000,10000"),
        "rho": (_floats, "1e-4,1e-3,1e-2,1e-1,1"),
        "unit_norm": (_bool, "false"),
        "chain_n": (int, "20"),
        "chain_d": (int, "2"),
        "chain_rho": (float, "0.3"),
        "tau": (float, "1"),
        "iters": (int, "4000"),
        "sign": (int, "1"),
        "seed": (int, "0"),
    },
    "optimize": {
        "tau": (float, "1"),
        "y": (float, "1"),
        "x": (float, "2"),
        "sigma": (float, "1"),
        "rho": (float, "1e-4"),
        "max_outer": (int, "500"),
        "tol": (float, "1e-10"),
        "n": (int, "20"),
        "d": (int, "2"),
        "logistic_rho": (float, "0.3"),
        "n_mc": (int, "100"),
        "mcem_iters": (int, "200"),
        "seed": (int, "0"),
    },
}


def parse_config_text(text):
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


def build_config(experiment, raw):
    if experiment not in SCHEMAS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    schema = SCHEMAS[experiment]
    unknown = sorted(set(raw) - set(schema))
    if unknown:
        raise ConfigError(f"unknown keys for {experiment}: {', '.join(unknown)}")
    cfg = {}
    for key, (parse, default) in schema.items():
        text = raw.get(key, default)
        try:
            if parse is str:
                cfg[key] = text
            elif text == "" and parse in (_floats, _ints):
                cfg[key] = []
            else:
                cfg[key] = parse(text)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {text!r}") from exc
    return cfg


def rho_grid(cfg):
    if cfg.get("rho"):
        grid = list(cfg["rho"])
    else:
        if not (0 < cfg["rho_min"] < cfg["rho_max"]) or cfg["n_rho"] < 1:
            raise ConfigError("need 0 < rho_min < rho_max and n_rho >= 1")
        grid = list(np.logspace(math.log10(cfg["rho_min"]), math.log10(cfg["rho_max"]), cfg["n_rho"]))
    if any(not (r > 0 and math.isfinite(r)) for r in grid):
        raise ConfigError("rho grid must be strictly positive and finite")
    return grid


def _check_positive(cfg, *keys):
    for k in keys:
        if not cfg[k] > 0:
            raise ConfigError(f"{k} must be positive")


# ---------------------------------------------------------------------------

def run_bounds(cfg, out):
    grid = rho_grid(cfg)
    if not cfg["d"] or any(d < 1 for d in cfg["d"]):
        raise ConfigError("d must be a list of positive integers")
    try:
        kernel = KernelFamily(cfg["kernel"])
    except ValueError as exc:
        raise ConfigError(f"unknown kernel {cfg['kernel']!r}") from exc
    rows = []
    for d in cfg["d"]:
        rp = bnd.RegularityProfile(d=d, lipschitz=cfg["L"], grad_lipschitz=cfg["M"],
                                   grad_second_moment=cfg["Msf"], convex=True)
        for rho in grid:
            rows.append([
                d, rho,
                bnd.tv_bound_lipschitz([(cfg["L"], rho)], d, clamp=False),
                bnd.tv_bound_lipschitz_asymptote(cfg["L"], d, rho),
                bnd.tv_bound_smooth_convex(rp, rho, clamp=False),
                bnd.tv_bound_smooth_asymptote(rp, rho),
                bnd.wasserstein_bound(kernel, d, cfg["p"], rho),
            ])
    path = os.path.join(out, "bounds_table.csv")
    write_csv(path, ["d", "rho", "thm1", "cor1", "thm2", "cor2", "wasserstein"], rows)
    return [path]


def run_gaussian(cfg, out):
    from .models.gaussian import (GaussianTarget, gaussian_marginal_exact, gaussian_regularity,
                                  gaussian_w2_exact, gaussian_w2_printed,
                                  squared_exponential_covariance)
    grid = rho_grid(cfg)
    d = cfg["d"]
    if d < 1 or cfg["n_mc"] < 2:
        raise ConfigError("need d >= 1 and n_mc >= 2")
    target = GaussianTarget(np.zeros(d), squared_exponential_covariance(d, cfg["a"]))
    rp = gaussian_regularity(target)
    rows = []
    for i, rho in enumerate(grid):
        smoothed = gaussian_marginal_exact(target, rho)
        rng = stream(cfg["seed"], i, 0)
        tv, se = estimate_tv_mc(target.logpdf, smoothed.logpdf, lambda n: target.sample(n, rng),
                                cfg["n_mc"], return_se=True)
        rows.append([
            rho, gaussian_w2_exact(target, rho), bnd.wasserstein_bound(KernelFamily.GAUSSIAN, d, 2, rho),
            tv, bnd.tv_bound_smooth_convex(rp, rho, clamp=False), se, gaussian_w2_printed(target, rho),
        ])
    path = os.path.join(out, "gaussian_bounds.csv")
    write_csv(path, ["rho", "w2_exact", "w2_bound", "tv_mc", "tv_bound", "tv_mc_se", "w2_printed"], rows)
    return [path]


def run_lasso(cfg, out):
    from .models.lasso import (credibility_table, normalized_density, smoothed_l1_terms,
                               univariate_lasso, univariate_log_posterior)
    _check_positive(cfg, "sigma", "n_grid", "hpd_step")
    if cfg["tau"] < 0:
        raise ConfigError("tau must be non-negative")
    for r in cfg["rho_plot"] + cfg["rho_table"]:
        if not r > 0:
            raise ConfigError("rho values must be positive")
    t = univariate_lasso(cfg["y"], cfg["x"], cfg["sigma"], cfg["tau"])
    grid = np.linspace(cfg["grid_min"], cfg["grid_max"], cfg["n_grid"])
    g = cfg["tau"] * np.abs(grid)
    prior = normalized_density(-g, grid)
    post = normalized_density(univariate_log_posterior(t, grid), grid)
    rows = []
    for rho in cfg["rho_plot"]:
        g_rho = smoothed_l1_terms(grid, cfg["tau"], rho)
        lo, hi = bnd.potential_gap_bounds(cfg["tau"], 1, rho)
        prior_rho = normalized_density(-g_rho, grid)
        post_rho = normalized_density(univariate_log_posterior(t, grid, rho), grid)
        for k in range(grid.size):
            rows.append([rho, grid[k], g[k], g_rho[k], g[k] + lo, g[k] + hi,
                         prior[k], prior_rho[k], post[k], post_rho[k]])
    p1 = os.path.join(out, "lasso_curves.csv")
    write_csv(p1, ["rho", "theta", "g", "g_rho", "g_plus_lower", "g_plus_upper",
                   "prior", "prior_rho", "posterior", "posterior_rho"], rows)
    fine = np.arange(-6.0, 6.0 + cfg["hpd_step"] / 2, cfg["hpd_step"])
    table = credibility_table(t, cfg["rho_table"], cfg["alpha"], fine, cfg["lipschitz"])
    keys = ["rho", "exact_lo", "exact_hi", "hpd_lo", "hpd_hi", "coverage", "interval_lo", "interval_hi"]
    p2 = os.path.join(out, "lasso_table.csv")
    write_csv(p2, keys, [[row[k] for k in keys] for row in table])
    return [p1, p2]


def run_inpaint(cfg, out):
    from .models.inpainting import (InpaintingModel, damaged_observation, ellipse_phantom,
                                    inpainting_split_model)
    _check_positive(cfg, "sigma", "tau", "rho", "iters")
    if not 0 < cfg["observed"] < 1:
        raise ConfigError("observed must lie in (0, 1)")
    if not 0 <= cfg["burnin"] < cfg["iters"]:
        raise ConfigError("need 0 <= burnin < iters")
    if cfg["image"]:
        truth = read_pgm(cfg["image"])
    else:
        truth = ellipse_phantom(cfg["size"])
    shape = truth.shape
    rng = stream(cfg["seed"], 0, 0)
    mask, y = damaged_observation(truth, cfg["observed"], cfg["sigma"], rng)
    model = InpaintingModel(y, mask, shape, cfg["sigma"], cfg["tau"], cfg["rho"])
    chain = run_split_gibbs(inpainting_split_model(model), cfg["iters"], burnin=cfg["burnin"],
                            seed=cfg["seed"] + 1)
    mmse = chain.mean().reshape(shape)
    damaged = np.zeros(truth.size)
    damaged[mask] = y
    damaged = damaged.reshape(shape)
    paths = []
    for name, img in (("truth", truth), ("observation", damaged), ("mmse", mmse)):
        p = os.path.join(out, f"inpaint_{name}.pgm")
        write_pgm(p, img)
        paths.append(p)
    p = os.path.join(out, "inpaint_mmse.csv")
    write_matrix_csv(p, mmse)
    paths.append(p)
    if truth.size <= 256:
        oracle = run_split_gibbs(inpainting_split_model(model, dense=True), cfg["iters"],
                                 burnin=cfg["burnin"], seed=cfg["seed"] + 2)
        p = os.path.join(out, "inpaint_bias.csv")
        write_matrix_csv(p, np.abs(mmse - oracle.mean().reshape(shape)))
        paths.append(p)
    p = os.path.join(out, "inpaint_trace.csv")
    write_csv(p, ["iteration", "potential"], [[t, v] for t, v in enumerate(chain.potential_trace)])
    paths.append(p)
    alphas = np.linspace(0.01, 0.99, cfg["n_alpha"])
    kept = chain.potential_trace[chain.burnin:]
    p = os.path.join(out, "inpaint_hpd.csv")
    write_csv(p, ["alpha", "gamma_alpha"], [[a, hpd_threshold(kept, a)] for a in alphas])
    paths.append(p)
    rel = lambda img: float(np.linalg.norm(img - truth) / np.linalg.norm(truth))
    ess_min = float(np.min(chain.ess()))
    p = os.path.join(out, "inpaint_summary.csv")
    write_csv(p, ["rel_error_observation", "rel_error_mmse", "ess_min", "eta"],
              [[rel(damaged), rel(mmse), ess_min, model.eta]])
    paths.append(p)
    return paths


def run_logistic(cfg, out):
    from .models.logistic import logistic_split_model, synthetic_logistic
    if any(n < 1 for n in cfg["n"]) or cfg["d"] < 1:
        raise ConfigError("n and d must be positive")
    if any(not r > 0 for r in cfg["rho"]):
        raise ConfigError("rho values must be positive")
    rows = []
    for i, n in enumerate(cfg["n"]):
        rng = stream(cfg["seed"], i, 0)
        X = rng.random((n, cfg["d"]))
        if cfg["unit_norm"]:
            X /= np.linalg.norm(X, axis=1, keepdims=True)
        else:
            # feature scaling: each column mapped onto [0, 1]
            span = X.max(axis=0) - X.min(axis=0)
            X = (X - X.min(axis=0)) / np.where(span > 0, span, 1.0) if n > 1 else X
        lips = np.linalg.norm(X, axis=1)
        for rho in cfg["rho"]:
            rows.append([n, rho, bnd.tv_bound_lipschitz([(L, rho) for L in lips], cfg["d"], clamp=False)])
    p1 = os.path.join(out, "logistic_bound.csv")
    write_csv(p1, ["n", "rho", "cor3_bound"], rows)
    rng = stream(cfg["seed"], 0, 1)
    m = synthetic_logistic(cfg["chain_n"], cfg["chain_d"], rng, sign=cfg["sign"], tau=cfg["tau"],
                           rho=cfg["chain_rho"])
    chain = run_split_gibbs(logistic_split_model(m), cfg["iters"], seed=cfg["seed"])
    p2 = os.path.join(out, "logistic_chain.csv")
    write_csv(p2, ["component", "posterior_mean", "posterior_sd", "ess"],
              [[j, chain.samples[:, j].mean(), chain.samples[:, j].std(ddof=1), ess(chain.samples[:, j])]
               for j in range(m.dim)])
    return [p1, p2]


def run_optimize(cfg, out):
    from .models.lasso import lasso_split_model, univariate_lasso
    from .models.logistic import logistic_split_model, synthetic_logistic
    from .optimize import PenaltyProblem, mcem_run, quadratic_penalty_minimize
    _check_positive(cfg, "sigma", "rho", "logistic_rho", "n_mc", "mcem_iters", "max_outer")
    t = univariate_lasso(cfg["y"], cfg["x"], cfg["sigma"], cfg["tau"])
    problem = PenaltyProblem.from_split_model(lasso_split_model(t, cfg["rho"]),
                                              offset=cfg["y"] ** 2 / (2 * cfg["sigma"] ** 2))
    levels = [r for r in (1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6) if r > cfg["rho"]] + [cfg["rho"]]
    res = quadratic_penalty_minimize(problem, cfg["max_outer"], cfg["tol"], continuation=levels)
    p1 = os.path.join(out, "optimize_trace.csv")
    write_csv(p1, ["iteration", "objective"], [[k, v] for k, v in enumerate(res.objective_trace)])
    xy = cfg["x"] * cfg["y"] / cfg["sigma"] ** 2
    oracle = np.sign(xy) * max(abs(xy) - cfg["tau"], 0.0) / (cfg["x"] ** 2 / cfg["sigma"] ** 2)
    rng = stream(cfg["seed"], 0, 0)
    m = synthetic_logistic(cfg["n"], cfg["d"], rng, rho=cfg["logistic_rho"])
    sm = logistic_split_model(m)
    pen = quadratic_penalty_minimize(PenaltyProblem.from_split_model(sm), 20000, cfg["tol"])
    thetas = mcem_run(sm, np.zeros(m.dim), cfg["n_mc"], cfg["mcem_iters"], seed=cfg["seed"])
    tail = thetas[len(thetas) // 2:]
    rows = [["lasso_penalty", 0, res.theta[0], oracle]]
    for j in range(m.dim):
        rows.append(["logistic_penalty", j, pen.theta[j], math.nan])
        rows.append(["logistic_mcem", j, tail[:, j].mean(), tail[:, j].std(ddof=1)])
    p2 = os.path.join(out, "optimize_summary.csv")
    write_csv(p2, ["method", "component", "value", "reference"], rows)
    return [p1, p2]


RUNNERS = {
    "bounds": run_bounds,
    "gaussian": run_gaussian,
    "lasso": run_lasso,
    "inpaint": run_inpaint,
    "logistic": run_logistic,
    "optimize": run_optimize,
}


def load_config(experiment, config_path=None, overrides=()):
    raw = {}
    if config_path:
        try:
            with open(config_path) as fh:
                raw.update(parse_config_text(fh.read()))
        except OSError as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    return build_config(experiment, raw)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="axda", description=__doc__.splitlines()[0])
    parser.add_argument("experiment", choices=sorted(RUNNERS))
    parser.add_argument("--config", help="flat key=value configuration file")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key (repeatable)")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.experiment, args.config, args.set)
        ensure_dir(args.out)
        paths = RUNNERS[args.experiment](cfg, args.out)
    except (ConfigError, FormatError) as exc:
        print(f"axda: configuration error: {exc}", file=sys.stderr)
        return 2
    except (NumericError, ConvergenceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"axda: numerical failure: {exc}", file=sys.stderr)
        return 3
    for p in paths:
        log.info("wrote %s", p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
