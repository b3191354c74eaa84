"""Command-line interface.

    fwassoc simulate         run Monte-Carlo episodes and export CSV/JSON
    fwassoc train-forecaster simulate traces, train and checkpoint a forecaster
    fwassoc eval             compare policies against max-Shannon
    fwassoc bench-solver     Frank-Wolfe vs projected-gradient timing table

Exit codes: 0 success, 2 configuration error, 3 solver non-convergence
with ``--strict``.
"""
import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from .exceptions import ConfigurationError
from .forecaster import RateForecaster
from .harness import (
    EpisodeConfig,
    bench_solver,
    export_results,
    load_config,
    monte_carlo,
    train_forecaster,
)
from .harness.bench import BENCH_SIZES
from .policies import POLICY_NAMES, make_policy
from .solver import FrankWolfeSolver

EXIT_OK, EXIT_CONFIG, EXIT_NONCONVERGED = 0, 2, 3

logger = logging.getLogger("fwassoc")


def _config(args):
    cfg = load_config(args.config) if args.config else EpisodeConfig()
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if getattr(args, "runs", None) is not None:
        cfg = cfg.replace(runs=args.runs)
    if getattr(args, "policy", None):
        cfg = cfg.replace(policies=tuple(p.strip() for p in args.policy.split(",") if p.strip()))
    if getattr(args, "strict", False):
        cfg = cfg.replace(strict=True)
    return cfg


def _load_model(path, cfg):
    if path is None:
        return None
    try:
        model = RateForecaster.load(path)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc
    if model.n_history != cfg.mpc.history or model.horizon < cfg.mpc.horizon - 1:
        raise ConfigurationError(
            f"checkpoint {path} has history {model.n_history} and horizon {model.horizon}, "
            f"config needs {cfg.mpc.history} and >= {cfg.mpc.horizon - 1}"
        )
    return model


def _policies(cfg, model):
    solver = FrankWolfeSolver(gap_tolerance=cfg.mpc.gap_tolerance, max_iter=cfg.mpc.max_iterations)
    if "forecaster_mpc" in cfg.policies and model is None:
        raise ConfigurationError("forecaster_mpc needs --model or forecaster.model in the config")
    return [
        make_policy(name, model, cfg.mpc.horizon, cfg.mpc.eta, cfg.hit_model(), solver)
        for name in cfg.policies
    ]


def _print_table(summaries, out=None):
    out = out or sys.stdout
    cols = ("policy", "p5_Mbps", "p50_Mbps", "p95_Mbps", "gain_p5", "median_HO", "log_utility", "solver_ms")
    out.write(" ".join(f"{c:>14}" for c in cols) + "\n")
    for name, s in summaries.items():
        row = (
            name,
            f"{s.percentiles['p5'] / 1e6:.3f}",
            f"{s.percentiles['p50'] / 1e6:.3f}",
            f"{s.percentiles['p95'] / 1e6:.3f}",
            f"{s.gains.get('p5', float('nan')):.3f}",
            f"{s.median_handovers:.1f}",
            f"{s.mean_log_utility:.1f}",
            f"{1e3 * s.mean_wall_time:.2f}",
        )
        out.write(" ".join(f"{c:>14}" for c in row) + "\n")


def _run(cfg, args):
    model = _load_model(args.model or cfg.forecaster.model, cfg)
    mc = monte_carlo(cfg, _policies(cfg, model), n_jobs=args.jobs)
    if args.out:
        export_results(mc.episodes, mc.summaries, args.out, cfg.seed, cfg.to_dict())
    _print_table(mc.summaries)
    if cfg.strict:
        bad = {n: sum(int((~e.converged).sum()) for e in eps) for n, eps in mc.episodes.items()}
        bad = {n: k for n, k in bad.items() if k}
        if bad:
            logger.error("solver did not converge: %s", bad)
            return EXIT_NONCONVERGED
    return EXIT_OK


def cmd_simulate(args):
    return _run(_config(args), args)


def cmd_eval(args):
    cfg = _config(args)
    if "max_shannon" not in cfg.policies:
        cfg = cfg.replace(policies=("max_shannon",) + tuple(cfg.policies))
    return _run(cfg, args)


def cmd_train(args):
    cfg = _config(args)
    model, ds = train_forecaster(cfg, args.samples)
    out = args.out or "forecaster.npz"
    if os.path.isdir(out) or out.endswith(os.sep):
        os.makedirs(out, exist_ok=True)
        out = os.path.join(out, "forecaster.npz")
    model.save(out)
    curve = os.path.splitext(out)[0] + "_loss.json"
    with open(curve, "w") as fh:
        json.dump({"train_loss": model.train_loss_, "val_loss": model.val_loss_, "samples": len(ds)}, fh, indent=2)
    print(f"saved {out} ({len(ds)} samples, final train loss {model.train_loss_[-1]:.4f})")
    return EXIT_OK


def cmd_bench(args):
    seed = 0 if args.seed is None else args.seed
    rows = bench_solver(np.random.default_rng(seed), BENCH_SIZES, args.runs or 3, args.rel_tol)
    cols = list(rows[0])
    w = csv.DictWriter(sys.stdout, cols)
    w.writeheader()
    w.writerows(rows)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "bench_solver.csv"), "w", newline="") as fh:
            w = csv.DictWriter(fh, cols)
            w.writeheader()
            w.writerows(rows)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="fwassoc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, runs=True, policy=True, model=True):
        p.add_argument("--config", help="YAML episode configuration")
        p.add_argument("--seed", type=int, help="base seed (overrides the config)")
        p.add_argument("--out", help="output directory (or checkpoint path)")
        if runs:
            p.add_argument("--runs", type=int, help="Monte-Carlo runs")
        if policy:
            p.add_argument("--policy", help=f"comma-separated subset of {','.join(POLICY_NAMES)}")
        if model:
            p.add_argument("--model", help="forecaster checkpoint (.npz)")
        return p

    for name, fn in (("simulate", cmd_simulate), ("eval", cmd_eval)):
        p = common(sub.add_parser(name))
        p.add_argument("--strict", action="store_true", help="exit 3 if any solve did not converge")
        p.add_argument("--jobs", type=int, default=1, help="parallel runs")
        p.set_defaults(func=fn)
    p = common(sub.add_parser("train-forecaster"), runs=False, policy=False, model=False)
    p.add_argument("--samples", type=int, help="training windows (default from config)")
    p.set_defaults(func=cmd_train)
    p = common(sub.add_parser("bench-solver"), policy=False, model=False)
    p.add_argument("--rel-tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
