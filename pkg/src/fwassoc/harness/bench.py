"""Frank-Wolfe versus projected-gradient timing.

Both solvers start from the uniform association and stop once their
objective reaches ``f* - rel_tol |f*|``, where ``f*`` is the best value of
an untimed high-accuracy run of each solver.
"""
import time

import numpy as np

from ..solver import MpcProblem, SolverConfig, reference_solve, solve_mpc

BENCH_SIZES = ((200, 42, 1), (200, 42, 2))


def random_problem(rng, n_users, n_bs, horizon, eta=-0.655, log_mean=17.0, log_std=1.0):
    """Log-normal rates around ``e^17`` bits/s and a random previous association."""
    rates = np.exp(rng.normal(log_mean, log_std, (horizon, n_users, n_bs)))
    prev = np.eye(n_bs)[rng.integers(0, n_bs, n_users)]
    return MpcProblem(rates, prev, eta)


def best_objective(p):
    ref = reference_solve(p, tolerance=1e-9, cross_check=False)
    fw = solve_mpc(p, SolverConfig(max_iterations=20_000))
    return max(ref.objective, fw.objective)


def bench_instance(p, rel_tol=1e-4, f_star=None):
    f_star = best_objective(p) if f_star is None else f_star
    target = f_star - rel_tol * abs(f_star)
    t = time.perf_counter()
    fw = solve_mpc(p, SolverConfig(max_iterations=1_000_000, objective_target=target))
    fw_time = time.perf_counter() - t
    t = time.perf_counter()
    ref = reference_solve(p, tolerance=0.0, objective_target=target, cross_check=False)
    ref_time = time.perf_counter() - t
    n_users, n_bs = p.prev_assoc.shape
    return {
        "users": n_users,
        "bs": n_bs,
        "horizon": p.horizon,
        "f_star": f_star,
        "fw_time_s": fw_time,
        "fw_iterations": fw.iterations,
        "fw_objective": fw.objective,
        "ref_time_s": ref_time,
        "ref_iterations": ref.iterations,
        "ref_objective": ref.objective,
        "speedup": ref_time / fw_time if fw_time > 0 else float("inf"),
    }


def bench_solver(rng, sizes=BENCH_SIZES, repeats=3, rel_tol=1e-4):
    rows = []
    for n_users, n_bs, horizon in sizes:
        for _ in range(repeats):
            rows.append(bench_instance(random_problem(rng, n_users, n_bs, horizon), rel_tol))
    return rows
