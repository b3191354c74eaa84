"""Rate traces and the per-slot episode loop.

A trace holds everything random that does not depend on the policy: user
trajectories, achievable rates and the uniforms that decide handover
interruption outcomes. Running every policy on the same trace gives common
random numbers.

Slot layout for history ``N``, horizon ``H`` and ``T`` evaluated slots:
slots ``0 .. N-2`` are history only, slot ``N-1`` fixes the initial
association by max-Shannon, slots ``N .. N+T-1`` are evaluated and the
last ``H-1`` slots only feed the genie's look-ahead.
"""
import time
from dataclasses import dataclass

import numpy as np

from .._validation import RATE_FLOOR
from ..exceptions import ConvergenceError
from ..mobility import drop_gmm, drop_uniform, gauss_markov_step
from ..netmodel import (
    ShadowingField,
    achievable_rate,
    expected_log_ho_penalty,
    hit_from_uniform,
    sinr_matrix,
)
from ..policies import max_shannon
from ..rng import substream
from ..solver import MpcProblem, objective


@dataclass
class Trace:
    rates: np.ndarray  # (L, U, B) bits/s
    positions: np.ndarray  # (L, U, 2)
    hit_uniforms: np.ndarray  # (T, U)
    first_slot: int  # index of the first evaluated slot
    seed: int

    @property
    def n_slots(self):
        return self.hit_uniforms.shape[0]


def simulate_rates(cfg, seed, length, deployment=None):
    """Achievable-rate series (length, U, B) and positions for one seeded drop."""
    dep = deployment or cfg.build_deployment()
    region = dep.region()
    params = cfg.mobility_params()
    u = cfg.users
    drop_rng = substream(seed, "drop")
    if u.drop == "gmm":
        state = drop_gmm(u.count, u.num_clusters, u.cluster_std, region, drop_rng, params)
    else:
        state = drop_uniform(u.count, region, drop_rng, params)
    mob_rng = substream(seed, "mobility")
    sh_rng = substream(seed, "shadowing")
    shadow = ShadowingField(u.count, dep.n_sites, sh_rng, cfg.shadowing_config())
    noise = cfg.noise_config()
    rates = np.empty((length, u.count, dep.n_bs))
    positions = np.empty((length, u.count, 2))
    for t in range(length):
        if t:
            new = gauss_markov_step(state, params, mob_rng, region)
            shadow.advance(np.linalg.norm(new.position - state.position, axis=1), sh_rng)
            state = new
        ch = shadow.state(dep, state.position, cfg.deployment.ue_height, cfg.deployment.min_distance)
        rates[t] = achievable_rate(dep.bandwidths[None, :], sinr_matrix(ch.gain, dep, noise))
        positions[t] = state.position
    return rates, positions


def make_trace(cfg, seed, deployment=None):
    n, h, T = cfg.mpc.history, cfg.mpc.horizon, cfg.slots
    length = n + T + h - 1
    rates, positions = simulate_rates(cfg, seed, length, deployment)
    hit_u = substream(seed, "hit").random((T, cfg.users.count))
    return Trace(rates, positions, hit_u, n, int(seed))


@dataclass
class EpisodeResult:
    """Per-slot metrics of one policy on one trace (arrays indexed by slot)."""

    policy: str
    seed: int
    assoc: np.ndarray  # (T, U) serving BS index
    service_rate: np.ndarray  # (T, U) bits/s
    hit_ms: np.ndarray  # (T, U)
    handover: np.ndarray  # (T, U) bool
    failure: np.ndarray  # (T, U) bool, handover with the long interruption
    loads: np.ndarray  # (T, B)
    log_utility: np.ndarray  # (T,) sum_i ln r_i per slot
    objective: np.ndarray  # (T,) single-slot MPC objective of the enacted decision
    iterations: np.ndarray  # (T,)
    wall_time: np.ndarray  # (T,) decision time, forecaster inference excluded
    converged: np.ndarray  # (T,) bool
    errors: list

    @property
    def handovers(self):
        return self.handover.sum(axis=1)

    @property
    def failures(self):
        return self.failure.sum(axis=1)

    @property
    def cumulative_log_utility(self):
        return np.cumsum(self.log_utility)

    @property
    def cell_sum_rate(self):
        """(T, B) sum of service rates served by each BS."""
        T, n_bs = self.loads.shape
        out = np.zeros((T, n_bs))
        for t in range(T):
            np.add.at(out[t], self.assoc[t], self.service_rate[t])
        return out


def slot_metrics(c, assoc_idx, prev_idx, hit_u, hit_model, eta):
    """Service rates and bookkeeping for one enacted association."""
    n_users, n_bs = c.shape
    rows = np.arange(n_users)
    ho = assoc_idx != prev_idx
    hit, outcome = hit_from_uniform(hit_model, ho, hit_u)
    loads = np.bincount(assoc_idx, minlength=n_bs)
    r = c[rows, assoc_idx] / loads[assoc_idx] * (1.0 - hit / hit_model.slot_ms)
    x = np.zeros((1, n_users, n_bs))
    x[0, rows, assoc_idx] = 1.0
    prev = np.zeros((n_users, n_bs))
    prev[rows, prev_idx] = 1.0
    f = objective(x, MpcProblem(c[None], prev, eta), check=False)
    return r, hit, ho & (outcome > 0), ho, loads, f


def run_episode(cfg, policy, trace, hit_model=None, eta=None):
    """Run ``policy`` over every evaluated slot of ``trace``.

    If the policy raises a solver error the previous association is kept for
    that slot and the error is recorded.
    """
    hit_model = hit_model or cfg.hit_model()
    if eta is None:
        eta = cfg.mpc.eta if cfg.mpc.eta is not None else expected_log_ho_penalty(hit_model)
    rates = np.maximum(trace.rates, RATE_FLOOR)
    T, n_users = trace.hit_uniforms.shape
    n_bs = rates.shape[2]
    t0 = trace.first_slot
    prev = max_shannon(rates[t0 - 1])
    prev_idx = np.argmax(prev, axis=1)
    service, hit_ms = np.zeros((T, n_users)), np.zeros((T, n_users))
    assoc_all = np.zeros((T, n_users), dtype=np.intp)
    handover = np.zeros((T, n_users), dtype=bool)
    failure = np.zeros((T, n_users), dtype=bool)
    loads = np.zeros((T, n_bs), dtype=np.intp)
    log_u, obj = np.zeros(T), np.zeros(T)
    iters, wall = np.zeros(T, dtype=np.intp), np.zeros(T)
    conv = np.ones(T, dtype=bool)
    errors = []
    for k in range(T):
        t = t0 + k
        start = time.perf_counter()
        try:
            assoc, stats = policy.decide(rates, t, prev)
            iters[k], wall[k], conv[k] = stats["iterations"], stats["wall_time"], stats["converged"]
        except (ConvergenceError, FloatingPointError) as exc:
            assoc, conv[k] = prev, False
            wall[k] = time.perf_counter() - start
            errors.append((k, str(exc)))
        idx = np.argmax(assoc, axis=1)
        r, hit, fail, ho, ld, f = slot_metrics(rates[t], idx, prev_idx, trace.hit_uniforms[k], hit_model, eta)
        service[k], hit_ms[k] = r, hit
        assoc_all[k], handover[k], failure[k], loads[k] = idx, ho, fail, ld
        log_u[k] = np.sum(np.log(np.maximum(r, RATE_FLOOR)))
        obj[k] = f
        prev, prev_idx = assoc, idx
    return EpisodeResult(
        policy=getattr(policy, "name", type(policy).__name__),
        seed=trace.seed,
        assoc=assoc_all,
        service_rate=service,
        hit_ms=hit_ms,
        handover=handover,
        failure=failure,
        loads=loads,
        log_utility=log_u,
        objective=obj,
        iterations=iters,
        wall_time=wall,
        converged=conv,
        errors=errors,
    )
