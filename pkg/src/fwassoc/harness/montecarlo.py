"""Monte-Carlo runs over seeded traces and their summaries.

Run ``i`` uses seed ``base_seed + i``; every policy in a comparison runs on
the same trace. Percentiles use linear interpolation between order
statistics (``numpy.percentile`` with ``method="linear"``).
"""
from dataclasses import asdict, dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .episode import make_trace, run_episode

PERCENTILES = (5, 50, 90, 95)
BASELINE = "max_shannon"


def percentile_gain(policy_samples, baseline_samples, percentile):
    """Ratio of empirical percentiles, policy over baseline."""
    a = np.asarray(policy_samples, dtype=np.float64).ravel()
    b = np.asarray(baseline_samples, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("percentile_gain needs non-empty samples")
    return float(np.percentile(a, percentile, method="linear") / np.percentile(b, percentile, method="linear"))


@dataclass
class RunSummary:
    policy: str
    runs: int
    samples: int
    percentiles: dict  # "p5" -> bits/s
    median_handovers: float
    mean_failures: float
    mean_cell_sum_rate: float  # bits/s per BS, empty BSs count as zero
    mean_objective: float
    mean_log_utility: float  # per run, summed over slots
    mean_iterations: float
    mean_wall_time: float  # seconds per decision
    converged_fraction: float
    gains: dict = field(default_factory=dict)  # "p5" -> ratio vs max_shannon

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def summarize(results, policy=None):
    """Pool a list of :class:`EpisodeResult` of one policy into a summary."""
    if not results:
        raise ValueError("no episodes to summarise")
    rates = np.concatenate([r.service_rate.ravel() for r in results])
    ho = np.concatenate([r.handovers for r in results])
    return RunSummary(
        policy=policy or results[0].policy,
        runs=len(results),
        samples=int(rates.size),
        percentiles={f"p{q}": float(np.percentile(rates, q, method="linear")) for q in PERCENTILES},
        median_handovers=float(np.median(ho)),
        mean_failures=float(np.mean(np.concatenate([r.failures for r in results]))),
        mean_cell_sum_rate=float(np.mean(np.concatenate([r.cell_sum_rate.ravel() for r in results]))),
        mean_objective=float(np.mean(np.concatenate([r.objective for r in results]))),
        mean_log_utility=float(np.mean([r.log_utility.sum() for r in results])),
        mean_iterations=float(np.mean(np.concatenate([r.iterations for r in results]))),
        mean_wall_time=float(np.mean(np.concatenate([r.wall_time for r in results]))),
        converged_fraction=float(np.mean(np.concatenate([r.converged for r in results]))),
    )


@dataclass
class MonteCarloResult:
    episodes: dict  # policy -> list of EpisodeResult ordered by run
    summaries: dict  # policy -> RunSummary
    base_seed: int

    def samples(self, policy):
        """Pooled per-user service-rate samples (runs * T * U,)."""
        return np.concatenate([r.service_rate.ravel() for r in self.episodes[policy]])


def _one_run(cfg, policies, seed):
    trace = make_trace(cfg, seed)
    hit_model = cfg.hit_model()
    return [run_episode(cfg, p, trace, hit_model) for p in policies]


def monte_carlo(cfg, policies, runs=None, base_seed=None, n_jobs=1):
    """Run every policy on ``runs`` seeded traces and summarise.

    Failures are re-raised with the run index and seed attached.
    """
    runs = cfg.runs if runs is None else int(runs)
    if runs < 1:
        raise ValueError("runs must be >= 1")
    base_seed = cfg.seed if base_seed is None else int(base_seed)
    policies = list(policies)
    names = [p.name for p in policies]
    if len(set(names)) != len(names):
        raise ValueError("policy names must be unique")

    def task(i):
        try:
            return _one_run(cfg, policies, base_seed + i)
        except Exception as exc:
            raise RuntimeError(f"run {i} (seed {base_seed + i}) failed: {exc}") from exc

    per_run = Parallel(n_jobs=n_jobs)(delayed(task)(i) for i in range(runs))
    episodes = {n: [run[k] for run in per_run] for k, n in enumerate(names)}
    summaries = {n: summarize(episodes[n], n) for n in names}
    attach_gains(summaries, episodes)
    return MonteCarloResult(episodes, summaries, base_seed)


def attach_gains(summaries, episodes):
    if BASELINE not in episodes:
        return
    base = np.concatenate([r.service_rate.ravel() for r in episodes[BASELINE]])
    for name, s in summaries.items():
        pooled = np.concatenate([r.service_rate.ravel() for r in episodes[name]])
        s.gains = {f"p{q}": percentile_gain(pooled, base, q) for q in PERCENTILES}
