"""Forecaster training data from simulated rate traces."""
import numpy as np

from ..forecaster import ForecastDataset, RateForecaster, build_dataset
from ..rng import substream
from .episode import simulate_rates

# training traces use seeds far from the evaluation seeds base_seed + i
TRAIN_SEED_OFFSET = 1_000_003
WINDOWS_PER_USER = 10


def simulated_dataset(cfg, n_samples, seed=None, windows_per_user=WINDOWS_PER_USER):
    """Exactly ``n_samples`` windows drawn from fresh seeded drops.

    Each drop contributes ``windows_per_user`` windows per user; drops are
    added until enough windows exist, then a seeded subset is kept.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    seed = cfg.seed + TRAIN_SEED_OFFSET if seed is None else int(seed)
    n, h = cfg.mpc.history, cfg.forecaster.horizon
    length = n + h + windows_per_user - 1
    deployment = cfg.build_deployment()
    parts, total, k = [], 0, 0
    while total < n_samples:
        rates, _ = simulate_rates(cfg, seed + k, length, deployment)
        ds = build_dataset(np.moveaxis(rates, 1, 0), n, h)
        parts.append(ds)
        total += len(ds)
        k += 1
    ds = ForecastDataset.concat(parts)
    keep = np.sort(substream(seed, "forecaster", 1).choice(len(ds), n_samples, replace=False))
    return ForecastDataset(ds.X[keep], ds.Y[keep])


def make_forecaster(cfg, random_state=None):
    f = cfg.forecaster
    return RateForecaster(
        n_history=cfg.mpc.history,
        horizon=f.horizon,
        hidden_size=f.hidden_size,
        temperature=f.temperature,
        max_epochs=f.max_epochs,
        batch_size=f.batch_size,
        learning_rate=f.learning_rate,
        clip_norm=f.clip_norm,
        random_state=cfg.seed if random_state is None else random_state,
    )


def train_forecaster(cfg, n_samples=None, seed=None):
    """Simulate, build the dataset and fit; returns (model, dataset)."""
    ds = simulated_dataset(cfg, n_samples or cfg.forecaster.train_samples, seed)
    return make_forecaster(cfg).fit(ds), ds
