"""Sliding-window datasets from per-user rate series."""
from dataclasses import dataclass

import numpy as np


@dataclass
class ForecastSample:
    history: np.ndarray  # (N, B) bits/s
    target: np.ndarray  # (H, B) bits/s


@dataclass
class ForecastDataset:
    """Pooled windows; ``X`` is (S, N, B), ``Y`` is (S, H, B)."""

    X: np.ndarray
    Y: np.ndarray
    skipped: int = 0

    def __len__(self):
        return len(self.X)

    def __getitem__(self, k):
        return ForecastSample(self.X[k], self.Y[k])

    def split(self, fraction, rng):
        """Random (train, held-out) split with ``fraction`` held out."""
        idx = rng.permutation(len(self))
        n_out = int(round(fraction * len(self)))
        out, keep = idx[:n_out], idx[n_out:]
        return (
            ForecastDataset(self.X[keep], self.Y[keep]),
            ForecastDataset(self.X[out], self.Y[out]),
        )

    @classmethod
    def concat(cls, parts):
        parts = list(parts)
        return cls(
            np.concatenate([p.X for p in parts]),
            np.concatenate([p.Y for p in parts]),
            sum(p.skipped for p in parts),
        )


def build_dataset(rate_history, n_history, horizon):
    """One sample per (user, start offset), pooled over users.

    ``rate_history`` is a (U, L, B) array or a sequence of (L_u, B) arrays.
    Series shorter than ``n_history + horizon`` are skipped and counted.
    """
    if n_history < 1 or horizon < 1:
        raise ValueError("n_history and horizon must be >= 1")
    series = [np.asarray(s, dtype=np.float64) for s in rate_history]
    width = n_history + horizon
    xs, ys, skipped = [], [], 0
    n_bs = None
    for s in series:
        if s.ndim != 2:
            raise ValueError("each series must be (length, n_bs)")
        if n_bs is None:
            n_bs = s.shape[1]
        elif s.shape[1] != n_bs:
            raise ValueError("inconsistent BS count across series")
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ValueError("rates must be finite and non-negative")
        if len(s) < width:
            skipped += 1
            continue
        win = np.lib.stride_tricks.sliding_window_view(s, width, axis=0)  # (W, B, width)
        win = np.moveaxis(win, -1, 1)
        xs.append(win[:, :n_history])
        ys.append(win[:, n_history:])
    if not xs:
        return ForecastDataset(np.zeros((0, n_history, n_bs or 0)), np.zeros((0, horizon, n_bs or 0)), skipped)
    return ForecastDataset(np.concatenate(xs), np.concatenate(ys), skipped)
