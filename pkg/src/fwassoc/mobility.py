"""User drops and Gauss-Markov mobility.

Speed and heading follow the first-order recursion

    s' = a s + (1 - a) s_mean + sqrt(1 - a^2) sigma w,   w ~ N(0, 1)

so the stationary standard deviation is ``sigma`` and the lag-1
autocorrelation is ``a``. Positions advance by ``max(s, 0) * slot_seconds``
along the heading and are folded back into the region by reflection, which
also mirrors the current and mean headings.
"""
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigurationError


@dataclass(frozen=True)
class MobilityParams:
    memory: float = 0.8
    speed_mean: float = 15.0  # m/s
    speed_variance: float = 9.0
    heading_noise_std: float = np.pi / 8
    slot_seconds: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.memory <= 1.0:
            raise ConfigurationError("memory must lie in [0, 1]")
        if self.speed_variance < 0 or self.slot_seconds <= 0:
            raise ConfigurationError("invalid mobility parameters")

    @property
    def speed_std(self):
        return float(np.sqrt(self.speed_variance))


@dataclass
class UserState:
    """State of a population of users (arrays indexed by user)."""

    id: np.ndarray
    position: np.ndarray  # (U, 2)
    speed: np.ndarray  # (U,)
    heading: np.ndarray  # (U,)
    mean_speed: np.ndarray
    mean_heading: np.ndarray

    def __len__(self):
        return len(self.id)

    @property
    def velocity(self):
        s = np.maximum(self.speed, 0.0)
        return np.stack([s * np.cos(self.heading), s * np.sin(self.heading)], axis=-1)


def _initial_motion(count, rng, params):
    speed = np.maximum(rng.normal(params.speed_mean, params.speed_std, count), 0.0)
    heading = rng.uniform(0.0, 2 * np.pi, count)
    return speed, heading


def _uniform_points(count, region, rng):
    lo = np.array([region.xmin, region.ymin])
    return lo + rng.random((count, 2)) * region.size


def drop_uniform(count, region, rng, params=MobilityParams()):
    if count < 1:
        raise ValueError("count must be >= 1")
    pos = _uniform_points(count, region, rng)
    speed, heading = _initial_motion(count, rng, params)
    return UserState(np.arange(count), pos, speed, heading, speed.copy(), heading.copy())


def drop_gmm(count, num_clusters, cluster_std, region, rng, params=MobilityParams()):
    """Gaussian-mixture drop: uniform centres, uniform cluster membership."""
    if count < 1 or num_clusters < 1:
        raise ValueError("count and num_clusters must be >= 1")
    if cluster_std < 0:
        raise ValueError("cluster_std must be non-negative")
    centres = _uniform_points(num_clusters, region, rng)
    member = rng.integers(0, num_clusters, count)
    pos = centres[member] + cluster_std * rng.standard_normal((count, 2))
    pos, _ = region.reflect(pos)
    speed, heading = _initial_motion(count, rng, params)
    return UserState(np.arange(count), pos, speed, heading, speed.copy(), heading.copy())


def _mirror(angle, flipped):
    angle = np.where(flipped[..., 0], np.pi - angle, angle)
    return np.where(flipped[..., 1], -angle, angle)


def gauss_markov_step(state, params, rng, region=None):
    """Advance every user by one slot."""
    a = params.memory
    n = len(state)
    innov = np.sqrt(max(1.0 - a * a, 0.0))
    speed = a * state.speed + (1 - a) * state.mean_speed + innov * params.speed_std * rng.standard_normal(n)
    heading = (
        a * state.heading
        + (1 - a) * state.mean_heading
        + innov * params.heading_noise_std * rng.standard_normal(n)
    )
    moving = np.maximum(speed, 0.0) * params.slot_seconds
    pos = state.position + moving[:, None] * np.stack([np.cos(heading), np.sin(heading)], axis=-1)
    mean_heading = state.mean_heading
    if region is not None:
        pos, flipped = region.reflect(pos)
        heading = _mirror(heading, flipped)
        mean_heading = _mirror(mean_heading, flipped)
    return replace(
        state, position=pos, speed=speed, heading=heading, mean_heading=mean_heading
    )
