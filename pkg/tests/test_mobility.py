import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fwassoc.exceptions import ConfigurationError
from fwassoc.mobility import MobilityParams, UserState, drop_gmm, drop_uniform, gauss_markov_step
from fwassoc.netmodel import Deployment, Region

BOX = Region(-500.0, 500.0, -400.0, 400.0)


def _rng(seed=0):
    return np.random.default_rng(seed)


def test_params_validation():
    with pytest.raises(ConfigurationError):
        MobilityParams(memory=1.5)
    with pytest.raises(ConfigurationError):
        MobilityParams(slot_seconds=0.0)
    assert MobilityParams().speed_std == 3.0


def test_drop_uniform_full_scale_count():
    region = Deployment.build(19, 500.0).region()
    users = drop_uniform(1200, region, _rng())
    assert len(users) == 1200
    assert np.all(region.contains(users.position))
    assert np.all(users.speed >= 0)
    assert np.all((users.heading >= 0) & (users.heading < 2 * np.pi))


def test_drop_uniform_point_region():
    users = drop_uniform(1, Region(3.0, 3.0, -2.0, -2.0), _rng())
    assert users.position.tolist() == [[3.0, -2.0]]


def test_empty_region_rejected():
    with pytest.raises(ConfigurationError):
        drop_uniform(5, Region(1.0, 0.0, 0.0, 1.0), _rng())


def test_drop_uniform_mean_is_centroid():
    n = 100_000
    users = drop_uniform(n, BOX, _rng(1))
    se = BOX.size / math.sqrt(12 * n)
    assert np.all(np.abs(users.position.mean(axis=0) - BOX.centroid) <= 3 * se)


def test_drop_gmm_degenerate_single_point():
    users = drop_gmm(50, 1, 0.0, BOX, _rng(2))
    assert np.all(users.position == users.position[0])
    assert BOX.contains(users.position[0])


def test_drop_gmm_cluster_std():
    big = Region(-1e6, 1e6, -1e6, 1e6)  # reflection never triggers
    users = drop_gmm(100_000, 1, 150.0, big, _rng(3))
    std = users.position.std(axis=0, ddof=1)
    assert np.all(np.abs(std / 150.0 - 1) < 0.01)


def test_drop_gmm_inside_region():
    users = drop_gmm(2000, 10, 150.0, BOX, _rng(4))
    assert np.all(BOX.contains(users.position))


def _state(speed, heading, pos=(0.0, 0.0), mean_speed=None):
    n = len(speed)
    speed = np.asarray(speed, dtype=float)
    return UserState(
        np.arange(n),
        np.tile(np.asarray(pos, dtype=float), (n, 1)),
        speed,
        np.asarray(heading, dtype=float),
        speed.copy() if mean_speed is None else np.full(n, mean_speed),
        np.asarray(heading, dtype=float),
    )


def test_full_memory_straight_line():
    p = MobilityParams(memory=1.0, speed_variance=0.0, heading_noise_std=0.0, slot_seconds=0.1)
    s = _state([10.0], [np.pi / 2])
    for _ in range(5):
        s = gauss_markov_step(s, p, _rng())
    assert s.speed[0] == 10.0 and s.heading[0] == np.pi / 2
    assert s.position[0] == pytest.approx([0.0, 5.0], abs=1e-12)


def test_memoryless_speeds_iid_around_mean():
    p = MobilityParams(memory=0.0)
    s = _state(np.full(50_000, 40.0), np.zeros(50_000), mean_speed=15.0)
    s1 = gauss_markov_step(s, p, _rng(5))
    s2 = gauss_markov_step(s1, p, _rng(6))
    assert abs(s2.speed.mean() - 15.0) < 4 * 3.0 / math.sqrt(50_000)
    assert abs(np.corrcoef(s1.speed, s2.speed)[0, 1]) < 0.02


def test_speed_autocorrelation_matches_memory():
    p = MobilityParams(memory=0.8)
    rng = _rng(7)
    s = _state([15.0], [0.0])
    speeds = np.empty(100_000)
    for k in range(len(speeds)):
        s = gauss_markov_step(s, p, rng)
        speeds[k] = s.speed[0]
    x = speeds - speeds.mean()
    rho = np.dot(x[1:], x[:-1]) / np.dot(x, x)
    assert abs(rho - 0.8) < 0.02
    assert abs(speeds.mean() - 15.0) < 0.2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.0, 1.0))
def test_positions_stay_in_region(seed, memory):
    rng = _rng(seed)
    p = MobilityParams(memory=memory, speed_mean=200.0, slot_seconds=1.0)
    small = Region(0.0, 50.0, 0.0, 30.0)
    s = drop_uniform(20, small, rng, p)
    for _ in range(20):
        s = gauss_markov_step(s, p, rng, small)
        assert np.all(small.contains(s.position))


def test_reflection_is_specular():
    r = Region(0.0, 10.0, 0.0, 10.0)
    pos, flipped = r.reflect([[12.0, 5.0], [-3.0, 25.0], [4.0, 4.0]])
    assert pos.tolist() == [[8.0, 5.0], [3.0, 5.0], [4.0, 4.0]]
    assert flipped.tolist() == [[True, False], [True, False], [False, False]]


def test_reflection_mirrors_heading():
    r = Region(0.0, 10.0, -100.0, 100.0)
    p = MobilityParams(memory=1.0, speed_variance=0.0, heading_noise_std=0.0, slot_seconds=1.0)
    s = _state([4.0], [0.0], pos=(8.0, 0.0))
    s = gauss_markov_step(s, p, _rng(), r)
    assert s.position[0] == pytest.approx([8.0, 0.0])
    assert math.cos(s.heading[0]) == pytest.approx(-1.0)
    s = gauss_markov_step(s, p, _rng(), r)
    assert s.position[0] == pytest.approx([4.0, 0.0])


def test_seed_determinism():
    def run(seed):
        rng = _rng(seed)
        s = drop_gmm(30, 3, 100.0, BOX, rng)
        for _ in range(10):
            s = gauss_markov_step(s, MobilityParams(), rng, BOX)
        return s.position

    assert np.array_equal(run(11), run(11))
    assert not np.array_equal(run(11), run(12))
