import numpy as np
import pytest

from fwassoc.forecaster import RateForecaster
from fwassoc.netmodel import HitModel, expected_log_ho_penalty
from fwassoc.policies import (
    ForecasterMpcPolicy,
    GenieMpcPolicy,
    HitAgnosticPolicy,
    MaxShannonPolicy,
    forecaster_mpc,
    genie_mpc,
    handovers,
    hit_agnostic,
    make_policy,
    max_shannon,
    mpc_rates,
)
from fwassoc.solver import MpcProblem, enumerate_binary

ETA = expected_log_ho_penalty(HitModel())


def one_hot(idx, n_bs):
    return np.eye(n_bs)[np.asarray(idx)]


def _trace(rng, length=12, n_users=6, n_bs=4):
    return 10 ** rng.uniform(5.5, 8.0, (length, n_users, n_bs))


class _Oracle:
    """Stand-in forecaster that returns the true future of a known trace."""

    n_history = 3

    def __init__(self, rates, t):
        self.rates, self.t = rates, t

    def predict(self, windows):
        future = self.rates[self.t + 1 : self.t + 4]  # (H', U, B)
        return np.moveaxis(future, 0, 1)


def test_max_shannon_examples():
    assert max_shannon([[1e6, 2e6]]).tolist() == [[0, 1]]
    assert max_shannon([[3e6, 3e6, 1e6]]).tolist() == [[1, 0, 0]]
    crowd = np.tile([5e7, 1e6, 2e6], (10, 1))
    assert max_shannon(crowd).sum(axis=0).tolist() == [10, 0, 0]


def test_max_shannon_monotone_transform_invariant():
    r = _trace(np.random.default_rng(0))[0]
    assert np.array_equal(max_shannon(r), max_shannon(np.log(r) ** 3 + 7))


def test_hit_agnostic_single_user_matches_max_shannon():
    r = np.array([[2e6, 9e6, 4e6]])
    assert np.array_equal(hit_agnostic(r), max_shannon(r))


def test_hit_agnostic_balances_equal_rates():
    r = np.full((2, 2), 1e7)
    z = hit_agnostic(r)
    assert z.sum(axis=0).tolist() == [1, 1]
    best, idx = enumerate_binary(MpcProblem(r[None], one_hot([0, 0], 2)))
    assert sorted(np.argmax(z, axis=1).tolist()) == sorted(idx[0].tolist())


def test_hit_agnostic_ignores_previous_association():
    rng = np.random.default_rng(1)
    rates = _trace(rng)
    pol = HitAgnosticPolicy()
    a, _ = pol.decide(rates, 4, one_hot([0] * 6, 4))
    b, _ = pol.decide(rates, 4, one_hot(rng.integers(0, 4, 6), 4))
    assert np.array_equal(a, b)


def test_mpc_rates_stacking():
    measured = np.ones((2, 3))
    forecast = np.arange(2 * 4 * 3, dtype=float).reshape(2, 4, 3) + 1
    out = mpc_rates(measured, forecast, 3)
    assert out.shape == (3, 2, 3)
    assert np.array_equal(out[1], forecast[:, 0]) and np.array_equal(out[2], forecast[:, 1])
    with pytest.raises(ValueError):
        mpc_rates(measured, forecast[:, :1], 3)


def test_forecaster_horizon_one_is_single_slot_hit_aware_solve():
    rng = np.random.default_rng(2)
    rates = _trace(rng)
    prev = one_hot(rng.integers(0, 4, 6), 4)
    model = RateForecaster(n_history=3, horizon=2, hidden_size=4).initialize(4)
    a = forecaster_mpc(rates[:5], prev, model, ETA, horizon=1)
    b = genie_mpc(rates[4:5], prev, ETA)
    assert np.array_equal(a, b)


def test_perfect_forecaster_matches_genie():
    rng = np.random.default_rng(3)
    rates = _trace(rng)
    prev = one_hot(rng.integers(0, 4, 6), 4)
    t = 5
    pol_f = ForecasterMpcPolicy(_Oracle(rates, t), horizon=3, eta=ETA)
    pol_g = GenieMpcPolicy(horizon=3, eta=ETA)
    a, _ = pol_f.decide(rates, t, prev)
    b, _ = pol_g.decide(rates, t, prev)
    assert np.array_equal(a, b)


def test_static_users_genie_equals_persistence_forecaster():
    rng = np.random.default_rng(4)
    rates = np.tile(_trace(rng, length=1), (10, 1, 1))
    prev = one_hot(rng.integers(0, 4, 6), 4)

    class Persistence:
        n_history = 3

        def predict(self, windows):
            return np.repeat(windows[:, -1:], 2, axis=1)

    a = forecaster_mpc(rates[:4], prev, Persistence(), ETA, 3)
    b = genie_mpc(rates[3:6], prev, ETA)
    assert np.array_equal(a, b)


def test_untrained_forecaster_feasible():
    rng = np.random.default_rng(5)
    rates = _trace(rng, length=12, n_users=20)
    model = RateForecaster(n_history=8, horizon=2, hidden_size=8).initialize(4, rates)
    pol = ForecasterMpcPolicy(model, horizon=3)
    assoc, stats = pol.decide(rates, 9, max_shannon(rates[8]))
    assert np.all(assoc.sum(axis=1) == 1) and assoc.sum() == 20
    assert stats["iterations"] > 0 and stats["wall_time"] > 0


def test_policy_outputs_one_hot():
    rng = np.random.default_rng(6)
    rates = _trace(rng)
    model = RateForecaster(n_history=3, horizon=2, hidden_size=4).initialize(4, rates)
    prev = max_shannon(rates[3])
    for name in ("max_shannon", "hit_agnostic", "forecaster_mpc", "genie_mpc"):
        pol = make_policy(name, model=model, horizon=3)
        assoc, stats = pol.decide(rates, 4, prev)
        assert assoc.shape == (6, 4)
        assert np.all(assoc.sum(axis=1) == 1) and set(np.unique(assoc)) <= {0.0, 1.0}
        assert set(stats) == {"iterations", "wall_time", "converged", "gap"}


def test_policy_guards():
    rates = _trace(np.random.default_rng(7), length=6)
    model = RateForecaster(n_history=4, horizon=2, hidden_size=4).initialize(4)
    with pytest.raises(ValueError):
        ForecasterMpcPolicy(model).decide(rates, 2, max_shannon(rates[1]))
    with pytest.raises(ValueError):
        GenieMpcPolicy(horizon=3).decide(rates, 4, max_shannon(rates[3]))
    with pytest.raises(ValueError):
        make_policy("forecaster_mpc")
    with pytest.raises(ValueError):
        make_policy("round_robin")


def test_eta_defaults_to_expected_penalty():
    pol = GenieMpcPolicy(hit_model=HitModel(((1.0, 50.0),)))
    rates = np.full((3, 1, 2), 1e6)
    # single user: switching costs ln 0.5 and gains nothing
    assoc, _ = pol.decide(rates, 0, one_hot([1], 2))
    assert assoc.tolist() == [[0, 1]]


def test_handover_flags():
    prev = one_hot([0, 1, 2], 4)
    new = one_hot([0, 3, 2], 4)
    assert handovers(new, prev).tolist() == [False, True, False]
    # a band change on the same site is a different BS index, hence a handover
    assert handovers(one_hot([1], 2), one_hot([0], 2)).tolist() == [True]


def test_max_shannon_policy_decide():
    rates = _trace(np.random.default_rng(8))
    a, stats = MaxShannonPolicy().decide(rates, 2, max_shannon(rates[1]))
    assert np.array_equal(a, max_shannon(rates[2])) and stats["iterations"] == 0
