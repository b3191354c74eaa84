"""Association policies.

Each policy maps the rates a controller can see at slot ``t`` to a binary
(users x BSs) association:

* ``max_shannon``: every user picks its highest achievable rate.
* ``hit_agnostic``: single-slot utility maximisation, no handover cost.
* ``forecaster_mpc``: horizon-``H`` MPC on the measured rates of slot ``t``
  followed by forecasts for ``t+1 .. t+H-1``.
* ``genie_mpc``: the same MPC fed with the true future rates.

Only the first slot of an MPC solution is enacted (receding horizon).
"""
import numpy as np
from sklearn.base import BaseEstimator

from ._validation import check_one_hot, check_rates, one_hot
from .netmodel import HitModel, expected_log_ho_penalty
from .solver import FrankWolfeSolver, MpcProblem, round_association

POLICY_NAMES = ("max_shannon", "hit_agnostic", "forecaster_mpc", "genie_mpc")


def max_shannon(rates):
    """Per-user argmax of the achievable rate (lowest index on ties)."""
    rates = check_rates(rates, ndim=2)
    return one_hot(np.argmax(rates, axis=1), rates.shape[1])


def _solver(solver):
    return FrankWolfeSolver() if solver is None else solver


def _solve_first_slot(rates, prev_assoc, eta, solver, round_prev=True):
    p = MpcProblem(rates, prev_assoc, eta)
    sol = _solver(solver).solve(p)
    x = round_association(sol.x, prev_assoc if round_prev else None)
    return x[0], sol


def hit_agnostic(rates, solver=None, return_solution=False):
    """Single-slot solve with ``H = 1`` and ``eta = 0``; ignores the past."""
    rates = check_rates(rates, ndim=2)
    # any one-hot matrix works as x[0] because eta = 0 removes the coupling
    dummy = one_hot(np.zeros(rates.shape[0], dtype=int), rates.shape[1])
    assoc, sol = _solve_first_slot(rates[None], dummy, 0.0, solver, round_prev=False)
    return (assoc, sol) if return_solution else assoc


def mpc_rates(measured, forecast, horizon):
    """Stack measured slot-1 rates (U, B) with forecasts (U, >= H-1, B)."""
    measured = check_rates(measured, ndim=2)
    if horizon == 1:
        return measured[None]
    forecast = np.asarray(forecast, dtype=np.float64)
    if forecast.ndim != 3 or forecast.shape[1] < horizon - 1:
        raise ValueError(f"need forecasts for {horizon - 1} future slots, got {forecast.shape}")
    return np.concatenate([measured[None], np.moveaxis(forecast[:, : horizon - 1], 1, 0)])


def forecaster_mpc(history, prev_assoc, model, eta, horizon, solver=None, return_solution=False):
    """MPC decision from ``N`` past rate matrices ``history`` (N, U, B).

    The last history entry is the current measurement; the model forecasts
    the following slots for every user in one batch.
    """
    history = check_rates(history, ndim=3, name="history")
    if len(history) < model.n_history:
        raise ValueError(f"history has {len(history)} slots, model needs {model.n_history}")
    forecast = None
    if horizon > 1:
        windows = np.moveaxis(history[-model.n_history :], 0, 1)  # (U, N, B)
        forecast = model.predict(windows)
    rates = mpc_rates(history[-1], forecast, horizon)
    assoc, sol = _solve_first_slot(rates, prev_assoc, eta, solver)
    return (assoc, sol) if return_solution else assoc


def genie_mpc(true_rates, prev_assoc, eta, solver=None, return_solution=False):
    """MPC decision from the true rates of the next ``H`` slots (H, U, B)."""
    true_rates = check_rates(true_rates, ndim=3, name="true_rates")
    assoc, sol = _solve_first_slot(true_rates, prev_assoc, eta, solver)
    return (assoc, sol) if return_solution else assoc


class Policy(BaseEstimator):
    """Common interface used by the episode runner.

    ``decide(rates, t, prev_assoc)`` sees the full (L, U, B) rate trace and
    the current slot index; each policy only reads the slots it is entitled
    to. Returns the one-hot association and a dict of solver statistics.
    """

    name = "policy"
    history = 1  # past slots read, including t
    lookahead = 1  # slots read from t on

    def decide(self, rates, t, prev_assoc):
        raise NotImplementedError

    @staticmethod
    def _stats(sol):
        if sol is None:
            return {"iterations": 0, "wall_time": 0.0, "converged": True, "gap": 0.0}
        return {
            "iterations": sol.iterations,
            "wall_time": sol.wall_time,
            "converged": sol.converged,
            "gap": sol.gap,
        }


class MaxShannonPolicy(Policy):
    name = "max_shannon"

    def decide(self, rates, t, prev_assoc):
        return max_shannon(rates[t]), self._stats(None)


class HitAgnosticPolicy(Policy):
    name = "hit_agnostic"

    def __init__(self, solver=None):
        self.solver = solver

    def decide(self, rates, t, prev_assoc):
        assoc, sol = hit_agnostic(rates[t], self.solver, return_solution=True)
        return assoc, self._stats(sol)


def _eta(eta, hit_model):
    if eta is not None:
        return float(eta)
    return expected_log_ho_penalty(hit_model if hit_model is not None else HitModel())


class ForecasterMpcPolicy(Policy):
    """``eta=None`` takes the expected log handover penalty of ``hit_model``."""

    name = "forecaster_mpc"

    def __init__(self, model, horizon=3, eta=None, hit_model=None, solver=None):
        self.model = model
        self.horizon = horizon
        self.eta = eta
        self.hit_model = hit_model
        self.solver = solver

    @property
    def history(self):
        return self.model.n_history

    def decide(self, rates, t, prev_assoc):
        n = self.model.n_history
        if t + 1 < n:
            raise ValueError(f"slot {t} has fewer than {n} past measurements")
        assoc, sol = forecaster_mpc(
            rates[t + 1 - n : t + 1],
            prev_assoc,
            self.model,
            _eta(self.eta, self.hit_model),
            self.horizon,
            self.solver,
            return_solution=True,
        )
        return assoc, self._stats(sol)


class GenieMpcPolicy(Policy):
    name = "genie_mpc"

    def __init__(self, horizon=3, eta=None, hit_model=None, solver=None):
        self.horizon = horizon
        self.eta = eta
        self.hit_model = hit_model
        self.solver = solver

    @property
    def lookahead(self):
        return self.horizon

    def decide(self, rates, t, prev_assoc):
        if t + self.horizon > len(rates):
            raise ValueError("trace too short for the genie horizon")
        assoc, sol = genie_mpc(
            rates[t : t + self.horizon],
            prev_assoc,
            _eta(self.eta, self.hit_model),
            self.solver,
            return_solution=True,
        )
        return assoc, self._stats(sol)


def handovers(assoc, prev_assoc):
    """Per-user handover flags: serving BS differs from the previous slot."""
    assoc = check_one_hot(assoc, name="assoc")
    prev_assoc = check_one_hot(prev_assoc, *assoc.shape)
    return np.argmax(assoc, axis=1) != np.argmax(prev_assoc, axis=1)


def make_policy(name, model=None, horizon=3, eta=None, hit_model=None, solver=None):
    if name == "max_shannon":
        return MaxShannonPolicy()
    if name == "hit_agnostic":
        return HitAgnosticPolicy(solver)
    if name == "forecaster_mpc":
        if model is None:
            raise ValueError("forecaster_mpc needs a trained forecaster model")
        return ForecasterMpcPolicy(model, horizon, eta, hit_model, solver)
    if name == "genie_mpc":
        return GenieMpcPolicy(horizon, eta, hit_model, solver)
    raise ValueError(f"unknown policy {name!r}; choose from {', '.join(POLICY_NAMES)}")
