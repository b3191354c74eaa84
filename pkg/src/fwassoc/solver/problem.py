"""The association MPC objective and its gradient.

For relaxed associations ``x`` of shape (H, U, B) the objective is

    f(x) = sum_n sum_j sum_i  x_ij[n] ln(c_ij[n] / max(l_j[n], eps))
                             + (eta / 2) (x_ij[n] - x_ij[n-1])^2

with loads ``l_j[n] = sum_i x_ij[n]`` and ``x[0]`` the previous (fixed)
binary association. Since ``sum_i x_ij ln(1/max(l_j, eps)) =
-l_j ln max(l_j, eps)`` the load term only needs the (H, B) load matrix,
which keeps line searches cheap.
"""
from dataclasses import dataclass, field

import numpy as np

from .._validation import RATE_FLOOR, check_one_hot, check_rates, check_simplex_rows

LOAD_EPSILON = 1e-12


@dataclass
class MpcProblem:
    """Rates (H, U, B), previous binary association (U, B) and eta <= 0."""

    rates: np.ndarray
    prev_assoc: np.ndarray
    eta: float = 0.0
    log_rates: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rates = check_rates(self.rates, ndim=3)
        self.rates = np.maximum(rates, RATE_FLOOR)
        _, n_users, n_bs = self.rates.shape
        self.prev_assoc = check_one_hot(self.prev_assoc, n_users, n_bs)
        if not self.eta <= 0:
            raise ValueError("eta must be non-positive")
        self.eta = float(self.eta)
        self.log_rates = np.log(self.rates)

    @property
    def horizon(self):
        return self.rates.shape[0]

    @property
    def shape(self):
        return self.rates.shape


def _entropy_part(loads, eps):
    return np.sum(loads * np.log(np.maximum(loads, eps)))


def _switching(x, prev):
    """Consecutive differences x[n] - x[n-1] with x[0] = prev."""
    diff = np.empty_like(x)
    diff[0] = x[0] - prev
    diff[1:] = x[1:] - x[:-1]
    return diff


def objective(x, p, eps=LOAD_EPSILON, check=True):
    if check:
        x = check_simplex_rows(x)
        if x.shape != p.shape:
            raise ValueError(f"x has shape {x.shape}, problem has {p.shape}")
    loads = x.sum(axis=1)
    value = np.sum(x * p.log_rates) - _entropy_part(loads, eps)
    if p.eta != 0.0:
        value += 0.5 * p.eta * np.sum(_switching(x, p.prev_assoc) ** 2)
    return float(value)


def gradient(x, p, eps=LOAD_EPSILON):
    """Analytic partial derivatives of :func:`objective`, shape (H, U, B)."""
    loads = x.sum(axis=1, keepdims=True)
    g = p.log_rates - 1.0 - np.log(np.maximum(loads, eps))
    if p.eta != 0.0:
        diff = _switching(x, p.prev_assoc)
        g = g + p.eta * diff
        g[:-1] -= p.eta * diff[1:]
    return g


def objective_binary(assoc_idx, p):
    """Objective of a binary association given as BS indices (H, U)."""
    x = np.zeros(p.shape)
    np.put_along_axis(x, np.asarray(assoc_idx)[..., None], 1.0, axis=-1)
    return objective(x, p, check=False)


class LineObjective:
    """Evaluates ``f(x + a d) - f(x)`` in O(H B) for a fixed (x, d).

    The linear and switching parts are polynomials in ``a``; only the load
    entropy needs the (H, B) loads, which are affine in ``a``.
    """

    def __init__(self, x=None, d=None, p=None, eps=LOAD_EPSILON):
        self.eps = eps
        if x is None:
            return
        self.loads = x.sum(axis=1)
        self.dloads = d.sum(axis=1)
        self.lin = float(np.sum(d * p.log_rates))
        self.quad1 = 0.0
        self.quad2 = 0.0
        if p.eta != 0.0:
            dx = _switching(x, p.prev_assoc)
            dd = _switching(d, np.zeros_like(p.prev_assoc))
            self.quad1 = p.eta * float(np.sum(dx * dd))
            self.quad2 = 0.5 * p.eta * float(np.sum(dd * dd))

    @classmethod
    def from_parts(cls, loads, dloads, lin, quad1=0.0, quad2=0.0, eps=LOAD_EPSILON):
        """Build from precomputed loads, load direction and polynomial terms."""
        self = cls(eps=eps)
        self.loads, self.dloads = loads, dloads
        self.lin, self.quad1, self.quad2 = float(lin), float(quad1), float(quad2)
        return self

    def delta(self, a):
        eps = self.eps
        l0 = self.loads
        l1 = l0 + a * self.dloads
        inner = (l0 > eps) & (l1 > eps)
        # l1 ln l1 - l0 ln l0 = dl ln l1 + l0 ln(l1/l0) avoids cancellation
        with np.errstate(divide="ignore", invalid="ignore"):
            stable = a * self.dloads * np.log(np.where(inner, l1, 1.0)) + l0 * np.log1p(
                np.where(inner, a * self.dloads / np.where(inner, l0, 1.0), 0.0)
            )
        direct = l1 * np.log(np.maximum(l1, eps)) - l0 * np.log(np.maximum(l0, eps))
        ent = np.sum(np.where(inner, stable, direct))
        return a * self.lin - ent + a * self.quad1 + a * a * self.quad2
