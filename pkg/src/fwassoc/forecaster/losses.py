"""Forecast losses: NMSE, NDCG and a smooth NDCG surrogate.

Relevances are z-scored per vector and passed through ``g(z) = 2^sigmoid(z) - 1``
so the gain is scale-free. Rank ``m`` (1-based) is discounted by
``1 / log2(m + 1)``.

The smooth surrogate replaces the hard sort of the prediction by the
NeuralSort relaxation: with z-scored prediction scores ``s`` and
``A_k = sum_j |s_k - s_j|``, row ``i`` of the soft permutation is

    P[i, :] = softmax(((n + 1 - 2 i) s - A) / tau)

which is row-stochastic and tends to the sorting permutation as
``tau -> 0``. The smooth DCG is ``sum_i d_i (P g)_i``; the ideal DCG is the
exact one. All functions operate on the last axis and broadcast over any
leading batch axes.
"""
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, softmax

ZSCORE_EPS = 1e-8
NMSE_EPS = 1e-12


@dataclass(frozen=True)
class NdcgConfig:
    temperature: float = 0.1
    zscore_eps: float = ZSCORE_EPS

    def __post_init__(self):
        if not self.temperature > 0:
            raise ValueError("temperature must be positive")


def _pair(target, prediction):
    target = np.asarray(target, dtype=np.float64)
    prediction = np.asarray(prediction, dtype=np.float64)
    if target.shape != prediction.shape:
        raise ValueError(f"shape mismatch {target.shape} vs {prediction.shape}")
    if target.ndim == 0 or target.shape[-1] < 1:
        raise ValueError("need at least one element")
    return target, prediction


def zscore(v, eps=ZSCORE_EPS):
    """Standardise the last axis; std is floored as ``sqrt(var + eps^2)``."""
    v = np.asarray(v, dtype=np.float64)
    centred = v - v.mean(axis=-1, keepdims=True)
    sd = np.sqrt(np.mean(centred * centred, axis=-1, keepdims=True) + eps * eps)
    return centred / sd


def gains(target, eps=ZSCORE_EPS):
    return np.exp2(expit(zscore(target, eps))) - 1.0


def discounts(n):
    return 1.0 / np.log2(np.arange(2, n + 2))


def _ideal_dcg(g):
    d = discounts(g.shape[-1])
    return np.sum(-np.sort(-g, axis=-1) * d, axis=-1)


def nmse(target, prediction, eps=NMSE_EPS):
    """``||c - c_hat||^2 / ||c||^2``; falls back to the mean squared error
    when ``||c||^2 <= eps``."""
    target, prediction = _pair(target, prediction)
    err = np.sum((target - prediction) ** 2, axis=-1)
    power = np.sum(target * target, axis=-1)
    mse = err / target.shape[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(power > eps, err / np.where(power > eps, power, 1.0), mse)
    return out if out.ndim else float(out)


def ndcg(target, prediction, cfg=NdcgConfig()):
    """Hard NDCG of the ordering induced by ``prediction``; ties keep index order."""
    target, prediction = _pair(target, prediction)
    g = gains(target, cfg.zscore_eps)
    order = np.argsort(-prediction, axis=-1, kind="stable")
    dcg = np.sum(np.take_along_axis(g, order, axis=-1) * discounts(g.shape[-1]), axis=-1)
    out = dcg / _ideal_dcg(g)
    return out if out.ndim else float(out)


def soft_permutation(scores, temperature):
    """NeuralSort relaxation of the descending sort permutation, shape (..., n, n)."""
    s = np.asarray(scores, dtype=np.float64)
    n = s.shape[-1]
    a = np.abs(s[..., :, None] - s[..., None, :]).sum(axis=-1)
    coef = (n + 1 - 2 * np.arange(1, n + 1)).astype(np.float64)
    logits = (coef[:, None] * s[..., None, :] - a[..., None, :]) / temperature
    return softmax(logits, axis=-1)


def smooth_ndcg(target, prediction, cfg=NdcgConfig(), return_grad=False):
    """Differentiable NDCG; optionally also d(value)/d(prediction)."""
    target, prediction = _pair(target, prediction)
    n = target.shape[-1]
    g = gains(target, cfg.zscore_eps)
    idcg = _ideal_dcg(g)
    d = discounts(n)
    z = zscore(prediction, cfg.zscore_eps)
    p = soft_permutation(z, cfg.temperature)
    value = np.einsum("i,...ik,...k->...", d, p, g) / idcg
    if not return_grad:
        return value if value.ndim else float(value)

    tau = cfg.temperature
    gp = d[:, None] * g[..., None, :] / idcg[..., None, None]  # dvalue/dP
    dl = p * (gp - np.sum(p * gp, axis=-1, keepdims=True))  # softmax backward
    coef = (n + 1 - 2 * np.arange(1, n + 1)).astype(np.float64)
    dz = np.einsum("...ik,i->...k", dl, coef) / tau
    a = dl.sum(axis=-2)
    sgn = np.sign(z[..., :, None] - z[..., None, :])
    dz -= np.sum(sgn * (a[..., :, None] + a[..., None, :]), axis=-1) / tau
    # back through the z-score
    centred = prediction - prediction.mean(axis=-1, keepdims=True)
    sd = np.sqrt(np.mean(centred * centred, axis=-1, keepdims=True) + cfg.zscore_eps**2)
    grad = (dz - dz.mean(axis=-1, keepdims=True) - z * np.mean(dz * z, axis=-1, keepdims=True)) / sd
    if not value.ndim:
        value = float(value)
    return value, grad


def smooth_ndcg_loss(target, prediction, cfg=NdcgConfig()):
    """``1 - smooth_ndcg``, the ranking part of the training loss."""
    v = smooth_ndcg(target, prediction, cfg)
    return 1.0 - v


def joint_loss(target, prediction, cfg=NdcgConfig(), smooth=True, return_grad=False):
    """``NMSE + 1 - NDCG`` averaged over every vector of the last axis.

    ``smooth=False`` uses the hard NDCG (evaluation form, no gradient).
    """
    target, prediction = _pair(target, prediction)
    count = int(np.prod(target.shape[:-1], dtype=np.int64)) or 1
    if not smooth:
        if return_grad:
            raise ValueError("the hard NDCG has no gradient")
        return float(np.mean(nmse(target, prediction)) + 1.0 - np.mean(ndcg(target, prediction, cfg)))
    err = nmse(target, prediction)
    if not return_grad:
        return float(np.mean(err) + 1.0 - np.mean(smooth_ndcg(target, prediction, cfg)))
    sv, sg = smooth_ndcg(target, prediction, cfg, return_grad=True)
    power = np.sum(target * target, axis=-1, keepdims=True)
    denom = np.where(power > NMSE_EPS, power, target.shape[-1])
    grad = (2.0 * (prediction - target) / denom - sg) / count
    return float(np.mean(err) + 1.0 - np.mean(sv)), grad
