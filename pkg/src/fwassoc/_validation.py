"""Input validation helpers shared by the estimators."""
import numpy as np
from sklearn.utils import check_array

RATE_FLOOR = 1.0  # bits/s


def check_rates(rates, *, ndim=2, name="rates", allow_zero=True):
    """Validate a non-negative, finite rate array of the given rank."""
    arr = check_array(
        rates, ensure_2d=False, allow_nd=True, dtype=np.float64, input_name=name
    )
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if np.any(arr < 0) or (not allow_zero and np.any(arr == 0)):
        raise ValueError(f"{name} must be non-negative")
    return arr


def check_one_hot(assoc, n_users=None, n_bs=None, name="prev_assoc"):
    """Validate a binary users x BSs association matrix with one-hot rows."""
    arr = np.asarray(assoc, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D (users x BSs), got {arr.shape}")
    if n_users is not None and arr.shape[0] != n_users:
        raise ValueError(f"{name} has {arr.shape[0]} users, expected {n_users}")
    if n_bs is not None and arr.shape[1] != n_bs:
        raise ValueError(f"{name} has {arr.shape[1]} BSs, expected {n_bs}")
    if not np.all((arr == 0) | (arr == 1)) or not np.all(arr.sum(axis=1) == 1):
        raise ValueError(f"{name} rows must be one-hot")
    return arr


def check_simplex_rows(x, atol=1e-9, name="x"):
    """Validate that the last axis of ``x`` lies on the probability simplex."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    if np.any(arr < -atol) or np.any(arr > 1 + atol):
        raise ValueError(f"{name} entries must lie in [0, 1]")
    if not np.allclose(arr.sum(axis=-1), 1.0, atol=atol, rtol=0):
        raise ValueError(f"{name} rows must sum to 1")
    return arr


def one_hot(indices, n_bs):
    """Indices of shape (...,) -> one-hot float array of shape (..., n_bs)."""
    idx = np.asarray(indices, dtype=np.intp)
    out = np.zeros(idx.shape + (n_bs,))
    np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
    return out
