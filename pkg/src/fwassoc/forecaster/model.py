"""Per-user rate forecaster: an LSTM over normalised log rates.

Rates ``c`` (bits/s) are mapped to ``u = (log1p(c / 1e6) - mean) / std`` with
scalar constants fitted on the training histories. The network reads ``N``
such vectors and emits ``H * B`` values in the same normalised space. With
``residual=True`` the last input vector is added to every horizon step, so
the head learns a correction to the persistence forecast. Outputs are mapped
back with ``1e6 * expm1(y * std + mean)`` and, at prediction time,
clamped below at the 1 bit/s rate floor.

Checkpoints are ``.npz`` archives: one float64 array per parameter
(``lstm_W``, ``lstm_U``, ``lstm_b``, ``head_W``, ``head_b``) plus a
``__meta__`` entry holding a JSON document with the format name, version,
hyperparameters, normalisation constants and array shapes.
"""
import json
import logging

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .._validation import RATE_FLOOR
from ..exceptions import TrainingDivergedError
from ..rng import substream
from . import lstm
from .dataset import ForecastDataset
from .losses import NdcgConfig, joint_loss, ndcg, nmse

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "fwassoc-forecaster"
CHECKPOINT_VERSION = 1
RATE_SCALE = 1e6
_EXP_CAP = 60.0


def _check_windows(X, n_steps, n_bs=None, name="X"):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[1] != n_steps:
        raise ValueError(f"{name} must have shape (n_samples, {n_steps}, n_bs), got {X.shape}")
    if n_bs is not None and X.shape[2] != n_bs:
        raise ValueError(f"{name} has {X.shape[2]} BSs, model expects {n_bs}")
    if not np.all(np.isfinite(X)) or np.any(X < 0):
        raise ValueError(f"{name} must be finite and non-negative")
    return X


class RateForecaster(BaseEstimator):
    """LSTM forecaster of the next ``horizon`` rate vectors of a user.

    Parameters
    ----------
    n_history, horizon : window lengths N and H.
    hidden_size : LSTM width.
    loss : "joint" (NMSE + 1 - smooth NDCG) or "nmse".
    temperature : soft-sort temperature of the smooth NDCG.
    max_epochs, batch_size, learning_rate, clip_norm : Adam training setup.
    validation_fraction : share of samples held out for the loss curve.
    residual : add the last normalised input to each forecast step.
    random_state : seed of the ``forecaster`` random substream.
    """

    def __init__(
        self,
        n_history=8,
        horizon=3,
        hidden_size=64,
        loss="joint",
        temperature=0.1,
        max_epochs=50,
        batch_size=256,
        learning_rate=1e-3,
        clip_norm=5.0,
        validation_fraction=0.1,
        residual=True,
        random_state=0,
    ):
        self.n_history = n_history
        self.horizon = horizon
        self.hidden_size = hidden_size
        self.loss = loss
        self.temperature = temperature
        self.max_epochs = max_epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.clip_norm = clip_norm
        self.validation_fraction = validation_fraction
        self.residual = residual
        self.random_state = random_state

    # normalisation -------------------------------------------------------
    def _encode(self, c):
        return (np.log1p(c / RATE_SCALE) - self.norm_mean_) / self.norm_std_

    def _decode(self, y):
        a = np.minimum(y * self.norm_std_ + self.norm_mean_, _EXP_CAP)
        return RATE_SCALE * np.expm1(a), a

    def _ndcg_config(self):
        return NdcgConfig(self.temperature)

    def _rng(self, purpose):
        # purpose 0: weight init, 1: split and shuffling
        if isinstance(self.random_state, np.random.Generator):
            return self.random_state
        return substream(0 if self.random_state is None else int(self.random_state), "forecaster", purpose)

    def initialize(self, n_bs, X=None):
        """Draw initial weights; normalisation defaults to identity unless ``X`` is given."""
        if self.loss not in ("joint", "nmse"):
            raise ValueError("loss must be 'joint' or 'nmse'")
        self.n_bs_ = int(n_bs)
        self.params_ = lstm.init_params(
            self.n_bs_, self.hidden_size, self.horizon * self.n_bs_, self._rng(0)
        )
        if X is None:
            self.norm_mean_, self.norm_std_ = 0.0, 1.0
        else:
            u = np.log1p(np.asarray(X) / RATE_SCALE)
            self.norm_mean_ = float(u.mean())
            self.norm_std_ = float(max(u.std(), 1e-6))
        return self

    # core maths ----------------------------------------------------------
    def _raw(self, X, return_cache=False):
        u = self._encode(X)
        out = lstm.forward(self.params_, u, return_cache)
        if not self.residual:
            return out
        skip = np.tile(u[:, -1], self.horizon)
        if return_cache:
            return out[0] + skip, out[1]
        return out + skip

    def loss_and_grad(self, X, Y):
        """Training loss on rates and its parameter gradients."""
        y, cache = self._raw(X, return_cache=True)
        c_hat, a = self._decode(y)
        c_hat = c_hat.reshape(Y.shape)
        if self.loss == "joint":
            value, g = joint_loss(Y, c_hat, self._ndcg_config(), return_grad=True)
        else:
            err = Y - c_hat
            power = np.sum(Y * Y, axis=-1, keepdims=True)
            denom = np.where(power > 0, power, Y.shape[-1])
            count = np.prod(Y.shape[:-1])
            value = float(np.mean(nmse(Y, c_hat)))
            g = -2.0 * err / denom / count
        dy = g.reshape(y.shape) * RATE_SCALE * np.exp(a) * self.norm_std_
        dy = np.where(a >= _EXP_CAP, 0.0, dy)
        return value, lstm.backward(self.params_, cache, dy)

    def eval_loss(self, X, Y):
        c_hat, _ = self._decode(self._raw(X))
        c_hat = c_hat.reshape(Y.shape)
        if self.loss == "joint":
            return joint_loss(Y, c_hat, self._ndcg_config())
        return float(np.mean(nmse(Y, c_hat)))

    # estimator API -------------------------------------------------------
    def fit(self, X, Y=None):
        """Train on windows ``X`` (S, N, B) and targets ``Y`` (S, H, B).

        ``X`` may also be a :class:`ForecastDataset`. Populates
        ``train_loss_`` and ``val_loss_`` (one entry per epoch).
        """
        if isinstance(X, ForecastDataset):
            X, Y = X.X, X.Y
        X = _check_windows(X, self.n_history)
        Y = _check_windows(Y, self.horizon, X.shape[2], name="Y")
        if len(X) != len(Y):
            raise ValueError("X and Y have different sample counts")
        if len(X) == 0:
            raise ValueError("empty dataset")
        rng = self._rng(1)
        n_val = int(round(self.validation_fraction * len(X))) if len(X) > 1 else 0
        perm = rng.permutation(len(X))
        val_idx, tr_idx = perm[:n_val], perm[n_val:]
        self.initialize(X.shape[2], X[tr_idx])
        opt = lstm.Adam(self.params_, self.learning_rate, clip_norm=self.clip_norm)
        self.train_loss_, self.val_loss_ = [], []
        for epoch in range(self.max_epochs):
            order = tr_idx[rng.permutation(len(tr_idx))]
            total = 0.0
            for start in range(0, len(order), self.batch_size):
                b = order[start : start + self.batch_size]
                value, grads = self.loss_and_grad(X[b], Y[b])
                if not np.isfinite(value) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                    raise TrainingDivergedError(
                        f"non-finite loss or gradient at epoch {epoch}, batch starting {start}"
                    )
                opt.step(self.params_, grads)
                total += value * len(b)
            self.train_loss_.append(total / len(order))
            if n_val:
                self.val_loss_.append(self.eval_loss(X[val_idx], Y[val_idx]))
            logger.debug("epoch %d train %.5f", epoch, self.train_loss_[-1])
        self.n_epochs_ = self.max_epochs
        return self

    def predict(self, X):
        """Forecasts (S, H, B) in bits/s; a single (N, B) history gives (H, B)."""
        check_is_fitted(self, "params_")
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 2
        if single:
            X = X[None]
        X = _check_windows(X, self.n_history, self.n_bs_)
        c_hat, _ = self._decode(self._raw(X))
        out = np.maximum(c_hat, RATE_FLOOR).reshape(len(X), self.horizon, self.n_bs_)
        return out[0] if single else out

    def evaluate(self, X, Y=None):
        """Hard-NDCG and NMSE averaged over samples and horizon steps."""
        if isinstance(X, ForecastDataset):
            X, Y = X.X, X.Y
        pred = self.predict(X)
        Y = np.asarray(Y, dtype=np.float64)
        cfg = self._ndcg_config()
        e = float(np.mean(nmse(Y, pred)))
        g = float(np.mean(ndcg(Y, pred, cfg)))
        return {"nmse": e, "ndcg": g, "loss": e + 1.0 - g}

    def score(self, X, Y=None):
        """Negative evaluation loss (higher is better)."""
        return -self.evaluate(X, Y)["loss"]

    # persistence ---------------------------------------------------------
    def save(self, path):
        check_is_fitted(self, "params_")
        meta = {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "hyperparameters": self.get_params(),
            "n_bs": self.n_bs_,
            "normalization": {
                "rate_scale": RATE_SCALE,
                "mean": self.norm_mean_,
                "std": self.norm_std_,
            },
            "arrays": {k: list(v.shape) for k, v in self.params_.items()},
        }
        if not isinstance(meta["hyperparameters"]["random_state"], (int, type(None))):
            meta["hyperparameters"]["random_state"] = None
        arrays = {k: np.ascontiguousarray(v, dtype=np.float64) for k, v in self.params_.items()}
        with open(path, "wb") as fh:
            np.savez(fh, __meta__=np.array(json.dumps(meta, sort_keys=True)), **arrays)
        return path

    @classmethod
    def load(cls, path):
        try:
            with np.load(path, allow_pickle=False) as z:
                meta = json.loads(str(z["__meta__"]))
                arrays = {k: z[k].copy() for k in lstm.PARAM_NAMES}
        except (OSError, KeyError, ValueError) as exc:
            raise ValueError(f"cannot read forecaster checkpoint {path}: {exc}") from exc
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path} is not a forecaster checkpoint")
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('version')!r}")
        for k, shape in meta["arrays"].items():
            if list(arrays[k].shape) != shape:
                raise ValueError(f"array {k} has shape {arrays[k].shape}, expected {shape}")
        model = cls(**meta["hyperparameters"])
        model.n_bs_ = int(meta["n_bs"])
        model.norm_mean_ = float(meta["normalization"]["mean"])
        model.norm_std_ = float(meta["normalization"]["std"])
        model.params_ = arrays
        return model
