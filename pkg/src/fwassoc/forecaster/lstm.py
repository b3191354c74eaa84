"""Single-layer LSTM with a linear head, forward and backward in numpy.

Gate order in the stacked weights is (input, forget, cell, output):

    z_t = W x_t + U h_{t-1} + b
    i, f, o = sigmoid(z_i), sigmoid(z_f), sigmoid(z_o);  g = tanh(z_g)
    c_t = f * c_{t-1} + i * g;  h_t = o * tanh(c_t)
    y = W_head h_N + b_head
"""
import numpy as np
from scipy.special import expit

PARAM_NAMES = ("lstm_W", "lstm_U", "lstm_b", "head_W", "head_b")


def init_params(n_inputs, hidden_size, n_outputs, rng):
    """Uniform(-k, k) weights with ``k = 1 / sqrt(hidden_size)``; zero biases."""
    k = 1.0 / np.sqrt(hidden_size)
    h4 = 4 * hidden_size
    return {
        "lstm_W": rng.uniform(-k, k, (h4, n_inputs)),
        "lstm_U": rng.uniform(-k, k, (h4, hidden_size)),
        "lstm_b": np.zeros(h4),
        "head_W": rng.uniform(-k, k, (n_outputs, hidden_size)),
        "head_b": np.zeros(n_outputs),
    }


def forward(params, x, return_cache=False):
    """``x`` has shape (batch, steps, inputs); returns (batch, outputs)."""
    w, u, b = params["lstm_W"], params["lstm_U"], params["lstm_b"]
    batch, steps, _ = x.shape
    hs = u.shape[1]
    h = np.zeros((batch, hs))
    c = np.zeros((batch, hs))
    # input projection for all steps at once
    zx = x @ w.T + b
    cache = []
    for t in range(steps):
        z = zx[:, t] + h @ u.T
        i = expit(z[:, :hs])
        f = expit(z[:, hs : 2 * hs])
        g = np.tanh(z[:, 2 * hs : 3 * hs])
        o = expit(z[:, 3 * hs :])
        c_prev, h_prev = c, h
        c = f * c_prev + i * g
        tc = np.tanh(c)
        h = o * tc
        if return_cache:
            cache.append((h_prev, c_prev, i, f, g, o, tc))
    y = h @ params["head_W"].T + params["head_b"]
    if return_cache:
        return y, (x, h, cache)
    return y


def backward(params, cache, dy):
    """Gradients of ``sum(dy * y)`` with respect to every parameter."""
    x, h_last, steps = cache
    u = params["lstm_U"]
    hs = u.shape[1]
    grads = {
        "head_W": dy.T @ h_last,
        "head_b": dy.sum(axis=0),
    }
    dw = np.zeros_like(params["lstm_W"])
    du = np.zeros_like(u)
    db = np.zeros_like(params["lstm_b"])
    dh = dy @ params["head_W"]
    dc = np.zeros_like(dh)
    for t in range(len(steps) - 1, -1, -1):
        h_prev, c_prev, i, f, g, o, tc = steps[t]
        do = dh * tc
        dc = dc + dh * o * (1.0 - tc * tc)
        di = dc * g
        dg = dc * i
        df = dc * c_prev
        dz = np.concatenate(
            [di * i * (1 - i), df * f * (1 - f), dg * (1 - g * g), do * o * (1 - o)], axis=1
        )
        dw += dz.T @ x[:, t]
        du += dz.T @ h_prev
        db += dz.sum(axis=0)
        dh = dz @ u
        dc = dc * f
    grads.update(lstm_W=dw, lstm_U=du, lstm_b=db)
    return grads


class Adam:
    """Adam with global gradient-norm clipping."""

    def __init__(self, params, learning_rate=1e-3, beta1=0.9, beta2=0.999, eps=1e-8, clip_norm=5.0):
        self.lr, self.beta1, self.beta2, self.eps = learning_rate, beta1, beta2, eps
        self.clip_norm = clip_norm
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
        scale = 1.0
        if self.clip_norm is not None and norm > self.clip_norm:
            scale = self.clip_norm / norm
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            g = g * scale
            self.m[k] = self.beta1 * self.m[k] + (1 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)
        return norm
