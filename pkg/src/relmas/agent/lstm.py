"""Single-layer LSTM followed by FC(h -> h/2) + ReLU and FC(h/2 -> out), applied per timestep.

Forward and backward passes are batched over sequences of equal length. The
recurrence is causal, so shorter sequences may be zero-padded at the end as long
as their outputs are read, and gradients injected, only at real timesteps.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

PARAM_NAMES = ("W", "U", "b", "W1", "b1", "W2", "b2")
Params = dict[str, np.ndarray]


def param_shapes(input_size: int, hidden: int, output_size: int) -> dict[str, tuple[int, ...]]:
    half = hidden // 2
    return {
        "W": (4 * hidden, input_size),
        "U": (4 * hidden, hidden),
        "b": (4 * hidden,),
        "W1": (half, hidden),
        "b1": (half,),
        "W2": (output_size, half),
        "b2": (output_size,),
    }


def init_params(rng: np.random.Generator, input_size: int, hidden: int, output_size: int) -> Params:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); forget-gate bias starts at +1."""
    if hidden < 2 or hidden % 2:
        raise ValueError("hidden size must be an even number >= 2")
    shapes = param_shapes(input_size, hidden, output_size)
    fan_in = {"W": input_size + hidden, "U": input_size + hidden, "b": input_size + hidden,
              "W1": hidden, "b1": hidden, "W2": hidden // 2, "b2": hidden // 2}
    p = {}
    for name in PARAM_NAMES:
        k = 1.0 / np.sqrt(fan_in[name])
        p[name] = rng.uniform(-k, k, size=shapes[name])
    p["b"][hidden : 2 * hidden] += 1.0
    return p


def dims(params: Params) -> tuple[int, int, int]:
    """(input size, hidden size, output size)."""
    return params["W"].shape[1], params["U"].shape[1], params["W2"].shape[0]


def zeros_like(params: Params) -> Params:
    return {k: np.zeros_like(v) for k, v in params.items()}


def copy_params(params: Params) -> Params:
    return {k: v.copy() for k, v in params.items()}


def _outer_sum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """sum over batch and time of outer(a[n, t], b[n, t])."""
    return a.reshape(-1, a.shape[-1]).T @ b.reshape(-1, b.shape[-1])


@dataclass
class Cache:
    X: np.ndarray
    H: np.ndarray  # (N, T+1, h), H[:, 0] is the zero initial state
    C: np.ndarray
    gates: np.ndarray  # (N, T, 4h) post-activation i, f, g, o
    tanh_c: np.ndarray
    A1: np.ndarray  # FC1 pre-activation
    Y: np.ndarray
    output: str


def _gate_affine(h: int, dtype) -> tuple[np.ndarray, np.ndarray]:
    """Scale/offset turning one tanh over all gates into sigmoid(i, f, o) and tanh(g).

    sigmoid(z) = 0.5 + 0.5 * tanh(z / 2), so the i, f, o blocks use scale 0.5 both ways.
    """
    scale = np.full(4 * h, 0.5, dtype=dtype)
    scale[2 * h : 3 * h] = 1.0
    offset = np.full(4 * h, 0.5, dtype=dtype)
    offset[2 * h : 3 * h] = 0.0
    return scale, offset


def forward(params: Params, X: np.ndarray, output: str = "tanh") -> tuple[np.ndarray, Cache]:
    """X: (N, T, input) or (T, input). Returns per-timestep outputs of matching rank.

    Computation runs in the dtype of the parameters.
    """
    squeeze = X.ndim == 2
    if squeeze:
        X = X[None]
    D, h, _ = dims(params)
    if X.shape[-1] != D:
        raise ValueError(f"input width {X.shape[-1]} does not match network input size {D}")
    N, T, _ = X.shape
    W, U, b = params["W"], params["U"], params["b"]
    dtype = W.dtype
    X = X.astype(dtype, copy=False)
    # time-major buffers keep every per-step slice contiguous
    H = np.zeros((T + 1, N, h), dtype=dtype)
    C = np.zeros((T + 1, N, h), dtype=dtype)
    gates = np.empty((T, N, 4 * h), dtype=dtype)
    tanh_c = np.empty((T, N, h), dtype=dtype)
    scale, offset = _gate_affine(h, dtype)
    xw = np.swapaxes(X, 0, 1) @ W.T + b
    xw *= scale
    US = U.T * scale
    for t in range(T):
        a = gates[t]
        np.dot(H[t], US, out=a)
        a += xw[t]
        np.tanh(a, out=a)
        a *= scale
        a += offset
        c = C[t + 1]
        np.multiply(a[:, h : 2 * h], C[t], out=c)
        c += a[:, :h] * a[:, 2 * h : 3 * h]
        tc = tanh_c[t]
        np.tanh(c, out=tc)
        np.multiply(a[:, 3 * h :], tc, out=H[t + 1])
    H, C = np.swapaxes(H, 0, 1), np.swapaxes(C, 0, 1)
    gates, tanh_c = np.swapaxes(gates, 0, 1), np.swapaxes(tanh_c, 0, 1)
    A1 = H[:, 1:] @ params["W1"].T + params["b1"]
    Z2 = np.maximum(A1, 0.0) @ params["W2"].T + params["b2"]
    if output == "tanh":
        Y = np.tanh(Z2)
    elif output == "linear":
        Y = Z2
    else:
        raise ValueError(f"unknown output activation {output!r}")
    cache = Cache(X, H, C, gates, tanh_c, A1, Y, output)
    return (Y[0] if squeeze else Y), cache


def backward(params: Params, cache: Cache, dY: np.ndarray) -> tuple[Params, np.ndarray]:
    """Gradients of sum(dY * Y) w.r.t. every parameter and the inputs (BPTT)."""
    if dY.ndim == 2:
        dY = dY[None]
    dY = dY.astype(params["W"].dtype, copy=False)
    X, H, C, gates, tanh_c = cache.X, cache.H, cache.C, cache.gates, cache.tanh_c
    N, T, _ = X.shape
    h = H.shape[-1]
    grads = zeros_like(params)
    dZ2 = dY * (1.0 - cache.Y**2) if cache.output == "tanh" else dY
    R = np.maximum(cache.A1, 0.0)
    grads["W2"] = _outer_sum(dZ2, R)
    grads["b2"] = dZ2.sum(axis=(0, 1))
    dA1 = (dZ2 @ params["W2"]) * (cache.A1 > 0)
    grads["W1"] = _outer_sum(dA1, H[:, 1:])
    grads["b1"] = dA1.sum(axis=(0, 1))
    dHs = dA1 @ params["W1"]

    U = params["U"]
    dact = gates * (1.0 - gates)
    dact[:, :, 2 * h : 3 * h] = 1.0 - gates[:, :, 2 * h : 3 * h] ** 2
    # time-major copies so the per-step slices below are contiguous
    dact = np.ascontiguousarray(np.swapaxes(dact, 0, 1))
    gates_t = np.ascontiguousarray(np.swapaxes(gates, 0, 1))
    C_t = np.ascontiguousarray(np.swapaxes(C, 0, 1))
    tanh_t = np.ascontiguousarray(np.swapaxes(tanh_c, 0, 1))
    dHs = np.ascontiguousarray(np.swapaxes(dHs, 0, 1))
    dz_all = np.empty((T, N, 4 * h), dtype=dact.dtype)
    dh_next = np.zeros((N, h), dtype=dact.dtype)
    dc_next = np.zeros((N, h), dtype=dact.dtype)
    for t in range(T - 1, -1, -1):
        a = gates_t[t]
        i, f, g, o = a[:, :h], a[:, h : 2 * h], a[:, 2 * h : 3 * h], a[:, 3 * h :]
        tc = tanh_t[t]
        dH = dHs[t] + dh_next
        dC = dH * o * (1.0 - tc * tc) + dc_next
        dz = dz_all[t]
        np.multiply(dC, g, out=dz[:, :h])
        np.multiply(dC, C_t[t], out=dz[:, h : 2 * h])
        np.multiply(dC, i, out=dz[:, 2 * h : 3 * h])
        np.multiply(dH, tc, out=dz[:, 3 * h :])
        # local derivative of each gate's activation
        dz *= dact[t]
        dc_next = dC * f
        dh_next = dz @ U
    # sums over (batch, time) are order-free, so stay time-major here
    H_t = np.swapaxes(H, 0, 1)
    grads["W"] = _outer_sum(dz_all, np.swapaxes(X, 0, 1))
    grads["U"] = _outer_sum(dz_all, H_t[:-1])
    grads["b"] = dz_all.sum(axis=(0, 1))
    dX = np.swapaxes(dz_all @ params["W"], 0, 1)
    return grads, dX


class Adam:
    def __init__(self, params: Params, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 clip_norm: Optional[float] = None):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.clip_norm = clip_norm
        self.m = zeros_like(params)
        self.v = zeros_like(params)
        self.t = 0

    def step(self, params: Params, grads: Params) -> None:
        if self.clip_norm is not None:
            norm = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            if norm > self.clip_norm:
                grads = {k: g * (self.clip_norm / norm) for k, g in grads.items()}
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


def soft_update(target: Params, online: Params, tau: float) -> None:
    for k in target:
        target[k] = tau * online[k] + (1.0 - tau) * target[k]
