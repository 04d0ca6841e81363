"""
Forward/backward pairs for the Q-network building blocks.

Every `*_forward` returns (output, cache); the matching `*_backward` takes the
upstream gradient and the cache and returns the input gradient plus a dict of
parameter gradients. Leading batch dimensions are free.
"""

from typing import Dict, Tuple

import numpy as np

Grads = Dict[str, np.ndarray]


def he_uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


# -- dense -----------------------------------------------------------------


def linear_forward(x: np.ndarray, W: np.ndarray, b: np.ndarray | None = None):
    y = x @ W
    if b is not None:
        y = y + b
    return y, x


def linear_backward(dy: np.ndarray, x: np.ndarray, W: np.ndarray, with_bias: bool = True) -> Tuple[np.ndarray, Grads]:
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    grads = {"W": x2.T @ dy2}
    if with_bias:
        grads["b"] = dy2.sum(axis=0)
    return dy @ W.T, grads


def relu_forward(x: np.ndarray):
    return np.maximum(x, 0.0), x


def relu_backward(dy: np.ndarray, x: np.ndarray) -> np.ndarray:
    return dy * (x > 0)


def layer_norm_forward(x: np.ndarray, gain: np.ndarray, bias: np.ndarray, eps: float = 1e-9):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv_std
    return gain * xhat + bias, (xhat, inv_std)


def layer_norm_backward(dy: np.ndarray, cache, gain: np.ndarray) -> Tuple[np.ndarray, Grads]:
    xhat, inv_std = cache
    dxhat = dy * gain
    dx = inv_std * (dxhat - dxhat.mean(axis=-1, keepdims=True) - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    grads = {
        "gain": (dy * xhat).reshape(-1, dy.shape[-1]).sum(axis=0),
        "bias": dy.reshape(-1, dy.shape[-1]).sum(axis=0),
    }
    return dx, grads


# -- graph layers ----------------------------------------------------------


def gcn_adjacency(edge_weights: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """
    D^-1/2 (A + I) D^-1/2 over valid nodes, A_ij = (w_i + w_j) / 2 for i != j.
    Rows and columns of masked nodes are zero.
    """
    m = mask.astype(float)
    pair = m[..., :, None] * m[..., None, :]
    a = 0.5 * (edge_weights[..., :, None] + edge_weights[..., None, :]) * pair
    n = mask.shape[-1]
    eye = np.eye(n)
    a = a * (1.0 - eye) + eye * m[..., :, None]
    degree = a.sum(axis=-1)
    inv_sqrt = np.where(degree > 0, 1.0 / np.sqrt(np.where(degree > 0, degree, 1.0)), 0.0)
    return inv_sqrt[..., :, None] * a * inv_sqrt[..., None, :]


def gcn_forward(h0: np.ndarray, edge_weights: np.ndarray, mask: np.ndarray, W: np.ndarray):
    """H1 = ReLU(A_hat H0 W)"""
    a_hat = gcn_adjacency(edge_weights, mask)
    hw = h0 @ W
    z = a_hat @ hw
    return np.maximum(z, 0.0), (h0, a_hat, z)


def gcn_backward(dh1: np.ndarray, cache) -> Grads:
    h0, a_hat, z = cache
    dz = dh1 * (z > 0)
    dhw = np.swapaxes(a_hat, -1, -2) @ dz
    dW = h0.reshape(-1, h0.shape[-1]).T @ dhw.reshape(-1, dhw.shape[-1])
    return {"W": dW}


def _leaky(x: np.ndarray, slope: float) -> np.ndarray:
    return np.where(x > 0, x, slope * x)


def gat_forward(h0: np.ndarray, mask: np.ndarray, W: np.ndarray, a: np.ndarray, slope: float = 0.2):
    """
    e_ij = LeakyReLU(a^T [W h_i || W h_j]) over valid j (self included),
    alpha_ij = softmax_j(e_ij), h'_i = ReLU(sum_j alpha_ij W h_j). Masked rows are zero.
    """
    units = W.shape[-1]
    wh = h0 @ W
    src = wh @ a[:units]
    dst = wh @ a[units:]
    pre = src[..., :, None] + dst[..., None, :]
    e = _leaky(pre, slope)
    valid_j = mask[..., None, :]
    e = np.where(valid_j, e, -np.inf)
    e_max = np.max(e, axis=-1, keepdims=True)
    e_max = np.where(np.isfinite(e_max), e_max, 0.0)
    ex = np.where(valid_j, np.exp(e - e_max), 0.0)
    denom = ex.sum(axis=-1, keepdims=True)
    alpha = ex / np.where(denom > 0, denom, 1.0)
    p = alpha @ wh
    row = mask[..., :, None].astype(float)
    out = np.maximum(p, 0.0) * row
    return out, (h0, wh, pre, alpha, p, row)


def gat_backward(dout: np.ndarray, cache, W: np.ndarray, a: np.ndarray, slope: float = 0.2) -> Grads:
    h0, wh, pre, alpha, p, row = cache
    units = W.shape[-1]
    dp = dout * row * (p > 0)
    dalpha = dp @ np.swapaxes(wh, -1, -2)
    dwh = np.swapaxes(alpha, -1, -2) @ dp
    de = alpha * (dalpha - (alpha * dalpha).sum(axis=-1, keepdims=True))
    dpre = de * np.where(pre > 0, 1.0, slope)
    dsrc = dpre.sum(axis=-1)
    ddst = dpre.sum(axis=-2)
    dwh = dwh + dsrc[..., None] * a[:units] + ddst[..., None] * a[units:]
    wh2 = wh.reshape(-1, units)
    da = np.concatenate([wh2.T @ dsrc.reshape(-1), wh2.T @ ddst.reshape(-1)])
    dW = h0.reshape(-1, h0.shape[-1]).T @ dwh.reshape(-1, units)
    return {"W": dW, "a": da}


def attention_weights(h0: np.ndarray, mask: np.ndarray, W: np.ndarray, a: np.ndarray, slope: float = 0.2) -> np.ndarray:
    return gat_forward(h0, mask, W, a, slope)[1][3]


# -- readout ---------------------------------------------------------------


def star_readout_forward(h: np.ndarray, mask: np.ndarray):
    """[serving node || mean of valid neighbors], zeros when there is no neighbor"""
    m = mask[..., 1:].astype(float)
    count = np.maximum(m.sum(axis=-1, keepdims=True), 1.0)
    mean = (h[..., 1:, :] * m[..., None]).sum(axis=-2) / count
    return np.concatenate([h[..., 0, :], mean], axis=-1), (m, count, h.shape)


def star_readout_backward(dy: np.ndarray, cache) -> np.ndarray:
    m, count, shape = cache
    units = shape[-1]
    dh = np.zeros(shape)
    dh[..., 0, :] = dy[..., :units]
    dh[..., 1:, :] = (dy[..., units:] / count)[..., None, :] * m[..., None]
    return dh
