"""Forward/backward kernels for 1-D convolutional networks.

Every ``*_forward`` returns ``(out, cache)``; the matching ``*_backward`` takes
the upstream gradient and that cache. Arrays are ``(batch, channels, length)``
unless noted. Kernels are dtype-agnostic: training runs in float32, gradient
checks in float64.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError


def conv_out_len(length: int, kernel: int, stride: int = 1, padding: int = 0, dilation: int = 1) -> int:
    if min(length, kernel, stride, dilation) <= 0 or padding < 0:
        raise ConfigurationError("conv geometry must be positive")
    span = dilation * (kernel - 1) + 1
    out = (length + 2 * padding - span) // stride + 1
    if span > length + 2 * padding or out <= 0:
        raise ConfigurationError(
            f"kernel span {span} does not fit length {length} with padding {padding}")
    return out


def conv1d_forward(x, w, b, stride=1, padding=0, dilation=1):
    """Cross-correlation with zero padding; ``w`` is ``(out, in, kernel)``."""
    B, C, L = x.shape
    O, Cw, K = w.shape
    if Cw != C:
        raise ConfigurationError(f"conv expects {Cw} input channels, got {C}")
    L_out = conv_out_len(L, K, stride, padding, dilation)
    xp = np.pad(x, ((0, 0), (0, 0), (padding, padding))) if padding else x
    idx = (np.arange(L_out) * stride)[:, None] + (np.arange(K) * dilation)[None, :]
    cols = xp[:, :, idx].transpose(0, 2, 1, 3).reshape(B * L_out, C * K)
    out = cols @ w.reshape(O, C * K).T + b
    out = np.ascontiguousarray(out.reshape(B, L_out, O).transpose(0, 2, 1))
    return out, (cols, x.shape, w, stride, padding, dilation)


def conv1d_backward(dout, cache):
    cols, (B, C, L), w, stride, padding, dilation = cache
    O, _, K = w.shape
    L_out = dout.shape[2]
    d2 = dout.transpose(0, 2, 1).reshape(B * L_out, O)
    dw = (d2.T @ cols).reshape(w.shape)
    db = d2.sum(axis=0)
    dcols = (d2 @ w.reshape(O, C * K)).reshape(B, L_out, C, K)
    dxp = np.zeros((B, C, L + 2 * padding), dtype=dout.dtype)
    last = stride * (L_out - 1) + 1
    for k in range(K):
        s = k * dilation
        dxp[:, :, s:s + last:stride] += dcols[:, :, :, k].transpose(0, 2, 1)
    return dxp[:, :, padding:padding + L], dw, db


def batchnorm_forward(x, gamma, beta, running_mean, running_var, training,
                      eps=1e-5, momentum=0.1):
    """Per-channel normalization over batch and length.

    In training mode ``running_mean``/``running_var`` are updated in place
    (the variance with Bessel's correction).
    """
    if training:
        n = x.shape[0] * x.shape[2]
        if n <= 1:
            raise ValueError("batch norm needs more than one value per channel in training")
        mean = x.mean(axis=(0, 2))
        var = x.var(axis=(0, 2))
        running_mean *= 1 - momentum
        running_mean += momentum * mean
        running_var *= 1 - momentum
        running_var += momentum * var * n / (n - 1)
    else:
        mean, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mean[None, :, None]) * inv_std[None, :, None]
    out = gamma[None, :, None] * xhat + beta[None, :, None]
    return out, (xhat, inv_std, gamma, training)


def batchnorm_backward(dout, cache):
    xhat, inv_std, gamma, training = cache
    dgamma = (dout * xhat).sum(axis=(0, 2))
    dbeta = dout.sum(axis=(0, 2))
    dxhat = dout * gamma[None, :, None]
    if not training:
        return dxhat * inv_std[None, :, None], dgamma, dbeta
    n = dout.shape[0] * dout.shape[2]
    s1 = dxhat.sum(axis=(0, 2), keepdims=True)
    s2 = (dxhat * xhat).sum(axis=(0, 2), keepdims=True)
    dx = (inv_std[None, :, None] / n) * (n * dxhat - s1 - xhat * s2)
    return dx, dgamma, dbeta


def relu_forward(x):
    return np.maximum(x, 0), x


def relu_backward(dout, x):
    return dout * (x > 0)


def leaky_relu_forward(x, slope=0.01):
    return np.where(x > 0, x, slope * x), (x, slope)


def leaky_relu_backward(dout, cache):
    x, slope = cache
    return dout * np.where(x > 0, 1.0, slope).astype(dout.dtype)


def dropout_forward(x, p, training, rng):
    """Inverted dropout; identity at inference or when ``p == 0``."""
    if not 0 <= p < 1:
        raise ValueError("dropout probability must be in [0, 1)")
    if not training or p == 0:
        return x, None
    mask = (rng.random(x.shape) >= p).astype(x.dtype) / np.asarray(1.0 - p, dtype=x.dtype)
    return x * mask, mask


def dropout_backward(dout, mask):
    return dout if mask is None else dout * mask


def linear_forward(x, w, b):
    """``x`` is ``(batch, in)``; ``w`` is ``(out, in)``."""
    if x.shape[1] != w.shape[1]:
        raise ConfigurationError(f"linear expects {w.shape[1]} inputs, got {x.shape[1]}")
    return x @ w.T + b, (x, w)


def linear_backward(dout, cache):
    x, w = cache
    return dout @ w, dout.T @ x, dout.sum(axis=0)


def flatten_forward(x):
    return x.reshape(x.shape[0], -1), x.shape


def flatten_backward(dout, shape):
    return dout.reshape(shape)


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(logits, labels):
    """Mean negative log-likelihood and its gradient w.r.t. the logits."""
    labels = np.asarray(labels, dtype=np.int64)
    z = logits - logits.max(axis=1, keepdims=True)
    log_prob = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    n = logits.shape[0]
    loss = -log_prob[np.arange(n), labels].mean()
    grad = np.exp(log_prob)
    grad[np.arange(n), labels] -= 1.0
    return float(loss), grad / n
