"""Pure numpy implementation of the elementwise training kernels.

This is the fallback backend; the compiled Cython module in ``_speedups.pyx``
implements the same three functions with identical semantics.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

NAME = "python"

IDENTITY, GELU, SELU, SWISH = 0, 1, 2, 3

_SQRT1_2 = 0.7071067811865476       # 1/sqrt(2)
_INV_SQRT_2PI = 0.3989422804014327  # 1/sqrt(2*pi)
_SELU_SCALE = 1.0507
_SELU_ALPHA = 1.7581                # scale * alpha, as commonly rounded


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # split by sign to avoid overflow in exp
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def act_forward(kind: int, x: np.ndarray) -> np.ndarray:
    """Apply the activation elementwise; kind is one of the module codes."""
    if kind == IDENTITY:
        return x.copy()
    if kind == GELU:
        return 0.5 * x * (1.0 + erf(x * _SQRT1_2))
    if kind == SELU:
        return np.where(x >= 0, _SELU_SCALE * x,
                        _SELU_ALPHA * np.expm1(np.minimum(x, 0.0)))
    if kind == SWISH:
        return x * _sigmoid(x)
    raise ValueError(f"unknown activation code {kind}")


def act_grad(kind: int, x: np.ndarray) -> np.ndarray:
    """Elementwise derivative of the activation, evaluated at x."""
    if kind == IDENTITY:
        return np.ones_like(x)
    if kind == GELU:
        cdf = 0.5 * (1.0 + erf(x * _SQRT1_2))
        pdf = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
        return cdf + x * pdf
    if kind == SELU:
        return np.where(x >= 0, _SELU_SCALE,
                        _SELU_ALPHA * np.exp(np.minimum(x, 0.0)))
    if kind == SWISH:
        s = _sigmoid(x)
        return s * (1.0 + x * (1.0 - s))
    raise ValueError(f"unknown activation code {kind}")


def adam_step(param: np.ndarray, grad: np.ndarray, m: np.ndarray, v: np.ndarray,
              lr: float, beta1: float, beta2: float, eps: float, t: int) -> None:
    """One ADAM update, in place on ``param``, ``m`` and ``v``.

    ``t`` is the 1-based step count used for bias correction.
    """
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * grad * grad
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    param -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
