"""Node updates shared by the SC-family decoders."""

from __future__ import annotations

import numpy as np

# Saturation applied to every LLR inside the decoders.
LLR_CLIP = 300.0


def check_node(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact f(a, b) = 2 atanh(tanh(a/2) tanh(b/2)) in overflow-free form."""
    s = np.sign(a) * np.sign(b)
    m = np.minimum(np.abs(a), np.abs(b))
    return s * m + np.log1p(np.exp(-np.abs(a + b))) - np.log1p(np.exp(-np.abs(a - b)))


def check_node_minsum(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sign(a) * np.sign(b) * np.minimum(np.abs(a), np.abs(b))


def variable_node(a: np.ndarray, b: np.ndarray, u: np.ndarray) -> np.ndarray:
    """g(a, b, u) = b + (1 - 2u) a, saturated at +-LLR_CLIP."""
    out = np.where(u.astype(bool), b - a, b + a)
    return np.clip(out, -LLR_CLIP, LLR_CLIP, out=out)


def softplus(x: np.ndarray) -> np.ndarray:
    """ln(1 + e^x) without overflow."""
    return np.logaddexp(0.0, x)


def path_metric_increment(llr: np.ndarray, bit: np.ndarray | int) -> np.ndarray:
    """ln(1 + exp(-(1 - 2 bit) llr))."""
    return softplus(-(1.0 - 2.0 * np.asarray(bit)) * llr)
