"""Tanimoto similarity kernels for multitask segmentation training.

``tanimoto`` and ``tanimoto_dual`` are similarities in [0, 1] (1 = perfect).
Losses are ``1 - similarity``; :func:`multitask_loss` averages those losses
over the extent, boundary, distance and reconstruction tasks.

Sums use numpy's pairwise reduction on contiguous float64 arrays so results
do not depend on thread count.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = [
    "multitask_loss",
    "tanimoto",
    "tanimoto_dual",
    "tanimoto_dual_grad",
    "tanimoto_grad",
]


def _pair(p, l) -> tuple[np.ndarray, np.ndarray]:
    p = np.ascontiguousarray(p, dtype=np.float64).ravel()
    l = np.ascontiguousarray(l, dtype=np.float64).ravel()
    if p.shape != l.shape:
        raise ValueError(f"length mismatch: {p.size} vs {l.size}")
    if p.size == 0:
        raise ValueError("empty input")
    return p, l


def _terms(p: np.ndarray, l: np.ndarray, eps: float) -> tuple[float, float]:
    inter = float(np.sum(p * l))
    denom = float(np.sum(p * p + l * l)) - inter
    if eps == 0.0 and denom == 0.0:
        raise ZeroDivisionError("tanimoto undefined 0/0: both vectors are all zero")
    return inter + eps, denom + eps


def tanimoto(p, l, eps: float = 0.0) -> float:
    """``sum(p*l) / (sum(p^2 + l^2) - sum(p*l))``.

    ``eps`` (e.g. 1e-12) is added to numerator and denominator to keep the
    all-zero case finite during training; leave at 0 for exact values.
    """
    p, l = _pair(p, l)
    num, den = _terms(p, l, eps)
    return num / den


def tanimoto_dual(p, l, eps: float = 0.0) -> float:
    """Mean of ``tanimoto(p, l)`` and ``tanimoto(1 - p, 1 - l)``."""
    p, l = _pair(p, l)
    num, den = _terms(p, l, eps)
    num_c, den_c = _terms(1.0 - p, 1.0 - l, eps)
    return 0.5 * (num / den + num_c / den_c)


def _grad(p: np.ndarray, l: np.ndarray, eps: float) -> np.ndarray:
    num, den = _terms(p, l, eps)
    # d num/dp = l ; d den/dp = 2p - l
    return (l * den - num * (2.0 * p - l)) / (den * den)


def tanimoto_grad(p, l, eps: float = 0.0) -> np.ndarray:
    """Analytic gradient of :func:`tanimoto` with respect to ``p``."""
    p, l = _pair(p, l)
    return _grad(p, l, eps)


def tanimoto_dual_grad(p, l, eps: float = 0.0) -> np.ndarray:
    """Analytic gradient of :func:`tanimoto_dual` with respect to ``p``."""
    p, l = _pair(p, l)
    return 0.5 * (_grad(p, l, eps) - _grad(1.0 - p, 1.0 - l, eps))


TASKS = ("extent", "boundary", "distance", "reconstruction")


def multitask_loss(preds: Sequence, labels: Sequence, eps: float = 0.0) -> float:
    """Average of ``1 - tanimoto_dual`` over the four tasks.

    ``preds`` and ``labels`` are ordered as extent, boundary, distance,
    reconstruction; each pair must have the same shape.
    """
    if len(preds) != len(TASKS) or len(labels) != len(TASKS):
        raise ValueError(f"expected {len(TASKS)} prediction/label pairs")
    total = 0.0
    for name, p, l in zip(TASKS, preds, labels):
        p, l = np.asarray(p), np.asarray(l)
        if p.shape != l.shape:
            raise ValueError(f"{name}: shape mismatch {p.shape} vs {l.shape}")
        total += 1.0 - tanimoto_dual(p, l, eps)
    return 0.25 * total
