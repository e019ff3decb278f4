"""Averaging of overlapping window predictions and of multi-date masks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .extract import MaskTriple

__all__ = [
    "WindowPrediction",
    "consensus",
    "coverage_counts",
    "mosaic_windows",
    "sliding_window_predict",
    "window_origins",
]

DEFAULT_WINDOW = 256


@dataclass
class WindowPrediction:
    origin: tuple[int, int]  # (row, col) of the window's top-left pixel
    masks: MaskTriple


def window_origins(shape: tuple[int, int], window: int = DEFAULT_WINDOW, stride: int | None = None) -> list[tuple[int, int]]:
    """Top-left corners of a moving window that covers ``shape``.

    ``stride`` defaults to ``window // 4``, giving 16 predictions for every
    pixel away from the image border. A last window flush with the far edge
    is added when the stride does not land on it.
    """
    stride = stride or max(window // 4, 1)
    h, w = shape
    if window > h or window > w:
        raise ValueError(f"window {window} larger than grid {shape}")

    def starts(length: int) -> list[int]:
        s = list(range(0, length - window + 1, stride))
        if s[-1] != length - window:
            s.append(length - window)
        return s

    return [(r, c) for r in starts(h) for c in starts(w)]


def coverage_counts(windows: Iterable[WindowPrediction], shape: tuple[int, int]) -> np.ndarray:
    counts = np.zeros(shape, dtype=np.int64)
    for win in windows:
        r, c = win.origin
        h, w = win.masks.shape
        counts[r : r + h, c : c + w] += 1
    return counts


def _gap_message(counts: np.ndarray, limit: int = 10) -> str:
    rows, cols = np.nonzero(counts == 0)
    listed = ", ".join(f"({r},{c})" for r, c in zip(rows[:limit], cols[:limit]))
    more = "" if rows.size <= limit else f" ... ({rows.size} total)"
    return f"uncovered pixels: {listed}{more}"


def mosaic_windows(windows: Sequence[WindowPrediction], shape: tuple[int, int]) -> MaskTriple:
    """Per-pixel arithmetic mean of every window covering that pixel.

    Sums are compensated (Neumaier) so the window order only matters at
    the last-bit level.
    """
    h, w = shape
    total = np.zeros((3, h, w))
    comp = np.zeros((3, h, w))
    counts = np.zeros(shape, dtype=np.int64)
    for win in windows:
        r, c = win.origin
        stack = win.masks.stack()
        wh, ww = stack.shape[1:]
        if r < 0 or c < 0 or r + wh > h or c + ww > w:
            raise ValueError(f"window at {win.origin} of size {(wh, ww)} leaves the grid {shape}")
        sl = (slice(None), slice(r, r + wh), slice(c, c + ww))
        s, k = total[sl], comp[sl]
        t = s + stack
        big = np.abs(s) >= np.abs(stack)
        k += np.where(big, (s - t) + stack, (stack - t) + s)
        total[sl] = t
        counts[r : r + wh, c : c + ww] += 1
    if (counts == 0).any():
        raise ValueError(_gap_message(counts))
    return MaskTriple.from_stack((total + comp) / counts)


def sliding_window_predict(
    predict: Callable[[np.ndarray], MaskTriple],
    image: np.ndarray,
    window: int = DEFAULT_WINDOW,
    stride: int | None = None,
) -> MaskTriple:
    """Run ``predict`` on every window of a ``(bands, h, w)`` image and mosaic."""
    shape = image.shape[-2:]
    windows = [
        WindowPrediction((r, c), predict(image[..., r : r + window, c : c + window]))
        for r, c in window_origins(shape, window, stride)
    ]
    return mosaic_windows(windows, shape)


def consensus(mask_series: Sequence[MaskTriple]) -> MaskTriple:
    """Per-pixel mean of each mask across acquisition dates.

    Values are sorted along the date axis before summation, so the result is
    bit-identical under any reordering of the dates.
    """
    if len(mask_series) == 0:
        raise ValueError("consensus needs at least one date")
    shape = mask_series[0].shape
    for i, m in enumerate(mask_series):
        if m.shape != shape:
            raise ValueError(f"date {i} has shape {m.shape}, expected {shape}")
    stack = np.stack([m.stack() for m in mask_series])
    stack.sort(axis=0)
    total = stack[0].copy()
    for layer in stack[1:]:
        total += layer
    return MaskTriple.from_stack(total / len(mask_series))
