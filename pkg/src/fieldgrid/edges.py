"""Scharr edge baseline and percentile pseudoprobabilities."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

__all__ = [
    "SCHARR_X",
    "SCHARR_Y",
    "pseudoprobability",
    "scharr_magnitude",
    "scharr_pseudoprobability",
]

SCHARR_X = np.array([[-3, 0, 3], [-10, 0, 10], [-3, 0, 3]], dtype=np.float64)
SCHARR_Y = SCHARR_X.T.copy()


def _band_magnitude(band: np.ndarray, normalize: bool) -> np.ndarray:
    gx = ndimage.correlate(band, SCHARR_X, mode="nearest")
    gy = ndimage.correlate(band, SCHARR_Y, mode="nearest")
    mag = np.hypot(gx, gy)
    return mag / 16.0 if normalize else mag


def scharr_magnitude(image: np.ndarray, normalize: bool = False) -> np.ndarray:
    """Per-band Scharr gradient magnitude averaged over bands.

    ``image`` is ``(bands, h, w)`` or ``(h, w)``. Borders replicate edge
    pixels. With ``normalize`` the integer kernels are divided by 16.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[np.newaxis]
    if image.ndim != 3 or image.shape[0] < 1:
        raise ValueError("image must be (bands, h, w) with at least one band")
    if image.shape[1] < 3 or image.shape[2] < 3:
        raise ValueError(f"image {image.shape[1:]} smaller than the 3x3 kernel")
    acc = np.zeros(image.shape[1:], dtype=np.float64)
    for band in image:
        acc += _band_magnitude(band, normalize)
    return acc / image.shape[0]


def pseudoprobability(
    values: np.ndarray,
    low: float = 5.0,
    high: float = 95.0,
    valid: np.ndarray | None = None,
) -> np.ndarray:
    """Linear rescale sending the ``low`` percentile to 0 and ``high`` to 1.

    Percentiles use linear interpolation over finite (and ``valid``) pixels;
    output is clipped to [0, 1]. Invalid pixels come back as NaN.
    """
    values = np.asarray(values, dtype=np.float64)
    ok = np.isfinite(values)
    if valid is not None:
        ok &= np.asarray(valid, dtype=bool)
    if not ok.any():
        raise ValueError("degenerate percentiles: no valid values")
    lo, hi = np.percentile(values[ok], [low, high])
    if not hi > lo:
        raise ValueError("degenerate percentiles: raster is constant")
    out = np.clip((values - lo) / (hi - lo), 0.0, 1.0)
    out[~ok] = np.nan
    return out


def scharr_pseudoprobability(image: np.ndarray, rescale_per_band: bool = False) -> np.ndarray:
    """Edge baseline as a boundary pseudoprobability layer.

    By default magnitudes are averaged across bands and rescaled once.
    ``rescale_per_band`` rescales each band first and averages afterwards.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 2:
        image = image[np.newaxis]
    if not rescale_per_band:
        return pseudoprobability(scharr_magnitude(image))
    per_band = [pseudoprobability(scharr_magnitude(band)) for band in image]
    return np.mean(per_band, axis=0)
