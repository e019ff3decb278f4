"""Raster data model and low-level grid algorithms.

Arrays are stored band-first, ``(bands, height, width)``. Single-band
algorithms take plain 2D numpy arrays; :class:`Raster` carries the
georeferencing needed for I/O and vectorization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import ndimage

__all__ = [
    "Raster",
    "RegionStats",
    "compact_labels",
    "connected_components",
    "euclidean_distance_transform",
    "region_stats",
    "relabel_sequential",
    "standardize",
]

_STRUCTURES = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


@dataclass
class Raster:
    """Multi-band grid with a north-up geotransform.

    ``geotransform`` is ``(origin_x, origin_y, pixel_size)`` where the origin
    is the top-left corner of the top-left pixel and rows run southwards.
    """

    data: np.ndarray
    geotransform: tuple[float, float, float] = (0.0, 0.0, 1.0)
    nodata: float | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[np.newaxis]
        if data.ndim != 3:
            raise ValueError(f"raster data must be 2D or 3D, got shape {data.shape}")
        self.data = data
        self.geotransform = tuple(float(v) for v in self.geotransform)
        if len(self.geotransform) != 3:
            raise ValueError("geotransform must be (origin_x, origin_y, pixel_size)")
        if not self.geotransform[2] > 0:
            raise ValueError(f"pixel_size must be > 0, got {self.geotransform[2]}")

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape[1], self.data.shape[2]

    @property
    def pixel_size(self) -> float:
        return self.geotransform[2]

    def band(self, index: int) -> np.ndarray:
        return self.data[index]

    def valid_mask(self) -> np.ndarray:
        """Pixels that are finite and not nodata in every band."""
        valid = np.all(np.isfinite(self.data), axis=0)
        if self.nodata is not None:
            valid &= np.all(self.data != self.nodata, axis=0)
        return valid


def connected_components(mask: np.ndarray, connectivity: int = 4) -> tuple[np.ndarray, int]:
    """Label the foreground of a binary mask.

    Returns ``(labels, n)`` with labels dense in ``1..n`` assigned in
    raster-scan order of each component's first pixel; background is 0.
    """
    if connectivity not in _STRUCTURES:
        raise ValueError(f"connectivity must be 4 or 8, got {connectivity}")
    mask = np.asarray(mask, dtype=bool)
    if mask.ndim != 2 or mask.size == 0:
        raise ValueError("mask must be a non-empty 2D array")
    labels, n = ndimage.label(mask, structure=_STRUCTURES[connectivity])
    return labels.astype(np.int32, copy=False), int(n)


def relabel_sequential(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Renumber labels to ``1..n`` in raster-scan order of first appearance."""
    labels = np.asarray(labels)
    flat = labels.ravel()
    ids, first = np.unique(flat, return_index=True)
    keep = ids != 0
    ids, first = ids[keep], first[keep]
    order = np.argsort(first, kind="stable")
    lut_keys = ids[order]
    out = np.zeros(flat.shape, dtype=np.int32)
    if lut_keys.size:
        pos = np.searchsorted(ids, flat)
        pos = np.clip(pos, 0, ids.size - 1)
        hit = ids[pos] == flat
        rank = np.empty(ids.size, dtype=np.int32)
        rank[order] = np.arange(1, ids.size + 1, dtype=np.int32)
        out[hit] = rank[pos[hit]]
    return out.reshape(labels.shape), int(lut_keys.size)


def compact_labels(labels: np.ndarray) -> tuple[np.ndarray, int]:
    """Close gaps in label ids while keeping their relative order."""
    labels = np.asarray(labels)
    present = np.bincount(labels.ravel()) > 0
    present[0] = False
    lut = np.cumsum(present).astype(np.int32)
    lut[~present] = 0
    return lut[labels], int(lut[-1]) if lut.size else 0


def euclidean_distance_transform(mask: np.ndarray) -> np.ndarray:
    """Exact Euclidean distance (pixels) from each foreground pixel to the
    nearest background pixel. Background pixels hold 0.
    """
    mask = np.asarray(mask, dtype=bool)
    if mask.size and mask.all():
        raise ValueError("no background reference: mask is all foreground")
    if not mask.any():
        return np.zeros(mask.shape, dtype=np.float64)
    return ndimage.distance_transform_edt(mask)


@dataclass(frozen=True)
class RegionStats:
    area: int
    centroid: tuple[float, float]  # (x, y) = (column, row)
    eccentricity: float


def _moment_eccentricity(rows: np.ndarray, cols: np.ndarray) -> float:
    # ellipse with the same normalized second central moments
    r = rows - rows.mean()
    c = cols - cols.mean()
    mu20 = float(np.mean(c * c))
    mu02 = float(np.mean(r * r))
    mu11 = float(np.mean(r * c))
    half_trace = 0.5 * (mu20 + mu02)
    root = math.sqrt(max(0.25 * (mu20 - mu02) ** 2 + mu11 * mu11, 0.0))
    major = half_trace + root
    minor = max(half_trace - root, 0.0)
    if major <= 0.0:
        return 0.0
    return math.sqrt(max(0.0, 1.0 - minor / major))


def region_stats(labels: np.ndarray, field_id: int) -> RegionStats:
    """Area, centroid and moment eccentricity of one labelled region."""
    rows, cols = np.nonzero(np.asarray(labels) == field_id)
    if rows.size == 0 or field_id == 0:
        raise KeyError(f"field id {field_id} not present in label map")
    return RegionStats(
        area=int(rows.size),
        centroid=(float(cols.mean()), float(rows.mean())),
        eccentricity=_moment_eccentricity(rows.astype(np.float64), cols.astype(np.float64)),
    )


def all_region_stats(labels: np.ndarray) -> dict[int, RegionStats]:
    """:func:`region_stats` for every non-zero label, in one pass."""
    labels = np.asarray(labels)
    out: dict[int, RegionStats] = {}
    slices = ndimage.find_objects(labels)
    for idx, sl in enumerate(slices, start=1):
        if sl is None:
            continue
        rows, cols = np.nonzero(labels[sl] == idx)
        rows = rows.astype(np.float64) + sl[0].start
        cols = cols.astype(np.float64) + sl[1].start
        out[idx] = RegionStats(
            area=int(rows.size),
            centroid=(float(cols.mean()), float(rows.mean())),
            eccentricity=_moment_eccentricity(rows, cols),
        )
    return out


def standardize(image: Raster, means, stds) -> Raster:
    """Per-band z-score: ``(band - mean) / std``. Nodata pixels are kept."""
    means = np.asarray(means, dtype=np.float64).ravel()
    stds = np.asarray(stds, dtype=np.float64).ravel()
    if means.size != image.bands or stds.size != image.bands:
        raise ValueError(
            f"expected {image.bands} means/stds, got {means.size}/{stds.size}"
        )
    if np.any(stds <= 0):
        raise ValueError("standard deviations must be > 0")
    data = image.data.astype(np.float64)
    out = (data - means[:, None, None]) / stds[:, None, None]
    if image.nodata is not None:
        nodata_px = image.data == image.nodata
        out[nodata_px] = image.nodata
    return Raster(out, image.geotransform, image.nodata, dict(image.metadata))
