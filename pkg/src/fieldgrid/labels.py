"""Reference layers built from digitised field polygons.

Three rasters come out of a field label map: a binary extent, a binary
boundary ribbon, and a distance layer normalised to 1 inside every field.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from .raster import euclidean_distance_transform

__all__ = [
    "FieldPolygon",
    "LabelSet",
    "make_boundary_mask",
    "make_distance_labels",
    "make_labels",
    "rasterize_polygons",
]


def _closed_ring(ring) -> np.ndarray:
    ring = np.asarray(ring, dtype=np.float64).reshape(-1, 2)
    if ring.shape[0] < 3:
        raise ValueError("a ring needs at least three vertices")
    if not np.array_equal(ring[0], ring[-1]):
        ring = np.vstack([ring, ring[:1]])
    return ring


@dataclass
class FieldPolygon:
    """One field: exterior ring plus optional holes, in map units."""

    field_id: int
    exterior: np.ndarray
    holes: list[np.ndarray] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.field_id = int(self.field_id)
        self.exterior = _closed_ring(self.exterior)
        self.holes = [_closed_ring(h) for h in self.holes]

    @property
    def rings(self) -> list[np.ndarray]:
        return [self.exterior, *self.holes]


def _row_crossings(rings: Sequence[np.ndarray], ys: np.ndarray) -> list[np.ndarray]:
    """Sorted x-intersections of every row centre line with the ring edges."""
    x0 = np.concatenate([r[:-1, 0] for r in rings])
    y0 = np.concatenate([r[:-1, 1] for r in rings])
    x1 = np.concatenate([r[1:, 0] for r in rings])
    y1 = np.concatenate([r[1:, 1] for r in rings])
    out = []
    for y in ys:
        hit = (y0 > y) != (y1 > y)
        if not hit.any():
            out.append(np.empty(0))
            continue
        xa, ya, xb, yb = x0[hit], y0[hit], x1[hit], y1[hit]
        out.append(np.sort(xa + (y - ya) * (xb - xa) / (yb - ya)))
    return out


def _polygon_mask(poly: FieldPolygon, geotransform, shape) -> np.ndarray:
    ox, oy, ps = geotransform
    height, width = shape
    xs = ox + (np.arange(width) + 0.5) * ps
    ys = oy - (np.arange(height) + 0.5) * ps
    mask = np.zeros(shape, dtype=bool)
    # even-odd rule on pixel centres; holes cancel by parity
    for row, crossings in enumerate(_row_crossings(poly.rings, ys)):
        if crossings.size == 0:
            continue
        right = crossings.size - np.searchsorted(crossings, xs, side="right")
        mask[row] = (right % 2) == 1
    return mask


def rasterize_polygons(
    polygons: Iterable[FieldPolygon],
    geotransform: tuple[float, float, float],
    shape: tuple[int, int],
) -> np.ndarray:
    """Burn polygons into an int32 label map by pixel-centre sampling.

    Where polygons overlap the lowest field id wins.
    """
    if not geotransform[2] > 0:
        raise ValueError("pixel size must be > 0")
    labels = np.zeros(shape, dtype=np.int32)
    for poly in sorted(polygons, key=lambda p: p.field_id, reverse=True):
        labels[_polygon_mask(poly, geotransform, shape)] = poly.field_id
    return labels


def make_boundary_mask(labels: np.ndarray, buffer_px: int = 1) -> np.ndarray:
    """Pixels within Chebyshev distance ``buffer_px`` of a label change.

    A pixel is marked when any pixel of its ``(2b+1)`` square window carries a
    different label (background included). The image edge is not a
    discontinuity.
    """
    if buffer_px < 1:
        raise ValueError("buffer_px must be >= 1")
    labels = np.asarray(labels)
    size = 2 * buffer_px + 1
    hi = ndimage.maximum_filter(labels, size=size, mode="nearest")
    lo = ndimage.minimum_filter(labels, size=size, mode="nearest")
    return ((hi != labels) | (lo != labels)).astype(np.uint8)


def make_distance_labels(labels: np.ndarray) -> np.ndarray:
    """Distance to the nearest pixel outside each field, scaled so every
    field peaks at exactly 1. Background is 0.

    A field with no outside pixel on the grid is set to 1 everywhere.
    """
    labels = np.asarray(labels)
    out = np.zeros(labels.shape, dtype=np.float64)
    h, w = labels.shape
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        # bbox grown by one pixel contains the nearest outside pixel of every member
        r0, r1 = max(sl[0].start - 1, 0), min(sl[0].stop + 1, h)
        c0, c1 = max(sl[1].start - 1, 0), min(sl[1].stop + 1, w)
        member = labels[r0:r1, c0:c1] == idx
        if member.all():
            out[r0:r1, c0:c1][member] = 1.0
            continue
        dist = euclidean_distance_transform(member)
        out[r0:r1, c0:c1][member] = dist[member] / dist.max()
    return out


@dataclass
class LabelSet:
    extent: np.ndarray
    boundary: np.ndarray
    distance: np.ndarray


def make_labels(labels: np.ndarray, buffer_px: int = 1) -> LabelSet:
    labels = np.asarray(labels)
    return LabelSet(
        extent=(labels > 0).astype(np.uint8),
        boundary=make_boundary_mask(labels, buffer_px),
        distance=make_distance_labels(labels),
    )
