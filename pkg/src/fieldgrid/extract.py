"""Instance extraction from extent / boundary / distance masks.

Two post-processing routes turn the three probability masks into a field
label map:

* cutoff: threshold extent and boundary, label the cores left after
  removing boundaries, then hand the removed extent pixels back to the
  geodesically nearest core so neighbouring fields abut;
* watershed: seed from the thresholded distance mask and flood the surface
  ``boundary + (1 - extent)`` inside the thresholded extent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ._flood import geodesic_grow, priority_flood, surface_rank
from .labels import FieldPolygon
from .raster import compact_labels, connected_components

__all__ = [
    "MaskTriple",
    "ThresholdSet",
    "extract",
    "extract_cutoff",
    "extract_watershed",
    "vectorize",
]


@dataclass
class MaskTriple:
    extent: np.ndarray
    boundary: np.ndarray
    distance: np.ndarray

    def __post_init__(self) -> None:
        self.extent = np.asarray(self.extent, dtype=np.float64)
        self.boundary = np.asarray(self.boundary, dtype=np.float64)
        self.distance = np.asarray(self.distance, dtype=np.float64)
        if not (self.extent.shape == self.boundary.shape == self.distance.shape):
            raise ValueError(
                "mask shapes differ: "
                f"{self.extent.shape}, {self.boundary.shape}, {self.distance.shape}"
            )
        if self.extent.ndim != 2:
            raise ValueError("masks must be 2D")
        for name in ("extent", "boundary", "distance"):
            layer = getattr(self, name)
            if not ((layer >= 0.0) & (layer <= 1.0)).all():
                raise ValueError(f"{name} mask has values outside [0, 1]")

    @property
    def shape(self) -> tuple[int, int]:
        return self.extent.shape

    def stack(self) -> np.ndarray:
        return np.stack([self.extent, self.boundary, self.distance])

    @classmethod
    def from_stack(cls, data: np.ndarray) -> "MaskTriple":
        data = np.asarray(data)
        if data.ndim != 3 or data.shape[0] != 3:
            raise ValueError(f"expected a 3-band stack, got shape {data.shape}")
        return cls(data[0], data[1], data[2])


@dataclass(frozen=True)
class ThresholdSet:
    t_extent: float = 0.5
    t_boundary: float = 0.5
    t_distance: float = 0.5

    def __post_init__(self) -> None:
        for name in ("t_extent", "t_boundary", "t_distance"):
            value = float(getattr(self, name))
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
            object.__setattr__(self, name, value)

    def as_dict(self) -> dict[str, float]:
        return {"t_extent": self.t_extent, "t_boundary": self.t_boundary, "t_distance": self.t_distance}


def _finish(labels: np.ndarray, min_size: int) -> np.ndarray:
    if min_size > 0:
        counts = np.bincount(labels.ravel())
        small = counts < min_size
        small[0] = False
        if small.any():
            labels = np.where(small[labels], 0, labels)
    return compact_labels(labels)[0]


def extract_cutoff(masks: MaskTriple, t: ThresholdSet, min_size: int = 0, connectivity: int = 4) -> np.ndarray:
    """Cutoff extraction; ``t.t_distance`` is not used."""
    region = masks.extent >= t.t_extent
    core = region & (masks.boundary < t.t_boundary)
    markers, n = connected_components(core, connectivity)
    if n == 0:
        return np.zeros(masks.shape, dtype=np.int32)
    return _finish(geodesic_grow(markers, region), min_size)


def watershed_surface(masks: MaskTriple) -> np.ndarray:
    return masks.boundary + (1.0 - masks.extent)


def extract_watershed(
    masks: MaskTriple,
    t: ThresholdSet,
    min_size: int = 0,
    connectivity: int = 4,
    rank: np.ndarray | None = None,
) -> np.ndarray:
    """Seeded watershed extraction.

    Seeds are connected components of ``distance >= t_distance`` restricted to
    pixels inside the extent region with ``boundary < t_boundary``; seeds
    outside the extent region are dropped. Pass ``t_boundary=1`` with masks
    below 1 to seed on distance alone. ``rank`` caches
    ``surface_rank(watershed_surface(masks))`` across repeated calls.
    """
    region = masks.extent >= t.t_extent
    seeds = region & (masks.distance >= t.t_distance) & (masks.boundary < t.t_boundary)
    markers, n = connected_components(seeds, connectivity)
    if n == 0:
        return np.zeros(masks.shape, dtype=np.int32)
    if rank is None:
        rank = surface_rank(watershed_surface(masks))
    return _finish(priority_flood(None, region, markers, rank=rank), min_size)


def extract(masks: MaskTriple, t: ThresholdSet, method: str = "watershed", min_size: int = 0) -> np.ndarray:
    if method == "cutoff":
        return extract_cutoff(masks, t, min_size)
    if method == "watershed":
        return extract_watershed(masks, t, min_size)
    raise ValueError(f"unknown extraction method {method!r}")


# --- vectorization --------------------------------------------------------

# lattice directions in (dx, dy_map); y_map = -corner_row
_LEFT_TURN = {(1, 0): (0, 1), (0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0)}


def _boundary_edges(member: np.ndarray) -> dict[tuple[int, int], list[tuple[int, int]]]:
    """Directed unit edges around ``member`` with the region on the left.

    Vertices are lattice corners ``(col, row)``; map y grows with -row.
    """
    padded = np.pad(member, 1)
    core = padded[1:-1, 1:-1]
    edges: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add(a, b):
        edges.setdefault(a, []).append(b)

    for r, c in zip(*np.nonzero(core & ~padded[2:, 1:-1])):  # bottom side
        add((c, r + 1), (c + 1, r + 1))
    for r, c in zip(*np.nonzero(core & ~padded[:-2, 1:-1])):  # top side
        add((c + 1, r), (c, r))
    for r, c in zip(*np.nonzero(core & ~padded[1:-1, 2:])):  # right side
        add((c + 1, r + 1), (c + 1, r))
    for r, c in zip(*np.nonzero(core & ~padded[1:-1, :-2])):  # left side
        add((c, r), (c, r + 1))
    return edges


def _trace_rings(edges) -> list[list[tuple[int, int]]]:
    rings = []
    while edges:
        start = min(edges)
        first = edges[start].pop(0)
        if not edges[start]:
            del edges[start]
        ring = [start]
        prev, cur = start, first
        while True:
            options = edges.get(cur, [])
            candidates = options + [first] if cur == start else options
            if len(candidates) == 1:
                nxt = candidates[0]
            else:
                # pinch vertex: turn left to keep diagonal cells apart
                d_in = (cur[0] - prev[0], prev[1] - cur[1])
                want = _LEFT_TURN[d_in]
                nxt = next(o for o in candidates if (o[0] - cur[0], cur[1] - o[1]) == want)
            if cur == start and nxt == first:
                break
            options.remove(nxt)
            if not options:
                del edges[cur]
            ring.append(cur)
            prev, cur = cur, nxt
        rings.append(_drop_collinear(ring))
    return rings


def _drop_collinear(ring: list[tuple[int, int]]) -> list[tuple[int, int]]:
    n = len(ring)
    keep = []
    for k in range(n):
        a, b, c = ring[k - 1], ring[k], ring[(k + 1) % n]
        if (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]) != 0:
            keep.append(b)
    return keep


def _signed_area_map(ring: list[tuple[int, int]]) -> float:
    xs = np.array([p[0] for p in ring], dtype=np.float64)
    ys = -np.array([p[1] for p in ring], dtype=np.float64)
    return 0.5 * float(np.sum(xs * np.roll(ys, -1) - np.roll(xs, -1) * ys))


def vectorize(labels: np.ndarray, geotransform: tuple[float, float, float]) -> list[FieldPolygon]:
    """Trace each label's pixel outline into a polygon with holes.

    Exterior rings come out counter-clockwise, holes clockwise, in map
    coordinates. Every label must be a single 4-connected region.
    """
    labels = np.asarray(labels)
    ox, oy, ps = geotransform
    out = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        if sl is None:
            continue
        member = labels[sl] == idx
        rings = _trace_rings(_boundary_edges(member))
        exteriors, holes = [], []
        for ring in rings:
            coords = np.array(
                [(ox + (c + sl[1].start) * ps, oy - (r + sl[0].start) * ps) for c, r in ring]
            )
            (exteriors if _signed_area_map(ring) > 0 else holes).append(coords)
        if len(exteriors) != 1:
            raise ValueError(f"label {idx} is not a single 4-connected region")
        out.append(FieldPolygon(idx, exteriors[0], holes))
    return out
