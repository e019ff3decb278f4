"""Deterministic synthetic field mosaics.

Fields are cells of a Voronoi tessellation; a share of the cells are crop
fields, the rest background. Every random draw comes from children of one
``SeedSequence`` so scenes are reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .extract import MaskTriple, ThresholdSet, extract_cutoff
from .labels import LabelSet, make_labels
from .raster import connected_components, relabel_sequential

__all__ = ["Scene", "SceneSpec", "degrade", "generate_scene"]


@dataclass(frozen=True)
class SceneSpec:
    size: int = 256
    n_fields: int = 40
    crop_fraction: float = 0.7
    noise_sigma: float = 0.03
    blur_sigma: float = 1.0
    rng_seed: int = 0
    pixel_size: float = 10.0
    buffer_px: int = 1

    def __post_init__(self) -> None:
        if self.n_fields < 1:
            raise ValueError("n_fields must be >= 1")
        if self.size < 64:
            raise ValueError("size must be >= 64")
        if not 0.0 < self.crop_fraction <= 1.0:
            raise ValueError("crop_fraction must lie in (0, 1]")
        if self.noise_sigma < 0 or self.blur_sigma < 0:
            raise ValueError("noise_sigma and blur_sigma must be >= 0")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass
class Scene:
    spec: SceneSpec
    image: np.ndarray  # (4, size, size) reflectance
    reference: np.ndarray  # int32 field labels
    labels: LabelSet
    oracle_masks: MaskTriple

    @property
    def geotransform(self) -> tuple[float, float, float]:
        return (0.0, self.spec.size * self.spec.pixel_size, self.spec.pixel_size)


def _sites(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    """Dart throwing with a spacing that keeps cells from degenerating."""
    min_dist = 0.6 * size / np.sqrt(n)
    pts: list[np.ndarray] = []
    attempts = 0
    while len(pts) < n:
        cand = rng.uniform(0, size, 2)
        attempts += 1
        if attempts > 20000 or all(np.hypot(*(cand - p)) >= min_dist for p in pts):
            pts.append(cand)
    return np.array(pts)


def _voronoi_cells(sites: np.ndarray, size: int) -> np.ndarray:
    centres = np.arange(size) + 0.5
    yy, xx = np.meshgrid(centres, centres, indexing="ij")
    best = np.zeros((size, size), dtype=np.int32)
    best_d = np.full((size, size), np.inf)
    for k, (x, y) in enumerate(sites):
        d = (xx - x) ** 2 + (yy - y) ** 2
        closer = d < best_d
        best[closer] = k
        best_d[closer] = d[closer]
    return best


def _crop_fields(cells: np.ndarray, crop: np.ndarray) -> np.ndarray:
    """Field labels for crop cells; a cell cut by pixelation keeps only its
    largest 4-connected piece."""
    reference = np.zeros(cells.shape, dtype=np.int32)
    for k in np.flatnonzero(crop):
        pieces, n = connected_components(cells == k, 4)
        if n == 0:
            continue
        largest = np.argmax(np.bincount(pieces.ravel())[1:]) + 1
        reference[pieces == largest] = k + 1
    return relabel_sequential(reference)[0]


def _blur(layer: np.ndarray, sigma: float) -> np.ndarray:
    layer = layer.astype(np.float64)
    if sigma <= 0:
        return layer
    return np.clip(ndimage.gaussian_filter(layer, sigma, mode="nearest"), 0.0, 1.0)


def generate_scene(spec: SceneSpec) -> Scene:
    """Image, reference fields, reference layers and soft oracle masks."""
    seq = np.random.SeedSequence(spec.rng_seed)
    site_rng, crop_rng, refl_rng, noise_rng = (np.random.default_rng(s) for s in seq.spawn(4))

    n_sites = max(spec.n_fields, int(round(spec.n_fields / spec.crop_fraction)))
    sites = _sites(site_rng, n_sites, spec.size)
    cells = _voronoi_cells(sites, spec.size)
    crop = np.zeros(n_sites, dtype=bool)
    crop[crop_rng.choice(n_sites, spec.n_fields, replace=False)] = True
    reference = _crop_fields(cells, crop)

    reflectance = refl_rng.uniform(0.05, 0.5, size=(n_sites, 4))
    image = reflectance[cells].transpose(2, 0, 1)
    if spec.noise_sigma > 0:
        image = image + noise_rng.normal(0.0, spec.noise_sigma, image.shape)

    labels = make_labels(reference, spec.buffer_px)
    oracle = MaskTriple(
        _blur(labels.extent, spec.blur_sigma),
        _blur(labels.boundary, spec.blur_sigma),
        _blur(labels.distance, spec.blur_sigma),
    )
    return Scene(spec, image, reference, labels, oracle)


def _footprints(regions: np.ndarray) -> np.ndarray:
    """Assign every pixel to its nearest region (Euclidean)."""
    if not (regions > 0).any():
        return regions
    _, (ri, ci) = ndimage.distance_transform_edt(regions == 0, return_indices=True)
    return regions[ri, ci]


def degrade(
    masks: MaskTriple,
    dropout_rate: float,
    noise_sigma: float,
    rng_seed: int,
    regions: np.ndarray | None = None,
) -> MaskTriple:
    """Simulate a poor acquisition date.

    Each field region is blanked in all three masks with probability
    ``dropout_rate``; blanking covers the region's nearest-pixel footprint so
    blurred margins vanish too. Clipped Gaussian noise is then added.
    ``regions`` defaults to a 0.5/0.5 cutoff extraction of ``masks``.
    """
    if not 0.0 <= dropout_rate <= 1.0:
        raise ValueError("dropout_rate must lie in [0, 1]")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    drop_rng, noise_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(rng_seed).spawn(2))
    if regions is None:
        regions = extract_cutoff(masks, ThresholdSet(0.5, 0.5, 0.5))
    regions = np.asarray(regions)
    n = int(regions.max(initial=0))
    dropped = np.zeros(n + 1, dtype=bool)
    dropped[1:] = drop_rng.random(n) < dropout_rate
    blank = dropped[_footprints(regions)]

    out = []
    for layer in (masks.extent, masks.boundary, masks.distance):
        layer = np.where(blank, 0.0, layer)
        if noise_sigma > 0:
            layer = np.clip(layer + noise_rng.normal(0.0, noise_sigma, layer.shape), 0.0, 1.0)
        out.append(layer)
    return MaskTriple(*out)
