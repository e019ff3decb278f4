"""Raster, polygon and report persistence.

Rasters are stored as a flat little-endian binary file (band-sequential,
row-major) next to a JSON header ``<path>.json``::

    {"format": "fieldgrid-raster", "version": 1, "width": 64, "height": 64,
     "bands": 4, "dtype": "float32", "geotransform": [x0, y0, pixel_size],
     "nodata": null, "metadata": {}}

Polygons are GeoJSON FeatureCollections whose features carry a
``field_id`` property; exterior rings are written counter-clockwise and
holes clockwise.
"""

from __future__ import annotations

import csv
import json
import os
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .labels import FieldPolygon
from .raster import Raster

__all__ = [
    "RasterFormatError",
    "load_schema",
    "read_polygons",
    "read_raster",
    "write_csv",
    "write_json",
    "write_polygons",
    "write_raster",
]

FORMAT_NAME = "fieldgrid-raster"
FORMAT_VERSION = 1
SUPPORTED_DTYPES = ("uint8", "uint16", "int16", "int32", "uint32", "float32", "float64")
REQUIRED_FIELDS = ("width", "height", "bands", "dtype", "geotransform")
GEOTIFF_SUFFIXES = (".tif", ".tiff")


class RasterFormatError(ValueError):
    pass


def _header_path(path: Path) -> Path:
    return path.with_name(path.name + ".json")


def _data_path(path: Path) -> Path:
    return path.with_name(path.name[: -len(".json")]) if path.name.endswith(".json") else path


def _read_header(path: Path) -> dict:
    header_path = _header_path(path)
    if not header_path.exists():
        raise RasterFormatError(f"{path}: unknown raster format (no header {header_path.name})")
    try:
        header = json.loads(header_path.read_text())
    except json.JSONDecodeError as exc:
        raise RasterFormatError(f"{header_path}: header is not valid JSON ({exc})") from exc
    if header.get("format", FORMAT_NAME) != FORMAT_NAME:
        raise RasterFormatError(f"{header_path}: unknown format {header.get('format')!r}")
    for name in REQUIRED_FIELDS:
        if name not in header:
            raise RasterFormatError(f"{header_path}: missing header field '{name}'")
    if header["dtype"] not in SUPPORTED_DTYPES:
        raise RasterFormatError(f"{header_path}: unsupported dtype {header['dtype']!r}")
    if len(header["geotransform"]) != 3:
        raise RasterFormatError(f"{header_path}: geotransform must have 3 entries")
    return header


def read_raster(path: str | os.PathLike) -> Raster:
    path = Path(path)
    if path.suffix.lower() in GEOTIFF_SUFFIXES:
        return _read_geotiff(path)
    path = _data_path(path)
    header = _read_header(path)
    dtype = np.dtype(header["dtype"]).newbyteorder("<")
    shape = (int(header["bands"]), int(header["height"]), int(header["width"]))
    data = np.fromfile(path, dtype=dtype)
    if data.size != shape[0] * shape[1] * shape[2]:
        raise RasterFormatError(f"{path}: expected {np.prod(shape)} values, found {data.size}")
    data = data.reshape(shape).astype(dtype.newbyteorder("="))
    return Raster(data, tuple(header["geotransform"]), header.get("nodata"), header.get("metadata", {}))


def write_raster(raster: Raster, path: str | os.PathLike, dtype: str | None = None) -> Path:
    """Write ``raster``; an existing file must have the same shape and bands."""
    path = Path(path)
    if path.suffix.lower() in GEOTIFF_SUFFIXES:
        return _write_geotiff(raster, path, dtype)
    path = _data_path(path)
    dtype = np.dtype(dtype or raster.data.dtype).name
    if dtype == "bool":
        dtype = "uint8"
    if dtype not in SUPPORTED_DTYPES:
        raise RasterFormatError(f"unsupported dtype {dtype!r}")
    if path.exists() and _header_path(path).exists():
        old = _read_header(path)
        if (old["bands"], old["height"], old["width"]) != (raster.bands, raster.height, raster.width):
            raise RasterFormatError(
                f"{path}: refusing to overwrite a {old['bands']}x{old['height']}x{old['width']} raster "
                f"with {raster.bands}x{raster.height}x{raster.width}"
            )
    path.parent.mkdir(parents=True, exist_ok=True)
    np.ascontiguousarray(raster.data, dtype=np.dtype(dtype).newbyteorder("<")).tofile(path)
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "width": raster.width,
        "height": raster.height,
        "bands": raster.bands,
        "dtype": dtype,
        "byteorder": "little",
        "geotransform": list(raster.geotransform),
        "nodata": raster.nodata,
        "metadata": raster.metadata,
    }
    _header_path(path).write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    return path


def _read_geotiff(path: Path) -> Raster:
    try:
        import rasterio
    except ImportError as exc:
        raise RasterFormatError(f"{path}: GeoTIFF support needs the optional 'rasterio' package") from exc
    with rasterio.open(path) as src:
        t = src.transform
        if t.b != 0 or t.d != 0 or t.a != -t.e:
            raise RasterFormatError(f"{path}: only north-up square-pixel GeoTIFFs are supported")
        return Raster(src.read(), (t.c, t.f, t.a), src.nodata)


def _write_geotiff(raster: Raster, path: Path, dtype: str | None) -> Path:
    try:
        import rasterio
        from rasterio.transform import from_origin
    except ImportError as exc:
        raise RasterFormatError(f"{path}: GeoTIFF support needs the optional 'rasterio' package") from exc
    ox, oy, ps = raster.geotransform
    data = raster.data.astype(dtype or raster.data.dtype)
    with rasterio.open(
        path, "w", driver="GTiff", width=raster.width, height=raster.height, count=raster.bands,
        dtype=data.dtype, transform=from_origin(ox, oy, ps, ps), nodata=raster.nodata,
    ) as dst:
        dst.write(data)
    return path


# --- polygons -------------------------------------------------------------


def _signed_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def _oriented(ring: np.ndarray, ccw: bool) -> np.ndarray:
    return ring if (_signed_area(ring) > 0) == ccw else ring[::-1]


def _coords(ring: np.ndarray) -> list[list[float]]:
    return [[float(x), float(y)] for x, y in ring]


def write_polygons(polygons: Iterable[FieldPolygon], path: str | os.PathLike) -> Path:
    features = []
    for poly in sorted(polygons, key=lambda p: p.field_id):
        rings = [_coords(_oriented(poly.exterior, True))]
        rings += [_coords(_oriented(h, False)) for h in poly.holes]
        features.append(
            {
                "type": "Feature",
                "properties": {"field_id": poly.field_id},
                "geometry": {"type": "Polygon", "coordinates": rings},
            }
        )
    return write_json({"type": "FeatureCollection", "features": features}, path)


def read_polygons(path: str | os.PathLike) -> list[FieldPolygon]:
    doc = json.loads(Path(path).read_text())
    if doc.get("type") != "FeatureCollection":
        raise ValueError(f"{path}: expected a GeoJSON FeatureCollection")
    out, seen = [], set()
    for k, feat in enumerate(doc.get("features", [])):
        props = feat.get("properties") or {}
        if "field_id" not in props:
            raise ValueError(f"{path}: feature {k} lacks a 'field_id' property")
        geom = feat.get("geometry") or {}
        if geom.get("type") != "Polygon":
            raise ValueError(f"{path}: feature {k} is {geom.get('type')!r}, expected Polygon")
        fid = int(props["field_id"])
        if fid in seen:
            raise ValueError(f"{path}: duplicate field_id {fid}")
        seen.add(fid)
        rings = [np.asarray(r, dtype=np.float64) for r in geom["coordinates"]]
        poly = FieldPolygon(fid, rings[0], rings[1:])
        poly.exterior = _oriented(poly.exterior, True)
        poly.holes = [_oriented(h, False) for h in poly.holes]
        out.append(poly)
    return out


# --- reports --------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def write_json(doc, path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(doc), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def write_csv(rows: Sequence[dict], columns: Sequence[str], path: str | os.PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in columns})
    return path


def load_schema(name: str) -> dict:
    """JSON schema shipped with the package (``evaluation`` or ``optimization``)."""
    text = resources.files("fieldgrid").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)
