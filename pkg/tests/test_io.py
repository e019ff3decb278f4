import json

import numpy as np
import pytest

from fieldgrid.io import RasterFormatError, read_polygons, read_raster, write_polygons, write_raster
from fieldgrid.labels import FieldPolygon
from fieldgrid.raster import Raster

GT = (500000.0, 4000000.0, 10.0)


def ring_key(ring):
    """Open ring as a rotation-normalised tuple of vertices."""
    pts = [tuple(p) for p in np.asarray(ring)[:-1].tolist()]
    k = pts.index(min(pts))
    return tuple(pts[k:] + pts[:k])


class TestRaster:
    def test_float32_round_trip(self, tmp_path):
        data = np.random.default_rng(0).random((4, 64, 64)).astype(np.float32)
        write_raster(Raster(data, GT), tmp_path / "img.fgr")
        back = read_raster(tmp_path / "img.fgr")
        assert back.data.dtype == np.float32
        assert np.array_equal(back.data, data)
        assert back.geotransform == GT

    def test_uint8_round_trip(self, tmp_path):
        data = np.random.default_rng(1).integers(0, 256, (2, 9, 7)).astype(np.uint8)
        write_raster(Raster(data, GT), tmp_path / "m.fgr")
        assert np.array_equal(read_raster(tmp_path / "m.fgr").data, data)

    def test_read_via_header_path(self, tmp_path):
        write_raster(Raster(np.zeros((1, 3, 3), np.float32), GT), tmp_path / "z.fgr")
        assert read_raster(tmp_path / "z.fgr.json").data.shape == (1, 3, 3)

    def test_little_endian_on_disk(self, tmp_path):
        write_raster(Raster(np.array([[[1.0]]], np.float32), GT), tmp_path / "one.fgr")
        assert (tmp_path / "one.fgr").read_bytes() == b"\x00\x00\x80\x3f"

    def test_missing_header_field(self, tmp_path):
        path = write_raster(Raster(np.zeros((1, 3, 3), np.float32), GT), tmp_path / "a.fgr")
        header_path = tmp_path / "a.fgr.json"
        header = json.loads(header_path.read_text())
        del header["width"]
        header_path.write_text(json.dumps(header))
        with pytest.raises(RasterFormatError, match="width"):
            read_raster(path)

    def test_unknown_format(self, tmp_path):
        (tmp_path / "x.bin").write_bytes(b"1234")
        with pytest.raises(RasterFormatError):
            read_raster(tmp_path / "x.bin")

    def test_truncated_data(self, tmp_path):
        path = write_raster(Raster(np.zeros((1, 3, 3), np.float32), GT), tmp_path / "t.fgr")
        path.write_bytes(path.read_bytes()[:-4])
        with pytest.raises(RasterFormatError):
            read_raster(path)

    def test_nodata_preserved(self, tmp_path):
        data = np.array([[[1.0, -9999.0]]], np.float32)
        write_raster(Raster(data, GT, nodata=-9999.0), tmp_path / "n.fgr")
        back = read_raster(tmp_path / "n.fgr")
        assert back.nodata == -9999.0
        assert not back.valid_mask()[0, 1]

    def test_write_over_shape_mismatch(self, tmp_path):
        write_raster(Raster(np.zeros((1, 3, 3), np.float32), GT), tmp_path / "w.fgr")
        with pytest.raises(RasterFormatError, match="refusing"):
            write_raster(Raster(np.zeros((2, 3, 3), np.float32), GT), tmp_path / "w.fgr")
        write_raster(Raster(np.ones((1, 3, 3), np.float32), GT), tmp_path / "w.fgr")

    def test_geotiff_without_adapter(self, tmp_path, monkeypatch):
        import sys

        # simulate the optional dependency being absent
        monkeypatch.setitem(sys.modules, "rasterio", None)
        with pytest.raises(RasterFormatError, match="rasterio"):
            write_raster(Raster(np.zeros((1, 3, 3), np.float32), GT), tmp_path / "a.tif")
        with pytest.raises(RasterFormatError, match="rasterio"):
            read_raster(tmp_path / "a.tif")


class TestPolygons:
    def test_square_round_trip(self, tmp_path):
        sq = [(0, 0), (0, 10), (10, 10), (10, 0)]  # clockwise on input
        write_polygons([FieldPolygon(4, sq)], tmp_path / "p.geojson")
        (back,) = read_polygons(tmp_path / "p.geojson")
        assert back.field_id == 4
        ccw = [(0, 0), (10, 0), (10, 10), (0, 10)]
        assert ring_key(back.exterior) == ring_key(FieldPolygon(4, ccw).exterior)

    def test_hole_preserved(self, tmp_path):
        outer = [(0, 0), (30, 0), (30, 30), (0, 30)]
        hole = [(10, 10), (20, 10), (20, 20), (10, 20)]  # counter-clockwise on input
        write_polygons([FieldPolygon(1, outer, [hole])], tmp_path / "h.geojson")
        doc = json.loads((tmp_path / "h.geojson").read_text())
        rings = doc["features"][0]["geometry"]["coordinates"]
        assert len(rings) == 2
        (back,) = read_polygons(tmp_path / "h.geojson")
        area = lambda r: 0.5 * np.sum(r[:-1, 0] * r[1:, 1] - r[1:, 0] * r[:-1, 1])  # noqa: E731
        assert area(back.exterior) > 0 and area(back.holes[0]) < 0
        assert set(ring_key(back.holes[0])) == set(map(tuple, np.asarray(hole, float).tolist()))

    def test_empty_collection(self, tmp_path):
        write_polygons([], tmp_path / "e.geojson")
        doc = json.loads((tmp_path / "e.geojson").read_text())
        assert doc == {"type": "FeatureCollection", "features": []}
        assert read_polygons(tmp_path / "e.geojson") == []

    def test_duplicate_id(self, tmp_path):
        sq = [(0, 0), (1, 0), (1, 1), (0, 1)]
        write_polygons([FieldPolygon(1, sq), FieldPolygon(1, sq)], tmp_path / "d.geojson")
        with pytest.raises(ValueError, match="duplicate"):
            read_polygons(tmp_path / "d.geojson")
