import math

import numpy as np
import pytest

from fieldgrid.extract import vectorize
from fieldgrid.labels import (
    FieldPolygon,
    make_boundary_mask,
    make_distance_labels,
    make_labels,
    rasterize_polygons,
)
from fieldgrid.raster import connected_components

GT = (0.0, 100.0, 10.0)


def square(x0, y0, side):
    return [(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)]


def point_in_polygon(x, y, ring):
    """Classic crossing-number test."""
    inside = False
    n = len(ring)
    for i in range(n):
        (x1, y1), (x2, y2) = ring[i], ring[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if xc > x:
                inside = not inside
    return inside


def neighborhood_boundary(labels, b):
    h, w = labels.shape
    out = np.zeros_like(labels, dtype=np.uint8)
    for r in range(h):
        for c in range(w):
            win = labels[max(r - b, 0) : r + b + 1, max(c - b, 0) : c + b + 1]
            out[r, c] = np.any(win != labels[r, c])
    return out


def brute_distance_labels(labels):
    out = np.zeros(labels.shape)
    for k in np.unique(labels[labels > 0]):
        outside = np.argwhere(labels != k)
        members = np.argwhere(labels == k)
        d = np.array([math.sqrt(np.min((outside[:, 0] - r) ** 2 + (outside[:, 1] - c) ** 2)) for r, c in members])
        out[tuple(members.T)] = d / d.max()
    return out


class TestRasterize:
    def test_aligned_square(self):
        labels = rasterize_polygons([FieldPolygon(3, square(10, 60, 30))], GT, (10, 10))
        rows, cols = np.nonzero(labels)
        assert labels[rows, cols].tolist() == [3] * 9
        assert (rows.min(), rows.max(), cols.min(), cols.max()) == (1, 3, 1, 3)

    def test_overlap_takes_lowest_id(self):
        polys = [FieldPolygon(5, square(0, 50, 30)), FieldPolygon(2, square(20, 40, 30))]
        labels = rasterize_polygons(polys, GT, (10, 10))
        # pixel (3, 2) has centre (25, 65), inside both squares
        assert labels[3, 2] == 2
        assert labels[2, 0] == 5

    def test_random_triangle_matches_point_in_polygon(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            tri = rng.uniform(0, 100, size=(3, 2))
            labels = rasterize_polygons([FieldPolygon(1, tri)], GT, (10, 10))
            for r in range(10):
                for c in range(10):
                    x, y = GT[0] + (c + 0.5) * 10, GT[1] - (r + 0.5) * 10
                    assert bool(labels[r, c]) == point_in_polygon(x, y, tri.tolist())

    def test_polygon_with_hole(self):
        poly = FieldPolygon(1, square(0, 0, 100), [square(30, 30, 40)])
        labels = rasterize_polygons([poly], GT, (10, 10))
        assert labels.sum() == 100 - 16

    def test_empty_set(self):
        assert not rasterize_polygons([], GT, (4, 4)).any()

    def test_rings_closed(self):
        poly = FieldPolygon(1, square(0, 0, 10))
        assert np.array_equal(poly.exterior[0], poly.exterior[-1])

    def test_fixed_point_through_vectorize(self):
        polys = [FieldPolygon(1, square(0, 50, 30)), FieldPolygon(2, square(30, 30, 50)), FieldPolygon(3, square(0, 0, 20))]
        first = rasterize_polygons(polys, GT, (10, 10))
        second = rasterize_polygons(vectorize(first, GT), GT, (10, 10))
        assert np.array_equal(first, second)


class TestBoundary:
    def test_single_field_filling_grid(self):
        assert not make_boundary_mask(np.ones((6, 6), int), 1).any()

    def test_abutting_fields(self):
        labels = np.ones((6, 8), int)
        labels[:, 4:] = 2
        mask = make_boundary_mask(labels, 1)
        assert np.array_equal(mask, neighborhood_boundary(labels, 1))
        assert mask[:, 3].all() and mask[:, 4].all() and mask.sum() == 12

    def test_isolated_pixel_stamp(self):
        labels = np.zeros((5, 5), int)
        labels[2, 2] = 1
        mask = make_boundary_mask(labels, 1)
        assert np.array_equal(mask, neighborhood_boundary(labels, 1))
        assert mask[1:4, 1:4].all() and mask.sum() == 9

    def test_stamp_clipped_at_corner(self):
        labels = np.zeros((5, 5), int)
        labels[0, 0] = 1
        assert make_boundary_mask(labels, 1).sum() == 4

    @pytest.mark.parametrize("b", [1, 2])
    def test_random_maps(self, b):
        rng = np.random.default_rng(b)
        labels, _ = connected_components(rng.random((16, 16)) < 0.6)
        assert np.array_equal(make_boundary_mask(labels, b), neighborhood_boundary(labels, b))

    def test_covers_discontinuities(self):
        rng = np.random.default_rng(4)
        labels, _ = connected_components(rng.random((16, 16)) < 0.6)
        mask = make_boundary_mask(labels, 1).astype(bool)
        # every 4-neighbour pair with different labels is on the ribbon
        diff_h = labels[:, 1:] != labels[:, :-1]
        assert mask[:, 1:][diff_h].all() and mask[:, :-1][diff_h].all()

    def test_rejects_zero_buffer(self):
        with pytest.raises(ValueError):
            make_boundary_mask(np.ones((3, 3), int), 0)


class TestDistanceLabels:
    def test_single_pixel_field(self):
        labels = np.zeros((3, 3), int)
        labels[1, 1] = 1
        assert make_distance_labels(labels)[1, 1] == 1.0

    def test_background_only(self):
        assert not make_distance_labels(np.zeros((4, 4), int)).any()

    def test_square_against_brute_force(self):
        labels = np.zeros((13, 13), int)
        labels[1:12, 1:12] = 1
        dist = make_distance_labels(labels)
        oracle = brute_distance_labels(labels)
        assert np.array_equal(dist, oracle)
        assert dist[6, 6] == 1.0
        # outermost ring is 1 from the background, the centre 6
        assert dist[1, 1] == pytest.approx(1 / 6)
        assert dist[2, 2] == pytest.approx(2 / 6)

    def test_random_maps_against_brute_force(self):
        rng = np.random.default_rng(8)
        for _ in range(5):
            labels, n = connected_components(rng.random((20, 20)) < 0.65)
            dist = make_distance_labels(labels)
            assert np.array_equal(dist, brute_distance_labels(labels))
            for k in range(1, n + 1):
                assert dist[labels == k].max() == 1.0
                assert (dist[labels == k] > 0).all()
            assert not dist[labels == 0].any()

    def test_field_filling_grid(self):
        assert (make_distance_labels(np.ones((4, 4), int)) == 1.0).all()


def test_label_set_shapes_and_extent():
    labels = np.zeros((10, 10), int)
    labels[1:5, 1:9] = 1
    labels[5:9, 1:9] = 2
    ls = make_labels(labels)
    assert ls.extent.shape == ls.boundary.shape == ls.distance.shape
    assert not ls.distance[ls.extent == 0].any()
    # field pixels split into ribbon and interior; nothing is lost
    interior = (ls.extent == 1) & (ls.boundary == 0)
    assert np.array_equal(((ls.boundary == 1) & (ls.extent == 1)) | interior, ls.extent == 1)
