import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fieldgrid.losses import multitask_loss, tanimoto, tanimoto_dual, tanimoto_dual_grad, tanimoto_grad

# zero or a magnitude whose square does not underflow
unit = st.one_of(st.just(0.0), st.floats(1e-6, 1.0))


def central_difference(f, p, l, h=1e-5):
    grad = np.empty_like(p)
    for i in range(p.size):
        up, down = p.copy(), p.copy()
        up[i] += h
        down[i] -= h
        grad[i] = (f(up, l) - f(down, l)) / (2 * h)
    return grad


class TestTanimoto:
    def test_identity(self):
        l = np.array([1, 0, 1, 1, 0], float)
        assert tanimoto(l, l) == 1.0

    def test_disjoint(self):
        assert tanimoto([1, 1, 0, 0], [0, 0, 1, 1]) == 0.0

    def test_half_example(self):
        # 0.5 / (0.5 + 1.0 - 0.5)
        assert tanimoto([0.5, 0.5], [1, 0]) == 0.5

    def test_all_zero_undefined(self):
        with pytest.raises(ZeroDivisionError, match="undefined 0/0"):
            tanimoto([0, 0], [0, 0])

    def test_eps_guard(self):
        assert tanimoto([0, 0], [0, 0], eps=1e-12) == 1.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            tanimoto([0.1, 0.2], [0.1])

    def test_empty(self):
        with pytest.raises(ValueError):
            tanimoto([], [])

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(unit, unit), min_size=1, max_size=30))
    def test_bounds_and_symmetry(self, pairs):
        p = np.array([a for a, _ in pairs])
        l = np.array([b for _, b in pairs])
        if not (p.any() or l.any()):
            return
        t = tanimoto(p, l)
        assert 0.0 <= t <= 1.0 + 1e-15
        assert t == pytest.approx(tanimoto(l, p), abs=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 12, elements=st.floats(0.01, 1.0)))
    def test_self_similarity(self, p):
        assert tanimoto(p, p) == pytest.approx(1.0, abs=1e-15)


class TestDual:
    def test_identity(self):
        assert tanimoto_dual([0, 1, 1, 0], [0, 1, 1, 0]) == 1.0

    def test_complement(self):
        assert tanimoto_dual([1, 0, 1], [0, 1, 0]) == 0.0

    def test_half_example(self):
        assert tanimoto_dual([0.5, 0.5], [1, 0]) == 0.5

    def test_propagates_undefined(self):
        # complement pair is (0, 0)
        with pytest.raises(ZeroDivisionError):
            tanimoto_dual([1, 1], [1, 1])


class TestGradient:
    def test_single_kernel_finite_difference(self):
        rng = np.random.default_rng(3)
        p, l = rng.uniform(0.05, 0.95, 64), rng.uniform(0, 1, 64)
        fd = central_difference(tanimoto, p, l)
        assert np.allclose(tanimoto_grad(p, l), fd, rtol=1e-5, atol=1e-9)

    def test_dual_finite_difference_100_vectors(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            p, l = rng.uniform(0.05, 0.95, 64), rng.uniform(0, 1, 64)
            analytic = tanimoto_dual_grad(p, l)
            fd = central_difference(tanimoto_dual, p, l)
            rel = np.max(np.abs(analytic - fd)) / np.max(np.abs(fd))
            assert rel < 1e-5

    def test_stationary_at_optimum(self):
        l = np.array([0.3, 0.7, 0.5, 0.2])
        assert np.allclose(tanimoto_dual_grad(l, l), 0.0, atol=1e-12)

    def test_duplication_identity(self):
        rng = np.random.default_rng(1)
        p, l = rng.uniform(0.1, 0.9, 16), rng.uniform(0, 1, 16)
        g = tanimoto_dual_grad(p, l)
        g2 = tanimoto_dual_grad(np.tile(p, 2), np.tile(l, 2))
        # the similarity is scale-free in the sums, so each copy carries half
        assert np.allclose(g2[:16] + g2[16:], g, rtol=1e-12)
        assert np.allclose(tanimoto_dual(np.tile(p, 2), np.tile(l, 2)), tanimoto_dual(p, l), rtol=1e-14)


class TestMultitask:
    def setup_method(self):
        rng = np.random.default_rng(2)
        self.labels = [rng.integers(0, 2, (8, 8)).astype(float) for _ in range(4)]

    def test_perfect(self):
        assert multitask_loss(self.labels, self.labels) == 0.0

    def test_maximally_wrong(self):
        assert multitask_loss([1 - l for l in self.labels], self.labels) == 1.0

    def test_mixed_is_mean_of_dual_losses(self):
        rng = np.random.default_rng(4)
        preds = [rng.uniform(0, 1, (8, 8)) for _ in range(4)]
        expected = np.mean([1 - tanimoto_dual(p, l) for p, l in zip(preds, self.labels)])
        assert multitask_loss(preds, self.labels) == pytest.approx(expected, abs=1e-15)

    def test_shape_mismatch(self):
        preds = list(self.labels)
        preds[2] = np.zeros((4, 4))
        with pytest.raises(ValueError, match="distance"):
            multitask_loss(preds, self.labels)

    def test_wrong_task_count(self):
        with pytest.raises(ValueError):
            multitask_loss(self.labels[:3], self.labels[:3])
