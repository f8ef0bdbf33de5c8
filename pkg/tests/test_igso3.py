# pylint: disable=missing-module-docstring, missing-class-docstring, missing-function-docstring
import unittest
from concurrent.futures import ThreadPoolExecutor
import numpy as np
import pytest
from scipy.stats import kstest
from src.se3grasp.igso3 import (
    GRID_SIZE,
    SMALL_EPS,
    TableCache,
    build_table,
    dump_table_csv,
    gauss_score,
    igso3_density,
    igso3_dlogf,
    igso3_sample,
    igso3_sample_many,
    igso3_score,
    quantize_eps,
    truncation_order,
)
from src.se3grasp.lie import exp_so3, log_so3, quat_mul, rotation_angle
def haar_mass(eps: float, n: int = 40001) -> float:
    grid = np.linspace(0.0, np.pi, n)
    return float(np.trapz(igso3_density(grid, eps) * (1.0 - np.cos(grid)) / np.pi, grid))
class TestDensity(unittest.TestCase):
    def test_normalized_over_haar_measure(self):
        for eps in (5e-4, 0.01, 0.1, 0.5, 1.0, 4.0):
            with self.subTest(eps=eps):
                self.assertAlmostEqual(haar_mass(eps), 1.0, delta=1e-4)
    def test_non_negative(self):
        grid = np.linspace(0.0, np.pi, 1001)
        for eps in (0.002, 0.05, 2.0):
            self.assertTrue(np.all(igso3_density(grid, eps) >= 0.0))
    def test_large_eps_tends_to_uniform(self):
        grid = np.linspace(0.0, np.pi, 50)
        np.testing.assert_allclose(igso3_density(grid, 10.0), 1.0, atol=1e-3)
    def test_series_agrees_with_small_eps_form(self):
        eps = SMALL_EPS
        omega = np.linspace(0.0, 0.15, 31)
        series = igso3_density(omega, eps, order=truncation_order(eps))
        np.testing.assert_allclose(igso3_density(omega, 0.999 * eps), series, rtol=1e-2)
    def test_rejects_non_positive_eps(self):
        for eps in (0.0, -1.0, np.nan):
            with self.assertRaises(ValueError):
                igso3_density(0.5, eps)
    def test_truncation_order_shrinks_with_eps(self):
        self.assertGreater(truncation_order(0.01), truncation_order(1.0))
        self.assertGreaterEqual(truncation_order(1.0), 1)
    def test_dlogf_matches_finite_difference(self):
        h = 1e-5
        for eps, top in ((0.02, 0.6), (0.5, 3.0), (3.0, 3.0)):
            omega = np.linspace(0.05, top, 60)
            with self.subTest(eps=eps):
                fd = (np.log(igso3_density(omega + h, eps)) - np.log(igso3_density(omega - h, eps))) / (2 * h)
                np.testing.assert_allclose(igso3_dlogf(omega, eps), fd, rtol=1e-4, atol=1e-6)
    def test_dlogf_vanishes_at_zero(self):
        for eps in (1e-4, 0.3):
            self.assertAlmostEqual(float(igso3_dlogf(np.array([0.0]), eps)[0]), 0.0, places=8)
class TestSampling(unittest.TestCase):
    def test_angles_follow_table_cdf(self):
        table = build_table(0.5)
        rng = np.random.default_rng(11)
        angles = rotation_angle(igso3_sample(0.5, rng, 5000))
        result = kstest(angles, lambda x: np.interp(x, table.angle_grid, table.cdf))
        self.assertGreater(result.pvalue, 1e-3)
    def test_axes_are_isotropic(self):
        rng = np.random.default_rng(12)
        phi = log_so3(igso3_sample(1.0, rng, 20000))
        axis = phi / np.linalg.norm(phi, axis=-1, keepdims=True)
        np.testing.assert_allclose(axis.mean(axis=0), 0.0, atol=0.03)
    def test_small_eps_branch_mean_angle(self):
        eps = 1e-4
        rng = np.random.default_rng(13)
        angles = rotation_angle(igso3_sample(eps, rng, 20000))
        chi3_mean = 2.0 * np.sqrt(2.0 / np.pi)
        self.assertAlmostEqual(angles.mean() / (chi3_mean * np.sqrt(2.0 * eps)), 1.0, delta=0.02)
    def test_large_eps_angles_are_haar_uniform(self):
        rng = np.random.default_rng(16)
        angles = rotation_angle(igso3_sample(50.0, rng, 100000))
        result = kstest(angles, lambda x: (x - np.sin(x)) / np.pi)
        self.assertLess(result.statistic, 0.01)
    def test_single_draw_shape(self):
        q = igso3_sample(0.3, np.random.default_rng(0))
        self.assertEqual(q.shape, (4,))
    def test_sample_many_per_entry(self):
        eps = np.array([0.01, 2.0, 0.01, 2.0] * 500)
        q = igso3_sample_many(eps, np.random.default_rng(14))
        angles = rotation_angle(q)
        self.assertEqual(q.shape, (2000, 4))
        self.assertLess(angles[eps == 0.01].mean(), 0.3)
        self.assertGreater(angles[eps == 2.0].mean(), 1.5)
    def test_prior_mean_angle(self):
        table = build_table(2.0)
        mean = np.trapz(table.angle_grid * np.gradient(table.cdf, table.angle_grid), table.angle_grid)
        self.assertTrue(2.0 < mean < 2.25)
        rng = np.random.default_rng(15)
        sampled = rotation_angle(igso3_sample(2.0, rng, 20000)).mean()
        self.assertAlmostEqual(sampled, mean, delta=0.03)
def test_table_is_monotone_and_complete():
    table = build_table(0.2)
    assert table.cdf[0] == 0.0
    assert table.cdf[-1] == pytest.approx(1.0)
    assert np.all(np.diff(table.cdf) >= 0.0)
    assert table.angle_grid.shape == (GRID_SIZE,)
def test_table_cache_builds_once():
    cache = TableCache()
    with ThreadPoolExecutor(max_workers=4) as pool:
        tables = list(pool.map(lambda _: cache.get(0.75), range(8)))
    assert all(t is tables[0] for t in tables)
    assert len(cache) == 1
def test_score_direction_and_magnitude():
    phi = np.array([[0.0, 0.0, 0.8], [0.3, -0.4, 0.0]])
    score = igso3_score(exp_so3(phi), 0.4)
    omega = np.linalg.norm(phi, axis=-1)
    expected = igso3_dlogf(omega, 0.4)[:, None] * phi / omega[:, None]
    np.testing.assert_allclose(score, expected, atol=1e-9)
    assert np.all(np.sum(score * phi, axis=-1) < 0.0)
def test_score_is_zero_at_identity():
    score = igso3_score(np.array([[1.0, 0.0, 0.0, 0.0]]), np.array([0.5]))
    np.testing.assert_array_equal(score, np.zeros((1, 3)))
def test_score_per_row_eps():
    q = exp_so3(np.array([[0.5, 0.0, 0.0], [0.5, 0.0, 0.0]]))
    score = igso3_score(q, np.array([0.1, 1.0]))
    assert abs(score[0, 0]) > abs(score[1, 0])
def test_gauss_score():
    dp = np.array([[0.1, -0.2, 0.3], [1.0, 0.0, 0.0]])
    np.testing.assert_allclose(gauss_score(dp, 0.5), -dp / 0.25)
    np.testing.assert_allclose(gauss_score(dp, np.array([0.5, 2.0])), -dp / np.array([[0.25], [4.0]]))
    with pytest.raises(ValueError, match="sigma"):
        gauss_score(dp, 0.0)
def test_quantize_eps_snaps_to_levels():
    eps = np.array([1e-5, 0.01, 0.0105, 5.0])
    out = quantize_eps(eps, 1e-3, 2.0, bins=16)
    levels = np.geomspace(1e-3, 2.0, 16)
    assert np.all(np.isin(out, levels))
    assert out[0] == levels[0] and out[-1] == levels[-1]
    assert np.all(np.diff(out) >= 0.0)
    with pytest.raises(ValueError):
        quantize_eps(eps, 2.0, 1.0)
def test_dump_table_csv():
    text = dump_table_csv(build_table(1.0))
    lines = text.splitlines()
    assert lines[0] == "omega,f,cdf,dlogf"
    assert len(lines) == GRID_SIZE + 1
    assert float(lines[-1].split(",")[2]) == pytest.approx(1.0)
@pytest.mark.parametrize("eps", [0.05, 0.5, 2.0])
def test_score_matches_finite_difference_of_log_density(eps):
    rng = np.random.default_rng(17)
    q = igso3_sample(eps, rng, 200)
    omega = rotation_angle(q)
    q = q[(omega > 0.01) & (omega < 3.0)]
    score = igso3_score(q, eps)
    h = 1e-5
    for i in range(3):
        step = np.zeros(3)
        step[i] = h
        up = np.log(igso3_density(rotation_angle(quat_mul(q, exp_so3(step))), eps))
        down = np.log(igso3_density(rotation_angle(quat_mul(q, exp_so3(-step))), eps))
        np.testing.assert_allclose(score[:, i], (up - down) / (2 * h), rtol=1e-3, atol=1e-5)
