# pylint: disable=missing-module-docstring, missing-class-docstring, missing-function-docstring
import unittest
import numpy as np
import pytest
from src.se3grasp.errors import RegistrationError
from src.se3grasp.register import IcpConfig, PointCloud, z_only_icp
RAY = np.array([0.0, 0.6, 0.8])
def grid_cloud(seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    xs, ys = np.meshgrid(np.arange(10) * 0.1, np.arange(10) * 0.1)
    return np.stack([xs.ravel(), ys.ravel(), rng.uniform(0.0, 0.02, size=xs.size)], axis=-1)
class TestZOnlyIcp(unittest.TestCase):
    def test_recovers_shift_along_ray(self):
        target = grid_cloud()
        source = target - 0.03 * RAY
        result = z_only_icp(PointCloud(source), PointCloud(target), RAY)
        self.assertAlmostEqual(result.offset, 0.03, places=9)
        self.assertAlmostEqual(result.rms_before, 0.03, places=9)
        self.assertLess(result.rms_after, 1e-9)
        self.assertFalse(result.flagged)
    def test_negative_shift(self):
        target = grid_cloud(1)
        source = target + 0.015 * RAY
        result = z_only_icp(PointCloud(source), PointCloud(target), RAY)
        self.assertAlmostEqual(result.offset, -0.015, places=9)
    def test_offset_is_clipped(self):
        target = grid_cloud(2)
        source = target - 0.04 * RAY
        result = z_only_icp(PointCloud(source), PointCloud(target), RAY, IcpConfig(max_offset=0.02))
        self.assertAlmostEqual(result.offset, 0.02)
        self.assertLess(result.rms_after, result.rms_before)
    def test_identical_clouds_need_no_offset(self):
        cloud = PointCloud(grid_cloud(5))
        result = z_only_icp(cloud, cloud, RAY)
        self.assertEqual(result.offset, 0.0)
        self.assertEqual(result.rms_before, 0.0)
        self.assertEqual(result.rms_after, 0.0)
        self.assertFalse(result.flagged)
    def test_shift_perpendicular_to_ray_is_ignored(self):
        target = grid_cloud(6)
        source = target - np.array([0.03, 0.0, 0.0])
        result = z_only_icp(PointCloud(source), PointCloud(target), RAY)
        self.assertLess(abs(result.offset), 1e-9)
        self.assertAlmostEqual(result.rms_after, result.rms_before, places=12)
        self.assertAlmostEqual(result.rms_before, 0.03, places=9)
    def test_flagged_when_no_correspondence(self):
        target = grid_cloud(3)
        source = target + np.array([0.0, 0.0, 1.0])
        result = z_only_icp(PointCloud(source), PointCloud(target), [0.0, 0.0, 1.0])
        self.assertTrue(result.flagged)
        self.assertEqual(result.offset, 0.0)
        self.assertEqual(result.rms_after, result.rms_before)
    def test_objective_never_increases(self):
        rng = np.random.default_rng(4)
        target = rng.uniform(0.0, 0.1, size=(300, 3))
        source = target - 0.02 * RAY + rng.normal(0.0, 0.002, size=target.shape)
        result = z_only_icp(PointCloud(source), PointCloud(target), RAY)
        self.assertTrue(np.all(np.diff(result.objective) <= 0.0))
        self.assertLessEqual(result.rms_after, result.rms_before)
    def test_rejects_non_unit_ray(self):
        cloud = PointCloud(grid_cloud())
        with self.assertRaises(RegistrationError):
            z_only_icp(cloud, cloud, [0.0, 0.0, 2.0])
def test_point_cloud_validation():
    with pytest.raises(RegistrationError):
        PointCloud(np.zeros((0, 3)))
    with pytest.raises(RegistrationError):
        PointCloud(np.zeros((4, 2)))
    with pytest.raises(RegistrationError):
        PointCloud(np.array([[0.0, np.nan, 0.0]]))
def test_point_cloud_from_csv():
    cloud = PointCloud.from_csv("x,y,z\n0,0,0\n1,2,3\n")
    np.testing.assert_array_equal(cloud.points, [[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]])
    assert len(PointCloud.from_csv("0.5,0.5,0.5\n")) == 1
    with pytest.raises(RegistrationError):
        PointCloud.from_csv("x,y,z\n1,a,3\n")
def test_result_to_dict():
    target = grid_cloud()
    result = z_only_icp(PointCloud(target - 0.01 * RAY), PointCloud(target), RAY)
    payload = result.to_dict()
    assert set(payload) == {"offset", "rms_before", "rms_after", "flagged", "iterations"}
    assert payload["iterations"] >= 1
