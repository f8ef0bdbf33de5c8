# pylint: disable=missing-module-docstring, missing-class-docstring, missing-function-docstring
import unittest
import numpy as np
import pytest
from scipy.special import softmax
from src.se3grasp.errors import SamplingError
from src.se3grasp.flow import (
    GeodesicField,
    OdeSamplerConfig,
    flow_targets,
    flow_training_pair,
    path_point,
    retract,
    sample_euler,
    sample_flow,
    sample_rk4,
)
from src.se3grasp.lie import Pose, exp_so3, left_jacobian, log_so3, quat_conj, quat_to_matrix, rotate, rotation_angle
from src.se3grasp.net import ConditionBundle
from src.se3grasp.schedule import NoiseSchedule, sigma_t
def cond_rows(n: int) -> ConditionBundle:
    return ConditionBundle(np.zeros((n, 4)), np.zeros(n, dtype=int), np.zeros((n, 2)), False)
def random_pose(rng: np.random.Generator, n: int, max_angle: float = 2.5) -> Pose:
    phi = rng.normal(size=(n, 3))
    phi *= rng.uniform(0.0, max_angle, size=(n, 1)) / np.linalg.norm(phi, axis=-1, keepdims=True)
    return Pose(rng.normal(size=(n, 3)), exp_so3(phi))
class ConstantBodyTwist:
    """Body-frame translation velocity u and angular velocity w, constant in time."""
    def __init__(self, u, w):
        self.u = np.asarray(u, dtype=float)
        self.w = np.asarray(w, dtype=float)
    def predict(self, g, t, cond):
        return np.broadcast_to(self.u, g.p.shape).copy(), np.broadcast_to(self.w, g.p.shape).copy()
class NaNField:
    def predict(self, g, t, cond):
        return np.zeros(g.p.shape), np.full(g.p.shape, np.inf)
class TestFlowPairs(unittest.TestCase):
    def test_path_endpoints(self):
        rng = np.random.default_rng(0)
        g0 = random_pose(rng, 20)
        g1 = random_pose(rng, 20)
        dp, dphi = flow_targets(g0, g1)
        start = path_point(g0, dp, dphi, np.zeros(20))
        end = path_point(g0, dp, dphi, np.ones(20))
        np.testing.assert_allclose(start.to_matrix(), g0.to_matrix(), atol=1e-12)
        np.testing.assert_allclose(end.to_matrix(), g1.to_matrix(), atol=1e-9)
    def test_path_rejects_time_outside_unit_interval(self):
        with self.assertRaises(ValueError):
            path_point(Pose.identity(1), np.zeros((1, 3)), np.zeros((1, 3)), np.array([1.5]))
    def test_training_pair_frames(self):
        rng = np.random.default_rng(1)
        g1 = random_pose(rng, 50)
        pair = flow_training_pair(g1, NoiseSchedule(), rng)
        np.testing.assert_allclose(rotate(pair.g_t.q, pair.dp_t), g1.p - pair.g0.p, atol=1e-12)
        np.testing.assert_allclose(rotate(pair.g0.q, pair.dp), g1.p - pair.g0.p, atol=1e-12)
        self.assertTrue(np.all((pair.t >= 0.0) & (pair.t < 1.0)))
    def test_training_pair_fixed_time(self):
        rng = np.random.default_rng(2)
        pair = flow_training_pair(Pose.identity(3), NoiseSchedule(), rng, t=0.25)
        np.testing.assert_array_equal(pair.t, np.full(3, 0.25))
    def test_rotation_targets_reflect_prior_spread(self):
        rng = np.random.default_rng(3)
        pair = flow_training_pair(Pose.identity(20000), NoiseSchedule(), rng)
        mean = np.linalg.norm(pair.dphi, axis=-1).mean()
        self.assertTrue(2.0 < mean < 2.25)
        self.assertAlmostEqual(pair.dp.std(), 0.3, delta=0.01)
    def test_config_validation(self):
        with self.assertRaises(ValueError):
            OdeSamplerConfig(steps=0)
        with self.assertRaises(ValueError):
            OdeSamplerConfig(solver="midpoint")
def test_euler_and_rk4_follow_geodesic_exactly():
    rng = np.random.default_rng(4)
    g0 = random_pose(rng, 10)
    g1 = random_pose(rng, 10)
    field = GeodesicField(g0, g1)
    for sampler in (sample_euler, sample_rk4):
        cfg = OdeSamplerConfig(steps=40, solver="rk4" if sampler is sample_rk4 else "euler", cfg_weight=1.0)
        out = sampler(field, cond_rows(10), cfg, rng, g_init=g0)
        np.testing.assert_allclose(out.to_matrix(), g1.to_matrix(), atol=1e-9)
def test_rk4_beats_euler_on_rotating_frame():
    u = np.array([0.2, -0.1, 0.05])
    w = np.array([0.0, 0.0, 2.0])
    g0 = Pose(np.zeros((1, 3)), np.tile([1.0, 0.0, 0.0, 0.0], (1, 1)))
    exact_p = left_jacobian(w) @ u
    exact_q = exp_so3(w)
    errors = {}
    for solver in ("euler", "rk4"):
        cfg = OdeSamplerConfig(steps=40, solver=solver, cfg_weight=1.0)
        sampler = sample_rk4 if solver == "rk4" else sample_euler
        out = sampler(ConstantBodyTwist(u, w), cond_rows(1), cfg, np.random.default_rng(0), g_init=g0)
        np.testing.assert_allclose(quat_to_matrix(out.q[0]), quat_to_matrix(exact_q), atol=1e-9)
        errors[solver] = np.linalg.norm(out.p[0] - exact_p)
    assert errors["rk4"] < 1e-7
    assert errors["euler"] > 100 * errors["rk4"]
def test_sample_flow_from_prior_uses_rng():
    field = ConstantBodyTwist(np.zeros(3), np.zeros(3))
    cfg = OdeSamplerConfig(steps=4, cfg_weight=1.0)
    a = sample_flow(field, cond_rows(1), cfg, np.random.default_rng(5), n=6)
    b = sample_flow(field, cond_rows(1), cfg, np.random.default_rng(5), n=6)
    np.testing.assert_array_equal(a.to_rows(), b.to_rows())
    assert len(a) == 6
    assert rotation_angle(a.q).mean() > 1.0
def test_retract():
    g = Pose(np.zeros(3), [1.0, 0.0, 0.0, 0.0])
    out = retract(g, np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, np.pi]), 0.5)
    np.testing.assert_allclose(out.p, [0.5, 0.0, 0.0])
    assert float(rotation_angle(out.q)) == pytest.approx(np.pi / 2)
def test_non_finite_field_raises():
    cfg = OdeSamplerConfig(steps=3, cfg_weight=1.0)
    with pytest.raises(SamplingError, match="non-finite"):
        sample_flow(NaNField(), cond_rows(1), cfg, np.random.default_rng(6), n=2)
def test_flow_target_norms_do_not_depend_on_time():
    g1 = Pose(np.array([[0.05, 0.02, -0.03]]), exp_so3(np.array([[0.4, -0.2, 0.1]])))
    pairs = [flow_training_pair(g1, NoiseSchedule(), np.random.default_rng(7), t=t) for t in (0.04, 0.16, 0.64)]
    dp_norms = [np.linalg.norm(pair.dp_t) for pair in pairs]
    dphi_norms = [np.linalg.norm(pair.dphi) for pair in pairs]
    np.testing.assert_allclose(dp_norms, dp_norms[0], rtol=1e-12)
    np.testing.assert_allclose(dphi_norms, dphi_norms[0], rtol=1e-12)
    assert not np.allclose(pairs[0].dp_t, pairs[2].dp_t)
def test_training_pair_accepts_a_single_pose():
    pair = flow_training_pair(Pose(np.zeros(3), [1.0, 0.0, 0.0, 0.0]), NoiseSchedule(), np.random.default_rng(8))
    assert len(pair.g_t) == 1
    assert pair.dp_t.shape == (1, 3)
class MixtureVelocity:
    """
    Marginal velocity from the t=0 prior to equally weighted translated copies
    of the identity pose, in the current body frame.
    """
    def __init__(self, centers: np.ndarray, sched: NoiseSchedule = NoiseSchedule()):
        self.centers = np.asarray(centers, dtype=float)
        self.sigma = float(sigma_t(sched, 1.0))
    def predict(self, g, t, cond):
        remaining = (1.0 - np.asarray(t, dtype=float))[:, None]
        offsets = g.p[:, None, :] - np.asarray(t, dtype=float)[:, None, None] * self.centers[None]
        logw = -np.sum(offsets**2, axis=-1) / (2.0 * (remaining * self.sigma) ** 2)
        w = softmax(logw, axis=-1)
        world = (w @ self.centers - g.p) / remaining
        return rotate(quat_conj(g.q), world), log_so3(quat_conj(g.q)) / remaining
def test_bimodal_target_covers_both_modes():
    centers = np.array([[0.1, 0.0, 0.0], [-0.1, 0.0, 0.0]])
    cfg = OdeSamplerConfig(steps=40, cfg_weight=1.0)
    out = sample_euler(MixtureVelocity(centers), cond_rows(1), cfg, np.random.default_rng(9), n=512)
    dist = np.stack([np.linalg.norm(out.p - c, axis=-1) for c in centers], axis=-1)
    assert np.max(dist.min(axis=-1)) < 1e-3
    assert np.max(rotation_angle(out.q)) < 1e-6
    share = np.mean(dist.argmin(axis=-1) == 0)
    assert 0.2 <= share <= 0.8
