"""
Flow-matching branch: decoupled geodesic targets between a prior draw and a
data grasp, the interpolation path, and Euler / RK4 samplers.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple
import numpy as np
from .errors import SamplingError
from .guidance import GuidanceConfig, guided_field
from .lie import Pose, exp_so3, log_so3, quat_conj, quat_mul, rotate
from .net import ConditionBundle, VectorField
from .schedule import NoiseSchedule, sample_prior
log = logging.getLogger(__name__)
SOLVERS = ("euler", "rk4")
@dataclass(frozen=True)
class FlowPair:
    """
    Prior draw g0, data grasp g1, time t and path point g_t. `dp` is the
    translation in the q0 frame; `dp_t` is the same displacement in the q_t
    frame, which is the regression target.
    """
    g0: Pose
    g1: Pose
    t: np.ndarray
    g_t: Pose
    dp: np.ndarray
    dphi: np.ndarray
    dp_t: np.ndarray
@dataclass(frozen=True)
class OdeSamplerConfig:
    steps: int = 40
    solver: str = "euler"
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    guidance: Optional[GuidanceConfig] = None
    cfg_weight: float = 2.0
    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
def flow_targets(g0: Pose, g1: Pose) -> Tuple[np.ndarray, np.ndarray]:
    """dp = R_q0ᵀ(p1 − p0), dphi = Log(q0⁻¹ q1)."""
    q0_inv = quat_conj(g0.q)
    return rotate(q0_inv, g1.p - g0.p), log_so3(quat_mul(q0_inv, g1.q))
def path_point(g0: Pose, dp, dphi, t) -> Pose:
    """p_t = p0 + t·R_q0 dp, q_t = q0 ⊗ Exp(t·dphi)."""
    t = np.asarray(t, dtype=float)
    if np.any((t < 0.0) | (t > 1.0)):
        raise ValueError(f"t must lie in [0, 1], got {t}")
    scale = t[..., None] if t.ndim else t
    return Pose(g0.p + scale * rotate(g0.q, dp), quat_mul(g0.q, exp_so3(scale * np.asarray(dphi, dtype=float))))
def flow_training_pair(
    g1: Pose, sched: NoiseSchedule, rng: np.random.Generator, t=None
) -> FlowPair:
    """Pairs data grasps with t=1 prior draws and a path time t ~ U[0, 1)."""
    g1 = g1.as_batch()
    n = len(g1)
    g0 = sample_prior(sched, rng, n)
    times = rng.random(n) if t is None else np.broadcast_to(np.asarray(t, dtype=float), (n,)).astype(float)
    dp, dphi = flow_targets(g0, g1)
    g_t = path_point(g0, dp, dphi, times)
    dp_t = rotate(quat_conj(g_t.q), g1.p - g0.p)
    return FlowPair(g0, g1, times, g_t, dp, dphi, dp_t)
class GeodesicField:  # pylint: disable=too-few-public-methods
    """Exact velocity field of the straight path from g0 to g1, for any current pose on it."""
    def __init__(self, g0: Pose, g1: Pose):
        self.g0 = g0
        self.g1 = g1
        self._world_velocity = g1.p - g0.p
        self._dphi = flow_targets(g0, g1)[1]
    def predict(self, g: Pose, t, cond: ConditionBundle) -> Tuple[np.ndarray, np.ndarray]:
        return rotate(quat_conj(g.q), self._world_velocity), np.broadcast_to(self._dphi, g.p.shape).copy()
def _field(model, g, t, cond, cfg: OdeSamplerConfig, step: int):
    u_p, u_q = guided_field(model, g, np.full(len(cond), t), cond, cfg.cfg_weight, cfg.guidance, "flow")
    if not (np.all(np.isfinite(u_p)) and np.all(np.isfinite(u_q))):
        raise SamplingError("non-finite velocity field", step, t)
    return rotate(g.q, u_p), u_q
def retract(g: Pose, v_world: np.ndarray, w_body: np.ndarray, h: float) -> Pose:
    """p ← p + h·v, q ← q ⊗ Exp(h·ω)."""
    return Pose(g.p + h * v_world, quat_mul(g.q, exp_so3(h * w_body)))
def _start(cond, cfg, rng, n, g_init):
    if n is not None:
        cond = cond.repeat(n)
    g = sample_prior(cfg.schedule, rng, len(cond)) if g_init is None else g_init
    return cond, g
def sample_euler(
    model: VectorField,
    cond: ConditionBundle,
    cfg: OdeSamplerConfig,
    rng: np.random.Generator,
    n: Optional[int] = None,
    g_init: Optional[Pose] = None,
) -> Pose:
    """
    Integrates the learned field from the prior at t=0 to t=1 with uniform
    Euler steps; u_p is rotated by the current orientation.
    """
    cond, g = _start(cond, cfg, rng, n, g_init)
    h = 1.0 / cfg.steps
    for step in range(cfg.steps):
        v, w = _field(model, g, step * h, cond, cfg, step)
        g = retract(g, v, w, h)
    return g
def sample_rk4(
    model: VectorField,
    cond: ConditionBundle,
    cfg: OdeSamplerConfig,
    rng: np.random.Generator,
    n: Optional[int] = None,
    g_init: Optional[Pose] = None,
) -> Pose:
    """Classical RK4 on world-frame translation velocity and body angular velocity."""
    cond, g = _start(cond, cfg, rng, n, g_init)
    h = 1.0 / cfg.steps
    for step in range(cfg.steps):
        t = step * h
        v1, w1 = _field(model, g, t, cond, cfg, step)
        v2, w2 = _field(model, retract(g, v1, w1, h / 2), t + h / 2, cond, cfg, step)
        v3, w3 = _field(model, retract(g, v2, w2, h / 2), t + h / 2, cond, cfg, step)
        v4, w4 = _field(model, retract(g, v3, w3, h), t + h, cond, cfg, step)
        g = retract(g, (v1 + 2 * v2 + 2 * v3 + v4) / 6.0, (w1 + 2 * w2 + 2 * w3 + w4) / 6.0, h)
    return g
def sample_flow(
    model: VectorField,
    cond: ConditionBundle,
    cfg: OdeSamplerConfig,
    rng: np.random.Generator,
    n: Optional[int] = None,
) -> Pose:
    sampler = sample_rk4 if cfg.solver == "rk4" else sample_euler
    g = sampler(model, cond, cfg, rng, n)
    log.debug("Flow sampler (%s) finished: %d trajectories, %d steps", cfg.solver, len(g), cfg.steps)
    return g
