"""
Noise schedules, forward perturbation of grasp poses and the ground-truth
score targets shared by the score-matching and flow-matching branches.
"""
import logging
from dataclasses import dataclass
from typing import Optional
import numpy as np
from .igso3 import gauss_score, igso3_sample_many, igso3_score, quantize_eps
from .lie import Pose, compose
log = logging.getLogger(__name__)
T_MIN = 1e-3
CHANNELS = ("p", "q")
@dataclass(frozen=True)
class NoiseSchedule:
    """σ_t² = α_p t for translations, ε_t = α_q t / 2 for rotations."""
    alpha_p: float = 0.09
    alpha_q: float = 4.0
    alpha_t: float = 1.0
    def __post_init__(self):
        for name in ("alpha_p", "alpha_q", "alpha_t"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be positive, got {value}")
    def alpha(self, channel: str) -> float:
        if channel not in CHANNELS:
            raise ValueError(f"channel must be one of {CHANNELS}, got {channel!r}")
        return self.alpha_p if channel == "p" else self.alpha_q
    def diffusion_rate(self, channel: str) -> float:
        """Per-axis variance growth rate of the forward perturbation (α_p or α_q)."""
        return self.alpha(channel)
@dataclass(frozen=True)
class PerturbSample:
    g_t: Pose
    t: np.ndarray
    target_score_p: np.ndarray
    target_score_q: np.ndarray
    dp: np.ndarray
    dq: np.ndarray
    eps: np.ndarray
def _check_t(t, allow_zero: bool = False) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    bad = (t < 0.0) if allow_zero else (t <= 0.0)
    if np.any(bad | (t > 1.0) | ~np.isfinite(t)):
        raise ValueError(f"t must lie in {'[0' if allow_zero else '(0'}, 1], got {t}")
    return t
def sigma_t(sched: NoiseSchedule, t) -> np.ndarray:
    return np.sqrt(sched.alpha_p * _check_t(t, allow_zero=True))
def eps_t(sched: NoiseSchedule, t) -> np.ndarray:
    return sched.alpha_q * _check_t(t, allow_zero=True) / 2.0
def beta_x(sched: NoiseSchedule, t, channel: str) -> np.ndarray:
    """½ α_x² t^α_t."""
    return 0.5 * sched.alpha(channel) ** 2 * _check_t(t, allow_zero=True) ** sched.alpha_t
def stream_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Independent generator for (seed, stream, index); stable across worker counts."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(index))))
def sample_times(rng: np.random.Generator, n: int, t_min: float = T_MIN) -> np.ndarray:
    """t ~ U(t_min, 1]."""
    if not 0.0 <= t_min < 1.0:
        raise ValueError(f"t_min must lie in [0, 1), got {t_min}")
    return 1.0 - rng.random(n) * (1.0 - t_min)
def sample_prior(sched: NoiseSchedule, rng: np.random.Generator, n: int) -> Pose:
    """Draws n poses from the t = 1 noise distribution centred at the identity."""
    p = rng.normal(0.0, float(sigma_t(sched, 1.0)), size=(n, 3))
    q = igso3_sample_many(np.full(n, float(eps_t(sched, 1.0))), rng)
    return Pose(p, q)
def perturb(
    g0: Pose,
    t,
    sched: NoiseSchedule,
    rng: np.random.Generator,
    quantize: bool = False,
    t_min: float = T_MIN,
) -> PerturbSample:
    """
    Diffuses a batch of poses by a body-frame twist and returns the score targets.
    Args:
        g0: Clean poses, batch of N; a single pose is treated as N = 1.
        t: Scalar or N times in (0, 1].
        sched: Noise schedule.
        rng: Generator owned by the caller.
        quantize: Snap ε_t to the log-spaced bins used during training.
        t_min: Lower end of the quantization range.
    Returns:
        PerturbSample with g_t = compose(g0, (Δp, Δq)).
    Raises:
        ValueError: If any t is outside (0, 1].
    """
    g0 = g0.as_batch()
    n = len(g0)
    t = np.broadcast_to(_check_t(t), (n,)).astype(float)
    sigma = sigma_t(sched, t)
    eps = eps_t(sched, t)
    if quantize:
        eps = quantize_eps(eps, float(eps_t(sched, min(t_min, float(t.min())))), float(eps_t(sched, 1.0)))
    dp = rng.normal(size=(n, 3)) * sigma[:, None]
    dq = igso3_sample_many(eps, rng)
    g_t = compose(g0, Pose(dp, dq))
    return PerturbSample(
        g_t=g_t,
        t=t,
        target_score_p=gauss_score(dp, sigma),
        target_score_q=igso3_score(dq, eps),
        dp=dp,
        dq=dq,
        eps=eps,
    )
def score_time(t: Optional[np.ndarray], rng: np.random.Generator, n: int, t_min: float = T_MIN) -> np.ndarray:
    return sample_times(rng, n, t_min) if t is None else np.broadcast_to(_check_t(t), (n,)).astype(float)
