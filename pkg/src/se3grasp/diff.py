"""
Score-matching branch: training pairs with closed-form score targets and
the reverse-time SDE sampler on SE(3).
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple
import numpy as np
from .errors import SamplingError
from .guidance import GuidanceConfig, guided_field
from .lie import Pose, compose, increment_inverse, twist_increment
from .net import ConditionBundle, VectorField
from .schedule import T_MIN, NoiseSchedule, PerturbSample, beta_x, perturb, sample_prior, score_time
log = logging.getLogger(__name__)
SDE_FORMS = ("matched", "literal")
@dataclass(frozen=True)
class SdeSamplerConfig:
    """
    Reverse-SDE settings. `sde_form` picks the increment: "literal" drives with
    β_x(t)·ŝ and noise √(2β_x|Δt|); "matched" uses the forward perturbation's
    variance rate g_x² (α_p, α_q) for both drift and noise.
    """
    steps: int = 100
    schedule: NoiseSchedule = field(default_factory=NoiseSchedule)
    stochasticity_scale: float = 1.0
    guidance: Optional[GuidanceConfig] = None
    cfg_weight: float = 2.0
    t_min: float = T_MIN
    final_denoise: bool = True
    sde_form: str = "matched"
    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if not 0.0 < self.t_min < 1.0:
            raise ValueError(f"t_min must lie in (0, 1), got {self.t_min}")
        if self.stochasticity_scale < 0.0:
            raise ValueError("stochasticity_scale must be non-negative")
        if self.sde_form not in SDE_FORMS:
            raise ValueError(f"sde_form must be one of {SDE_FORMS}, got {self.sde_form!r}")
def score_training_pair(
    g1: Pose, sched: NoiseSchedule, rng: np.random.Generator, t=None, t_min: float = T_MIN, quantize: bool = True
) -> Tuple[PerturbSample, Tuple[np.ndarray, np.ndarray]]:
    """Perturbs ground-truth grasps; t ~ U(t_min, 1] unless given."""
    g1 = g1.as_batch()
    times = score_time(t, rng, len(g1), t_min)
    sample = perturb(g1, times, sched, rng, quantize=quantize, t_min=t_min)
    return sample, (sample.target_score_p, sample.target_score_q)
def _rates(cfg: SdeSamplerConfig, t: float) -> Tuple[float, float, float, float]:
    """Drift coefficients and noise variance rates for (p, q)."""
    if cfg.sde_form == "literal":
        bp = float(beta_x(cfg.schedule, t, "p"))
        bq = float(beta_x(cfg.schedule, t, "q"))
        return bp, bq, 2.0 * bp, 2.0 * bq
    gp = cfg.schedule.diffusion_rate("p")
    gq = cfg.schedule.diffusion_rate("q")
    return gp, gq, gp, gq
def _check_finite(score: Tuple[np.ndarray, np.ndarray], step: int, t: float) -> None:
    if not (np.all(np.isfinite(score[0])) and np.all(np.isfinite(score[1]))):
        raise SamplingError("non-finite score field", step, t)
def sample_reverse_sde(
    model: VectorField,
    cond: ConditionBundle,
    cfg: SdeSamplerConfig,
    rng: np.random.Generator,
    n: Optional[int] = None,
    g_init: Optional[Pose] = None,
) -> Pose:
    """
    Integrates the reverse SDE from the t=1 prior down to t_min.
    Args:
        model: Score model.
        cond: Condition rows, or a single row broadcast to n samples.
        cfg: Sampler settings.
        rng: Generator for the prior and the noise.
        n: Number of trajectories when cond has one row.
        g_init: Optional start poses replacing the prior draw.
    Returns:
        Final poses, one per trajectory.
    Raises:
        SamplingError: If the model returns a non-finite field.
    """
    if n is not None:
        cond = cond.repeat(n)
    batch = len(cond)
    g = sample_prior(cfg.schedule, rng, batch) if g_init is None else g_init
    times = np.linspace(1.0, cfg.t_min, cfg.steps + 1)
    for step in range(cfg.steps):
        t = float(times[step])
        dt = float(times[step + 1] - times[step])
        score = guided_field(model, g, np.full(batch, t), cond, cfg.cfg_weight, cfg.guidance, "score")
        _check_finite(score, step, t)
        drift_p, drift_q, var_p, var_q = _rates(cfg, t)
        noise = cfg.stochasticity_scale * np.sqrt(abs(dt))
        dx_p = drift_p * score[0] * dt + noise * np.sqrt(var_p) * rng.normal(size=(batch, 3))
        dx_q = drift_q * score[1] * dt + noise * np.sqrt(var_q) * rng.normal(size=(batch, 3))
        g = compose(g, increment_inverse(twist_increment(dx_p, dx_q)))
    if cfg.final_denoise:
        t = cfg.t_min
        score = guided_field(model, g, np.full(batch, t), cond, cfg.cfg_weight, cfg.guidance, "score")
        _check_finite(score, cfg.steps, t)
        drift_p, drift_q, _, _ = _rates(cfg, t)
        g = compose(g, increment_inverse(twist_increment(-drift_p * score[0] * t, -drift_q * score[1] * t)))
    log.debug("Reverse SDE finished: %d trajectories, %d steps", batch, cfg.steps)
    return g
