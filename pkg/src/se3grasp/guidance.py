"""
Palm-axis alignment guidance on the rotational field and classifier-free
guidance mixing of conditional and unconditional fields.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple
import numpy as np
from .lie import Pose, quat_conj, rotate
from .net import ConditionBundle, VectorField
log = logging.getLogger(__name__)
ORDERS = ("before_cfg", "after_cfg")
Field = Tuple[np.ndarray, np.ndarray]
@dataclass(frozen=True)
class GuidanceConfig:
    """
    Alignment guidance settings. The guided body axis of the grasp frame is
    `gripper_axis_index` (0=x, 1=y, 2=z); `lambda_gd_score` overrides the
    weight for the score branch when set.
    """
    e_app: Tuple[float, float, float] = (0.0, 1.0, 0.0)
    theta_thr: float = 0.8
    lambda_gd: float = 1e-3
    lambda_gd_score: Optional[float] = None
    gripper_axis_index: int = 1
    order: str = "before_cfg"
    def __post_init__(self):
        e_app = tuple(float(v) for v in self.e_app)
        if len(e_app) != 3 or abs(np.linalg.norm(e_app) - 1.0) > 1e-6:
            raise ValueError(f"e_app must be a unit 3-vector, got {self.e_app}")
        object.__setattr__(self, "e_app", e_app)
        if not -1.0 <= self.theta_thr <= 1.0:
            raise ValueError(f"theta_thr must lie in [-1, 1], got {self.theta_thr}")
        if self.lambda_gd < 0.0 or (self.lambda_gd_score is not None and self.lambda_gd_score < 0.0):
            raise ValueError("guidance weights must be non-negative")
        if self.gripper_axis_index not in (0, 1, 2):
            raise ValueError(f"gripper_axis_index must be 0, 1 or 2, got {self.gripper_axis_index}")
        if self.order not in ORDERS:
            raise ValueError(f"order must be one of {ORDERS}, got {self.order!r}")
    @property
    def gripper_axis(self) -> np.ndarray:
        return np.eye(3)[self.gripper_axis_index]
    def weight_for(self, mode: str) -> float:
        if mode == "score" and self.lambda_gd_score is not None:
            return self.lambda_gd_score
        return self.lambda_gd
def alignment(q, cfg: GuidanceConfig) -> np.ndarray:
    """c = ⟨R_q a, e_app⟩ for the configured gripper axis a."""
    return np.sum(rotate(q, cfg.gripper_axis) * np.asarray(cfg.e_app), axis=-1)
def guidance_term(q, cfg: GuidanceConfig) -> np.ndarray:
    """
    Body-frame gradient of the alignment, gated to poses with c < θ_thr.
    The derivative of c(q·Exp(s e_i)) at s=0 is e_i · (a × R_qᵀ e_app).
    """
    q = np.asarray(q, dtype=float)
    local_target = rotate(quat_conj(q), np.asarray(cfg.e_app))
    xi = np.cross(np.broadcast_to(cfg.gripper_axis, local_target.shape), local_target)
    gate = alignment(q, cfg) < cfg.theta_thr
    return np.where(gate[..., None], xi, 0.0)
def apply_guidance(field_q, xi, lambda_gd: float) -> np.ndarray:
    return np.asarray(field_q, dtype=float) + lambda_gd * np.asarray(xi, dtype=float)
def cfg_mix(cond_field: Field, uncond_field: Field, w: float) -> Field:
    """uncond + w·(cond − uncond) per channel."""
    return tuple(u + w * (c - u) for c, u in zip(cond_field, uncond_field))
def guided_field(
    model: VectorField,
    g: Pose,
    t: np.ndarray,
    cond: ConditionBundle,
    cfg_weight: float,
    guidance: Optional[GuidanceConfig],
    mode: str,
) -> Field:
    """
    Queries the model and applies alignment guidance and classifier-free guidance.
    With cfg_weight != 1 the conditional and null rows go through one stacked
    model call of 2N rows.
    """
    t = np.broadcast_to(np.asarray(t, dtype=float), (len(cond),))
    if cfg_weight != 1.0:
        both = ConditionBundle.concat([cond.with_null(False), cond.with_null(True)])
        out_p, out_q = model.predict(Pose.stack([g, g]), np.concatenate([t, t]), both)
        n = len(cond)
        field, uncond = (out_p[:n], out_q[:n]), (out_p[n:], out_q[n:])
    else:
        field, uncond = model.predict(g, t, cond.with_null(False)), None
    weight = guidance.weight_for(mode) if guidance is not None else 0.0
    if guidance is not None and guidance.order == "before_cfg":
        field = (field[0], apply_guidance(field[1], guidance_term(g.q, guidance), weight))
    if uncond is not None:
        field = cfg_mix(field, uncond, cfg_weight)
    if guidance is not None and guidance.order == "after_cfg":
        field = (field[0], apply_guidance(field[1], guidance_term(g.q, guidance), weight))
    return field
def alignment_fraction(q, cfg: GuidanceConfig) -> float:
    """Percentage of orientations with c ≥ θ_thr."""
    c = alignment(q, cfg)
    if c.size == 0:
        raise ValueError("no orientations to score")
    return float(100.0 * np.mean(c >= cfg.theta_thr))
