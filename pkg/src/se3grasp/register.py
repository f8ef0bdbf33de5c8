"""
Z-only ICP: translation of a source cloud constrained to a camera ray,
refined against a target cloud by alternating nearest-neighbour
correspondence and a closed-form 1-D update.
"""
import csv
import io
import logging
from dataclasses import dataclass, field
from typing import List
import numpy as np
from scipy.spatial import cKDTree
from .errors import RegistrationError
log = logging.getLogger(__name__)
@dataclass(frozen=True)
class IcpConfig:
    max_offset: float = 0.1
    iters: int = 20
    tol: float = 1e-5
    reject_dist: float = 0.05
    def __post_init__(self):
        if not self.max_offset > 0.0 or not self.reject_dist > 0.0 or self.tol < 0.0:
            raise ValueError("max_offset and reject_dist must be positive, tol non-negative")
        if self.iters < 1:
            raise ValueError(f"iters must be >= 1, got {self.iters}")
@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[1] != 3 or len(points) == 0:
            raise RegistrationError(f"point cloud must be a non-empty N×3 array, got shape {points.shape}")
        if not np.all(np.isfinite(points)):
            raise RegistrationError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", points)
    def __len__(self) -> int:
        return len(self.points)
    @classmethod
    def from_csv(cls, text: str) -> "PointCloud":
        """Reads `x,y,z` rows; a non-numeric first row is taken as a header."""
        rows = [row for row in csv.reader(io.StringIO(text)) if row]
        try:
            float(rows[0][0])
        except (ValueError, IndexError):
            rows = rows[1:]
        try:
            return cls(np.array([[float(v) for v in row[:3]] for row in rows]))
        except ValueError as e:
            raise RegistrationError(f"malformed point cloud CSV: {e}") from e
@dataclass
class IcpResult:
    offset: float
    rms_before: float
    rms_after: float
    flagged: bool
    iterations: int = 0
    objective: List[float] = field(default_factory=list)
    def to_dict(self) -> dict:
        return {
            "offset": self.offset,
            "rms_before": self.rms_before,
            "rms_after": self.rms_after,
            "flagged": self.flagged,
            "iterations": self.iterations,
        }
def _unit(ray_dir) -> np.ndarray:
    ray = np.asarray(ray_dir, dtype=float)
    norm = np.linalg.norm(ray)
    if ray.shape != (3,) or abs(norm - 1.0) > 1e-6:
        raise RegistrationError(f"ray direction must be a unit 3-vector, got {ray_dir}")
    return ray / norm
def _truncated(dist: np.ndarray, reject: float) -> float:
    return float(np.mean(np.minimum(dist, reject) ** 2))
def z_only_icp(source: PointCloud, target: PointCloud, ray_dir, cfg: IcpConfig = IcpConfig()) -> IcpResult:
    """
    Finds the offset s along ray_dir minimizing the mean squared nearest-neighbour
    distance of source + s·ray_dir to the target.
    Args:
        source: Cloud to move.
        target: Fixed cloud.
        ray_dir: Unit camera ray.
        cfg: Offset bound, iteration limit, tolerance and rejection distance.
    Returns:
        IcpResult; flagged with zero offset when no correspondence survives rejection.
    Raises:
        RegistrationError: If ray_dir is not a unit vector.
    """
    ray = _unit(ray_dir)
    tree = cKDTree(target.points)
    dist, _ = tree.query(source.points)
    rms_before = float(np.sqrt(np.mean(dist**2)))
    offset = 0.0
    objective = [_truncated(dist, cfg.reject_dist)]
    iterations = 0
    for iterations in range(1, cfg.iters + 1):
        moved = source.points + offset * ray
        dist, idx = tree.query(moved)
        inliers = dist <= cfg.reject_dist
        if not np.any(inliers):
            if iterations == 1:
                log.warning("No correspondences within %.3f m; returning no correction", cfg.reject_dist)
                return IcpResult(0.0, rms_before, rms_before, True, 0, objective)
            break
        residual = target.points[idx[inliers]] - source.points[inliers]
        proposal = float(np.clip(np.mean(residual @ ray), -cfg.max_offset, cfg.max_offset))
        trial = _truncated(tree.query(source.points + proposal * ray)[0], cfg.reject_dist)
        if trial > objective[-1]:
            log.debug("ICP step %d would raise the objective; stopping", iterations)
            break
        step = abs(proposal - offset)
        offset = proposal
        objective.append(trial)
        log.debug("ICP iteration %d: offset=%.6f objective=%.3e", iterations, offset, trial)
        if step < cfg.tol:
            break
    if abs(offset) >= cfg.max_offset:
        log.warning("ICP offset clipped at %.3f m", cfg.max_offset)
    final, _ = tree.query(source.points + offset * ray)
    return IcpResult(offset, rms_before, float(np.sqrt(np.mean(final**2))), False, iterations, objective)
