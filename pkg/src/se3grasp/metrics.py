"""
Evaluation metrics: earth mover's distance between grasp sets under the
SE(3) geodesic cost (exact assignment), taxonomy accuracy and contact
accuracy.
"""
import logging
from dataclasses import dataclass
from typing import Tuple
import numpy as np
from .lie import Pose, geodesic_dist
log = logging.getLogger(__name__)
SOURCES = ("generated", "ground-truth")
DEFAULT_LAMBDA_ROT = 0.1
@dataclass(frozen=True)
class GraspSet:
    poses: Pose
    source: str = "generated"
    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {self.source!r}")
        if self.poses.p.ndim != 2 or len(self.poses) == 0:
            raise ValueError("grasp set must hold a non-empty batch of poses")
    def __len__(self) -> int:
        return len(self.poses)
    def subsample(self, size: int, rng: np.random.Generator) -> "GraspSet":
        if size >= len(self):
            return self
        index = np.sort(rng.choice(len(self), size=size, replace=False))
        return GraspSet(self.poses[index], self.source)
def cost_matrix(a: GraspSet, b: GraspSet, lambda_rot: float = DEFAULT_LAMBDA_ROT) -> np.ndarray:
    """(i, j) = geodesic_dist(a_i, b_j)."""
    pa = Pose(a.poses.p[:, None, :], a.poses.q[:, None, :])
    pb = Pose(b.poses.p[None, :, :], b.poses.q[None, :, :])
    return geodesic_dist(pa, pb, lambda_rot)
def solve_assignment(cost) -> Tuple[np.ndarray, float]:
    """
    Minimum-cost assignment of every row to a distinct column by shortest
    augmenting paths with dual potentials, O(n²m).
    Args:
        cost: (n, m) matrix with n <= m.
    Returns:
        Tuple of (column index per row, total cost).
    Raises:
        ValueError: If the matrix has more rows than columns or non-finite entries.
    """
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    if n > m:
        raise ValueError(f"assignment needs rows <= columns, got {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise ValueError("cost matrix must be finite")
    # 1-based arrays; column 0 is the virtual source of each augmentation.
    u = np.zeros(n + 1)
    v = np.zeros(m + 1)
    owner = np.zeros(m + 1, dtype=int)
    way = np.zeros(m + 1, dtype=int)
    for row in range(1, n + 1):
        owner[0] = row
        col = 0
        minv = np.full(m + 1, np.inf)
        used = np.zeros(m + 1, dtype=bool)
        while True:
            used[col] = True
            i0 = owner[col]
            free = ~used[1:]
            reduced = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (reduced < minv[1:])
            minv[1:] = np.where(better, reduced, minv[1:])
            way[1:] = np.where(better, col, way[1:])
            candidates = np.where(free, minv[1:], np.inf)
            nxt = int(np.argmin(candidates)) + 1
            delta = candidates[nxt - 1]
            u[owner[used]] += delta
            v[used] -= delta
            minv[1:] = np.where(free, minv[1:] - delta, minv[1:])
            col = nxt
            if owner[col] == 0:
                break
        while col:
            prev = way[col]
            owner[col] = owner[prev]
            col = prev
    assignment = np.empty(n, dtype=int)
    for col in range(1, m + 1):
        if owner[col]:
            assignment[owner[col] - 1] = col - 1
    return assignment, float(cost[np.arange(n), assignment].sum())
def assignment_emd(
    a: GraspSet, b: GraspSet, lambda_rot: float = DEFAULT_LAMBDA_ROT, seed: int = 0
) -> float:
    """Mean cost of the optimal perfect matching; larger sets are subsampled with a seeded rng."""
    size = min(len(a), len(b))
    rng = np.random.default_rng(seed)
    a = a.subsample(size, rng)
    b = b.subsample(size, rng)
    if len(a) != len(b):
        raise RuntimeError(f"grasp sets differ in size after subsampling: {len(a)} vs {len(b)}")
    _, total = solve_assignment(cost_matrix(a, b, lambda_rot))
    return total / size
def taxonomy_accuracy(pred_logits, labels) -> float:
    """Top-1 match rate in percent."""
    pred_logits = np.atleast_2d(np.asarray(pred_logits, dtype=float))
    labels = np.asarray(labels, dtype=int).reshape(-1)
    if labels.size == 0:
        raise ValueError("taxonomy accuracy needs at least one prediction")
    if pred_logits.shape[0] != labels.size:
        raise ValueError(f"{pred_logits.shape[0]} predictions for {labels.size} labels")
    return float(100.0 * np.mean(np.argmax(pred_logits, axis=-1) == labels))
def contact_accuracy(pred_probs, targets, threshold: float = 0.5) -> float:
    """Mean per-region binary match rate in percent."""
    pred_probs = np.asarray(pred_probs, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if pred_probs.size == 0:
        raise ValueError("contact accuracy needs at least one prediction")
    if pred_probs.shape != targets.shape:
        raise ValueError(f"prediction shape {pred_probs.shape} != target shape {targets.shape}")
    return float(100.0 * np.mean((pred_probs >= threshold) == (targets >= threshold)))
