"""
Rotation and rigid-motion primitives on scalar-first unit quaternions.
Every function broadcasts over leading batch axes, so a Pose may hold one
pose (p of shape (3,), q of shape (4,)) or a whole batch of them.
"""
import logging
from dataclasses import dataclass
from typing import Sequence, Tuple
import numpy as np
log = logging.getLogger(__name__)
SMALL_ANGLE = 1e-6
IDENTITY_QUAT = np.array([1.0, 0.0, 0.0, 0.0])
def normalize_quat(q) -> np.ndarray:
    """Returns q scaled to unit norm. Raises ValueError on zero or non-finite input."""
    q = np.asarray(q, dtype=float)
    if q.shape[-1] != 4:
        raise ValueError(f"quaternion must have 4 components, got shape {q.shape}")
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    if not np.all(np.isfinite(norm)) or np.any(norm < 1e-12):
        raise ValueError("quaternion must be finite and non-zero")
    return q / norm
def canonical_quat(q) -> np.ndarray:
    """Picks the double-cover representative with w >= 0."""
    q = np.asarray(q, dtype=float)
    return np.where(q[..., :1] < 0.0, -q, q)
def quat_conj(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.concatenate([q[..., :1], -q[..., 1:]], axis=-1)
def quat_mul(a, b) -> np.ndarray:
    """Hamilton product a ⊗ b, renormalized."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    aw, ax, ay, az = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    bw, bx, by, bz = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    out = np.stack(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ],
        axis=-1,
    )
    return out / np.linalg.norm(out, axis=-1, keepdims=True)
def quat_to_matrix(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rows = [
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)
def matrix_to_quat(rot) -> np.ndarray:
    """Converts rotation matrices to canonical quaternions (Shepperd's branch selection)."""
    m = np.asarray(rot, dtype=float)
    batch = m.shape[:-2]
    m = m.reshape(-1, 3, 3)
    trace = m[:, 0, 0] + m[:, 1, 1] + m[:, 2, 2]
    diag = np.stack([m[:, 0, 0], m[:, 1, 1], m[:, 2, 2]], axis=-1)
    choice = np.argmax(np.concatenate([trace[:, None], diag], axis=-1), axis=-1)
    out = np.empty((m.shape[0], 4))
    for idx in range(m.shape[0]):
        r = m[idx]
        c = choice[idx]
        if c == 0:
            s = 2.0 * np.sqrt(max(1.0 + trace[idx], 1e-300))
            out[idx] = [0.25 * s, (r[2, 1] - r[1, 2]) / s, (r[0, 2] - r[2, 0]) / s, (r[1, 0] - r[0, 1]) / s]
        elif c == 1:
            s = 2.0 * np.sqrt(max(1.0 + r[0, 0] - r[1, 1] - r[2, 2], 1e-300))
            out[idx] = [(r[2, 1] - r[1, 2]) / s, 0.25 * s, (r[0, 1] + r[1, 0]) / s, (r[0, 2] + r[2, 0]) / s]
        elif c == 2:
            s = 2.0 * np.sqrt(max(1.0 + r[1, 1] - r[0, 0] - r[2, 2], 1e-300))
            out[idx] = [(r[0, 2] - r[2, 0]) / s, (r[0, 1] + r[1, 0]) / s, 0.25 * s, (r[1, 2] + r[2, 1]) / s]
        else:
            s = 2.0 * np.sqrt(max(1.0 + r[2, 2] - r[0, 0] - r[1, 1], 1e-300))
            out[idx] = [(r[1, 0] - r[0, 1]) / s, (r[0, 2] + r[2, 0]) / s, (r[1, 2] + r[2, 1]) / s, 0.25 * s]
    return canonical_quat(normalize_quat(out)).reshape(batch + (4,))
def rotate(q, v) -> np.ndarray:
    """Applies the rotation q to vectors v."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    w = q[..., :1]
    u = q[..., 1:]
    t = 2.0 * np.cross(u, v)
    return v + w * t + np.cross(u, t)
def hat(v) -> np.ndarray:
    """Skew-symmetric matrix [v]× such that hat(v) @ x == cross(v, x)."""
    v = np.asarray(v, dtype=float)
    zero = np.zeros(v.shape[:-1])
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    return np.stack(
        [
            np.stack([zero, -z, y], axis=-1),
            np.stack([z, zero, -x], axis=-1),
            np.stack([-y, x, zero], axis=-1),
        ],
        axis=-2,
    )
def _angle(phi: np.ndarray) -> np.ndarray:
    return np.linalg.norm(phi, axis=-1)
def exp_so3(phi) -> np.ndarray:
    """Rotation vector to unit quaternion."""
    phi = np.asarray(phi, dtype=float)
    theta = _angle(phi)
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    half_sinc = np.where(small, 0.5 - theta**2 / 48.0, np.sin(0.5 * safe) / safe)
    w = np.where(small, 1.0 - theta**2 / 8.0, np.cos(0.5 * theta))
    return normalize_quat(np.concatenate([w[..., None], half_sinc[..., None] * phi], axis=-1))
def rotation_angle(q) -> np.ndarray:
    """Angle in [0, π] of the rotation represented by q."""
    q = np.asarray(q, dtype=float)
    return 2.0 * np.arctan2(np.linalg.norm(q[..., 1:], axis=-1), np.abs(q[..., 0]))
def log_so3(q) -> np.ndarray:
    """
    Unit quaternion to rotation vector with norm in [0, π].
    At exactly π the axis is signed so that its first non-zero component is positive.
    """
    q = canonical_quat(normalize_quat(q))
    w = q[..., 0]
    v = q[..., 1:]
    n = np.linalg.norm(v, axis=-1)
    small = n < 0.5 * SMALL_ANGLE
    safe_n = np.where(small, 1.0, n)
    safe_w = np.where(small, w, 1.0)
    scale = np.where(
        small,
        2.0 / safe_w * (1.0 - n**2 / (3.0 * safe_w**2)),
        2.0 * np.arctan2(n, w) / safe_n,
    )
    at_pi = w == 0.0
    if np.any(at_pi):
        nonzero = np.abs(v) > 0.0
        first = np.argmax(nonzero, axis=-1)
        lead = np.take_along_axis(v, first[..., None], axis=-1)[..., 0]
        flip = np.where(at_pi & (lead < 0.0), -1.0, 1.0)
        v = v * flip[..., None]
    return scale[..., None] * v
def left_jacobian(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    theta = _angle(phi)
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    b = np.where(small, 1.0 / 6.0 - theta**2 / 120.0, (safe - np.sin(safe)) / safe**3)
    k = hat(phi)
    return np.eye(3) + a[..., None, None] * k + b[..., None, None] * (k @ k)
def left_jacobian_inverse(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=float)
    theta = _angle(phi)
    small = theta < SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    c = np.where(
        small,
        1.0 / 12.0 + theta**2 / 720.0,
        1.0 / safe**2 - (1.0 + np.cos(safe)) / (2.0 * safe * np.sin(safe)),
    )
    k = hat(phi)
    return np.eye(3) - 0.5 * k + c[..., None, None] * (k @ k)
@dataclass(frozen=True)
class Pose:
    """
    Rigid pose g = (p, q) with p in meters and q a scalar-first unit quaternion.
    Leading axes of p and q are batch axes and must agree.
    """
    p: np.ndarray
    q: np.ndarray
    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = normalize_quat(self.q)
        if p.shape[-1:] != (3,):
            raise ValueError(f"position must have 3 components, got shape {p.shape}")
        if p.shape[:-1] != q.shape[:-1]:
            raise ValueError(f"batch shapes differ: p {p.shape[:-1]} vs q {q.shape[:-1]}")
        if not np.all(np.isfinite(p)):
            raise ValueError("position must be finite")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
    @classmethod
    def identity(cls, n: int = None) -> "Pose":
        if n is None:
            return cls(np.zeros(3), IDENTITY_QUAT.copy())
        return cls(np.zeros((n, 3)), np.tile(IDENTITY_QUAT, (n, 1)))
    @classmethod
    def from_rows(cls, rows) -> "Pose":
        """Builds a pose batch from rows of `px py pz qw qx qy qz`."""
        rows = np.asarray(rows, dtype=float)
        if rows.shape[-1] != 7:
            raise ValueError(f"pose rows must have 7 columns, got shape {rows.shape}")
        return cls(rows[..., :3], rows[..., 3:])
    @staticmethod
    def stack(poses: Sequence["Pose"]) -> "Pose":
        if not poses:
            raise ValueError("cannot stack an empty pose sequence")
        return Pose(
            np.concatenate([np.atleast_2d(g.p) for g in poses]),
            np.concatenate([np.atleast_2d(g.q) for g in poses]),
        )
    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.p.shape[:-1]
    def as_batch(self) -> "Pose":
        """Returns a single pose as a batch of one; batches pass through unchanged."""
        return Pose.stack([self]) if self.p.ndim == 1 else self
    def __len__(self) -> int:
        if self.p.ndim == 1:
            raise TypeError("single Pose has no length")
        return self.p.shape[0]
    def __getitem__(self, index) -> "Pose":
        return Pose(self.p[index], self.q[index])
    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.q)
    def to_rows(self) -> np.ndarray:
        """Serializes to `px py pz qw qx qy qz` with w >= 0."""
        return np.concatenate([self.p, canonical_quat(self.q)], axis=-1)
    def to_matrix(self) -> np.ndarray:
        """4×4 homogeneous transform(s)."""
        out = np.zeros(self.batch_shape + (4, 4))
        out[..., :3, :3] = self.rotation_matrix()
        out[..., :3, 3] = self.p
        out[..., 3, 3] = 1.0
        return out
def exp_se3(rho, phi) -> Pose:
    """Twist (rho, phi) to pose: p = J(phi) rho, q = Exp(phi)."""
    rho = np.asarray(rho, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return Pose(np.einsum("...ij,...j->...i", left_jacobian(phi), rho), exp_so3(phi))
def log_se3(g: Pose) -> Tuple[np.ndarray, np.ndarray]:
    phi = log_so3(g.q)
    return np.einsum("...ij,...j->...i", left_jacobian_inverse(phi), g.p), phi
def compose(g: Pose, dg: Pose) -> Pose:
    """
    Body-frame increment: p' = p + R_q J(Log Δq) Δp, q' = q ⊗ Δq.
    Equivalent to g · Exp_SE3(Δp, Log Δq).
    """
    phi = log_so3(dg.q)
    local = np.einsum("...ij,...j->...i", left_jacobian(phi), dg.p)
    return Pose(g.p + rotate(g.q, local), quat_mul(g.q, dg.q))
def increment_inverse(dg: Pose) -> Pose:
    """Increment that undoes dg under compose: compose(compose(g, dg), increment_inverse(dg)) == g."""
    return Pose(-dg.p, quat_conj(dg.q))
def twist_increment(dx_p, dx_q) -> Pose:
    """Increment (Δp, Exp Δφ) built from twist coordinates."""
    return Pose(np.asarray(dx_p, dtype=float), exp_so3(dx_q))
def pose_mul(a: Pose, b: Pose) -> Pose:
    """Rigid product a · b (no Jacobian): p = p_a + R_a p_b, q = q_a ⊗ q_b."""
    return Pose(a.p + rotate(a.q, b.p), quat_mul(a.q, b.q))
def pose_inverse(g: Pose) -> Pose:
    q_inv = quat_conj(g.q)
    return Pose(-rotate(q_inv, g.p), q_inv)
def apply_global(g_wrist: Pose, world: Pose) -> Pose:
    """Re-expresses wrist-frame poses in the world frame: world · g_wrist."""
    return pose_mul(world, g_wrist)
def geodesic_dist(a: Pose, b: Pose, lambda_rot: float = 0.1) -> np.ndarray:
    """‖p_a − p_b‖ + λ_rot · angle(q_a⁻¹ ⊗ q_b), broadcast over batch axes."""
    if not lambda_rot > 0.0:
        raise ValueError(f"lambda_rot must be positive, got {lambda_rot}")
    rel = quat_mul(quat_conj(a.q), b.q)
    return np.linalg.norm(a.p - b.p, axis=-1) + lambda_rot * rotation_angle(rel)
