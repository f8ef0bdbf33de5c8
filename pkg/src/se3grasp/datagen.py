"""
Synthetic grasp supervision. Antipodal parallel-jaw grasps are sampled on
primitive meshes, filtered against a 16-region hand proxy placed on the
object, and assembled into conditioned scenes written as JSON lines.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple
import numpy as np
from .errors import ConfigError, DatasetError
from .lie import Pose, matrix_to_quat, pose_inverse, pose_mul, quat_to_matrix, rotate
from .net import NUM_CONTACT_REGIONS, NUM_TAXONOMY_CLASSES, ConditionBundle
from .schedule import stream_rng
log = logging.getLogger(__name__)
SCHEMA_VERSION = 1
MESH_KINDS = ("box", "cylinder", "sphere")
BACKENDS = ("mesh", "analytic")
DATAGEN_STREAM = 1
DESCRIPTOR_DIM = 19
FEATURE_DIM = NUM_TAXONOMY_CLASSES + DESCRIPTOR_DIM
_RAY_CHUNK = 256
_SURFACE_OFFSET = 1e-7
THUMB_REGIONS = (1, 2, 3)
FINGER_REGIONS = tuple(range(4, NUM_CONTACT_REGIONS))
@dataclass(frozen=True)
class GraspClass:
    """A taxonomy class and the hand-proxy layout that realizes it."""
    name: str
    taxonomy_index: int
    thumb_region: int
    finger_region: int
    curl: float
GRASP_CLASSES = (
    GraspClass("large_diameter", 0, 2, 9, 0.6),
    GraspClass("small_diameter", 1, 2, 8, 0.9),
    GraspClass("medium_wrap", 2, 2, 5, 0.75),
    GraspClass("palmar_pinch", 8, 1, 4, 0.2),
    GraspClass("power_sphere", 10, 3, 11, 0.5),
    GraspClass("precision_sphere", 12, 1, 7, 0.4),
    GraspClass("tripod", 13, 1, 10, 0.35),
    GraspClass("lateral", 15, 1, 6, 0.8),
)
@dataclass(frozen=True)
class DatagenConfig:
    scenes: int = 64
    classes: int = 8
    mesh_mix: Tuple[str, ...] = MESH_KINDS
    mu: float = 0.5
    max_width: float = 0.085
    region_radius: float = 0.015
    min_grasps: int = 32
    max_grasps: int = 64
    ray_budget: int = 16384
    rays_per_round: int = 2048
    cone_jitter: float = 0.0
    approach_noise: float = 0.15
    feature_noise: float = 0.01
    def __post_init__(self):
        object.__setattr__(self, "mesh_mix", tuple(self.mesh_mix))
        errors = []
        if self.scenes < 1:
            errors.append(f"datagen.scenes must be >= 1, got {self.scenes}")
        if not 1 <= self.classes <= len(GRASP_CLASSES):
            errors.append(f"datagen.classes must lie in [1, {len(GRASP_CLASSES)}], got {self.classes}")
        if not self.mesh_mix or any(kind not in MESH_KINDS for kind in self.mesh_mix):
            errors.append(f"datagen.mesh_mix entries must be among {MESH_KINDS}, got {list(self.mesh_mix)}")
        for name in ("mu", "max_width", "region_radius"):
            if not getattr(self, name) > 0.0:
                errors.append(f"datagen.{name} must be positive, got {getattr(self, name)}")
        if not 1 <= self.min_grasps <= self.max_grasps:
            errors.append(f"datagen.min_grasps must lie in [1, max_grasps], got {self.min_grasps}")
        if self.rays_per_round < 1 or self.ray_budget < self.rays_per_round:
            errors.append("datagen.ray_budget must be >= rays_per_round >= 1")
        if not 0.0 <= self.cone_jitter < 1.0:
            errors.append(f"datagen.cone_jitter must lie in [0, 1), got {self.cone_jitter}")
        if self.approach_noise < 0.0 or self.feature_noise < 0.0:
            errors.append("datagen noise levels must be non-negative")
        if errors:
            raise ConfigError(errors)
# --- primitive meshes ---
@dataclass(frozen=True)
class PrimitiveMesh:
    """Closed convex triangle mesh centred at the origin with outward-facing triangles."""
    kind: str
    dimensions: Tuple[float, ...]
    vertices: np.ndarray
    faces: np.ndarray
    @property
    def triangles(self) -> np.ndarray:
        return self.vertices[self.faces]
    @property
    def normals(self) -> np.ndarray:
        tri = self.triangles
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        return n / np.linalg.norm(n, axis=-1, keepdims=True)
    @property
    def areas(self) -> np.ndarray:
        tri = self.triangles
        return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=-1)
def _orient_outward(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    faces = np.array(faces, dtype=int)
    tri = vertices[faces]
    n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    inward = np.sum(n * tri.mean(axis=1), axis=-1) < 0.0
    faces[inward] = faces[inward][:, [0, 2, 1]]
    return faces
def make_box(sx: float, sy: float, sz: float) -> PrimitiveMesh:
    half = 0.5 * np.array([sx, sy, sz])
    corners = np.array([[i, j, k] for i in (-1, 1) for j in (-1, 1) for k in (-1, 1)], dtype=float) * half
    quads = [(0, 1, 3, 2), (4, 6, 7, 5), (0, 4, 5, 1), (2, 3, 7, 6), (0, 2, 6, 4), (1, 5, 7, 3)]
    faces = [tri for a, b, c, d in quads for tri in ((a, b, c), (a, c, d))]
    return PrimitiveMesh("box", (sx, sy, sz), corners, _orient_outward(corners, faces))
def make_cylinder(radius: float, height: float, segments: int = 48) -> PrimitiveMesh:
    """Cylinder along z. An even segment count keeps opposite side facets parallel."""
    if segments < 4 or segments % 2:
        raise ValueError(f"segments must be even and >= 4, got {segments}")
    angles = 2.0 * np.pi * np.arange(segments) / segments
    ring = np.stack([radius * np.cos(angles), radius * np.sin(angles)], axis=-1)
    bottom = np.column_stack([ring, np.full(segments, -0.5 * height)])
    top = np.column_stack([ring, np.full(segments, 0.5 * height)])
    vertices = np.vstack([bottom, top, [[0.0, 0.0, -0.5 * height], [0.0, 0.0, 0.5 * height]]])
    faces = []
    for i in range(segments):
        j = (i + 1) % segments
        faces += [(i, j, segments + j), (i, segments + j, segments + i)]
        faces += [(2 * segments, j, i), (2 * segments + 1, segments + i, segments + j)]
    return PrimitiveMesh("cylinder", (radius, height), vertices, _orient_outward(vertices, faces))
def make_sphere(radius: float, subdivisions: int = 2) -> PrimitiveMesh:
    """Icosphere of the given radius."""
    phi = (1.0 + 5.0**0.5) / 2.0
    verts = [(-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0), (0, -1, phi), (0, 1, phi),
             (0, -1, -phi), (0, 1, -phi), (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4), (11, 10, 2),
             (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9), (4, 9, 5),
             (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    points = [np.array(v, dtype=float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdivisions):
        cache: Dict[Tuple[int, int], int] = {}
        def midpoint(a: int, b: int) -> int:
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = points[a] + points[b]
                points.append(m / np.linalg.norm(m))
                cache[key] = len(points) - 1
            return cache[key]
        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = refined
    vertices = radius * np.array(points)
    return PrimitiveMesh("sphere", (radius,), vertices, _orient_outward(vertices, faces))
def make_mesh(kind: str, dimensions: Sequence[float]) -> PrimitiveMesh:
    dims = tuple(float(d) for d in dimensions)
    if any(not d > 0.0 for d in dims):
        raise ValueError(f"mesh dimensions must be positive, got {dims}")
    if kind == "box" and len(dims) == 3:
        return make_box(*dims)
    if kind == "cylinder" and len(dims) == 2:
        return make_cylinder(*dims)
    if kind == "sphere" and len(dims) == 1:
        return make_sphere(dims[0])
    raise ValueError(f"unsupported mesh {kind!r} with dimensions {dims}")
def is_watertight(mesh: PrimitiveMesh) -> bool:
    """Every directed edge appears once and its reverse appears once."""
    f = mesh.faces
    directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    forward = {tuple(e) for e in directed.tolist()}
    if len(forward) != len(directed):
        return False
    return all((b, a) in forward for a, b in forward)
# --- ray casting and surface sampling ---
def raycast_mesh(mesh: PrimitiveMesh, origins: np.ndarray, dirs: np.ndarray, t_min: float = 1e-9) -> Tuple[np.ndarray, np.ndarray]:
    """
    First intersection of each ray with the mesh (Möller–Trumbore).
    Returns:
        Tuple of (distance, outward normal at the hit); distance is inf on a miss.
    """
    tri = mesh.triangles
    v0 = tri[:, 0]
    e1 = tri[:, 1] - v0
    e2 = tri[:, 2] - v0
    normals = mesh.normals
    dist = np.full(len(origins), np.inf)
    hit_normal = np.zeros((len(origins), 3))
    for start in range(0, len(origins), _RAY_CHUNK):
        o = origins[start:start + _RAY_CHUNK, None, :]
        d = dirs[start:start + _RAY_CHUNK, None, :]
        pvec = np.cross(d, e2[None])
        det = np.sum(e1[None] * pvec, axis=-1)
        ok = np.abs(det) > 1e-15
        inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
        tvec = o - v0[None]
        u = np.sum(tvec * pvec, axis=-1) * inv
        qvec = np.cross(tvec, e1[None])
        v = np.sum(d * qvec, axis=-1) * inv
        t = np.sum(e2[None] * qvec, axis=-1) * inv
        valid = ok & (u >= -1e-12) & (v >= -1e-12) & (u + v <= 1.0 + 1e-12) & (t > t_min)
        t = np.where(valid, t, np.inf)
        best = np.argmin(t, axis=-1)
        rows = np.arange(len(best))
        dist[start:start + _RAY_CHUNK] = t[rows, best]
        hit_normal[start:start + _RAY_CHUNK] = normals[best]
    return dist, hit_normal
def raycast_analytic(mesh: PrimitiveMesh, origins: np.ndarray, dirs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Exit distance and outward normal for rays starting inside the exact primitive."""
    o = np.asarray(origins, dtype=float)
    d = np.asarray(dirs, dtype=float)
    if mesh.kind == "sphere":
        b = np.sum(o * d, axis=-1)
        c = np.sum(o * o, axis=-1) - mesh.dimensions[0] ** 2
        t = -b + np.sqrt(np.maximum(b * b - c, 0.0))
        hit = o + t[:, None] * d
        return t, hit / np.linalg.norm(hit, axis=-1, keepdims=True)
    if mesh.kind == "box":
        half = 0.5 * np.asarray(mesh.dimensions)
        safe = np.where(np.abs(d) > 1e-15, d, 1e-15)
        exits = (np.sign(safe) * half - o) / safe
        axis = np.argmin(exits, axis=-1)
        t = exits[np.arange(len(o)), axis]
        normal = np.zeros_like(o)
        normal[np.arange(len(o)), axis] = np.sign(safe[np.arange(len(o)), axis])
        return t, normal
    if mesh.kind == "cylinder":
        radius, height = mesh.dimensions
        a = d[:, 0] ** 2 + d[:, 1] ** 2
        b = o[:, 0] * d[:, 0] + o[:, 1] * d[:, 1]
        c = o[:, 0] ** 2 + o[:, 1] ** 2 - radius**2
        safe_a = np.where(a > 1e-15, a, 1.0)
        t_side = np.where(a > 1e-15, (-b + np.sqrt(np.maximum(b * b - a * c, 0.0))) / safe_a, np.inf)
        safe_z = np.where(np.abs(d[:, 2]) > 1e-15, d[:, 2], 1e-15)
        t_cap = (np.sign(safe_z) * 0.5 * height - o[:, 2]) / safe_z
        side = t_side <= t_cap
        t = np.where(side, t_side, t_cap)
        hit = o + t[:, None] * d
        radial = np.column_stack([hit[:, 0], hit[:, 1], np.zeros(len(o))])
        radial /= np.maximum(np.linalg.norm(radial, axis=-1, keepdims=True), 1e-300)
        cap = np.column_stack([np.zeros(len(o)), np.zeros(len(o)), np.sign(safe_z)])
        return t, np.where(side[:, None], radial, cap)
    raise ValueError(f"no analytic intersector for {mesh.kind!r}")
def sample_surface(mesh: PrimitiveMesh, rng: np.random.Generator, n: int, backend: str = "mesh") -> Tuple[np.ndarray, np.ndarray]:
    """Area-uniform surface points with outward normals."""
    if backend == "mesh":
        areas = mesh.areas
        face = rng.choice(len(areas), size=n, p=areas / areas.sum())
        r1 = np.sqrt(rng.random(n))
        r2 = rng.random(n)
        tri = mesh.triangles[face]
        points = (1 - r1)[:, None] * tri[:, 0] + (r1 * (1 - r2))[:, None] * tri[:, 1] + (r1 * r2)[:, None] * tri[:, 2]
        return points, mesh.normals[face]
    if backend != "analytic":
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    if mesh.kind == "sphere":
        normal = rng.normal(size=(n, 3))
        normal /= np.linalg.norm(normal, axis=-1, keepdims=True)
        return mesh.dimensions[0] * normal, normal
    if mesh.kind == "box":
        size = np.asarray(mesh.dimensions)
        face_area = np.array([size[1] * size[2], size[0] * size[2], size[0] * size[1]])
        axis = rng.choice(3, size=n, p=face_area / face_area.sum())
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        points = (rng.random((n, 3)) - 0.5) * size
        rows = np.arange(n)
        points[rows, axis] = 0.5 * sign * size[axis]
        normal = np.zeros((n, 3))
        normal[rows, axis] = sign
        return points, normal
    radius, height = mesh.dimensions
    side_area = 2 * np.pi * radius * height
    cap_area = np.pi * radius**2
    on_side = rng.random(n) < side_area / (side_area + 2 * cap_area)
    theta = 2 * np.pi * rng.random(n)
    radial = np.column_stack([np.cos(theta), np.sin(theta), np.zeros(n)])
    rho = radius * np.sqrt(rng.random(n))
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    side_pts = np.column_stack([radius * radial[:, :2], (rng.random(n) - 0.5) * height])
    cap_pts = np.column_stack([rho[:, None] * radial[:, :2], 0.5 * height * sign])
    cap_normal = np.column_stack([np.zeros(n), np.zeros(n), sign])
    return np.where(on_side[:, None], side_pts, cap_pts), np.where(on_side[:, None], radial, cap_normal)
# --- antipodal sampling ---
@dataclass(frozen=True)
class AntipodalCandidates:
    """Accepted contact pairs; contacts[:, 0] is where the closing axis starts."""
    contacts: np.ndarray
    normals: np.ndarray
    widths: np.ndarray
    attempts: int
    def __len__(self) -> int:
        return len(self.widths)
    @property
    def yield_rate(self) -> float:
        return len(self) / self.attempts if self.attempts else 0.0
    def take(self, index) -> "AntipodalCandidates":
        return AntipodalCandidates(self.contacts[index], self.normals[index], self.widths[index], self.attempts)
def friction_ok(normals: np.ndarray, axis: np.ndarray, mu: float, tol: float = 0.0) -> np.ndarray:
    """Both outward normals within atan(μ) of the closing line (−n1 and +n2 along the axis)."""
    cos_limit = np.cos(np.arctan(mu))
    cos1 = -np.sum(normals[:, 0] * axis, axis=-1)
    cos2 = np.sum(normals[:, 1] * axis, axis=-1)
    return (cos1 >= cos_limit - tol) & (cos2 >= cos_limit - tol)
def _jitter(dirs: np.ndarray, half_angle: float, rng: np.random.Generator) -> np.ndarray:
    if half_angle <= 0.0:
        return dirs
    perp = np.cross(dirs, rng.normal(size=dirs.shape))
    perp /= np.linalg.norm(perp, axis=-1, keepdims=True)
    angle = half_angle * np.sqrt(rng.random(len(dirs)))
    return np.cos(angle)[:, None] * dirs + np.sin(angle)[:, None] * perp
def find_antipodal(
    mesh: PrimitiveMesh,
    mu: float,
    max_width: float,
    rng: np.random.Generator,
    attempts: int,
    backend: str = "mesh",
    cone_jitter: float = 0.0,
) -> AntipodalCandidates:
    """Casts `attempts` inward rays from surface samples and keeps force-closure pairs."""
    if not mu > 0.0:
        raise ValueError(f"friction coefficient must be positive, got {mu}")
    points, normals = sample_surface(mesh, rng, attempts, backend)
    dirs = _jitter(-normals, cone_jitter * np.arctan(mu), rng)
    origins = points + _SURFACE_OFFSET * dirs
    cast = raycast_mesh if backend == "mesh" else raycast_analytic
    dist, far_normals = cast(mesh, origins, dirs)
    hit = np.isfinite(dist)
    far = origins + np.where(hit, dist, 0.0)[:, None] * dirs
    contacts = np.stack([points, far], axis=1)
    pair_normals = np.stack([normals, far_normals], axis=1)
    span = far - points
    widths = np.linalg.norm(span, axis=-1)
    axis = span / np.maximum(widths, 1e-300)[:, None]
    keep = hit & (widths > 1e-6) & (widths <= max_width) & friction_ok(pair_normals, axis, mu)
    return AntipodalCandidates(contacts[keep], pair_normals[keep], widths[keep], attempts)
def grasp_frames(
    candidates: AntipodalCandidates,
    rng: np.random.Generator,
    approach_hint: Optional[np.ndarray] = None,
    centroid: Optional[np.ndarray] = None,
) -> Pose:
    """
    Jaw frames for contact pairs: x along the closing line, y the approach
    axis (the hint projected off x, else a random direction pointing away
    from the centroid), origin at the contact midpoint.
    """
    c1 = candidates.contacts[:, 0]
    c2 = candidates.contacts[:, 1]
    x = (c2 - c1) / candidates.widths[:, None]
    mid = 0.5 * (c1 + c2)
    n = len(x)
    if approach_hint is None:
        y = rng.normal(size=(n, 3))
    else:
        y = np.broadcast_to(np.asarray(approach_hint, dtype=float), (n, 3)).copy()
    y -= np.sum(y * x, axis=-1, keepdims=True) * x
    norm = np.linalg.norm(y, axis=-1)
    degenerate = norm < 1e-6
    if np.any(degenerate):
        fallback = np.cross(x[degenerate], rng.normal(size=(int(degenerate.sum()), 3)))
        y[degenerate] = fallback
        norm = np.linalg.norm(y, axis=-1)
    y /= norm[:, None]
    if approach_hint is None:
        outward = mid - (np.zeros(3) if centroid is None else np.asarray(centroid))
        y *= np.where(np.sum(y * outward, axis=-1) < 0.0, -1.0, 1.0)[:, None]
    z = np.cross(x, y)
    return Pose(mid, matrix_to_quat(np.stack([x, y, z], axis=-1)))
def sample_antipodal(
    mesh: PrimitiveMesh,
    mu: float,
    max_width: float,
    rng: np.random.Generator,
    attempts: int = 1024,
    backend: str = "mesh",
    cone_jitter: float = 0.0,
    approach_hint: Optional[np.ndarray] = None,
) -> Tuple[Pose, AntipodalCandidates]:
    """Antipodal grasps on the mesh; the candidates report the achieved yield."""
    candidates = find_antipodal(mesh, mu, max_width, rng, attempts, backend, cone_jitter)
    if len(candidates) == 0:
        log.debug("No antipodal grasp on %s after %d rays", mesh.kind, attempts)
        return Pose(np.zeros((0, 3)), np.zeros((0, 4)) + [1.0, 0.0, 0.0, 0.0]), candidates
    return grasp_frames(candidates, rng, approach_hint), candidates
# --- hand proxy ---
@dataclass(frozen=True)
class HandProxy:
    """16 contact-region centres in the wrist frame and the wrist pose in the object frame."""
    region_centers: np.ndarray
    pose: Pose
    region_radius: float = 0.015
    def __post_init__(self):
        centers = np.asarray(self.region_centers, dtype=float)
        if centers.shape != (NUM_CONTACT_REGIONS, 3):
            raise ValueError(f"hand proxy needs {NUM_CONTACT_REGIONS} region centres, got {centers.shape}")
        gaps = np.linalg.norm(centers[:, None] - centers[None], axis=-1) + np.eye(NUM_CONTACT_REGIONS)
        if np.min(gaps) < 1e-9:
            raise ValueError("hand proxy region centres must be distinct")
        if not self.region_radius > 0.0:
            raise ValueError(f"region_radius must be positive, got {self.region_radius}")
        object.__setattr__(self, "region_centers", centers)
@dataclass(frozen=True)
class RegionMatch:
    accepted: np.ndarray
    regions: np.ndarray
def _chain(base: np.ndarray, direction0: np.ndarray, bend_dir: np.ndarray, lengths: Sequence[float], bend: float) -> List[np.ndarray]:
    points = []
    joint = base
    for k, length in enumerate(lengths):
        theta = (k + 1) * bend
        d = np.cos(theta) * direction0 + np.sin(theta) * bend_dir
        points.append(joint + 0.5 * length * d)
        joint = joint + length * d
    return points[::-1]
def hand_layout(curl: float) -> np.ndarray:
    """
    Canonical region centres in the wrist frame: fingers extend along +z and
    curl toward −y; the thumb sits on +x. Regions: 0 palm, then (distal,
    middle, proximal) for thumb 1-3, index 4-6, middle 7-9, ring 10-12, little 13-15.
    """
    bend = curl * np.pi / 2.4
    centers = [np.array([0.0, -0.015, 0.05])]
    thumb_dir = np.array([0.55, -0.35, 0.75]) / np.linalg.norm([0.55, -0.35, 0.75])
    thumb_bend = np.array([-0.7, -0.7, 0.0]) / np.sqrt(0.98)
    centers += _chain(np.array([0.03, -0.02, 0.02]), thumb_dir, thumb_bend, (0.04, 0.032, 0.026), 0.8 * bend)
    for x_base, scale in ((0.03, 1.0), (0.01, 1.05), (-0.01, 1.0), (-0.03, 0.8)):
        lengths = tuple(scale * v for v in (0.045, 0.028, 0.022))
        centers += _chain(np.array([x_base, 0.0, 0.09]), np.array([0.0, 0.0, 1.0]), np.array([0.0, -1.0, 0.0]), lengths, bend)
    return np.array(centers)
def _frame(primary: np.ndarray, secondary: np.ndarray) -> np.ndarray:
    secondary = secondary - np.dot(secondary, primary) * primary
    secondary /= np.linalg.norm(secondary)
    return np.column_stack([primary, secondary, np.cross(primary, secondary)])
def place_hand(
    grasp_class: GraspClass,
    contacts: np.ndarray,
    rng: np.random.Generator,
    region_radius: float,
    centroid: Optional[np.ndarray] = None,
) -> HandProxy:
    """
    Poses the hand proxy so that the class's thumb and finger regions land on
    the two anchor contacts, with the back of the hand (+y) facing away from
    the object.
    """
    centers = hand_layout(grasp_class.curl)
    thumb = centers[grasp_class.thumb_region]
    finger = centers[grasp_class.finger_region]
    span = finger - thumb
    u_can = span / np.linalg.norm(span)
    width = float(np.linalg.norm(contacts[1] - contacts[0]))
    shift = 0.5 * (width - np.linalg.norm(span)) * u_can
    centers[list(THUMB_REGIONS)] -= shift
    centers[list(FINGER_REGIONS)] += shift
    u_obj = (contacts[1] - contacts[0]) / width
    outward = 0.5 * (contacts[0] + contacts[1]) - (np.zeros(3) if centroid is None else centroid)
    outward = outward - np.dot(outward, u_obj) * u_obj
    if np.linalg.norm(outward) < 1e-4:
        outward = np.cross(u_obj, rng.normal(size=3))
    up = np.array([0.0, 1.0, 0.0])
    if abs(np.dot(up, u_can)) > 0.99:
        up = np.array([0.0, 0.0, 1.0])
    rot = _frame(u_obj, outward) @ _frame(u_can, up).T
    origin = contacts[0] - rot @ centers[grasp_class.thumb_region]
    return HandProxy(centers, Pose(origin, matrix_to_quat(rot)), region_radius)
def region_match(grasp: Pose, widths, hand: HandProxy) -> RegionMatch:
    """
    Assigns both jaw contacts (p ∓ w/2 along the grasp x-axis, in the hand
    frame) to the nearest region centre within region_radius. A grasp is
    accepted when both contacts are assigned to different regions.
    """
    widths = np.atleast_1d(np.asarray(widths, dtype=float))
    axis = rotate(grasp.q, np.array([1.0, 0.0, 0.0]))
    p = np.atleast_2d(grasp.p)
    axis = np.atleast_2d(axis)
    contacts = np.stack([p - 0.5 * widths[:, None] * axis, p + 0.5 * widths[:, None] * axis], axis=1)
    dist = np.linalg.norm(contacts[:, :, None, :] - hand.region_centers[None, None], axis=-1)
    nearest = np.argmin(dist, axis=-1)
    within = np.take_along_axis(dist, nearest[..., None], axis=-1)[..., 0] <= hand.region_radius
    regions = np.where(within, nearest, -1)
    accepted = within.all(axis=-1) & (regions[:, 0] != regions[:, 1])
    return RegionMatch(accepted, regions)
# --- scenes and datasets ---
@dataclass(frozen=True)
class SceneRecord:
    """One conditioned scene; grasps are stored in the wrist frame."""
    scene_id: int
    class_name: str
    mesh_kind: str
    mesh_dimensions: Tuple[float, ...]
    hand: HandProxy
    condition: ConditionBundle
    grasps: Pose
    widths: np.ndarray
    regions: np.ndarray
    @property
    def class_label(self) -> int:
        return int(self.condition.class_label[0])
    @property
    def engaged_regions(self) -> List[int]:
        return sorted(set(self.regions.reshape(-1).tolist()))
    def mesh(self) -> PrimitiveMesh:
        return make_mesh(self.mesh_kind, self.mesh_dimensions)
    def to_json(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "class_name": self.class_name,
            "class_label": self.class_label,
            "mesh": {"kind": self.mesh_kind, "dimensions": [float(d) for d in self.mesh_dimensions]},
            "hand": {
                "pose": self.hand.pose.to_rows().tolist(),
                "region_centers": self.hand.region_centers.tolist(),
                "region_radius": self.hand.region_radius,
            },
            "feature": self.condition.feature[0].tolist(),
            "contact_target": self.condition.contact_target[0].tolist(),
            "grasps": self.grasps.to_rows().tolist(),
            "widths": self.widths.tolist(),
            "regions": self.regions.tolist(),
        }
    @classmethod
    def from_json(cls, data: dict) -> "SceneRecord":
        hand = data["hand"]
        condition = ConditionBundle(
            np.asarray(data["feature"])[None], [data["class_label"]], np.asarray(data["contact_target"])[None], False
        )
        return cls(
            scene_id=int(data["scene_id"]),
            class_name=str(data["class_name"]),
            mesh_kind=str(data["mesh"]["kind"]),
            mesh_dimensions=tuple(float(d) for d in data["mesh"]["dimensions"]),
            hand=HandProxy(np.asarray(hand["region_centers"]), Pose.from_rows(hand["pose"]), float(hand["region_radius"])),
            condition=condition,
            grasps=Pose.from_rows(data["grasps"]),
            widths=np.asarray(data["widths"], dtype=float),
            regions=np.asarray(data["regions"], dtype=int).reshape(-1, 2),
        )
@dataclass
class GraspDataset:
    header: dict
    scenes: List[SceneRecord] = field(default_factory=list)
    def __len__(self) -> int:
        return len(self.scenes)
    @property
    def feature_dim(self) -> int:
        return int(self.scenes[0].condition.feature.shape[1]) if self.scenes else FEATURE_DIM
    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True, separators=(",", ":"))]
        lines += [json.dumps(scene.to_json(), sort_keys=True, separators=(",", ":")) for scene in self.scenes]
        return "\n".join(lines) + "\n"
    @classmethod
    def from_jsonl(cls, text: str) -> "GraspDataset":
        """Parses a dataset file. Raises DatasetError on malformed content."""
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines:
            raise DatasetError("dataset file is empty")
        try:
            header = json.loads(lines[0])
            if header.get("schema_version") != SCHEMA_VERSION:
                raise DatasetError(f"unsupported dataset schema version {header.get('schema_version')}")
            scenes = [SceneRecord.from_json(json.loads(line)) for line in lines[1:]]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise DatasetError(f"malformed dataset: {e}") from e
        return cls(header, scenes)
def _mesh_dimensions(kind: str, rng: np.random.Generator) -> Tuple[float, ...]:
    if kind == "box":
        dims = [rng.uniform(0.03, 0.07), rng.uniform(0.06, 0.15), rng.uniform(0.09, 0.2)]
        return tuple(float(d) for d in rng.permutation(dims))
    if kind == "cylinder":
        return (float(rng.uniform(0.015, 0.038)), float(rng.uniform(0.09, 0.2)))
    return (float(rng.uniform(0.025, 0.04)),)
def condition_feature(taxonomy_index: int, hand: HandProxy, mesh: PrimitiveMesh, anchor_width: float, rng: np.random.Generator, noise: float) -> np.ndarray:
    """Class one-hot followed by the object layout seen from the wrist, plus seeded noise."""
    onehot = np.zeros(NUM_TAXONOMY_CLASSES)
    onehot[taxonomy_index] = 1.0
    wrist_to_object = pose_inverse(hand.pose)
    kind = np.zeros(len(MESH_KINDS))
    kind[MESH_KINDS.index(mesh.kind)] = 1.0
    dims = np.zeros(3)
    dims[: len(mesh.dimensions)] = mesh.dimensions
    descriptor = np.concatenate(
        [10.0 * wrist_to_object.p, quat_to_matrix(wrist_to_object.q).reshape(9), kind, 10.0 * dims, [10.0 * anchor_width]]
    )
    descriptor = descriptor + rng.normal(0.0, noise, size=descriptor.shape) if noise > 0.0 else descriptor
    return np.concatenate([onehot, descriptor])
def build_scene(scene_id: int, cfg: DatagenConfig, seed: int) -> Optional[SceneRecord]:
    """Generates one scene, or None when it falls short of min_grasps within the ray budget."""
    rng = stream_rng(seed, DATAGEN_STREAM, scene_id)
    grasp_class = GRASP_CLASSES[scene_id % cfg.classes]
    kind = cfg.mesh_mix[int(rng.integers(len(cfg.mesh_mix)))]
    mesh = make_mesh(kind, _mesh_dimensions(kind, rng))
    hand = None
    anchor_width = 0.0
    kept_poses: List[Pose] = []
    kept_widths: List[np.ndarray] = []
    kept_regions: List[np.ndarray] = []
    count = 0
    rays = 0
    while rays < cfg.ray_budget and count < cfg.max_grasps:
        candidates = find_antipodal(mesh, cfg.mu, cfg.max_width, rng, cfg.rays_per_round, "mesh", cfg.cone_jitter)
        rays += cfg.rays_per_round
        if len(candidates) == 0:
            continue
        if hand is None:
            anchor = int(rng.integers(len(candidates)))
            anchor_width = float(candidates.widths[anchor])
            hand = place_hand(grasp_class, candidates.contacts[anchor], rng, cfg.region_radius)
        palm_axis = rotate(hand.pose.q, np.array([0.0, 1.0, 0.0]))
        hint = palm_axis + rng.normal(0.0, cfg.approach_noise, size=(len(candidates), 3))
        in_object = grasp_frames(candidates, rng, hint)
        in_wrist = pose_mul(pose_inverse(hand.pose), in_object)
        match = region_match(in_wrist, candidates.widths, hand)
        accepted = np.nonzero(match.accepted)[0][: cfg.max_grasps - count]
        if accepted.size:
            kept_poses.append(in_wrist[accepted])
            kept_widths.append(candidates.widths[accepted])
            kept_regions.append(match.regions[accepted])
            count += accepted.size
    if count < cfg.min_grasps:
        log.warning("Dropping scene %d (%s, %s): %d grasps after %d rays", scene_id, grasp_class.name, kind, count, rays)
        return None
    regions = np.concatenate(kept_regions)
    contact = np.zeros(NUM_CONTACT_REGIONS)
    for r in range(NUM_CONTACT_REGIONS):
        contact[r] = np.mean(np.any(regions == r, axis=-1))
    feature = condition_feature(grasp_class.taxonomy_index, hand, mesh, anchor_width, rng, cfg.feature_noise)
    log.debug("Scene %d (%s, %s): %d grasps after %d rays", scene_id, grasp_class.name, kind, count, rays)
    return SceneRecord(
        scene_id=scene_id,
        class_name=grasp_class.name,
        mesh_kind=kind,
        mesh_dimensions=mesh.dimensions,
        hand=hand,
        condition=ConditionBundle(feature[None], [grasp_class.taxonomy_index], contact[None], False),
        grasps=Pose.stack(kept_poses),
        widths=np.concatenate(kept_widths),
        regions=regions,
    )
def build_dataset(cfg: DatagenConfig, seed: int, config_hash: str = "", workers: int = 1) -> GraspDataset:
    """
    Generates every scene of the dataset; scenes are independent and may run
    on `workers` threads without changing the result.
    """
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(lambda i: build_scene(i, cfg, seed), range(cfg.scenes)))
    scenes = [scene for scene in results if scene is not None]
    dropped = len(results) - len(scenes)
    spec = asdict(cfg)
    spec["mesh_mix"] = list(cfg.mesh_mix)
    header = {
        "schema_version": SCHEMA_VERSION,
        "seed": int(seed),
        "spec": spec,
        "config_hash": config_hash,
        "scenes": len(scenes),
        "dropped": dropped,
    }
    grasps = sum(len(scene.grasps) for scene in scenes)
    log.info("Generated %d scenes (%d dropped), %d grasps", len(scenes), dropped, grasps)
    return GraspDataset(header, scenes)
@dataclass
class ValidationReport:
    checked: int = 0
    failures: List[str] = field(default_factory=list)
    @property
    def ok(self) -> bool:
        return not self.failures
def revalidate(dataset: GraspDataset, mu: Optional[float] = None, tol: float = 1e-9) -> ValidationReport:
    """
    Re-derives every stored grasp's contacts by casting from its centre along
    both jaw directions and rechecks width, friction cones and region match.
    """
    if mu is None:
        mu = float(dataset.header.get("spec", {}).get("mu", DatagenConfig.mu))
    report = ValidationReport()
    for scene in dataset.scenes:
        mesh = scene.mesh()
        n = len(scene.grasps)
        in_object = pose_mul(scene.hand.pose, scene.grasps)
        axis = rotate(in_object.q, np.array([1.0, 0.0, 0.0]))
        back, n1 = raycast_mesh(mesh, in_object.p, -axis, t_min=0.0)
        ahead, n2 = raycast_mesh(mesh, in_object.p, axis, t_min=0.0)
        width_ok = np.abs(back + ahead - scene.widths) <= 1e-6 + 1e-6 * scene.widths
        cone_ok = friction_ok(np.stack([n1, n2], axis=1), axis, mu, tol)
        region_ok = region_match(scene.grasps, scene.widths, scene.hand).accepted
        for idx in np.nonzero(~(width_ok & cone_ok & region_ok))[0]:
            report.failures.append(
                f"scene {scene.scene_id} grasp {idx}: width={bool(width_ok[idx])} cone={bool(cone_ok[idx])} regions={bool(region_ok[idx])}"
            )
        report.checked += n
    log.info("Re-validated %d grasps, %d failures", report.checked, len(report.failures))
    return report
