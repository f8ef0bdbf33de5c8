"""
Isotropic Gaussian on SO(3): truncated-series density, tabulated inverse-CDF
sampling of the rotation angle, and the score used as the rotational
regression target.
"""
import io
import csv
import logging
import threading
from dataclasses import dataclass
from typing import Dict, Optional
import numpy as np
from .lie import exp_so3, log_so3
log = logging.getLogger(__name__)
SERIES_TOL = 1e-12
MAX_ORDER = 2000
SMALL_EPS = 1e-3
SMALL_OMEGA = 1e-6
GRID_SIZE = 4096
EPS_BINS = 512
_CHUNK = 1024
def _check_eps(eps: float) -> float:
    eps = float(eps)
    if not eps > 0.0 or not np.isfinite(eps):
        raise ValueError(f"concentration must be positive and finite, got {eps}")
    return eps
def truncation_order(eps: float) -> int:
    """Smallest L with (2L+1)·exp(−L(L+1)ε) below the series tolerance, capped."""
    eps = _check_eps(eps)
    orders = np.arange(MAX_ORDER + 1)
    terms = (2 * orders + 1) * np.exp(-orders * (orders + 1) * eps)
    below = np.nonzero(terms < SERIES_TOL)[0]
    return int(below[0]) if below.size else MAX_ORDER
def _cosine_coefficients(eps: float, order: int) -> np.ndarray:
    # sin((l+½)ω)/sin(ω/2) = 1 + 2 Σ_{k≤l} cos(kω), so f is a cosine series in ω.
    l = np.arange(order + 1, dtype=float)
    weight = (2 * l + 1) * np.exp(-l * (l + 1) * eps)
    tail = np.cumsum(weight[::-1])[::-1]
    coeff = 2.0 * tail
    coeff[0] = tail[0]
    return coeff
def _series(omega: np.ndarray, eps: float, order: int, derivative: bool) -> np.ndarray:
    coeff = _cosine_coefficients(eps, order)
    k = np.arange(order + 1, dtype=float)
    flat = omega.reshape(-1)
    out = np.empty_like(flat)
    for start in range(0, flat.size, _CHUNK):
        w = flat[start:start + _CHUNK, None]
        if derivative:
            out[start:start + _CHUNK] = -(k * np.sin(k * w)) @ coeff
        else:
            out[start:start + _CHUNK] = np.cos(k * w) @ coeff
    return out.reshape(omega.shape)
def _asymptotic_logf_grad(omega: np.ndarray, eps: float) -> np.ndarray:
    small = omega < SMALL_OMEGA
    safe = np.where(small, 1.0, omega)
    jac = np.where(small, omega / 6.0, 2.0 / safe - 1.0 / np.tan(0.5 * safe))
    return -omega / (2.0 * eps) + jac
def igso3_density(omega, eps: float, order: Optional[int] = None) -> np.ndarray:
    """
    Density of IGSO(3) with respect to the normalized Haar measure, as a
    function of the rotation angle.
    Args:
        omega: Rotation angle(s) in [0, π].
        eps: Concentration, must be positive.
        order: Truncation order; chosen adaptively when omitted.
    Returns:
        Non-negative density values with the shape of omega.
    Raises:
        ValueError: If eps is not positive.
    """
    eps = _check_eps(eps)
    omega = np.asarray(omega, dtype=float)
    if order is None and eps < SMALL_EPS:
        tau = 2.0 * eps
        small = omega < SMALL_OMEGA
        safe = np.where(small, 1.0, omega)
        ratio = np.where(small, 2.0, safe**2 / (1.0 - np.cos(safe)))
        value = (2 * np.pi * tau) ** -1.5 * np.exp(-(omega**2) / (2 * tau)) * 4 * np.pi**2 * ratio
        return np.maximum(value, 0.0)
    order = truncation_order(eps) if order is None else int(order)
    return np.maximum(_series(omega, eps, order, derivative=False), 0.0)
def igso3_dlogf(omega, eps: float) -> np.ndarray:
    """d/dω log f(ω; ε)."""
    eps = _check_eps(eps)
    omega = np.asarray(omega, dtype=float)
    if eps < SMALL_EPS:
        return _asymptotic_logf_grad(omega, eps)
    order = truncation_order(eps)
    f = _series(omega, eps, order, derivative=False)
    df = _series(omega, eps, order, derivative=True)
    return df / np.maximum(f, 1e-300)
@dataclass(frozen=True)
class IgSo3Table:
    """Tabulated density, angle CDF and log-density slope for one concentration."""
    epsilon: float
    angle_grid: np.ndarray
    f_values: np.ndarray
    cdf: np.ndarray
    dlogf: np.ndarray
    def sample_angles(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.interp(rng.random(size), self.cdf, self.angle_grid)
def build_table(eps: float, grid_size: int = GRID_SIZE) -> IgSo3Table:
    eps = _check_eps(eps)
    grid = np.linspace(0.0, np.pi, grid_size)
    f = igso3_density(grid, eps)
    marginal = f * (1.0 - np.cos(grid)) / np.pi
    steps = 0.5 * (marginal[1:] + marginal[:-1]) * np.diff(grid)
    cdf = np.concatenate([[0.0], np.cumsum(steps)])
    total = cdf[-1]
    if not total > 0.0:
        raise ValueError(f"degenerate IGSO(3) table for eps={eps}")
    if abs(total - 1.0) > 1e-3:
        log.warning("IGSO(3) marginal integrates to %.6f for eps=%g", total, eps)
    cdf = np.maximum.accumulate(cdf / total)
    log.debug("Built IGSO(3) table for eps=%g (L=%d)", eps, truncation_order(eps))
    return IgSo3Table(eps, grid, f, cdf, igso3_dlogf(grid, eps))
class TableCache:
    """Process-wide cache of tables keyed by concentration; one builder per key."""
    def __init__(self):
        self._tables: Dict[float, IgSo3Table] = {}
        self._lock = threading.Lock()
    def get(self, eps: float) -> IgSo3Table:
        eps = _check_eps(eps)
        table = self._tables.get(eps)
        if table is not None:
            return table
        with self._lock:
            table = self._tables.get(eps)
            if table is None:
                table = build_table(eps)
                self._tables[eps] = table
        return table
    def __len__(self) -> int:
        return len(self._tables)
TABLES = TableCache()
def quantize_eps(eps, eps_min: float, eps_max: float, bins: int = EPS_BINS) -> np.ndarray:
    """Snaps concentrations to the nearest of `bins` log-spaced values in [eps_min, eps_max]."""
    if not 0.0 < eps_min < eps_max:
        raise ValueError(f"invalid quantization range [{eps_min}, {eps_max}]")
    levels = np.geomspace(eps_min, eps_max, bins)
    eps = np.clip(np.asarray(eps, dtype=float), eps_min, eps_max)
    idx = np.rint((np.log(eps) - np.log(eps_min)) / (np.log(eps_max) - np.log(eps_min)) * (bins - 1))
    return levels[idx.astype(int)]
def igso3_sample(eps: float, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """
    Draws unit quaternions from IGSO(3; ε). Below the series range the rotation
    vector is drawn from N(0, 2ε I) instead of the table.
    """
    eps = _check_eps(eps)
    n = 1 if size is None else int(size)
    if eps < SMALL_EPS:
        phi = rng.normal(0.0, np.sqrt(2.0 * eps), size=(n, 3))
    else:
        angles = TABLES.get(eps).sample_angles(rng, n)
        axis = rng.normal(size=(n, 3))
        axis /= np.linalg.norm(axis, axis=-1, keepdims=True)
        phi = angles[:, None] * axis
    q = exp_so3(phi)
    return q[0] if size is None else q
def igso3_sample_many(eps: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One quaternion per entry of eps, grouping draws by distinct concentration."""
    eps = np.asarray(eps, dtype=float).reshape(-1)
    out = np.empty((eps.size, 4))
    for value in np.unique(eps):
        mask = eps == value
        out[mask] = igso3_sample(value, rng, int(mask.sum()))
    return out
def igso3_score(q, eps) -> np.ndarray:
    """
    Score of IGSO(3) at q: d/dω log f(ω; ε) · φ/‖φ‖ with φ = Log q.
    eps may be a scalar or one value per quaternion; zero at the identity.
    """
    phi = log_so3(q)
    omega = np.linalg.norm(phi, axis=-1)
    eps_arr = np.broadcast_to(np.asarray(eps, dtype=float), omega.shape)
    slope = np.empty_like(omega)
    for value in np.unique(eps_arr):
        mask = eps_arr == value
        slope[mask] = igso3_dlogf(omega[mask], value)
    direction = np.where(omega[..., None] > 0.0, phi / np.where(omega > 0.0, omega, 1.0)[..., None], 0.0)
    return slope[..., None] * direction
def gauss_score(dp, sigma) -> np.ndarray:
    """Score of N(0, σ²I) at dp: −dp/σ²."""
    sigma = np.asarray(sigma, dtype=float)
    if np.any(~(sigma > 0.0)):
        raise ValueError(f"sigma must be positive, got {sigma}")
    dp = np.asarray(dp, dtype=float)
    if sigma.ndim and sigma.shape == dp.shape[:-1]:
        sigma = sigma[..., None]
    return -dp / sigma**2
def dump_table_csv(table: IgSo3Table) -> str:
    """Renders a table as CSV text with columns omega,f,cdf,dlogf."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["omega", "f", "cdf", "dlogf"])
    for row in zip(table.angle_grid, table.f_values, table.cdf, table.dlogf):
        writer.writerow([repr(float(v)) for v in row])
    return buffer.getvalue()
