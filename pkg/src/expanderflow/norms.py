"""Norm and energy functionals on lattice fields.

Covers the Lebesgue, weak-Lorentz, BMO and parabolic-Holder functionals
used throughout the solver, the iteration norm (sup norm plus the
t^{1/4}-weighted L^{2n} gradient norm), and the renormalized parabolic
energies over cylinders.

Weak norms use the exact discrete supremum over the decreasing
rearrangement. For homogeneous-tail fields the report path can augment the
lattice sums with the analytic tail beyond the inscribed ball so that box
truncation is not mistaken for decay.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import fields as fd
from .errors import EmptyRegion, MissingInitialSlice, RegionOutsideGrid
from .fields import GridSpec, LatticeField


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float


@dataclass(frozen=True)
class BoxRegion:
    lo: tuple
    hi: tuple


Region = Ball | BoxRegion | None


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _region_mask(grid: GridSpec, region: Region) -> np.ndarray | None:
    if region is None:
        return None
    nodes = grid.nodes()
    if isinstance(region, Ball):
        c = np.asarray(region.center, dtype=float)
        return np.sum((nodes - c) ** 2, axis=-1) <= region.radius**2
    lo = np.asarray(region.lo, dtype=float)
    hi = np.asarray(region.hi, dtype=float)
    return np.all((nodes >= lo) & (nodes <= hi), axis=-1)


def _magnitude(values: np.ndarray, grid_dim: int) -> np.ndarray:
    """Pointwise Euclidean magnitude over all trailing (non-grid) axes."""
    v = np.asarray(values, dtype=float)
    extra = v.ndim - grid_dim
    if extra == 0:
        return np.abs(v)
    flat = v.reshape(v.shape[:grid_dim] + (-1,))
    return np.sqrt(np.sum(flat * flat, axis=-1))


def lp_norm(values: np.ndarray, grid: GridSpec, p: float, region: Region = None) -> float:
    """Midpoint-rule L^p norm of the pointwise magnitude over the region."""
    if p < 1.0:
        raise ValueError("p must be >= 1")
    mag = _magnitude(values, grid.dim)
    mask = _region_mask(grid, region)
    if mask is not None:
        if not np.any(mask):
            raise EmptyRegion("region contains no grid nodes")
        mag = mag[mask]
    if math.isinf(p):
        return float(np.max(mag))
    hn = grid.spacing**grid.dim
    return float((np.sum(mag**p) * hn) ** (1.0 / p))


def weak_lp_norm(values: np.ndarray, grid: GridSpec, p: float) -> float:
    """Weak L^p norm by exact discrete rearrangement:
    max_k value_(k) * (k h^n)^{1/p} with values sorted decreasing."""
    if p < 1.0:
        raise ValueError("p must be >= 1")
    mag = _magnitude(values, grid.dim).ravel()
    mag = np.sort(mag)[::-1]
    if mag.size == 0 or mag[0] == 0.0:
        return 0.0
    k = np.arange(1, mag.size + 1, dtype=float)
    hn = grid.spacing**grid.dim
    return float(np.max(mag * (k * hn) ** (1.0 / p)))


def _ball_mask(grid: GridSpec) -> np.ndarray:
    nodes = grid.nodes()
    return np.sum(nodes * nodes, axis=-1) <= grid.half_width**2


def lp_norm_tail(values: np.ndarray, grid: GridSpec, p: float, far_coeff: float) -> float:
    """L^p norm over the inscribed ball plus the analytic homogeneous tail.

    The tail assumes |f|(x) ~ far_coeff / |x| beyond the hull, which is the
    gradient decay of degree-zero data; requires p > n for convergence.
    """
    n = grid.dim
    if p <= n:
        raise ValueError("tail-corrected L^p needs p > n")
    mag = _magnitude(values, grid.dim)
    hn = grid.spacing**n
    core = float(np.sum(mag[_ball_mask(grid)] ** p) * hn)
    r = grid.half_width
    tail = far_coeff**p * n * unit_ball_volume(n) * r ** (n - p) / (p - n)
    return (core + tail) ** (1.0 / p)


def weak_lp_norm_tail(values: np.ndarray, grid: GridSpec, p: float, far_coeff: float) -> float:
    """Weak L^p norm over the inscribed ball plus the analytic tail volume.

    At each sample threshold the superlevel volume gains the exact measure
    of {far_coeff/|x| > lambda} outside the ball; the lambda -> 0 limit
    far_coeff * omega_n^{1/n} is included as a candidate when p = n.
    """
    n = grid.dim
    mag = _magnitude(values, grid.dim)
    mag = np.sort(mag[_ball_mask(grid)])[::-1]
    if mag.size == 0:
        return 0.0
    hn = grid.spacing**n
    k = np.arange(1, mag.size + 1, dtype=float)
    omega = unit_ball_volume(n)
    r = grid.half_width
    with np.errstate(divide="ignore"):
        tail_vol = omega * np.clip((far_coeff / np.where(mag > 0, mag, np.inf)) ** n - r**n, 0.0, None)
    best = float(np.max(mag * (k * hn + tail_vol) ** (1.0 / p)))
    if p == n and far_coeff > 0.0:
        best = max(best, far_coeff * omega ** (1.0 / n))
    return best


# ---------------------------------------------------------------------------
# iteration norm


def x_norm_slices(slices: Sequence[LatticeField]) -> float:
    """Iteration norm of a space-time family:
    sup |v| plus sup over t of t^{1/4} ||grad v(t)||_{L^{2n}}.

    The family must contain the zero slice at t = 0."""
    initial = [s for s in slices if s.time_label == 0.0]
    if not initial or any(np.any(s.values != 0.0) for s in initial):
        raise MissingInitialSlice("family needs the zero slice at t=0")
    sup = 0.0
    wgrad = 0.0
    for s in slices:
        sup = max(sup, float(np.max(_magnitude(s.values, s.grid.dim))))
        if s.time_label > 0.0:
            g = fd.gradient(s)
            p = 2.0 * s.grid.dim
            wgrad = max(wgrad, s.time_label**0.25 * lp_norm(g, s.grid, p))
    return sup + wgrad


x_norm = x_norm_slices


def x_norm_frame(values: np.ndarray, grid: GridSpec) -> float:
    """Iteration norm of a self-similar family through its t=1 slice.

    For v(x,t) = V(x/sqrt(t)) the weighted gradient norm is t-independent:
    t^{1/4} ||grad v(t)||_{L^{2n}} = ||grad V||_{L^{2n}} exactly, so the
    norm reduces to sup |V| + ||grad V||_{L^{2n}}."""
    g = fd.gradient_of_values(values, grid.spacing, grid.dim)
    return float(np.max(_magnitude(values, grid.dim))) + lp_norm(g, grid, 2.0 * grid.dim)


# ---------------------------------------------------------------------------
# BMO


def bmo_seminorm(fld: LatticeField, min_side_cells: int = 4) -> float:
    """Mean oscillation over the dyadic cube family of the box.

    Cubes are half-open node blocks; each level halves every axis until a
    side would fall below min_side_cells cells. Oscillation is the mean
    Euclidean deviation from the cube average."""
    v = fld.values
    m = fld.grid.points_per_axis
    n = fld.grid.dim
    best = 0.0
    ranges = [(0, m - 1)] * n  # half-open in cells -> nodes [a, b)
    stack = [tuple(ranges)]
    while stack:
        cube = stack.pop()
        sl = tuple(slice(a, b) for a, b in cube)
        block = v[sl].reshape(-1, v.shape[-1])
        mean = block.mean(axis=0)
        osc = float(np.mean(np.linalg.norm(block - mean, axis=-1)))
        best = max(best, osc)
        if all((b - a) // 2 >= min_side_cells for a, b in cube):
            halves = [((a, a + (b - a) // 2), (a + (b - a) // 2, b)) for a, b in cube]
            for corner in np.ndindex(*(2,) * n):
                stack.append(tuple(halves[ax][corner[ax]] for ax in range(n)))
    return best


# ---------------------------------------------------------------------------
# renormalized parabolic energies


def _ball_energy(slice_values: np.ndarray, grid: GridSpec, center, radius: float, q: float) -> float:
    mask = _region_mask(grid, Ball(tuple(center), radius))
    g = _magnitude(slice_values, grid.dim)
    return float(np.sum(g[mask] ** q) * grid.spacing**grid.dim)


def renormalized_energy(
    grad_slices: Sequence[tuple[float, np.ndarray]],
    grid: GridSpec,
    center,
    radius: float,
    q: float,
) -> float:
    """Scale-invariant energy of the cylinder B_R(x0) x [0, R^2].

    grad_slices: (t, gradient array) pairs covering [0, R^2], including
    t = 0. q = 2 gives R^{-n} * integral of |grad u|^2; q = n gives
    R^{-2} * integral of |grad u|^n. Trapezoidal in t; the final partial
    step to R^2 interpolates the integrand linearly in t.
    """
    n = grid.dim
    if q not in (2.0, float(n)):
        raise ValueError("exponent q must be 2 or the space dimension")
    c = np.asarray(center, dtype=float)
    if np.any(np.abs(c) + radius > grid.half_width * (1.0 + 1e-12)):
        raise RegionOutsideGrid("cylinder cross-section leaves the grid")
    t_end = radius**2
    pairs = sorted((t, g) for t, g in grad_slices if t <= t_end * (1.0 + 1e-12))
    if not pairs or pairs[0][0] > 0.0:
        raise ValueError("need slices covering [0, R^2] including t=0")
    times = [t for t, _ in pairs]
    vals = [_ball_energy(g, grid, c, radius, q) for _, g in pairs]
    later = sorted((t, g) for t, g in grad_slices if t > t_end * (1.0 + 1e-12))
    if times[-1] < t_end and later:
        t_next, g_next = later[0]
        e_next = _ball_energy(g_next, grid, c, radius, q)
        w = (t_end - times[-1]) / (t_next - times[-1])
        times.append(t_end)
        vals.append((1.0 - w) * vals[-1] + w * e_next)
    integral = float(np.trapezoid(np.asarray(vals), np.asarray(times)))
    power = -float(n) if q == 2.0 else -2.0
    return radius**power * integral


# ---------------------------------------------------------------------------
# parabolic Holder seminorm


def parabolic_distance(x1, t1, x2, t2) -> np.ndarray:
    dx = np.linalg.norm(np.asarray(x1) - np.asarray(x2), axis=-1)
    dt = np.sqrt(np.abs(np.asarray(t1) - np.asarray(t2)))
    return np.maximum(dx, dt)


def sample_annulus_pairs(
    dim: int,
    pairs: int,
    seed: int,
    r_inner: float = 0.5,
    r_outer: float = 2.0,
    t_max: float = 1.0 / 16.0,
):
    """Deterministic point pairs in the annulus x [0, t_max] slab."""
    rng = np.random.default_rng(seed)
    count = 2 * pairs
    directions = rng.normal(size=(count, dim))
    directions /= np.linalg.norm(directions, axis=-1, keepdims=True)
    radii = (r_inner**dim + rng.random(count) * (r_outer**dim - r_inner**dim)) ** (1.0 / dim)
    points = directions * radii[:, None]
    times = rng.random(count) * t_max
    return points[0::2], times[0::2], points[1::2], times[1::2]


def holder_seminorm(
    sampler: Callable[[np.ndarray, np.ndarray], np.ndarray],
    dim: int,
    gamma: float,
    pairs: int = 2048,
    seed: int = 0,
    r_inner: float = 0.5,
    r_outer: float = 2.0,
    t_max: float = 1.0 / 16.0,
) -> float:
    """Sampled parabolic Holder seminorm max |u(z1)-u(z2)| / d_P(z1,z2)^gamma.

    `sampler(points, times)` returns field values at space-time points.
    Pairs are drawn with a fixed seed from the annulus away from the
    space-time origin, so the value is reproducible.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    if pairs < 1000:
        raise ValueError("need at least 10^3 sampled pairs")
    x1, t1, x2, t2 = sample_annulus_pairs(dim, pairs, seed, r_inner, r_outer, t_max)
    u1 = sampler(x1, t1)
    u2 = sampler(x2, t2)
    dist = parabolic_distance(x1, t1, x2, t2)
    keep = dist > 1e-12
    diff = np.linalg.norm(u1 - u2, axis=-1)
    return float(np.max(diff[keep] / dist[keep] ** gamma))


# ---------------------------------------------------------------------------
# assembled report


@dataclass
class NormReport:
    """Flat summary of the norm functionals of a run (JSON-stable keys)."""

    lp: dict = field(default_factory=dict)
    weak_lp: dict = field(default_factory=dict)
    x_norm: float = 0.0
    bmo: float = 0.0
    energies: list = field(default_factory=list)
    holder_exponent: float = 0.0
    holder_seminorm: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "lp": {str(k): v for k, v in sorted(self.lp.items())},
            "weak_lp": {str(k): v for k, v in sorted(self.weak_lp.items())},
            "x_norm": self.x_norm,
            "bmo": self.bmo,
            "energies": [list(e) for e in self.energies],
            "holder_exponent": self.holder_exponent,
            "holder_seminorm": self.holder_seminorm,
        }
