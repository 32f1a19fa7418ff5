"""Lattices on truncated R^n, sampled vector fields, and spherical data.

Fields are immutable snapshots: an (m, ..., m, L) array of ambient values
over a uniform grid on [-R, R]^n with an odd number of nodes per axis, so
the origin is a single node. Homogeneous degree-zero initial data is
extended from the sphere at infinity; the single discontinuous node at the
origin is mollified by averaging its 2n nearest neighbors and projecting
back onto the target.

Interpolation is separable 4-point Lagrange (exact on cubic polynomials
and exact at the nodes); the same kernel drives the parabolic rescaling
used by the self-similar solver paths.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Callable

import numpy as np

from .errors import GridTooSmall, OutOfDomain
from .manifold import ManifoldDescriptor, project, unit_sphere


@dataclass(frozen=True)
class GridSpec:
    """Uniform lattice on [-half_width, half_width]^dim, odd nodes per axis."""

    dim: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        if self.points_per_axis % 2 == 0:
            raise ValueError("points_per_axis must be odd so the origin is a node")
        if self.points_per_axis < 5:
            raise GridTooSmall("need at least 5 nodes per axis")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / (self.points_per_axis - 1)

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points_per_axis)

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (m, ..., m, dim); cached, read-only."""
        return _nodes_cached(self)

    def shape(self, ambient_dim: int) -> tuple:
        return (self.points_per_axis,) * self.dim + (ambient_dim,)


@lru_cache(maxsize=32)
def _nodes_cached(grid: GridSpec) -> np.ndarray:
    ax = grid.axis()
    mesh = np.meshgrid(*([ax] * grid.dim), indexing="ij")
    out = np.stack(mesh, axis=-1)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LatticeField:
    """Sampled R^L-valued map on a grid, tagged with its time slice.

    time_label is the physical time of the slice; similarity_frame marks
    the t=1 slice of a self-similar family (values are U(y), u(x,t)=U(x/sqrt(t))).
    on_manifold_tol, when set, asserts at construction that every value
    lies within that distance of the unit sphere.
    """

    grid: GridSpec
    values: np.ndarray
    time_label: float = 0.0
    similarity_frame: bool = False
    on_manifold_tol: float | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        expected = (self.grid.points_per_axis,) * self.grid.dim
        if v.shape[:-1] != expected:
            raise ValueError(f"values shape {v.shape} does not match grid {expected}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        if self.on_manifold_tol is not None:
            defect = float(np.max(np.abs(np.linalg.norm(v, axis=-1) - 1.0)))
            if defect > self.on_manifold_tol:
                raise ValueError(
                    f"field flagged on-manifold has distance defect {defect:.3g}"
                )
        object.__setattr__(self, "values", v)

    @property
    def ambient_dim(self) -> int:
        return self.values.shape[-1]

    def with_values(self, values: np.ndarray) -> "LatticeField":
        return replace(self, values=values)


class SphericalKind(Enum):
    Corotational = "corotational"
    Tabulated = "tabulated"


@dataclass(frozen=True)
class SphericalData:
    """Initial profile phi_0 on S^{n-1} defining u_0(x) = phi_0(x/|x|).

    Corotational data maps into S^n in R^{n+1}:
        phi_0(w) = (sin(alpha) * w, cos(alpha)).
    Tabulated data (dim 2 only) carries values on a uniform angular grid of
    the circle, interpolated periodically.
    """

    dim: int
    kind: SphericalKind
    target: ManifoldDescriptor
    alpha: float = 0.0
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind is SphericalKind.Corotational:
            if self.target.ambient_dim != self.dim + 1:
                raise ValueError("corotational data needs target S^n in R^{n+1}")
        elif self.kind is SphericalKind.Tabulated:
            if self.dim != 2:
                raise ValueError("tabulated spherical data is only supported for dim=2")
            if self.table is None or np.asarray(self.table).ndim != 2:
                raise ValueError("tabulated data needs a (K, L) value table")
            tab = np.asarray(self.table, dtype=float)
            if tab.shape[1] != self.target.ambient_dim:
                raise ValueError("table ambient dimension mismatch")
            norms = np.linalg.norm(tab, axis=-1)
            if np.any(np.abs(norms - 1.0) > 1e-9):
                raise ValueError("tabulated values must lie on the unit sphere")
            object.__setattr__(self, "table", tab)

    @property
    def ambient_dim(self) -> int:
        return self.target.ambient_dim

    def on_sphere(self, omega: np.ndarray) -> np.ndarray:
        """Evaluate phi_0 at unit vectors omega, shape (..., dim)."""
        omega = np.asarray(omega, dtype=float)
        if self.kind is SphericalKind.Corotational:
            out = np.empty(omega.shape[:-1] + (self.dim + 1,))
            out[..., : self.dim] = np.sin(self.alpha) * omega
            out[..., self.dim] = np.cos(self.alpha)
            return out
        # periodic cubic Lagrange in the polar angle
        theta = np.mod(np.arctan2(omega[..., 1], omega[..., 0]), 2.0 * np.pi)
        tab = self.table
        k = tab.shape[0]
        pos = theta / (2.0 * np.pi) * k
        base = np.floor(pos).astype(int)
        frac = pos - base
        w = _lagrange_weights(frac)
        idx = (base[..., None] + np.arange(-1, 3)) % k
        vals = np.einsum("...k,...kl->...l", w, tab[idx])
        return vals / np.linalg.norm(vals, axis=-1, keepdims=True)

    def initial_map(self, points: np.ndarray) -> np.ndarray:
        """Analytic u_0(x) = phi_0(x/|x|); the origin gets the north pole
        (matching the mollified lattice value for corotational data)."""
        points = np.asarray(points, dtype=float)
        r = np.linalg.norm(points, axis=-1)
        safe = np.where(r > 0.0, r, 1.0)
        vals = self.on_sphere(points / safe[..., None])
        if np.any(r == 0.0):
            pole = np.zeros(self.ambient_dim)
            pole[-1] = 1.0
            vals = np.where((r == 0.0)[..., None], pole, vals)
        return vals

    def initial_gradient(self, points: np.ndarray) -> np.ndarray:
        """Analytic gradient of u_0 away from the origin, shape (..., dim, L).

        For corotational data d_i u_0 = sin(alpha)/r * (e_i - w_i w, 0)."""
        if self.kind is not SphericalKind.Corotational:
            raise NotImplementedError("analytic gradient only for corotational data")
        points = np.asarray(points, dtype=float)
        r = np.linalg.norm(points, axis=-1)
        safe = np.where(r > 0.0, r, np.inf)
        w = points / np.where(r > 0.0, r, 1.0)[..., None]
        eye = np.eye(self.dim)
        tang = eye - w[..., :, None] * w[..., None, :]  # (..., i, j) = e_i - w_i w
        out = np.zeros(points.shape[:-1] + (self.dim, self.ambient_dim))
        out[..., : self.dim] = np.sin(self.alpha) * tang / safe[..., None, None]
        return out

    def initial_source(self, points: np.ndarray, desc: ManifoldDescriptor | None = None) -> np.ndarray:
        """Analytic quadratic reaction term of u_0: sum_i A(u_0)(d_i u_0, d_i u_0).

        Used as the far-field closure of Duhamel sources; equals
        (n-1) sin^2(alpha)/|x|^2 * u_0(x) for corotational data."""
        if self.kind is not SphericalKind.Corotational:
            raise NotImplementedError("analytic source only for corotational data")
        points = np.asarray(points, dtype=float)
        r2 = np.sum(points * points, axis=-1)
        safe = np.where(r2 > 0.0, r2, np.inf)
        coeff = (self.dim - 1) * np.sin(self.alpha) ** 2 / safe
        return coeff[..., None] * self.initial_map(points)


def corotational_data(dim: int, alpha: float, tube_radius: float = 0.5) -> SphericalData:
    """Corotational initial profile with boundary angle alpha into S^dim."""
    return SphericalData(
        dim=dim,
        kind=SphericalKind.Corotational,
        target=unit_sphere(dim + 1, tube_radius),
        alpha=alpha,
    )


def homogeneous_extend(data: SphericalData, grid: GridSpec) -> LatticeField:
    """Sample u_0(x) = phi_0(x/|x|) on the lattice.

    The origin node is mollified at scale h: it takes the average of its 2n
    nearest neighbors projected back onto the target.
    """
    if grid.dim != data.dim:
        raise ValueError("grid dimension does not match the spherical data")
    nodes = grid.nodes()
    values = data.initial_map(nodes)
    center = (grid.points_per_axis - 1) // 2
    neighbors = []
    for ax in range(grid.dim):
        for off in (-1, 1):
            idx = [center] * grid.dim
            idx[ax] = center + off
            neighbors.append(values[tuple(idx)])
    mean = np.mean(neighbors, axis=0)
    norm = np.linalg.norm(mean)
    if norm > 1e-12:
        origin = mean / norm  # radial projection, valid for any nonzero mean
    else:
        # perfectly balanced neighbors (equator-type data): take the value
        # on the first axis so the origin stays on the target
        origin = data.on_sphere(np.eye(grid.dim)[0])
    values[(center,) * grid.dim] = origin
    return LatticeField(grid=grid, values=values, time_label=0.0, on_manifold_tol=1e-12)


# ---------------------------------------------------------------------------
# finite differences


def gradient(fld: LatticeField) -> np.ndarray:
    """Discrete spatial gradient, shape grid + (n, L).

    Fourth-order central differences in the interior, second-order central
    one node from the boundary, second-order one-sided at the boundary.
    """
    return gradient_of_values(fld.values, fld.grid.spacing, fld.grid.dim)


def gradient_of_values(values: np.ndarray, h: float, dim: int) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    m = v.shape[0]
    if m < 5:
        raise GridTooSmall("gradient needs at least 5 nodes per axis")
    out = np.empty(v.shape[:-1] + (dim, v.shape[-1]))
    for ax in range(dim):
        out[..., ax, :] = _axis_derivative(v, ax, h)
    return out


def _axis_derivative(v: np.ndarray, ax: int, h: float) -> np.ndarray:
    v = np.moveaxis(v, ax, 0)
    d = np.empty_like(v)
    d[2:-2] = (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) / (12.0 * h)
    d[1] = (v[2] - v[0]) / (2.0 * h)
    d[-2] = (v[-1] - v[-3]) / (2.0 * h)
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    d[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h)
    return np.moveaxis(d, 0, ax)


def laplacian_of_values(values: np.ndarray, h: float, dim: int) -> np.ndarray:
    """Fourth-order Laplacian in the interior (second-order near edges)."""
    v = np.asarray(values, dtype=float)
    out = np.zeros_like(v)
    for ax in range(dim):
        w = np.moveaxis(v, ax, 0)
        d = np.empty_like(w)
        d[2:-2] = (
            -w[4:] + 16.0 * w[3:-1] - 30.0 * w[2:-2] + 16.0 * w[1:-3] - w[:-4]
        ) / (12.0 * h * h)
        d[1] = (w[2] - 2.0 * w[1] + w[0]) / (h * h)
        d[-2] = (w[-1] - 2.0 * w[-2] + w[-3]) / (h * h)
        d[0] = (w[2] - 2.0 * w[1] + w[0]) / (h * h)
        d[-1] = (w[-1] - 2.0 * w[-2] + w[-3]) / (h * h)
        out += np.moveaxis(d, 0, ax)
    return out


# ---------------------------------------------------------------------------
# separable 4-point Lagrange interpolation


def _lagrange_weights(theta: np.ndarray) -> np.ndarray:
    """Weights on the stencil {-1, 0, 1, 2} for offsets theta in [0, 1].

    Cubic Lagrange basis: exact on polynomials of degree <= 3, exact at
    the nodes (theta = 0 gives (0, 1, 0, 0))."""
    t = np.asarray(theta, dtype=float)
    w0 = -t * (t - 1.0) * (t - 2.0) / 6.0
    w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0
    w2 = -(t + 1.0) * t * (t - 2.0) / 2.0
    w3 = (t + 1.0) * t * (t - 1.0) / 6.0
    return np.stack([w0, w1, w2, w3], axis=-1)




def _axis_index_weights(grid: GridSpec, coords: np.ndarray):
    """Base indices and Lagrange weights for 1D coordinates on the grid axis.

    Stencils are shifted inward near the edges (still cubic-exact)."""
    m = grid.points_per_axis
    pos = (coords + grid.half_width) / grid.spacing
    base = np.floor(pos).astype(int)
    base = np.clip(base, 1, m - 3)
    theta = pos - base
    w = _lagrange_weights(theta)
    return base, w


def interpolate(fld: LatticeField, points: np.ndarray) -> np.ndarray:
    """Separable cubic-Lagrange interpolation at arbitrary points.

    Points must lie inside the grid hull (OutOfDomain otherwise); values at
    nodes are reproduced exactly.
    """
    grid = fld.grid
    points = np.asarray(points, dtype=float)
    flat = points.reshape(-1, grid.dim)
    if np.any(np.abs(flat) > grid.half_width * (1.0 + 1e-12)):
        raise OutOfDomain("interpolation point outside the grid hull")
    out = interpolate_unchecked(fld.values, grid, flat)
    return out.reshape(points.shape[:-1] + (fld.ambient_dim,))


def interpolate_unchecked(values: np.ndarray, grid: GridSpec, flat_points: np.ndarray) -> np.ndarray:
    """Scattered interpolation without the hull check (callers clamp/mask)."""
    n = grid.dim
    bases, weights = [], []
    for ax in range(n):
        b, w = _axis_index_weights(grid, np.clip(flat_points[:, ax], -grid.half_width, grid.half_width))
        bases.append(b)
        weights.append(w)
    out = np.zeros((flat_points.shape[0], values.shape[-1]))
    offsets = np.arange(-1, 3)
    # accumulate the 4^n tensor-product corners
    for corner in np.ndindex(*(4,) * n):
        wprod = weights[0][:, corner[0]]
        for ax in range(1, n):
            wprod = wprod * weights[ax][:, corner[ax]]
        idx = tuple(bases[ax] + offsets[corner[ax]] for ax in range(n))
        out += wprod[:, None] * values[idx]
    return out


def resample_scaled(
    values: np.ndarray,
    grid: GridSpec,
    scale: float,
    far_field: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Sample the field at `scale * x` for every node x, separably.

    Where `scale * x` leaves the hull the far-field callable supplies the
    value (zero if absent). The per-axis pass is a banded matrix applied
    via BLAS, restricted to the in-hull index window (for scale > 1 most
    rows map outside and are skipped), so repeated rescales are cheap.
    """
    m = grid.points_per_axis
    inside_1d = np.abs(grid.axis() * scale) <= grid.half_width * (1.0 + 1e-12)
    i0 = int(np.argmax(inside_1d))
    i1 = m - int(np.argmax(inside_1d[::-1]))
    mat = _scaling_matrix(grid, scale)[i0:i1]
    out = values
    for ax in range(grid.dim):
        out = np.tensordot(mat, np.moveaxis(out, ax, 0), axes=(1, 0))
        out = np.moveaxis(out, 0, ax)
    if i0 == 0 and i1 == m:
        return out
    full = np.zeros((m,) * grid.dim + out.shape[grid.dim:], dtype=out.dtype)
    window = tuple(slice(i0, i1) for _ in range(grid.dim))
    full[window] = out
    if far_field is not None:
        mask = np.zeros((m,) * grid.dim, dtype=bool)
        outside_1d = ~inside_1d
        for ax in range(grid.dim):
            shape = [1] * grid.dim
            shape[ax] = m
            mask |= outside_1d.reshape(shape)
        pts = grid.nodes()[mask] * scale
        full[mask] = far_field(pts)
    return full


@lru_cache(maxsize=192)
def _scaling_matrix(grid: GridSpec, scale: float) -> np.ndarray:
    """Dense (m, m) one-axis resampling matrix for x -> scale * x.

    Rows whose target coordinate leaves the axis range are zeroed; the
    radial far-field mask in resample_scaled overwrites those nodes.
    Cached: the solver reuses a fixed set of scales every iteration.
    """
    m = grid.points_per_axis
    coords = grid.axis() * scale
    inside = np.abs(coords) <= grid.half_width * (1.0 + 1e-12)
    base, w = _axis_index_weights(grid, np.clip(coords, -grid.half_width, grid.half_width))
    mat = np.zeros((m, m))
    rows = np.arange(m)
    for k in range(4):
        cols = np.clip(base + (k - 1), 0, m - 1)
        mat[rows, cols] += w[:, k]
    mat[~inside] = 0.0
    return mat


# ---------------------------------------------------------------------------
# serialization

_MAGIC = b"XFLD"


def save_field(fld: LatticeField, path: str) -> None:
    """Flat binary node dump; bit-exact round trip."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        header = struct.pack(
            "<iiddi?",
            fld.grid.dim,
            fld.grid.points_per_axis,
            fld.grid.half_width,
            fld.time_label,
            fld.ambient_dim,
            fld.similarity_frame,
        )
        fh.write(struct.pack("<i", len(header)))
        fh.write(header)
        fh.write(np.ascontiguousarray(fld.values).tobytes())


def load_field(path: str) -> LatticeField:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a field dump")
        (hlen,) = struct.unpack("<i", fh.read(4))
        dim, m, half_width, time_label, ambient, frame = struct.unpack("<iiddi?", fh.read(hlen))
        grid = GridSpec(dim=dim, half_width=half_width, points_per_axis=m)
        count = m**dim * ambient
        values = np.frombuffer(fh.read(count * 8), dtype=float).reshape(grid.shape(ambient)).copy()
    return LatticeField(grid=grid, values=values, time_label=time_label, similarity_frame=frame)


def save_field_csv(fld: LatticeField, path: str) -> None:
    """CSV node dump with a header row (row-major node order)."""
    with open(path, "w", newline="") as fh:
        fh.write("# n,m,R_max,L,time_label,similarity_frame\r\n")
        fh.write(
            f"# {fld.grid.dim},{fld.grid.points_per_axis},{fld.grid.half_width!r},"
            f"{fld.ambient_dim},{fld.time_label!r},{int(fld.similarity_frame)}\r\n"
        )
        fh.write(",".join(f"u{k}" for k in range(fld.ambient_dim)) + "\r\n")
        flat = fld.values.reshape(-1, fld.ambient_dim)
        buf = io.StringIO()
        for row in flat:
            buf.write(",".join(repr(float(x)) for x in row) + "\r\n")
        fh.write(buf.getvalue())
