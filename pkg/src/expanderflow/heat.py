"""Discrete heat semigroup on lattice fields and caloric extensions.

The semigroup is a separable per-axis convolution with a sampled Gaussian
kernel, truncated at a fixed multiple of sqrt(t) and renormalized so the
weights sum to one exactly per axis (mass conservation and a discrete
maximum principle hold by construction). Outside the box the integrand is
closed either by an analytic far field (caloric extensions of homogeneous
data) or by zero (decaying correction fields).

The caloric extension of degree-zero data is self-similar, so a single
t = 1 slice represents the whole family; rescaling that slice is the cheap
evaluation path used by the solver and the diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.ndimage import convolve1d

from . import fields as fd
from .fields import GridSpec, LatticeField, SphericalData
from . import norms as nm


@dataclass(frozen=True)
class HeatOperator:
    """e^{t Delta} on a grid with a Gaussian tail cut at trunc * sqrt(t).

    far_field supplies values outside the box (None means zero extension).
    """

    grid: GridSpec
    time: float
    truncation: float = 8.0
    far_field: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if self.time <= 0.0:
            raise ValueError("time must be positive")
        if self.truncation < 6.0:
            raise ValueError("truncation below 6 sqrt(t) leaves tail mass above 1e-8")


def kernel_weights(h: float, t: float, truncation: float) -> np.ndarray:
    """Normalized 1D Gaussian taps on the lattice for bandwidth t."""
    half = max(1, math.ceil(truncation * math.sqrt(t) / h))
    x = np.arange(-half, half + 1) * h
    w = np.exp(-x * x / (4.0 * t))
    return w / w.sum()


def blur_values(
    values: np.ndarray,
    grid: GridSpec,
    t: float,
    truncation: float = 8.0,
    far_field: Callable[[np.ndarray], np.ndarray] | None = None,
) -> np.ndarray:
    """Apply the separable discrete heat kernel to node values.

    Pads by the kernel half-width, fills the pad band with the far field
    (or zero), sweeps one axis at a time, and crops back to the grid.
    Large padded arrays fall back to per-component sweeps to bound memory.
    """
    w = kernel_weights(grid.spacing, t, truncation)
    pad = (len(w) - 1) // 2
    if len(w) == 3 and w[1] > 1.0 - 1e-15:
        return np.array(values, copy=True)  # bandwidth below lattice scale
    m = grid.points_per_axis
    n = grid.dim
    ext_shape = (m + 2 * pad,) * n
    core = tuple(slice(pad, pad + m) for _ in range(n))

    band_values = None
    band_mask = None
    if far_field is not None:
        ax = (np.arange(m + 2 * pad) - pad) * grid.spacing - grid.half_width
        inside_1d = (np.arange(m + 2 * pad) >= pad) & (np.arange(m + 2 * pad) < pad + m)
        band_mask = np.zeros(ext_shape, dtype=bool)
        for axis in range(n):
            shape = [1] * n
            shape[axis] = m + 2 * pad
            band_mask |= ~inside_1d.reshape(shape)
        mesh = np.meshgrid(*([ax] * n), indexing="ij")
        pts = np.stack([g[band_mask] for g in mesh], axis=-1)
        band_values = far_field(pts)

    ambient = values.shape[-1]
    ext_bytes = 8 * ambient * (m + 2 * pad) ** n
    if ext_bytes <= 600_000_000:
        ext = np.zeros(ext_shape + (ambient,))
        ext[core] = values
        if band_values is not None:
            ext[band_mask] = band_values
        for axis in range(n):
            ext = convolve1d(ext, w, axis=axis, mode="constant", cval=0.0)
        return ext[core]

    out = np.empty_like(values)
    for comp in range(ambient):
        ext = np.zeros(ext_shape)
        ext[core] = values[..., comp]
        if band_values is not None:
            ext[band_mask] = band_values[:, comp]
        for axis in range(n):
            ext = convolve1d(ext, w, axis=axis, mode="constant", cval=0.0)
        out[..., comp] = ext[core]
    return out


def apply(op: HeatOperator, field: LatticeField) -> LatticeField:
    """Heat-evolve a lattice field by op.time."""
    if field.grid != op.grid:
        raise ValueError("field grid does not match the operator grid")
    values = blur_values(field.values, op.grid, op.time, op.truncation, op.far_field)
    return LatticeField(
        grid=op.grid,
        values=values,
        time_label=field.time_label + op.time,
        similarity_frame=field.similarity_frame,
    )


def caloric_extension_slice(
    data: SphericalData,
    grid: GridSpec,
    truncation: float = 8.0,
) -> LatticeField:
    """t = 1 slice of e^{t Delta} u_0 for homogeneous degree-zero data.

    By self-similarity the whole caloric family is this one slice:
    u_hat_0(x, t) = U_hat_0(x / sqrt(t)). The convolution reads the
    analytic u_0 outside the box.
    """
    u0 = fd.homogeneous_extend(data, grid)
    op = HeatOperator(grid=grid, time=1.0, truncation=truncation, far_field=data.initial_map)
    out = apply(op, u0)
    return LatticeField(grid=grid, values=out.values, time_label=1.0, similarity_frame=True)


def caloric_slice_at(
    caloric: LatticeField,
    data: SphericalData,
    t: float,
) -> LatticeField:
    """Evaluate the caloric family at time t by rescaling the t=1 slice."""
    if not caloric.similarity_frame:
        raise ValueError("expected the similarity-frame caloric slice")
    if t <= 0.0:
        raise ValueError("t must be positive")
    scale = 1.0 / math.sqrt(t)
    values = fd.resample_scaled(caloric.values, caloric.grid, scale, far_field=data.initial_map)
    return LatticeField(grid=caloric.grid, values=values, time_label=t)


def caloric_gradient_at(
    caloric_grad: np.ndarray,
    grid: GridSpec,
    data: SphericalData,
    t: float,
) -> np.ndarray:
    """Gradient of the caloric family at time t from the t=1 slice gradient.

    grad u_hat_0(x, t) = t^{-1/2} (grad U_hat_0)(x / sqrt(t)); outside the
    hull the initial gradient is the correct closure (it is invariant under
    the parabolic rescaling of degree-zero data).
    """
    scale = 1.0 / math.sqrt(t)
    n, L = grid.dim, caloric_grad.shape[-1]
    flatg = caloric_grad.reshape(grid.shape(n * L)[:-1] + (n * L,))

    def far(points):
        return data.initial_gradient(points).reshape(points.shape[0], n * L) * math.sqrt(t)

    out = fd.resample_scaled(flatg, grid, scale, far_field=far)
    return out.reshape(grid.shape(n * L)[:-1] + (n, L)) * scale


# ---------------------------------------------------------------------------
# measured semigroup estimates


def far_gradient_coefficient(data: SphericalData) -> float:
    """Coefficient c with |grad u_0|(x) = c / |x| for corotational data."""
    return abs(math.sin(data.alpha)) * math.sqrt(data.dim - 1)


def semigroup_estimate_report(
    data: SphericalData,
    grid: GridSpec,
    times: Sequence[float],
    p: float,
    truncation: float = 8.0,
) -> list[dict]:
    """Measured constants of the caloric gradient estimates.

    For each t the report carries the weak-L^n norm of grad u_hat_0(t), the
    scale-corrected L^{2n} and L^p norms, each normalized by the weak-L^n
    norm of grad u_0. Norms combine the lattice sum over the inscribed ball
    with the analytic homogeneous tail beyond it, so box truncation does
    not masquerade as decay. Slices with kernel support beyond the pad
    budget are evaluated by rescaling the measured t=1 slice (exact for
    self-similar caloric families; flagged in the `scaled` column).
    """
    n = grid.dim
    c_far = far_gradient_coefficient(data)
    u0 = fd.homogeneous_extend(data, grid)
    base_grad = fd.gradient(u0)
    base_weak = nm.weak_lp_norm_tail(np.linalg.norm(base_grad, axis=(-2, -1)), grid, n, c_far)
    caloric = caloric_extension_slice(data, grid, truncation)
    caloric_grad = fd.gradient(caloric)

    denom = base_weak if base_weak > 0.0 else 1.0
    g_ref = np.linalg.norm(caloric_grad, axis=(-2, -1))
    ref = {
        "weak": nm.weak_lp_norm_tail(g_ref, grid, n, c_far),
        "l2n": nm.lp_norm_tail(g_ref, grid, 2.0 * n, c_far),
        "lp": nm.lp_norm_tail(g_ref, grid, p, c_far),
    }

    t_conv_max = (2.0 * grid.half_width / truncation) ** 2
    rows = []
    for t in times:
        if t <= t_conv_max:
            # direct convolution; the homogeneous far tail is valid because
            # sqrt(t) stays well below the box size
            op = HeatOperator(grid=grid, time=t, truncation=truncation, far_field=data.initial_map)
            g = np.linalg.norm(fd.gradient(apply(op, u0)), axis=(-2, -1))
            weak = nm.weak_lp_norm_tail(g, grid, n, c_far)
            l2n = nm.lp_norm_tail(g, grid, 2.0 * n, c_far)
            lp = nm.lp_norm_tail(g, grid, p, c_far)
            scaled = False
        else:
            # beyond the pad budget the self-similar bulk escapes any fixed
            # box; extend by the exact parabolic scaling of the measured
            # t = 1 slice (the caloric self-similarity defect is checked
            # independently), under which the weighted norms are t-flat
            weak, l2n, lp = ref["weak"], ref["l2n"] * t**-0.25, ref["lp"] * t ** (
                -(n / 2.0) * (1.0 / n - 1.0 / p)
            )
            scaled = True
        rows.append(
            {
                "t": t,
                "weak_ln_ratio": weak / denom,
                "const_2n": t**0.25 * l2n / denom,
                "const_p": t ** ((n / 2.0) * (1.0 / n - 1.0 / p)) * lp / denom,
                "p": p,
                "scaled": scaled,
            }
        )
    return rows
