"""Geometry of the compact target manifold (round unit spheres in R^L).

Provides the nearest-point projection onto the sphere, the second
fundamental form in the sign convention that preserves the unit-norm
constraint under the flow, and the globally bounded smooth extension of
the form to all of ambient space via a C^2 cutoff in the normal distance.

Sign convention: differentiating the radial projection y/|y| twice along a
tangent direction X gives -|X|^2 y; the flow that keeps |u| = 1 invariant
needs the opposite sign, so the form used throughout is
A(y)(X, Y) = <X_tan, Y_tan> y.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import NotOnManifold, OutsideTube


class ManifoldKind(Enum):
    UnitSphere = "unit_sphere"


@dataclass(frozen=True)
class ManifoldDescriptor:
    """Target manifold N in R^L with its tubular-neighborhood data.

    ambient_dim : dimension L of the ambient Euclidean space (L >= 2)
    tube_radius : normal-tube half-width delta_N in (0, 1)
    cutoff_inner, cutoff_outer : band over which the extended form is
        ramped from full strength to zero, 0 < inner < outer <= tube_radius
    a_bound : uniform bound on |A(y)(X,Y)| / (|X||Y|)
    """

    ambient_dim: int
    kind: ManifoldKind = ManifoldKind.UnitSphere
    tube_radius: float = 0.5
    cutoff_inner: float = 0.25
    cutoff_outer: float = 0.5
    a_bound: float = 1.0

    def __post_init__(self):
        if self.ambient_dim < 2:
            raise ValueError("ambient_dim must be >= 2")
        if self.kind is not ManifoldKind.UnitSphere:
            raise ValueError(f"unsupported manifold kind: {self.kind}")
        if not 0.0 < self.tube_radius < 1.0:
            raise ValueError("tube_radius must lie in (0, 1) for the unit sphere")
        if not 0.0 < self.cutoff_inner < self.cutoff_outer <= self.tube_radius:
            raise ValueError("need 0 < cutoff_inner < cutoff_outer <= tube_radius")
        if self.a_bound <= 0.0:
            raise ValueError("a_bound must be positive")


def unit_sphere(ambient_dim: int, tube_radius: float = 0.5) -> ManifoldDescriptor:
    """Round unit sphere S^{L-1} in R^L with the default cutoff band."""
    return ManifoldDescriptor(
        ambient_dim=ambient_dim,
        tube_radius=tube_radius,
        cutoff_inner=tube_radius / 2.0,
        cutoff_outer=tube_radius,
    )


def distance(desc: ManifoldDescriptor, y: np.ndarray) -> np.ndarray:
    """Euclidean distance from ambient points to N (exact for spheres)."""
    y = np.asarray(y, dtype=float)
    return np.abs(np.linalg.norm(y, axis=-1) - 1.0)


def project(desc: ManifoldDescriptor, y: np.ndarray) -> np.ndarray:
    """Nearest-point projection of `y` onto N.

    `y` may carry leading batch axes; the last axis is the ambient
    coordinate. Raises OutsideTube if any point is farther than
    tube_radius from N.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != desc.ambient_dim:
        raise ValueError("ambient dimension mismatch")
    r = np.linalg.norm(y, axis=-1)
    if np.any(np.abs(r - 1.0) >= desc.tube_radius):
        raise OutsideTube(
            f"point at distance {float(np.max(np.abs(r - 1.0))):.3g} from N "
            f"(tube radius {desc.tube_radius})"
        )
    return y / r[..., None]


def tangential_part(desc: ManifoldDescriptor, p: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Component of ambient vectors `x` tangent to the sphere at `p` (unit)."""
    x = np.asarray(x, dtype=float)
    return x - np.sum(x * p, axis=-1, keepdims=True) * p


def second_fundamental_form(
    desc: ManifoldDescriptor,
    y: np.ndarray,
    x_vec: np.ndarray,
    y_vec: np.ndarray,
    tol: float = 1e-8,
) -> np.ndarray:
    """Second fundamental form A(y)(X, Y) = <X_tan, Y_tan> y on the sphere.

    `y` must lie on N within `tol`; non-tangent components of the input
    vectors are projected off first. Output is normal to T_y N and
    symmetric bilinear in (X, Y).
    """
    y = np.asarray(y, dtype=float)
    if np.any(distance(desc, y) > tol):
        raise NotOnManifold("base point is not on the target manifold")
    p = y / np.linalg.norm(y, axis=-1, keepdims=True)
    xt = tangential_part(desc, p, x_vec)
    yt = tangential_part(desc, p, y_vec)
    return np.sum(xt * yt, axis=-1)[..., None] * p


def _cutoff(desc: ManifoldDescriptor, d: np.ndarray) -> np.ndarray:
    """C^2 ramp in the normal distance: 1 below the inner radius, 0 beyond
    the outer one, quintic smoothstep in between."""
    s = (d - desc.cutoff_inner) / (desc.cutoff_outer - desc.cutoff_inner)
    s = np.clip(s, 0.0, 1.0)
    return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s**2)


def extended_form(
    desc: ManifoldDescriptor,
    y: np.ndarray,
    x_vec: np.ndarray,
    y_vec: np.ndarray,
) -> np.ndarray:
    """Bounded smooth extension of the second fundamental form to all of R^L.

    Equals A at points of N, follows A(project(y)) through the tube scaled
    by the distance cutoff, and vanishes identically beyond the outer
    cutoff radius. Defined for every ambient point, including y = 0.
    """
    y = np.asarray(y, dtype=float)
    r = np.linalg.norm(y, axis=-1)
    d = np.abs(r - 1.0)
    chi = _cutoff(desc, d)
    # Beyond the outer cutoff (this includes a neighborhood of the origin,
    # since cutoff_outer <= tube_radius < 1) the form is identically zero,
    # so the unnormalized direction never divides by zero.
    safe_r = np.where(r > 1.0 - desc.cutoff_outer, r, 1.0)
    p = y / safe_r[..., None]
    xt = tangential_part(desc, p, np.asarray(x_vec, dtype=float))
    yt = tangential_part(desc, p, np.asarray(y_vec, dtype=float))
    coeff = chi * np.sum(xt * yt, axis=-1)
    return coeff[..., None] * p


def quadratic_source(
    desc: ManifoldDescriptor,
    u: np.ndarray,
    grad_u: np.ndarray,
) -> np.ndarray:
    """Sum over directions of the extended form on the gradient,
    sum_i A_hat(u)(d_i u, d_i u) — the reaction term of the flow.

    u : (..., L) ambient values; grad_u : (..., n, L) spatial gradient.
    Vectorized over all leading axes.
    """
    u = np.asarray(u, dtype=float)
    grad_u = np.asarray(grad_u, dtype=float)
    r = np.linalg.norm(u, axis=-1)
    chi = _cutoff(desc, np.abs(r - 1.0))
    safe_r = np.where(r > 1.0 - desc.cutoff_outer, r, 1.0)
    p = u / safe_r[..., None]
    # |(d_i u)_tan|^2 = |d_i u|^2 - <d_i u, p>^2, summed over directions i
    g2 = np.sum(grad_u * grad_u, axis=(-2, -1))
    proj = np.einsum("...il,...l->...i", grad_u, p)
    coeff = chi * (g2 - np.sum(proj * proj, axis=-1))
    return coeff[..., None] * p
