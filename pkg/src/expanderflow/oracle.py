"""Corotational profile ODE: an independent oracle for the full solver.

Derivation of the reduction
---------------------------
A self-similar flow u(x, t) = U(x / sqrt(t)) into the unit sphere solves
the expander profile equation

    Delta U + (y . grad U) / 2 + |grad U|^2 U = 0   on R^n,

obtained by substituting the self-similar ansatz into the sphere flow
d_t u = Delta u + |grad u|^2 u (the time derivative contributes the drift
term -(y . grad U) / (2t), the right side scales like 1/t).

Corotational maps into S^n in R^{n+1} take the form

    U(y) = (sin(psi(rho)) * w, cos(psi(rho))),  rho = |y|, w = y / rho.

Two identities reduce the system to a scalar ODE.  First, for a radial
profile times the angular coordinate, component by component,

    Delta(f(rho) w_i) = (f'' + (n-1) f'/rho - (n-1) f/rho^2) w_i,

because w_i is a first spherical harmonic (eigenvalue -(n-1) of the
spherical Laplacian) extended with homogeneity zero; and y . grad of any
degree-zero angular factor vanishes, so y . grad(f w_i) = rho f' w_i.
Second, the energy density of the ansatz is

    |grad U|^2 = psi'^2 + (n-1) sin^2(psi) / rho^2

(the cross terms cancel since w . grad w_i = 0).  Substituting and using
sin^2 + cos^2 = 1, every component of the profile equation reduces to the
same scalar equation

    psi'' + ((n-1)/rho + rho/2) psi' - ((n-1) / (2 rho^2)) sin(2 psi) = 0,

with boundary conditions psi(0) = 0 (regularity at the origin) and
psi(inf) = alpha (the boundary angle of the degree-zero data).

Series launch at the origin.  Writing psi = a rho + b rho^3 + O(rho^5) and
expanding sin(2 psi)/2 = psi - (2/3) psi^3 + ..., the 1/rho terms cancel
identically and matching the O(rho) terms forces

    b = -( a/2 + (2/3)(n-1) a^3 ) / (2n + 4).

(The linear-in-a part comes from the drift term rho psi'/2; the cubic part
from the sine nonlinearity.)  Integration starts at rho_0 = 1e-4 from this
series to avoid the coordinate singularity.

Far-field tail.  Writing psi = psi_inf + c2/rho^2 + c4/rho^4 + ... and
matching orders gives

    c2 = -(n-1) sin(2 psi_inf) / 2,
    c4 = c2 * (6 - 2(n-1) - (n-1) cos(2 psi_inf)) / 2,

while the homogeneous mode decays like exp(-rho^2/4) and is negligible at
the extraction radius.  The limit psi_inf is extracted from psi(rho_max)
by fixed-point iteration on this two-term tail model, which keeps the
extraction error at O(rho_max^{-6}).  The algebraic tail means the decay
exponent of psi - psi_inf measured on [10, rho_max] is 2, not Gaussian:
for small alpha the c2 term dominates whenever sin(2 alpha) != 0.

The boundary problem psi(0) = 0, psi(inf) = alpha is solved by bisection
on the launch slope a, using the monotonicity of a -> psi_inf(a) near
a = 0 (verified at runtime by the bracket search).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import BlowUp, NoBracket
from .fields import GridSpec, LatticeField

RHO_START = 1e-4


def series_coefficient(n: int, a: float) -> float:
    """Cubic coefficient of the origin series psi = a rho + b rho^3 + ..."""
    return -(a / 2.0 + (2.0 / 3.0) * (n - 1) * a**3) / (2.0 * n + 4.0)


def _rhs(n: int, linearized: bool = False):
    k = n - 1

    def rhs(rho, y):
        psi, dpsi = y
        source = k * psi / rho**2 if linearized else k * math.sin(2.0 * psi) / (2.0 * rho**2)
        return (dpsi, source - (k / rho + rho / 2.0) * dpsi)

    return rhs


def _launch_state(n: int, a: float, rho0: float) -> tuple[float, float]:
    b = series_coefficient(n, a)
    return a * rho0 + b * rho0**3, a + 3.0 * b * rho0**2


def _integrate(n: int, a: float, rho_max: float, linearized: bool = False):
    """Adaptive RK45 integration from the series launch; terminal event at
    |psi| = pi (slope too large for the monotone branch)."""
    if a == 0.0:
        return None
    y0 = _launch_state(n, a, RHO_START)
    if abs(y0[0]) >= math.pi:
        raise BlowUp(f"launch state |psi| = {abs(y0[0]):.3g} already beyond pi (slope too large)")

    def escape(rho, y):
        return abs(y[0]) - math.pi

    escape.terminal = True
    sol = solve_ivp(
        _rhs(n, linearized),
        (RHO_START, rho_max),
        y0,
        method="RK45",
        rtol=1e-12,
        atol=1e-14,
        dense_output=True,
        events=escape,
    )
    if not sol.success and sol.status != 1:
        raise BlowUp(f"profile integration failed: {sol.message}")
    return sol


def integrate_profile(n: int, a: float, rho_max: float, samples: int = 1024, linearized: bool = False):
    """Integrate the profile ODE with launch slope `a`.

    Returns (rho_grid, psi, dpsi) on a log-spaced grid. Raises BlowUp if
    |psi| exceeds pi before rho_max.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if rho_max < 20.0:
        raise ValueError("rho_max must be >= 20")
    rho = np.geomspace(RHO_START, rho_max, samples)
    if a == 0.0:
        return rho, np.zeros_like(rho), np.zeros_like(rho)
    sol = _integrate(n, a, rho_max, linearized)
    if sol.status == 1:
        raise BlowUp(f"|psi| reached pi at rho = {float(sol.t_events[0][0]):.4g}")
    y = sol.sol(rho)
    return rho, y[0], y[1]


def tail_limit(n: int, psi_end: float, rho_end: float) -> float:
    """Extract psi_inf from psi(rho_end) using the two-term algebraic tail."""
    k = n - 1
    psi_inf = psi_end
    for _ in range(4):
        c2 = -k * math.sin(2.0 * psi_inf) / 2.0
        c4 = c2 * (6.0 - 2.0 * k - k * math.cos(2.0 * psi_inf)) / 2.0
        psi_inf = psi_end - c2 / rho_end**2 - c4 / rho_end**4
    return psi_inf


def _limit_of_slope(n: int, a: float, rho_max: float) -> float:
    """psi_inf for a launch slope; +-inf marks a blown-up shot."""
    if a == 0.0:
        return 0.0
    try:
        sol = _integrate(n, a, rho_max)
    except BlowUp:
        return math.copysign(math.inf, a)
    if sol.status == 1:
        return math.copysign(math.inf, sol.y_events[0][0][0])
    return tail_limit(n, float(sol.y[0, -1]), rho_max)


@dataclass
class ProfileSolution:
    """Shooting solution of the corotational boundary problem."""

    dim: int
    alpha: float
    slope: float
    rho_grid: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    rho_max: float
    psi_inf: float
    converged: bool
    tail_fit: float
    _dense: object = None

    def psi_at(self, rho: np.ndarray) -> np.ndarray:
        """Evaluate psi at arbitrary radii: series below the launch radius,
        dense ODE solution on [rho_0, rho_max], algebraic tail beyond."""
        rho = np.asarray(rho, dtype=float)
        out = np.empty_like(rho)
        if self.slope == 0.0:
            out.fill(0.0)
            return out
        near = rho < RHO_START
        far = rho > self.rho_max
        mid = ~(near | far)
        b = series_coefficient(self.dim, self.slope)
        out[near] = self.slope * rho[near] + b * rho[near] ** 3
        if np.any(mid):
            out[mid] = self._dense(rho[mid])[0]
        if np.any(far):
            k = self.dim - 1
            c2 = -k * math.sin(2.0 * self.psi_inf) / 2.0
            c4 = c2 * (6.0 - 2.0 * k - k * math.cos(2.0 * self.psi_inf)) / 2.0
            out[far] = self.psi_inf + c2 / rho[far] ** 2 + c4 / rho[far] ** 4
        return out

    def save(self, csv_path: str, json_path: str) -> None:
        with open(csv_path, "w", newline="") as fh:
            fh.write("rho,psi,dpsi\r\n")
            for r, p, d in zip(self.rho_grid, self.psi, self.dpsi):
                fh.write(f"{float(r)!r},{float(p)!r},{float(d)!r}\r\n")
        header = {
            "schema_version": 1,
            "n": self.dim,
            "alpha": self.alpha,
            "slope": self.slope,
            "psi_inf": self.psi_inf,
            "rho_max": self.rho_max,
            "converged": self.converged,
            "tail_fit": self.tail_fit,
        }
        with open(json_path, "w") as fh:
            json.dump(header, fh, sort_keys=True, indent=2)
            fh.write("\n")


def _fit_tail_exponent(rho: np.ndarray, psi: np.ndarray, psi_inf: float) -> float:
    """Least-squares decay exponent kappa of |psi - psi_inf| ~ rho^{-kappa}
    on rho >= 10."""
    mask = (rho >= 10.0) & (np.abs(psi - psi_inf) > 1e-14)
    if np.count_nonzero(mask) < 4:
        return 0.0
    x = np.log(rho[mask])
    y = np.log(np.abs(psi[mask] - psi_inf))
    slope = np.polyfit(x, y, 1)[0]
    return float(-slope)


def shoot(
    n: int,
    alpha: float,
    tol_shoot: float = 1e-10,
    rho_max: float = 30.0,
    max_bisect: int = 200,
) -> ProfileSolution:
    """Solve psi(0) = 0, psi(inf) = alpha by bisection on the launch slope.

    Raises NoBracket when no slope in |a| <= 2 reaches the target angle
    (alpha outside the small-data shooting regime for this n).
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if tol_shoot > 1e-8:
        raise ValueError("tol_shoot must be <= 1e-8")
    if abs(alpha) >= math.pi:
        raise NoBracket("target angle reaches the escape band of the profile ODE")
    if alpha < 0.0:
        flipped = shoot(n, -alpha, tol_shoot, rho_max, max_bisect)
        return ProfileSolution(
            dim=n,
            alpha=alpha,
            slope=-flipped.slope,
            rho_grid=flipped.rho_grid,
            psi=-flipped.psi,
            dpsi=-flipped.dpsi,
            rho_max=rho_max,
            psi_inf=-flipped.psi_inf,
            converged=flipped.converged,
            tail_fit=flipped.tail_fit,
            _dense=None if flipped._dense is None else (lambda r: -flipped._dense(r)),
        )

    if alpha == 0.0:
        rho = np.geomspace(RHO_START, rho_max, 1024)
        zeros = np.zeros_like(rho)
        return ProfileSolution(n, 0.0, 0.0, rho, zeros, zeros, rho_max, 0.0, True, 0.0, None)

    # For small data the limit exceeds the slope (smoothing carries the
    # profile past its launch angle), so hi = alpha usually brackets at once;
    # the expansion loop covers the saturated regime.
    lo = 0.0
    hi = alpha
    f_hi = _limit_of_slope(n, hi, rho_max) - alpha
    while f_hi < 0.0:
        hi *= 2.0
        if hi > 2.0:
            raise NoBracket(f"no slope in |a| <= 2 reaches alpha = {alpha}")
        f_hi = _limit_of_slope(n, hi, rho_max) - alpha

    slope = hi
    for _ in range(max_bisect):
        mid = 0.5 * (lo + hi)
        f_mid = _limit_of_slope(n, mid, rho_max) - alpha
        if abs(f_mid) <= tol_shoot:
            slope = mid
            break
        if f_mid < 0.0:
            lo = mid
        else:
            hi = mid
        slope = 0.5 * (lo + hi)

    sol = _integrate(n, slope, rho_max)
    rho = np.geomspace(RHO_START, rho_max, 1024)
    y = sol.sol(rho)
    psi_inf = tail_limit(n, float(sol.y[0, -1]), rho_max)
    converged = abs(psi_inf - alpha) <= tol_shoot
    return ProfileSolution(
        dim=n,
        alpha=alpha,
        slope=slope,
        rho_grid=rho,
        psi=y[0],
        dpsi=y[1],
        rho_max=rho_max,
        psi_inf=psi_inf,
        converged=converged,
        tail_fit=_fit_tail_exponent(rho, y[0], psi_inf),
        _dense=sol.sol,
    )


def lift_profile(profile: ProfileSolution, grid: GridSpec) -> LatticeField:
    """Realize the profile as a corotational lattice field on S^n.

    Values are exactly unit norm by construction. The slice is tagged as
    the similarity frame (U(y) with u(x,t) = U(x/sqrt(t)))."""
    if grid.dim != profile.dim:
        raise ValueError("grid dimension does not match the profile")
    if not profile.converged:
        raise ValueError("profile did not converge to the boundary angle")
    nodes = grid.nodes()
    rho = np.linalg.norm(nodes, axis=-1)
    psi = profile.psi_at(rho)
    safe = np.where(rho > 0.0, rho, 1.0)
    omega = nodes / safe[..., None]
    values = np.empty(grid.shape(grid.dim + 1))
    values[..., : grid.dim] = np.sin(psi)[..., None] * omega
    values[..., grid.dim] = np.cos(psi)
    center = (grid.points_per_axis - 1) // 2
    pole = np.zeros(grid.dim + 1)
    pole[-1] = 1.0
    values[(center,) * grid.dim] = pole
    return LatticeField(
        grid=grid, values=values, time_label=1.0, similarity_frame=True, on_manifold_tol=1e-12
    )


def profile_lattice_residual(profile: ProfileSolution, field: LatticeField, exclude_radius: float = 1.0) -> float:
    """Finite-difference residual of the profile equation on a lifted field.

    Measures |Delta U + y.grad U / 2 + |grad U|^2 U| in sup norm away from
    the origin and the boundary layer; O(h^2) for a converged profile."""
    from . import fields as fd

    grid = field.grid
    h = grid.spacing
    lap = fd.laplacian_of_values(field.values, h, grid.dim)
    grad = fd.gradient(field)
    nodes = grid.nodes()
    drift = 0.5 * np.einsum("...i,...il->...l", nodes, grad)
    dens = np.sum(grad * grad, axis=(-2, -1))
    resid = lap + drift + dens[..., None] * field.values
    rho = np.linalg.norm(nodes, axis=-1)
    interior = np.all(np.abs(nodes) <= grid.half_width - 2.5 * h, axis=-1)
    mask = interior & (rho >= exclude_radius)
    return float(np.max(np.linalg.norm(resid[mask], axis=-1)))
