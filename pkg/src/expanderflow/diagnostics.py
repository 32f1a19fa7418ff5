"""Verification suite: ties the computed solution back to the checkable
estimates of the construction.

Every check is a measured quantity with an explicit threshold: the strong
PDE residual on resolvable slices, the self-similarity defect across
parabolic rescalings, the localized energy inequality margins, the fitted
decay exponent of the renormalized energy at the initial time, parabolic
Holder seminorms, and the semigroup constants of the caloric extension.

Resolvability: slices with t below ~(4h)^2 carry features finer than the
lattice, so sup-type residuals are measured on t >= resolvable_factor*h^2
and inside a margin away from the truncation boundary. Inequality checks
allow a small quadrature slack because both sides are discretized
integrals of an integrand that is not smooth in time at t = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import fields as fd
from . import heat
from . import manifold as mf
from . import norms as nm
from .duhamel import MildSolution
from .errors import RegionOutsideGrid, ScheduleTooCoarse
from .fields import GridSpec
from .manifold import ManifoldDescriptor


# ---------------------------------------------------------------------------
# strong PDE residual


def pde_residual_slices(
    slices: Sequence[tuple[float, np.ndarray]],
    grid: GridSpec,
    desc: ManifoldDescriptor | None,
    min_time: float = 0.0,
    margin: float = 0.8,
) -> float:
    """sup |d_t u - Lap u - A_hat(u)(grad u, grad u)| over interior nodes
    and interior slices with t >= min_time.

    Time differencing is second-order central on the geometric schedule
    (uniform in log t, with the 1/t chain-rule factor); space is
    fourth-order. desc None drops the reaction term (flat target).
    """
    if len(slices) < 3:
        raise ScheduleTooCoarse("need at least 3 consecutive time slices")
    times = [t for t, _ in slices]
    logs = np.diff(np.log(times))
    if np.max(np.abs(logs - logs[0])) > 1e-9:
        raise ValueError("slices must form a geometric schedule")
    dlog = float(logs[0])
    h = grid.spacing
    nodes = grid.nodes()
    interior = np.all(np.abs(nodes) <= margin * grid.half_width, axis=-1)
    inner = np.zeros_like(interior)
    core = tuple(slice(2, -2) for _ in range(grid.dim))
    inner[core] = True
    mask = interior & inner

    worst = 0.0
    for j in range(1, len(slices) - 1):
        t, u = slices[j]
        if t < min_time:
            continue
        dudt = (slices[j + 1][1] - slices[j - 1][1]) / (2.0 * dlog * t)
        lap = fd.laplacian_of_values(u, h, grid.dim)
        resid = dudt - lap
        if desc is not None:
            grad = fd.gradient_of_values(u, h, grid.dim)
            resid = resid - mf.quadratic_source(desc, u, grad)
        worst = max(worst, float(np.max(np.linalg.norm(resid[mask], axis=-1))))
    return worst


def resolvable_min_time(grid: GridSpec, factor: float = 16.0) -> float:
    return factor * grid.spacing**2


def pde_residual(solution: MildSolution, margin: float = 0.8) -> float:
    """Strong residual of a converged run on its resolvable slices."""
    grid = solution.grid
    tmin = resolvable_min_time(grid)
    slices = [
        (t, solution.u_slice_values(j))
        for j, t in enumerate(solution.state.schedule)
        if t >= tmin / 4.0
    ]
    return pde_residual_slices(slices, grid, solution.state.desc, min_time=tmin, margin=margin)


# ---------------------------------------------------------------------------
# self-similarity defect


def similarity_defect(
    solution: MildSolution,
    lam: float,
    samples: int = 1024,
    seed: int = 0,
) -> float:
    """sup over a seeded sample of |u(lam x, lam^2 t) - u(x, t)|.

    Times are drawn from schedule slices whose lam^2-multiple is also a
    slice; points keep lam*x inside 0.75 of the box.
    """
    if lam <= 1.0:
        raise ValueError("lam must exceed 1")
    grid = solution.grid
    schedule = solution.state.schedule
    tmin = resolvable_min_time(grid)
    paired = [
        t for t in schedule if any(abs(lam * lam * t - s) <= 1e-9 * s for s in schedule)
    ]
    if not paired:
        raise ValueError("no schedule slice pairs for this lambda")
    eligible = [t for t in paired if t >= tmin]
    if not eligible:
        # under-resolved grid: fall back to the latest available pairs
        eligible = paired[-3:]
    rng = np.random.default_rng(seed)
    per_t = max(1, samples // len(eligible))
    worst = 0.0
    bound = 0.75 * grid.half_width / lam
    for t in eligible:
        pts = rng.uniform(-bound, bound, size=(per_t, grid.dim))
        u1 = solution.sample_u(pts, np.full(per_t, t))
        u2 = solution.sample_u(lam * pts, np.full(per_t, lam * lam * t))
        worst = max(worst, float(np.max(np.linalg.norm(u1 - u2, axis=-1))))
    return worst


# ---------------------------------------------------------------------------
# localized energy inequality


def _time_integral(times: list[float], vals: list[float], t_end: float) -> float:
    """Trapezoid over the (sorted) sample times, cut exactly at t_end by
    linear interpolation of the integrand."""
    ts = [t for t in times if t <= t_end * (1.0 + 1e-12)]
    vs = vals[: len(ts)]
    if ts and ts[-1] < t_end and len(times) > len(ts):
        t_next, v_next = times[len(ts)], vals[len(ts)]
        w = (t_end - ts[-1]) / (t_next - ts[-1])
        ts = ts + [t_end]
        vs = vs + [(1.0 - w) * vs[-1] + w * v_next]
    return float(np.trapezoid(np.asarray(vs), np.asarray(ts)))


@dataclass
class CylinderCheck:
    center: tuple
    radius: float
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


def local_energy_check(solution: MildSolution, x0, radius: float) -> CylinderCheck:
    """Both sides of the localized energy inequality on B_R(x0) x [0, R^2]:

        sup_{t <= R^2} int_{B_{R/2}} |grad u(t)|^2
          + int_{B_{R/2} x [0,R^2]} |Lap u + A(u)(grad u, grad u)|^2
        <=  int_{B_R} |grad u_0|^2  +  (64/R^2) int_{B_R x [0,R^2]} |grad u|^2.
    """
    grid = solution.grid
    c = np.asarray(x0, dtype=float)
    if np.any(np.abs(c) + radius > grid.half_width * (1.0 + 1e-12)):
        raise RegionOutsideGrid("cylinder leaves the grid")
    desc = solution.state.desc
    h = grid.spacing
    t_end = radius**2
    schedule = [t for t in solution.state.schedule]

    u0 = fd.homogeneous_extend(solution.state.data, grid)
    slices = [(0.0, u0.values)]
    for j, t in enumerate(schedule):
        if t <= t_end * (1.0 + 1e-12):
            slices.append((t, solution.u_slice_values(j)))
    # one slice beyond the cylinder for the exact-endpoint cut
    beyond = [j for j, t in enumerate(schedule) if t > t_end * (1.0 + 1e-12)]
    if beyond:
        j = beyond[0]
        slices.append((schedule[j], solution.u_slice_values(j)))

    inner = nm.Ball(tuple(float(v) for v in c), radius / 2.0)
    outer = nm.Ball(tuple(float(v) for v in c), radius)
    times, half_e, full_e, tension = [], [], [], []
    for t, u in slices:
        grad = fd.gradient_of_values(u, h, grid.dim)
        half_e.append(nm.lp_norm(grad, grid, 2.0, inner) ** 2)
        full_e.append(nm.lp_norm(grad, grid, 2.0, outer) ** 2)
        lap = fd.laplacian_of_values(u, h, grid.dim)
        tens = lap + mf.quadratic_source(desc, u, grad)
        tension.append(nm.lp_norm(tens, grid, 2.0, inner) ** 2)
        times.append(t)

    sup_half = max(v for t, v in zip(times, half_e) if t <= t_end * (1.0 + 1e-12))
    lhs = sup_half + _time_integral(times, tension, t_end)
    rhs = full_e[0] + (64.0 / radius**2) * _time_integral(times, full_e, t_end)
    return CylinderCheck(center=tuple(float(v) for v in c), radius=radius, lhs=lhs, rhs=rhs)


def default_cylinders(grid: GridSpec) -> list[tuple[tuple, float]]:
    """Six cylinders away from the space-time origin, inside the box."""
    n = grid.dim
    c1 = (1.0,) + (0.0,) * (n - 1)
    c2 = (0.0, 1.5) + (0.0,) * (n - 2)
    c3 = (-1.25,) + (0.0,) * (n - 1)
    return [(c, r) for c in (c1, c2, c3) for r in (0.25, 0.5)]


# ---------------------------------------------------------------------------
# energy decay exponent


def decay_energy_profile(solution: MildSolution, x0, radii: Sequence[float]) -> list[tuple[float, float]]:
    """Renormalized q=2 energies of B_r(x0) x [0, r^2] per radius."""
    grid = solution.grid
    c = np.asarray(x0, dtype=float)
    t_top = max(radii) ** 2
    u0 = fd.homogeneous_extend(solution.state.data, grid)
    grad_slices = [(0.0, fd.gradient_of_values(u0.values, grid.spacing, grid.dim))]
    for j, t in enumerate(solution.state.schedule):
        if t <= 4.0 * t_top:
            grad_slices.append(
                (t, fd.gradient_of_values(solution.u_slice_values(j), grid.spacing, grid.dim))
            )
    return [(r, nm.renormalized_energy(grad_slices, grid, c, r, 2.0)) for r in sorted(radii)]


def decay_exponent_fit(solution: MildSolution, x0, radii: Sequence[float]) -> float:
    """Least-squares slope of log(renormalized q=2 energy of
    B_r(x0) x [0, r^2]) against log r; returns the fitted 2*alpha_0.

    Underflowing energies flag a vacuous fit (returns +inf)."""
    if len(radii) < 4:
        raise ValueError("need at least 4 radii")
    c = np.asarray(x0, dtype=float)
    r_abs = float(np.linalg.norm(c))
    if not 0.5 - 1e-12 <= r_abs <= 2.0 + 1e-12:
        raise ValueError("fit anchor must satisfy 1/2 <= |x0| <= 2")
    profile = decay_energy_profile(solution, x0, radii)
    energies = [e for _, e in profile]
    if all(e < 1e-14 for e in energies):
        return math.inf
    rs = np.log(np.asarray([r for r, _ in profile]))
    es = np.log(np.maximum(np.asarray(energies), 1e-300))
    return float(np.polyfit(rs, es, 1)[0])


def default_decay_radii(r0: float = 0.25, count: int = 5) -> list[float]:
    return [r0 * 2.0 ** (-k / 4.0) for k in range(count)]


def interior_decay_table(
    solution: MildSolution, x0, radii: Sequence[float], t0: float
) -> list[dict]:
    """Secondary table: renormalized energies of interior cylinders
    B_r(x0) x [t0 - r^2, t0 + r^2] (away from the initial time), where the
    interior gradient bound makes the decay order-two in r."""
    grid = solution.grid
    c = np.asarray(x0, dtype=float)
    rows = []
    schedule = solution.state.schedule
    grads = {}

    def energy_at(j: int, r: float) -> float:
        if j not in grads:
            grads[j] = fd.gradient_of_values(solution.u_slice_values(j), grid.spacing, grid.dim)
        return nm._ball_energy(grads[j], grid, c, r, 2.0)

    for r in sorted(radii):
        lo, hi = t0 - r * r, t0 + r * r
        if lo <= 0.0:
            raise ValueError("interior cylinder must stay away from t = 0")
        # slices bracketing the window, integrand cut at the window ends by
        # linear interpolation (windows can be narrower than a schedule gap)
        js = [j for j, t in enumerate(schedule) if lo <= t <= hi]
        before = [j for j, t in enumerate(schedule) if t < lo]
        after = [j for j, t in enumerate(schedule) if t > hi]
        if not before or not after:
            continue
        support = [before[-1]] + js + [after[0]]
        times = [schedule[j] for j in support]
        vals = [energy_at(j, r) for j in support]
        cut_t, cut_v = [lo], [np.interp(lo, times, vals)]
        for t, v in zip(times, vals):
            if lo < t < hi:
                cut_t.append(t)
                cut_v.append(v)
        cut_t.append(hi)
        cut_v.append(float(np.interp(hi, times, vals)))
        integral = float(np.trapezoid(np.asarray(cut_v), np.asarray(cut_t)))
        rows.append({"r": r, "energy": r ** (-float(grid.dim)) * integral})
    return rows


# ---------------------------------------------------------------------------
# smoothness probe of the profile slice


def smoothness_probe(
    frame_values: np.ndarray,
    grid: GridSpec,
    radii: Sequence[float] = (1.0, 2.0, 4.0),
    orders: Sequence[int] = (1, 2),
) -> list[dict]:
    """Finite-difference C^k seminorm estimates of the profile slice on
    centered balls: sup of the Frobenius norm of the k-th derivatives."""
    h = grid.spacing
    n = grid.dim
    grad = fd.gradient_of_values(frame_values, h, n)
    rows = []
    nodes = grid.nodes()
    rho2 = np.sum(nodes * nodes, axis=-1)
    for radius in radii:
        mask = rho2 <= radius**2
        for k in orders:
            if k == 1:
                val = float(np.max(np.linalg.norm(grad[mask].reshape(np.count_nonzero(mask), -1), axis=-1)))
            else:
                hess_sq = np.zeros(frame_values.shape[:-1])
                for ax in range(n):
                    second = fd.gradient_of_values(grad[..., ax, :], h, n)
                    hess_sq += np.sum(second * second, axis=(-2, -1))
                val = float(np.sqrt(np.max(hess_sq[mask])))
            rows.append({"R": radius, "k": k, "seminorm": val})
    return rows


# ---------------------------------------------------------------------------
# assembled verification report


@dataclass
class VerificationThresholds:
    pde_residual_max: float = 5e-3
    dist_max: float = 1e-3
    defect2_max: float = 1e-3
    defect4_max: float = 2e-3
    lei_slack: float = 0.05
    weak_ratio_max: float = 1.05
    constant_spread_max: float = 2.0
    increment_ratio_max: float = 0.9
    holder_pairs: int = 2048
    defect_samples: int = 1024


@dataclass
class VerificationReport:
    pde_residual: float = math.nan
    similarity_defect: dict = field(default_factory=dict)
    lei: list = field(default_factory=list)
    decay_fits: list = field(default_factory=list)
    holder: tuple = (0.0, 0.0)
    semigroup: list = field(default_factory=list)
    trace_summary: dict = field(default_factory=dict)
    pass_flags: dict = field(default_factory=dict)

    def all_pass(self) -> bool:
        return all(self.pass_flags.values())

    def to_json_dict(self) -> dict:
        return {
            "schema_version": 1,
            "pde_residual": self.pde_residual,
            "similarity_defect": {str(k): v for k, v in sorted(self.similarity_defect.items())},
            "lei": [
                {"center": list(c.center), "R": c.radius, "lhs": c.lhs, "rhs": c.rhs, "slack": c.slack}
                for c in self.lei
            ],
            "decay_fits": list(self.decay_fits),
            "holder": {"gamma": self.holder[0], "seminorm": self.holder[1]},
            "semigroup": self.semigroup,
            "trace": self.trace_summary,
            "pass_flags": dict(sorted(self.pass_flags.items())),
        }

    def text_summary(self) -> str:
        lines = []
        for name, ok in sorted(self.pass_flags.items()):
            lines.append(f"[{'PASS' if ok else 'FAIL'}] {name}")
        lines.append(f"pde_residual = {self.pde_residual:.3e}")
        for lam, val in sorted(self.similarity_defect.items()):
            lines.append(f"similarity_defect(lambda={lam}) = {val:.3e}")
        for c in self.lei:
            lines.append(
                f"LEI at {c.center} R={c.radius}: lhs={c.lhs:.4e} rhs={c.rhs:.4e} slack={c.slack:.2e}"
            )
        for row in self.decay_fits:
            lines.append(f"decay fit at {row['x0']}: 2*alpha = {row['exponent']:.3f}")
        lines.append(f"holder seminorm (gamma={self.holder[0]:.3g}) = {self.holder[1]:.4g}")
        return "\n".join(lines)


def build_norm_report(solution: MildSolution, seed: int = 0, holder_pairs: int = 2048) -> nm.NormReport:
    """Norm functionals of a finished run: gradient norms at the t ~ 1
    slice, the iteration norm of v, BMO of the initial data, the six
    default cylinder energies, and the sampled Holder seminorm."""
    from .duhamel import iterate_x_norm

    grid = solution.grid
    n = grid.dim
    schedule = solution.state.schedule
    j1 = int(np.argmin(np.abs(np.log(np.asarray(schedule)))))
    grad1 = fd.gradient_of_values(solution.u_slice_values(j1), grid.spacing, n)
    report = nm.NormReport()
    report.lp = {float(n): nm.lp_norm(grad1, grid, float(n)), float(2 * n): nm.lp_norm(grad1, grid, float(2 * n))}
    report.weak_lp = {float(n): nm.weak_lp_norm(grad1, grid, float(n))}
    report.x_norm = iterate_x_norm(solution.state, solution.v)
    u0 = fd.homogeneous_extend(solution.state.data, grid)
    report.bmo = nm.bmo_seminorm(u0)

    t_top = 0.25
    grad_slices = [(0.0, fd.gradient_of_values(u0.values, grid.spacing, n))]
    for j, t in enumerate(schedule):
        if t <= 4.0 * t_top:
            grad_slices.append((t, fd.gradient_of_values(solution.u_slice_values(j), grid.spacing, n)))
    for center, radius in default_cylinders(grid):
        e2 = nm.renormalized_energy(grad_slices, grid, center, radius, 2.0)
        en = nm.renormalized_energy(grad_slices, grid, center, radius, float(n))
        report.energies.append(tuple(center) + (radius, e2, en))

    gamma = 1.0 / n
    report.holder_exponent = gamma
    report.holder_seminorm = nm.holder_seminorm(
        lambda pts, ts: solution.sample_u(pts, ts), n, gamma, pairs=holder_pairs, seed=seed + 1
    )
    return report


def run_verification(
    solution: MildSolution,
    thresholds: VerificationThresholds | None = None,
    seed: int = 0,
    report_times: Sequence[float] = (1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e3),
) -> VerificationReport:
    """Full diagnostics of a converged run, with pass/fail flags."""
    th = thresholds or VerificationThresholds()
    rep = VerificationReport()
    grid = solution.grid
    n = grid.dim
    state = solution.state

    rep.pde_residual = pde_residual(solution)
    rep.pass_flags["pde_residual"] = rep.pde_residual <= th.pde_residual_max

    for lam, cap in ((2.0, th.defect2_max), (4.0, th.defect4_max)):
        val = similarity_defect(solution, lam, samples=th.defect_samples, seed=seed + 2)
        rep.similarity_defect[lam] = val
        rep.pass_flags[f"similarity_defect_{int(lam)}"] = val <= cap

    lei_ok = True
    for center, radius in default_cylinders(grid):
        if radius / 2.0 < grid.spacing:
            continue  # inner ball unresolvable on this lattice
        chk = local_energy_check(solution, center, radius)
        rep.lei.append(chk)
        lei_ok = lei_ok and chk.lhs <= (1.0 + th.lei_slack) * chk.rhs
    rep.pass_flags["local_energy_inequality"] = lei_ok

    x0 = (1.0,) + (0.0,) * (n - 1)
    fit = decay_exponent_fit(solution, x0, default_decay_radii())
    profile = decay_energy_profile(solution, x0, default_decay_radii())
    rep.decay_fits.append(
        {
            "x0": list(x0),
            "exponent": fit,
            "radii": [r for r, _ in profile],
            "energies": [e for _, e in profile],
        }
    )
    rep.pass_flags["decay_exponent"] = fit >= 2.0 / n - 0.2

    gamma = 1.0 / n
    hol = nm.holder_seminorm(
        lambda pts, ts: solution.sample_u(pts, ts),
        n,
        gamma,
        pairs=th.holder_pairs,
        seed=seed + 1,
    )
    rep.holder = (gamma, hol)
    rep.pass_flags["holder_finite"] = math.isfinite(hol)

    rep.semigroup = heat.semigroup_estimate_report(
        state.data, grid, list(report_times), p=4.0 * n, truncation=state.config.truncation
    )
    ratios = [r["weak_ln_ratio"] for r in rep.semigroup]
    c2n = [r["const_2n"] for r in rep.semigroup]
    cp = [r["const_p"] for r in rep.semigroup]
    rep.pass_flags["semigroup_weak_ratio"] = max(ratios) <= th.weak_ratio_max
    rep.pass_flags["semigroup_const_2n_spread"] = max(c2n) <= th.constant_spread_max * min(c2n)
    rep.pass_flags["semigroup_const_p_spread"] = max(cp) <= th.constant_spread_max * min(cp)

    trace = solution.trace
    rep.trace_summary = trace.to_json_dict()
    rep.pass_flags["manifold_distance"] = (
        trace.projection_defect is not None and trace.projection_defect <= th.dist_max
    )
    rep.pass_flags["ball_preserved"] = all(r.x_norm <= state.config.delta for r in trace.rows)
    ratios_inc = [r.theta for r in trace.rows[2:] if r.theta is not None]
    rep.pass_flags["increments_contract"] = all(t <= th.increment_ratio_max for t in ratios_inc)
    return rep
