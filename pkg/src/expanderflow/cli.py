"""Command-line entry point: solve / oracle / verify / sweep / print-config.

Outputs are deterministic: identical config and seed give bit-identical
artifacts (fixed-order reductions everywhere; no wall-clock data is
written). CSV files are RFC-4180 style with a header row; JSON documents
carry a schema_version field, sorted keys, and repr-exact floats.

Artifact schemas
----------------
trace.csv      columns k, x_norm, increment, theta, dist_N, residual
trace.json     status, iterations, final_x_norm, final_increment,
               max_theta, max_dist_N, projection_defect
norms.json     lp (map p -> ||grad u(1)||_p), weak_lp, x_norm (of v),
               bmo (of u_0), energies [center..., R, e2, en],
               holder_exponent, holder_seminorm
profile.csv    columns rho, psi, dpsi (plus profile.json header)
verification.json  diagnostics report with pass_flags
sweep.csv      per-alpha row: alpha, x_norm, theta_probe, oracle_sup_diff,
               decay_exponent, status
caloric.field / solution_frame.field / u_t*ic binary field dumps
v.npz          the fixed-point iterate (V or per-slice arrays)

Exit codes: 0 success/converged, 1 configuration error, 2 contraction,
bracketing, or verification failure (LeftBall/LeftTube/NoBracket/failed
pass flags), 3 iteration budget exhausted.

Thread count: `run.threads` (or --threads) pins the BLAS pool before numpy
loads; results do not depend on it (reductions are fixed-order).
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys


def _json_dump(obj, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _set_threads(threads: int) -> None:
    if threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(threads)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="expanderflow",
        description="forward self-similar harmonic-map heat flow solver",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--threads", type=int, default=None, help="override run.threads")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="section.key=value",
            help="override a config key (repeatable)",
        )

    common(sub.add_parser("solve", help="run the fixed-point construction"))
    common(sub.add_parser("oracle", help="run the corotational shooting oracle"))
    p_verify = sub.add_parser("verify", help="run the diagnostics suite")
    common(p_verify)
    p_verify.add_argument("--solution", default=None, help="solve output directory to verify")
    p_sweep = sub.add_parser("sweep", help="solve across a list of alphas")
    common(p_sweep)
    p_sweep.add_argument("--alphas", default="0.02,0.04,0.08", help="comma-separated alphas")
    p_sweep.add_argument("--probe-pairs", type=int, default=4)
    common(sub.add_parser("print-config", help="dump the effective configuration"))
    return parser


def _load_cfg(args):
    from .config import load_config

    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"run.seed={args.seed}")
    if args.threads is not None:
        overrides.append(f"run.threads={args.threads}")
    return load_config(args.config, overrides)


def _problem(cfg):
    from . import duhamel as dh
    from . import fields as fd
    from .manifold import ManifoldDescriptor, ManifoldKind

    target = ManifoldDescriptor(
        ambient_dim=cfg.dimension + 1,
        kind=ManifoldKind.UnitSphere,
        tube_radius=cfg.tube_radius,
        cutoff_inner=cfg.cutoff_inner,
        cutoff_outer=cfg.cutoff_outer,
    )
    data = fd.SphericalData(
        dim=cfg.dimension, kind=fd.SphericalKind.Corotational, target=target, alpha=cfg.alpha
    )
    grid = fd.GridSpec(dim=cfg.dimension, half_width=cfg.half_width, points_per_axis=cfg.points_per_axis)
    iter_cfg = dh.IterationConfig(
        delta=cfg.delta,
        max_iter=cfg.max_iter,
        tol_fix=cfg.tol_fix,
        t_min=cfg.t_min,
        t_ratio=cfg.t_ratio,
        t_max=cfg.t_max,
        quad_panels=cfg.quad_panels,
        mode=dh.IterationMode.SimilarityFrame
        if cfg.mode == "similarity_frame"
        else dh.IterationMode.SpaceTime,
        truncation=cfg.truncation,
    )
    return data, grid, iter_cfg


def _write_solution_artifacts(cfg, solution, trace, outdir: str) -> None:
    import numpy as np

    from . import fields as fd
    from .config import dump_config
    from .diagnostics import build_norm_report
    from .duhamel import IterationMode
    from .fields import LatticeField, save_field

    with open(os.path.join(outdir, "config.ini"), "w") as fh:
        fh.write(dump_config(cfg))
    save_field(solution.state.caloric, os.path.join(outdir, "caloric.field"))
    if solution.mode is IterationMode.SimilarityFrame:
        frame = LatticeField(
            grid=solution.grid, values=solution.frame_values(), time_label=1.0, similarity_frame=True
        )
        save_field(frame, os.path.join(outdir, "solution_frame.field"))
        np.savez(os.path.join(outdir, "v.npz"), V=solution.v)
    else:
        arrays = {f"v{j:03d}": v for j, v in enumerate(solution.v)}
        np.savez(os.path.join(outdir, "v.npz"), **arrays)
        for j, t in enumerate(solution.state.schedule):
            fldj = LatticeField(grid=solution.grid, values=solution.u_slice_values(j), time_label=t)
            save_field(fldj, os.path.join(outdir, f"u_t{j:03d}.field"))
    trace.to_csv(os.path.join(outdir, "trace.csv"))
    _json_dump(trace.to_json_dict(), os.path.join(outdir, "trace.json"))
    report = build_norm_report(solution, seed=cfg.seed, holder_pairs=cfg.holder_pairs)
    _json_dump(report.to_json_dict(), os.path.join(outdir, "norms.json"))


def cmd_solve(args) -> int:
    from .config import ConfigError
    from .duhamel import IterationStatus, picard_iterate

    cfg = _load_cfg(args)
    data, grid, iter_cfg = _problem(cfg)
    os.makedirs(args.out, exist_ok=True)
    solution, trace = picard_iterate(data, grid, iter_cfg)
    _write_solution_artifacts(cfg, solution, trace, args.out)
    print(f"status: {trace.status.value} after {len(trace.rows)} iterations")
    if trace.status is IterationStatus.Converged:
        return 0
    if trace.status is IterationStatus.MaxIter:
        return 3
    return 2


def cmd_oracle(args) -> int:
    from .errors import NoBracket
    from .oracle import shoot

    cfg = _load_cfg(args)
    os.makedirs(args.out, exist_ok=True)
    try:
        profile = shoot(cfg.dimension, cfg.alpha, tol_shoot=cfg.tol_shoot, rho_max=cfg.rho_max)
    except NoBracket as exc:
        print(f"no bracket: {exc}", file=sys.stderr)
        return 2
    profile.save(os.path.join(args.out, "profile.csv"), os.path.join(args.out, "profile.json"))
    print(f"slope: {profile.slope!r} psi_inf: {profile.psi_inf!r}")
    return 0 if profile.converged else 2


def _load_solution(cfg, solution_dir: str):
    import numpy as np

    from . import duhamel as dh

    data, grid, iter_cfg = _problem(cfg)
    state = dh.prepare_run(data, grid, iter_cfg)
    npz = np.load(os.path.join(solution_dir, "v.npz"))
    if iter_cfg.mode is dh.IterationMode.SimilarityFrame:
        v = npz["V"]
    else:
        v = [npz[f"v{j:03d}"] for j in range(len(state.schedule))]
    trace = _load_trace(solution_dir)
    return dh.MildSolution(state=state, v=v, trace=trace)


def _load_trace(solution_dir: str):
    from .duhamel import FixedPointTrace, IterationStatus, TraceRow

    trace = FixedPointTrace()
    with open(os.path.join(solution_dir, "trace.csv")) as fh:
        next(fh)
        for line in fh:
            parts = line.strip().split(",")
            if len(parts) < 6 or not parts[0]:
                continue
            theta = None if parts[3] == "" else float(parts[3])
            trace.rows.append(
                TraceRow(int(parts[0]), float(parts[1]), float(parts[2]), theta, float(parts[4]), float(parts[5]))
            )
    with open(os.path.join(solution_dir, "trace.json")) as fh:
        summary = json.load(fh)
    trace.status = IterationStatus(summary["status"])
    trace.projection_defect = summary.get("projection_defect")
    return trace


def cmd_verify(args) -> int:
    from .diagnostics import VerificationThresholds, run_verification
    from .duhamel import picard_iterate

    cfg = _load_cfg(args)
    os.makedirs(args.out, exist_ok=True)
    if args.solution:
        solution = _load_solution(cfg, args.solution)
    else:
        data, grid, iter_cfg = _problem(cfg)
        solution, _ = picard_iterate(data, grid, iter_cfg)
    thresholds = VerificationThresholds(
        pde_residual_max=cfg.pde_residual_max,
        dist_max=cfg.dist_max,
        defect2_max=cfg.defect2_max,
        defect4_max=cfg.defect4_max,
        lei_slack=cfg.lei_slack,
        holder_pairs=cfg.holder_pairs,
        defect_samples=cfg.defect_samples,
    )
    report = run_verification(solution, thresholds, seed=cfg.seed, report_times=cfg.report_times)
    _json_dump(report.to_json_dict(), os.path.join(args.out, "verification.json"))
    with open(os.path.join(args.out, "decay.csv"), "w", newline="") as fh:
        fh.write("x0,radius,energy,exponent\r\n")
        for row in report.decay_fits:
            anchor = ";".join(repr(float(v)) for v in row["x0"])
            for r, e in zip(row["radii"], row["energies"]):
                fh.write(f"{anchor},{float(r)!r},{float(e)!r},{float(row['exponent'])!r}\r\n")
    print(report.text_summary())
    return 0 if report.all_pass() else 2


def cmd_sweep(args) -> int:
    import numpy as np

    from . import duhamel as dh
    from . import oracle as orc
    from .diagnostics import decay_exponent_fit, default_decay_radii

    cfg = _load_cfg(args)
    alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    os.makedirs(args.out, exist_ok=True)
    from dataclasses import replace

    rows = []
    for alpha in alphas:
        acfg = replace(cfg, alpha=alpha)
        data, grid, iter_cfg = _problem(acfg)
        solution, trace = dh.picard_iterate(data, grid, iter_cfg)
        theta_probe = dh.contraction_probe(
            data, grid, iter_cfg, pairs=max(3, args.probe_pairs), seed=cfg.seed + 3, state=solution.state
        )
        profile = orc.shoot(acfg.dimension, alpha, tol_shoot=acfg.tol_shoot, rho_max=acfg.rho_max)
        lifted = orc.lift_profile(profile, grid)
        sup_diff = float(np.max(np.linalg.norm(solution.frame_values() - lifted.values, axis=-1)))
        x0 = (1.0,) + (0.0,) * (grid.dim - 1)
        fit = decay_exponent_fit(solution, x0, default_decay_radii())
        rows.append(
            {
                "alpha": alpha,
                "x_norm": trace.rows[-1].x_norm,
                "theta_probe": theta_probe,
                "oracle_sup_diff": sup_diff,
                "decay_exponent": fit,
                "status": trace.status.value,
            }
        )
    with open(os.path.join(args.out, "sweep.csv"), "w", newline="") as fh:
        fh.write("alpha,x_norm,theta_probe,oracle_sup_diff,decay_exponent,status\r\n")
        for r in rows:
            fh.write(
                f"{r['alpha']!r},{r['x_norm']!r},{r['theta_probe']!r},"
                f"{r['oracle_sup_diff']!r},{r['decay_exponent']!r},{r['status']}\r\n"
            )
    xs = [math.log(r["alpha"]) for r in rows if r["x_norm"] > 0]
    ys = [math.log(r["x_norm"]) for r in rows if r["x_norm"] > 0]
    slope = float("nan")
    if len(xs) >= 2:
        slope = float(np.polyfit(xs, ys, 1)[0])
    _json_dump(
        {"schema_version": 1, "alphas": alphas, "x_norm_slope": slope, "rows": rows},
        os.path.join(args.out, "sweep.json"),
    )
    print(f"x_norm vs alpha log-log slope: {slope!r}")
    return 0


def cmd_print_config(args) -> int:
    from .config import dump_config

    cfg = _load_cfg(args)
    sys.stdout.write(dump_config(cfg))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    # pin thread pools before numpy is imported anywhere
    threads = args.threads
    if threads is None:
        for item in args.overrides:
            if item.startswith("run.threads="):
                threads = int(item.split("=", 1)[1])
    if threads is not None:
        _set_threads(threads)

    from .errors import ConfigError

    handlers = {
        "solve": cmd_solve,
        "oracle": cmd_oracle,
        "verify": cmd_verify,
        "sweep": cmd_sweep,
        "print-config": cmd_print_config,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
