"""Command-line entry points.

Subcommands: steady, simulate, semigroup, scan-hyp4, attract, phase-decay,
check-rotation. Each merges an optional JSON config document with its flags
(flags win), validates before computing, and writes a manifest next to any
output file. Exit codes: 0 success, 1 configuration or input error, 2
numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (AttractConfig, PhaseDecayConfig, RotationConfig, ScanConfig,
                     SemigroupConfig, SimulateConfig, SteadyConfig, build_family,
                     build_grid, build_params, default_boundary, load_config_file)
from .errors import ConfigError
from .experiments import (check_rotational_identity, experiment_dt, gaussian_bump,
                          norm_key, rotating_wave_trajectory, run_manifold_attraction,
                          run_phase_decay, scan_hypothesis4)
from .grid import PolarField
from .integrate import integrate_fixed
from .linops import build_operator, measure_decay_suite, plain_laplacian
from .model import rhs_complex_arrays, rhs_polar_arrays
from .snapshots import (format_float, format_p, load_snapshot, manifest_path_for,
                        save_snapshot, write_manifest, write_norm_table)
from .steady import FAMILY_ROTATING, rotating_wave_continuation


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="lolattice",
                     description="Lattice oscillator steady states and decay experiments")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config document; flags override it")

    p = sub.add_parser("steady", parents=[common],
                       help="construct a steady family, print its residual")
    p.add_argument("--family")
    p.add_argument("--alpha", type=float)
    p.add_argument("--K", dest="K", type=int)
    p.add_argument("--boundary")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--omega0", type=float)
    p.add_argument("--n-i", dest="n_i", type=int)
    p.add_argument("--n-j", dest="n_j", type=int)
    p.add_argument("--out")

    p = sub.add_parser("simulate", parents=[common],
                       help="integrate the dynamics from a snapshot")
    p.add_argument("--state", help="input snapshot CSV")
    p.add_argument("--out")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--alpha", type=float, help="default: the snapshot's alpha")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--omega0", type=float)
    p.add_argument("--form", choices=["complex", "polar"])
    p.add_argument("--frame", choices=["corotating", "lab"])

    p = sub.add_parser("semigroup", parents=[common],
                       help="norm decay table for a coupling operator")
    p.add_argument("--kind", choices=["plain", "cosine", "ratio_cosine"])
    p.add_argument("--d1", type=float)
    p.add_argument("--d2", type=float)
    p.add_argument("--K", dest="K", type=int)
    p.add_argument("--boundary")
    p.add_argument("--state", help="steady snapshot for cosine kinds")
    p.add_argument("--family", help="or build the steady state in place")
    p.add_argument("--alpha", type=float)
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--omega0", type=float)
    p.add_argument("--data", choices=["delta", "bump"])
    p.add_argument("--width", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--p", dest="p_list", help="comma list, inf allowed")
    p.add_argument("--window", help="fit window lo,hi")
    p.add_argument("--dt", type=float)
    p.add_argument("--out")

    p = sub.add_parser("scan-hyp4", parents=[common],
                       help="amplitude-moment scan over lattice sizes")
    p.add_argument("--family")
    p.add_argument("--alpha", dest="alpha_list", help="comma list")
    p.add_argument("--p", dest="p_list", help="comma list (finite)")
    p.add_argument("--N", dest="N_list", help="comma list or start:stop:step")
    p.add_argument("--boundary")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--omega0", type=float)
    p.add_argument("--background", type=float)
    p.add_argument("--out")

    p = sub.add_parser("attract", parents=[common],
                       help="manifold attraction rate experiment")
    p.add_argument("--family")
    p.add_argument("--alpha", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--K", dest="K", type=int)
    p.add_argument("--boundary")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--omega0", type=float)
    p.add_argument("--n-i", dest="n_i", type=int)
    p.add_argument("--n-j", dest="n_j", type=int)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--window")
    p.add_argument("--out")

    p = sub.add_parser("phase-decay", parents=[common],
                       help="slow-time phase decay experiment")
    p.add_argument("--family")
    p.add_argument("--alpha", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--K", dest="K", type=int)
    p.add_argument("--boundary")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--omega0", type=float)
    p.add_argument("--n-i", dest="n_i", type=int)
    p.add_argument("--n-j", dest="n_j", type=int)
    p.add_argument("--tau-max", dest="tau_max", type=float)
    p.add_argument("--p", dest="p_list", help="comma list, inf allowed")
    p.add_argument("--rho0-scale", dest="rho0_scale", type=float)
    p.add_argument("--gauge", action="store_true", default=None,
                   help="constant phase shift instead of a bump; no mean removal")
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--q-star", dest="q_star")
    p.add_argument("--window")
    p.add_argument("--out")

    p = sub.add_parser("check-rotation", parents=[common],
                       help="quarter-turn identity of a rotating wave trajectory")
    p.add_argument("--alpha", type=float, help="default 0.1, or the snapshot's")
    p.add_argument("--K", dest="K", type=int)
    p.add_argument("--boundary")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--omega0", type=float)
    p.add_argument("--state", help="steady snapshot; default builds a rotating wave")
    p.add_argument("--base-times", dest="base_times")
    p.add_argument("--out", help="JSON report path")
    return parser


_CONFIGS = {
    "steady": SteadyConfig,
    "simulate": SimulateConfig,
    "semigroup": SemigroupConfig,
    "scan-hyp4": ScanConfig,
    "attract": AttractConfig,
    "phase-decay": PhaseDecayConfig,
    "check-rotation": RotationConfig,
}


def _emit_manifest(command: str, cfg, out: str | None) -> None:
    if out:
        write_manifest(manifest_path_for(out), command, cfg.resolved(), __version__)


def _steady_for(cfg, K: int, boundary: str | None, alpha: float):
    bnd = boundary or default_boundary(cfg.family)
    grid = build_grid(K, bnd)
    params = build_params(grid, alpha, cfg.omega0)
    n_i = getattr(cfg, "n_i", 6)
    n_j = getattr(cfg, "n_j", 6)
    return build_family(cfg.family, params, n_i, n_j), params


def _cmd_steady(cfg: SteadyConfig) -> int:
    state, params = _steady_for(cfg, cfg.K, cfg.boundary, cfg.alpha)
    print(f"steady {state.family} alpha={state.alpha:g} "
          f"N={state.grid.side} {state.grid.boundary.value} "
          f"residual={state.residual_inf:.3e} "
          f"r=[{state.r_bar.min():.6f}, {state.r_bar.max():.6f}]")
    if cfg.out:
        save_snapshot(state, cfg.out)
        _emit_manifest("steady", cfg, cfg.out)
        print(f"wrote {cfg.out}")
    return 0


def _cmd_simulate(cfg: SimulateConfig) -> int:
    state = load_snapshot(cfg.state)
    alpha = state.alpha if cfg.alpha is None else cfg.alpha
    params = build_params(state.grid, alpha, cfg.omega0)
    dt = cfg.dt if cfg.dt is not None else experiment_dt(params)
    if cfg.form == "polar":
        if cfg.frame == "lab":
            raise ConfigError("polar integration runs in the co-rotating frame")

        def rhs(y):
            dr, dth = rhs_polar_arrays(y[0], y[1], params)
            return np.stack([dr, dth])

        y0 = np.stack([state.r_bar, state.theta_bar])
        yT = integrate_fixed(rhs, y0, [cfg.t_max], dt)[0]
        final = PolarField(state.grid, yT[0], yT[1])
    else:
        include = cfg.frame == "lab"

        def rhs(z):
            return rhs_complex_arrays(z, params, include_omega0=include)

        z0 = state.r_bar * np.exp(1j * state.theta_bar)
        zT = integrate_fixed(rhs, z0.astype(complex), [cfg.t_max], dt)[0]
        final = PolarField(state.grid, np.abs(zT), np.angle(zT))
    save_snapshot(final, cfg.out, family=state.family, alpha=alpha)
    _emit_manifest("simulate", cfg, cfg.out)
    print(f"simulate {cfg.form}/{cfg.frame} t={cfg.t_max:g} dt={dt:g} wrote {cfg.out}")
    return 0


def _cmd_semigroup(cfg: SemigroupConfig) -> int:
    if cfg.kind == "plain":
        grid = build_grid(cfg.K, cfg.boundary)
        op = plain_laplacian(grid, cfg.d1, cfg.d2)
    else:
        if cfg.state:
            steady = load_snapshot(cfg.state)
        else:
            steady, _ = _steady_for(cfg, cfg.K, cfg.boundary, cfg.alpha)
        op = build_operator(steady, cfg.kind)
        grid = op.grid
    if cfg.data == "delta":
        x0 = np.zeros((grid.side, grid.side))
        x0[grid.array_pos((0, 0))] = 1.0
    else:
        x0 = gaussian_bump(grid, cfg.width)
    t_min = cfg.t_min if cfg.t_min is not None else cfg.t_max / 100.0
    times = np.geomspace(t_min, cfg.t_max, cfg.n_samples)
    table = measure_decay_suite(op, x0, cfg.p_list, times, dt=cfg.dt)
    print(f"semigroup {cfg.kind} N={grid.side} {grid.boundary.value} "
          f"data={cfg.data} samples={cfg.n_samples} flagged={int(table.flagged.sum())}")
    for p in cfg.p_list:
        lf = table.fit("lp", p, "power", cfg.window)
        qf = table.fit("qp", p, "power", cfg.window)
        print(f"  p={format_p(p):>4s}  lp rate {lf.rate:+.4f} (r2 {lf.r_squared:.4f})"
              f"  qp rate {qf.rate:+.4f} (r2 {qf.r_squared:.4f})"
              f"  window [{lf.window[0]:g}, {lf.window[1]:g}]")
    if cfg.out:
        write_norm_table(cfg.out, table.times, table.times, cfg.p_list,
                         table.lp, table.qp)
        _emit_manifest("semigroup", cfg, cfg.out)
        print(f"wrote {cfg.out}")
    return 0


def _cmd_scan_hyp4(cfg: ScanConfig) -> int:
    cache: dict[int, dict[float, object]] = {}

    def builder(alpha: float, N: int):
        grid = build_grid(N // 2, cfg.boundary)
        params = build_params(grid, alpha, cfg.omega0)
        if cfg.family == FAMILY_ROTATING:
            if N not in cache:
                cache[N] = rotating_wave_continuation(params, cfg.alpha_list)
            return cache[N][alpha]
        return build_family(cfg.family, params)

    scan = scan_hypothesis4(builder, cfg.alpha_list, cfg.p_list, cfg.N_list,
                            a=cfg.background, family=cfg.family)
    print(f"scan-hyp4 {scan.family} alphas={list(scan.alpha_list)} "
          f"p={list(scan.p_list)} N={scan.N_list[0]}..{scan.N_list[-1]} "
          f"failures={len(scan.failures)}")
    for al in scan.alpha_list:
        for p in scan.p_list:
            rel = scan.relative_change(al, p)
            print(f"  alpha={al:g} p={p:g}: {scan.trend(al, p)} "
                  f"(rel change {rel:+.4f} over largest sizes)")
    if cfg.out:
        lines = ["alpha,p,N,moment,double_sum,trend"]
        for al in scan.alpha_list:
            for p in scan.p_list:
                trend = scan.trend(al, p)
                for N in scan.N_list:
                    if (al, N) in scan.failures:
                        continue
                    lines.append(f"{format_float(al)},{format_p(p)},{N},"
                                 f"{format_float(scan.values[(al, p, N)])},"
                                 f"{format_float(scan.double_sums[(al, p, N)])},"
                                 f"{trend}")
        Path(cfg.out).write_text("\n".join(lines) + "\n")
        _emit_manifest("scan-hyp4", cfg, cfg.out)
        print(f"wrote {cfg.out}")
    return 0


def _cmd_attract(cfg: AttractConfig) -> int:
    steady, params = _steady_for(cfg, cfg.K, cfg.boundary, cfg.alpha)
    rep = run_manifold_attraction(steady, params, cfg.delta, cfg.t_max,
                                  cfg.n_samples, cfg.window)
    rho = rep.series["rho_l1"]
    print(f"attract {rep.family} alpha={cfg.alpha:g} delta={cfg.delta:g} "
          f"t_max={cfg.t_max:g}")
    if "rho_l1" in rep.fits:
        f = rep.fits["rho_l1"]
        print(f"  beta {f.rate:.4f} vs predicted {rep.predicted['rho_l1']:.4f} "
              f"(r2 {f.r_squared:.4f}, window [{f.window[0]:g}, {f.window[1]:g}])")
    else:
        print(f"  max |rho|_1 over run: {rho.max():.3e}")
    for note in rep.notes:
        print(f"  note: {note}")
    if cfg.out:
        write_norm_table(cfg.out, rep.times, rep.times, [1.0], {1.0: rho}, {})
        _emit_manifest("attract", cfg, cfg.out)
        print(f"wrote {cfg.out}")
    return 0


def _cmd_phase_decay(cfg: PhaseDecayConfig) -> int:
    steady, params = _steady_for(cfg, cfg.K, cfg.boundary, cfg.alpha)
    psi0 = None
    remove_mean = True
    if cfg.gauge:
        psi0 = np.full((params.grid.side, params.grid.side), cfg.eps)
        remove_mean = False
    rep = run_phase_decay(steady, params, cfg.eps, cfg.tau_max, cfg.p_list,
                          rho0_scale=cfg.rho0_scale, psi0=psi0,
                          remove_mean=remove_mean, n_samples=cfg.n_samples,
                          q_star=cfg.q_star, window=cfg.window)
    print(f"phase-decay {rep.family} alpha={cfg.alpha:g} eps={cfg.eps:g} "
          f"tau_max={cfg.tau_max:g} gauge={bool(cfg.gauge)}")
    for key in sorted(rep.fits):
        f = rep.fits[key]
        pred = rep.predicted.get(key)
        pred_txt = f" pred {pred:+.4f}" if pred is not None else ""
        print(f"  {key:8s} rate {f.rate:+.4f}{pred_txt} (r2 {f.r_squared:.4f})")
    for note in rep.notes:
        print(f"  note: {note}")
    if cfg.out:
        lp = {p: rep.series[f"lp:{norm_key(p)}"] for p in cfg.p_list}
        qp = {p: rep.series[f"qp:{norm_key(p)}"] for p in cfg.p_list}
        write_norm_table(cfg.out, rep.times / cfg.alpha, rep.times, cfg.p_list, lp, qp)
        _emit_manifest("phase-decay", cfg, cfg.out)
        print(f"wrote {cfg.out}")
    return 0


def _cmd_check_rotation(cfg: RotationConfig) -> int:
    if cfg.state:
        steady = load_snapshot(cfg.state)
        grid = steady.grid
        alpha = steady.alpha if cfg.alpha is None else cfg.alpha
        params = build_params(grid, alpha, cfg.omega0)
    else:
        grid = build_grid(cfg.K, cfg.boundary)
        params = build_params(grid, 0.1 if cfg.alpha is None else cfg.alpha, cfg.omega0)
        steady = build_family(FAMILY_ROTATING, params)
    times, states = rotating_wave_trajectory(steady, params, cfg.base_times)
    rep = check_rotational_identity(times, states, steady, params)
    print(f"check-rotation N={grid.side} alpha={params.alpha:g} "
          f"period={rep.period:.6f}")
    print(f"  spatial max |z_rot - i z|  = {rep.spatial_max:.3e}")
    print(f"  temporal max (quarter period, {rep.n_pairs} pairs) = {rep.temporal_max:.3e}")
    if cfg.out:
        doc = {"spatial_max": rep.spatial_max, "temporal_max": rep.temporal_max,
               "period": rep.period, "n_samples": rep.n_samples,
               "n_pairs": rep.n_pairs}
        from pathlib import Path
        Path(cfg.out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        _emit_manifest("check-rotation", cfg, cfg.out)
        print(f"wrote {cfg.out}")
    return 0


_HANDLERS = {
    "steady": _cmd_steady,
    "simulate": _cmd_simulate,
    "semigroup": _cmd_semigroup,
    "scan-hyp4": _cmd_scan_hyp4,
    "attract": _cmd_attract,
    "phase-decay": _cmd_phase_decay,
    "check-rotation": _cmd_check_rotation,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    raw = vars(args)
    overrides = {k: v for k, v in raw.items() if k not in ("command", "config")}
    try:
        file_cfg = load_config_file(args.config) if args.config else None
        cfg = _CONFIGS[args.command].from_sources(file_cfg, overrides)
        return _HANDLERS[args.command](cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
