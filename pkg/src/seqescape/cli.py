"""Command-line front end: one subcommand per headline experiment.

Subcommands
-----------
single-node   escape-time table: quadrature, bounds, Kramers, optional MC
two-node      sequential escape times of a coupled pair over a beta grid
bifurcation   critical-point branches and regime boundaries of the pair
master        all-to-all chain CDFs, optionally fitted from simulation
limits        strong/weak coupling limit values for a pair
calibrate     affine Kramers calibration constants A, B

Every output file starts with a single JSON header line carrying the tool
version, the fully resolved configuration and the seed, followed by CSV
rows (or a JSON body for the scalar commands).  Identical invocations
produce byte-identical files.  Exit status is 0 only if every requested
computation succeeded.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .analytics import (
    calibrate_AB,
    coupling_limits,
    escape_bounds,
    eyring_kramers_2d,
    bg_pitchfork,
    kramers_1d,
    mean_escape_quadrature,
)
from .masterchain import (
    AllToAllRates,
    all_to_all_pnk,
    chain_means,
    rates_from_means,
    shifted_cdf,
)
from .model import NetworkSpec, NodeParams
from .sde import SimConfig, run_ensemble
from .twonode import (
    BifurcationScan,
    detect_bifurcations,
    find_critical_points_2node,
    sync_fluctuation_estimate,
    transverse_quartic_coeff,
    unstable_manifold_passage,
)

WORKERS_ENV = "SEQESCAPE_WORKERS"


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _header(args: argparse.Namespace, command: str) -> str:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return json.dumps(
        {"tool": "seqescape", "version": __version__, "command": command, "config": cfg},
        sort_keys=True,
    )


def _write(path: str, header: str, lines: list[str]) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for line in lines:
            fh.write(line + "\n")
    print(f"wrote {path}")


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _gate_radius(nu: float) -> float:
    return float(np.sqrt(1.0 - np.sqrt(1.0 - nu)))


def cmd_single_node(args) -> None:
    nus = _float_list(args.nu)
    alphas = _float_list(args.alpha)
    rows = []
    for nu in sorted(nus):
        for alpha in sorted(alphas):
            if alpha <= 0:
                raise SystemExit("alpha must be > 0: the exact quadrature needs noise")
            xi = _gate_radius(nu) if args.xi == "auto" else float(args.xi)
            T = mean_escape_quadrature(nu, alpha, xi)
            lo, hi = escape_bounds(nu, alpha, xi)
            try:
                tk = kramers_1d(nu, alpha).value
            except ValueError:
                tk = None
            mc_mean = mc_se = mc_n = None
            if args.ensemble > 0:
                net = NetworkSpec(n=1, adjacency=np.zeros((1, 1)), beta=0.0)
                p = NodeParams(nu=nu, omega=0.0, alpha=alpha)
                cfg = SimConfig(h=args.h, xi=xi, t_max=args.tmax, seed=args.seed,
                                ensemble=args.ensemble)
                stats = run_ensemble(net, p, cfg, workers=args.workers)
                mc_mean, mc_se, mc_n = stats.T[(1, 0)], stats.se[(1, 0)], stats.ensemble
            rows.append(
                ",".join(
                    [_fmt(nu), _fmt(alpha), _fmt(xi), _fmt(T.value), _fmt(lo.value),
                     _fmt(hi.value), _fmt(tk), _fmt(mc_mean), _fmt(mc_se),
                     str(mc_n if mc_n is not None else ""),
                     "quadrature+bounds" + ("+kramers" if tk is not None else "")]
                )
            )
    head = "nu,alpha,xi,T,T_l,T_u,T_K,mc_mean,mc_se,mc_n,method_flags"
    _write(args.out, _header(args, "single-node"), [head] + rows)
    if args.trajectory:
        from .sde import simulate_escape, write_trajectory_csv

        nu, alpha = sorted(nus)[0], sorted(alphas)[0]
        xi = _gate_radius(nu) if args.xi == "auto" else float(args.xi)
        cfg = SimConfig(h=args.h, xi=xi, t_max=args.tmax, seed=args.seed,
                        record_path=True, sample_stride=max(1, int(0.1 / args.h)))
        rec = simulate_escape(
            NetworkSpec(n=1, adjacency=np.zeros((1, 1)), beta=0.0),
            NodeParams(nu=nu, omega=0.0, alpha=alpha), cfg, 0)
        write_trajectory_csv(rec, args.trajectory)
        print(f"wrote {args.trajectory}")


def _two_node_analytics(p: NodeParams, beta: float, xi: float, scan, A: float, B: float):
    """Analytic overlays for the bidirectional pair at one coupling value."""
    points = find_critical_points_2node(p, beta)
    sinks = [c for c in points if c.kind == "sink"]
    quiescent = min(sinks, key=lambda c: sum(c.position))
    gate_sads = [
        c for c in points
        if c.kind == "saddle" and max(c.position) < 0.8 and abs(c.position[0] - c.position[1]) > 1e-8
    ]
    ek10 = bg10 = ek21 = manifold21 = sync21 = None
    c4 = transverse_quartic_coeff(p, beta)
    if beta < scan.beta_PF and gate_sads:
        per_saddle = eyring_kramers_2d(quiescent, gate_sads[0], p.alpha).value
        ek10 = per_saddle / 2.0  # two symmetric gates, rates add
        bg10 = bg_pitchfork(quiescent, gate_sads[:2], p.alpha, c4, psi_form="bessel-gamma").value
    elif beta > scan.beta_PF:
        sym = [c for c in points if c.kind == "saddle" and abs(c.position[0] - c.position[1]) < 1e-8]
        if sym:
            try:
                ek10 = eyring_kramers_2d(quiescent, sym[0], p.alpha).value
            except ValueError:
                ek10 = None
            bg10 = bg_pitchfork(quiescent, sym[:1], p.alpha, c4, psi_form="bessel-gamma").value
    if beta < scan.beta_SN:
        asym_sinks = [c for c in sinks if abs(c.position[0] - c.position[1]) > 1e-3]
        far_sads = [c for c in points if c.kind == "saddle" and max(c.position) > 1.0]
        if asym_sinks and far_sads:
            try:
                ek21 = eyring_kramers_2d(asym_sinks[0], far_sads[0], p.alpha).value
            except ValueError:
                ek21 = None
    elif beta < scan.beta_PF:
        try:
            manifold21 = unstable_manifold_passage(p, beta, xi)
        except (ValueError, RuntimeError):
            manifold21 = None
    else:
        sync21 = sync_fluctuation_estimate(p, beta, xi)
    cal = lambda t: None if t is None else A * t + B
    return {
        "ek10_cal": cal(ek10), "bg10_cal": cal(bg10), "ek21_cal": cal(ek21),
        "manifold21": manifold21, "sync21": sync21,
    }


def cmd_two_node(args) -> None:
    p = NodeParams(nu=args.nu, omega=0.0, alpha=args.alpha)
    betas = sorted(_float_list(args.beta)) if args.beta else list(
        np.geomspace(1e-3, 1.0, args.beta_points)
    )
    topologies = ["bidirectional", "unidirectional", "disconnected"] \
        if args.topology == "all" else [args.topology]
    scan = detect_bifurcations(p, (1e-3, 0.5))
    A, B = calibrate_AB(args.nu, args.alpha, args.xi)
    lim = coupling_limits(args.nu, args.alpha, args.xi)
    rows = []
    for topology in topologies:
        for beta in betas:
            net = NetworkSpec.pair(topology, beta)
            cfg = SimConfig(h=args.h, xi=args.xi, t_max=args.tmax, seed=args.seed,
                            ensemble=args.ensemble)
            stats = run_ensemble(net, p, cfg, workers=args.workers)
            extra = {"ek10_cal": None, "bg10_cal": None, "ek21_cal": None,
                     "manifold21": None, "sync21": None}
            if topology == "bidirectional":
                extra = _two_node_analytics(p, beta, args.xi, scan, A, B)
            rows.append(",".join(
                [topology, _fmt(beta),
                 _fmt(stats.T[(1, 0)]), _fmt(stats.se[(1, 0)]),
                 _fmt(stats.T[(2, 1)]), _fmt(stats.se[(2, 1)]),
                 _fmt(stats.T[(2, 0)]), _fmt(stats.se[(2, 0)]),
                 str(stats.censored_count),
                 _fmt(extra["ek10_cal"]), _fmt(extra["bg10_cal"]),
                 _fmt(extra["ek21_cal"]), _fmt(extra["manifold21"]), _fmt(extra["sync21"]),
                 _fmt(scan.beta_SN), _fmt(scan.beta_PF),
                 _fmt(lim["sync"].value), _fmt(lim["first_of_two"].value),
                 _fmt(lim["single"].value), _fmt(lim["uni_first"].value)]
            ))
    head = ("topology,beta,T10,T10_se,T21,T21_se,T20,T20_se,censored,"
            "A_ek10_B,A_bg10_B,A_ek21_B,manifold_T21,sync_T21,beta_SN,beta_PF,"
            "limit_sync,limit_first_of_two,limit_single,limit_uni_first")
    _write(args.out, _header(args, "two-node"), [head] + rows)


def cmd_bifurcation(args) -> None:
    p = NodeParams(nu=args.nu, omega=0.0, alpha=args.alpha)
    # event detection needs a range spanning both bifurcations, independent
    # of the requested branch grid
    detect_range = (min(args.beta_min, 1e-3), max(args.beta_max, 0.5))
    events = detect_bifurcations(p, detect_range, n_grid=2)
    grid = np.geomspace(args.beta_min, args.beta_max, args.beta_points)
    scan = BifurcationScan(
        beta_grid=grid,
        branches=[find_critical_points_2node(p, float(b)) for b in grid],
        beta_SN=events.beta_SN,
        beta_PF=events.beta_PF,
    )
    rows = []
    for beta, points in zip(scan.beta_grid, scan.branches):
        if args.prune_symmetric:
            points = [c for c in points if c.position[0] <= c.position[1] + 1e-12]
        for idx, c in enumerate(points):
            rows.append(",".join(
                [_fmt(beta), str(idx), _fmt(c.position[0]), _fmt(c.position[1]),
                 _fmt(c.value), _fmt(c.eigenvalues[0]), _fmt(c.eigenvalues[1]),
                 c.kind, scan.regime(float(beta))]
            ))
    head = "beta,index,R1,R2,V,eig1,eig2,kind,regime"
    header = json.loads(_header(args, "bifurcation"))
    header["beta_SN"] = scan.beta_SN
    header["beta_PF"] = scan.beta_PF
    header["counts"] = {f"{b:g}": len(pts) for b, pts in zip(scan.beta_grid, scan.branches)}
    _write(args.out, json.dumps(header, sort_keys=True), [head] + rows)

    # companion per-coupling summary
    summary_rows = []
    for beta, points in zip(scan.beta_grid, scan.branches):
        kind_counts = {k: sum(c.kind == k for c in points) for k in ("sink", "saddle", "source")}
        kinds_txt = "+".join(f"{v}{k}" for k, v in kind_counts.items() if v)
        if scan.beta_SN < beta < scan.beta_PF:
            try:
                t21 = unstable_manifold_passage(p, float(beta), 0.5)
            except (ValueError, RuntimeError):
                t21 = None
        else:
            t21 = None
        summary_rows.append(",".join(
            [_fmt(beta), str(len(points)), kinds_txt,
             _fmt(scan.beta_SN), _fmt(scan.beta_PF), _fmt(t21)]
        ))
    summary_path = _summary_path(args.out)
    _write(summary_path, json.dumps(header, sort_keys=True),
           ["beta,n_points,kinds,beta_SN,beta_PF,Ttilde_21"] + summary_rows)


def _summary_path(out: str) -> str:
    base, dot, ext = out.rpartition(".")
    return f"{base}_summary.{ext}" if dot else f"{out}_summary"


def _ks_distance(samples: np.ndarray, cdf) -> float:
    samples = np.sort(samples)
    m = len(samples)
    theo = np.array([cdf(t) for t in samples])
    emp_hi = np.arange(1, m + 1) / m
    emp_lo = np.arange(0, m) / m
    return float(max(np.max(np.abs(emp_hi - theo)), np.max(np.abs(emp_lo - theo))))


def _rates_from_file(path: str) -> AllToAllRates:
    """JSON input: {"rates": [r0, ...]} or {"means": {"1": T10, ...}, "n": N}."""
    with open(path) as fh:
        payload = json.load(fh)
    if "rates" in payload:
        return AllToAllRates(r=tuple(float(x) for x in payload["rates"]))
    if "means" in payload:
        means = {int(k): float(v) for k, v in payload["means"].items()}
        return rates_from_means(means, n=int(payload.get("n", max(means))))
    raise ValueError(f"{path}: expected a 'rates' or 'means' entry")


def cmd_master(args) -> None:
    if args.rates or args.rates_file:
        rates = (_rates_from_file(args.rates_file) if args.rates_file
                 else AllToAllRates(r=tuple(_float_list(args.rates))))
        fitted_from = "given"
        ks = {}
        stats = None
    else:
        p = NodeParams(nu=args.nu, omega=0.0, alpha=args.alpha)
        net = NetworkSpec.pair("bidirectional", args.beta)
        cfg = SimConfig(h=args.h, xi=args.xi, t_max=args.tmax, seed=args.seed,
                        ensemble=args.ensemble)
        stats = run_ensemble(net, p, cfg, workers=args.workers)
        rates = rates_from_means({1: stats.T[(1, 0)], 2: stats.T[(2, 1)]}, n=2)
        fitted_from = "simulation"
        ks = {
            "1|0": _ks_distance(stats.cdf[(1, 0)], lambda t: shifted_cdf(rates, 1, 0, t)),
            "2|0": _ks_distance(stats.cdf[(2, 0)], lambda t: shifted_cdf(rates, 2, 0, t)),
            "2|1": _ks_distance(stats.cdf[(2, 1)], lambda t: shifted_cdf(rates, 2, 1, t)),
        }
    n = rates.n
    horizon = args.horizon or 5.0 * chain_means(rates, n, 0)
    tgrid = np.linspace(0.0, horizon, args.time_points)
    rows = []
    for t in tgrid:
        pk = all_to_all_pnk(rates, float(t))
        qs = [shifted_cdf(rates, k, 0, float(t)) for k in range(1, n + 1)]
        rows.append(",".join([_fmt(t)] + [_fmt(v) for v in pk] + [_fmt(v) for v in qs]))
    head = "t," + ",".join(f"p_{k}" for k in range(n + 1)) + "," + \
        ",".join(f"q_{k}" for k in range(1, n + 1))
    header = json.loads(_header(args, "master"))
    header["rates"] = list(rates.r)
    header["rates_source"] = fitted_from
    header["ks_distance"] = ks
    if stats is not None:
        header["mc_means"] = {"1|0": stats.T[(1, 0)], "2|1": stats.T[(2, 1)]}
    _write(args.out, json.dumps(header, sort_keys=True), [head] + rows)


def cmd_limits(args) -> None:
    lim = coupling_limits(args.nu, args.alpha, args.xi)
    body = {name: est.value for name, est in lim.items()}
    _write(args.out, _header(args, "limits"), [json.dumps(body, sort_keys=True)])


def cmd_calibrate(args) -> None:
    A, B = calibrate_AB(args.nu, args.alpha, args.xi)
    _write(args.out, _header(args, "calibrate"), [json.dumps({"A": A, "B": B}, sort_keys=True)])


def _add_common(sp) -> None:
    sp.add_argument("--nu", type=float, default=0.2)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--h", type=float, default=1e-3)
    sp.add_argument("--tmax", type=float, default=None)
    sp.add_argument("--ensemble", type=int, default=2000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=_default_workers())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seqescape", description=__doc__,
                                 formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("single-node", help="escape-time table for one node")
    sp.add_argument("--nu", default="0.2", help="comma-separated list")
    sp.add_argument("--alpha", default="0.05", help="comma-separated list")
    sp.add_argument("--xi", default="auto", help="threshold or 'auto' for the noise-free gate radius")
    sp.add_argument("--h", type=float, default=1e-3)
    sp.add_argument("--tmax", type=float, default=None)
    sp.add_argument("--ensemble", type=int, default=0, help="MC realizations (0 = analytics only)")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=_default_workers())
    sp.add_argument("--trajectory", default="", help="also dump one sampled trajectory CSV here")
    sp.add_argument("--out", default="single_node.csv")
    sp.set_defaults(func=cmd_single_node)

    sp = sub.add_parser("two-node", help="sequential escapes of a coupled pair")
    _add_common(sp)
    sp.add_argument("--xi", type=float, default=0.5)
    sp.add_argument("--beta", default="", help="comma-separated couplings (default: log grid)")
    sp.add_argument("--beta-points", type=int, default=9)
    sp.add_argument("--topology", choices=["bidirectional", "unidirectional", "disconnected", "all"],
                    default="bidirectional")
    sp.add_argument("--out", default="two_node.csv")
    sp.set_defaults(func=cmd_two_node)

    sp = sub.add_parser("bifurcation", help="critical-point branches of the pair potential")
    sp.add_argument("--nu", type=float, default=0.2)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--beta-min", type=float, default=1e-3)
    sp.add_argument("--beta-max", type=float, default=0.5)
    sp.add_argument("--beta-points", type=int, default=9)
    sp.add_argument("--prune-symmetric", action="store_true",
                    help="emit one representative of each exchange-symmetric pair")
    sp.add_argument("--out", default="bifurcation.csv")
    sp.set_defaults(func=cmd_bifurcation)

    sp = sub.add_parser("master", help="all-to-all escape chain vs simulation")
    _add_common(sp)
    sp.add_argument("--xi", type=float, default=0.5)
    sp.add_argument("--beta", type=float, default=0.01)
    sp.add_argument("--rates", default="", help="skip simulation, evaluate the chain at these rates")
    sp.add_argument("--rates-file", default="", help="JSON file with 'rates' or 'means' entries")
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--time-points", type=int, default=201)
    sp.add_argument("--out", default="master.csv")
    sp.set_defaults(func=cmd_master)

    sp = sub.add_parser("limits", help="coupling limit values for a pair")
    sp.add_argument("--nu", type=float, default=0.2)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--xi", type=float, default=0.5)
    sp.add_argument("--out", default="limits.json")
    sp.set_defaults(func=cmd_limits)

    sp = sub.add_parser("calibrate", help="affine Kramers calibration constants")
    sp.add_argument("--nu", type=float, default=0.2)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--xi", type=float, default=0.5)
    sp.add_argument("--out", default="calibrate.json")
    sp.set_defaults(func=cmd_calibrate)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
