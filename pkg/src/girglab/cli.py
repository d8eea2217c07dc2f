"""The ``girg-lab`` command line front end.

Subcommands: generate, simulate, sweep, meanfield, subsolution, check,
erosion.  Every invocation that writes files also writes a JSON run manifest
listing the resolved parameters, the seed, the tool version, and a sha256
digest per output; re-running with the manifest's parameters reproduces the
digests.  Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import dataclass

from . import __version__
from . import dynamics as dyn
from . import experiments as xp
from . import girg
from . import meanfield as mf
from . import theory as th

__all__ = ["main", "parse_and_dispatch", "emit_plot_script", "write_manifest",
           "RunManifest", "read_manifest"]


class CLIError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); the contract is exit 1
        raise CLIError(message)


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Record of one tool invocation: parameters, seed, version, and the
    content digest of every file it wrote.  Re-running with the recorded
    parameters reproduces the digests."""

    subcommand: str
    parameters: dict
    seed: object
    version: str
    outputs: tuple[tuple[str, str], ...]  # (relative path, sha256)

    def to_dict(self) -> dict:
        return {
            "subcommand": self.subcommand,
            "parameters": self.parameters,
            "seed": self.seed,
            "version": self.version,
            "outputs": [{"path": p, "sha256": d} for p, d in self.outputs],
        }


def write_manifest(path: str, subcommand: str, params: dict, seed,
                   outputs: list[str]) -> str:
    base = os.path.dirname(os.path.abspath(path))
    manifest = RunManifest(
        subcommand=subcommand,
        parameters=params,
        seed=seed,
        version=__version__,
        outputs=tuple(
            (os.path.relpath(os.path.abspath(p), base), _digest(p))
            for p in outputs
        ),
    )
    with open(path, "w") as fh:
        json.dump(manifest.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_manifest(path: str) -> RunManifest:
    data = json.load(open(path))
    return RunManifest(
        subcommand=data["subcommand"], parameters=data["parameters"],
        seed=data["seed"], version=data["version"],
        outputs=tuple((o["path"], o["sha256"]) for o in data["outputs"]),
    )


def _resolve_k(args) -> float:
    if args.k is not None and args.avg_degree is not None:
        raise CLIError("--k and --avg-degree are mutually exclusive")
    if args.k is not None:
        return args.k
    if args.avg_degree is not None:
        return girg.calibrate_k(args.avg_degree, args.d, args.tau)
    raise CLIError("one of --k or --avg-degree is required")


# ----------------------------------------------------------------------------
# plot script emission
# ----------------------------------------------------------------------------

def emit_plot_script(data_files: dict[str, str], kind: str, out_path: str) -> str:
    """Write a gnuplot-dialect script referencing data files by relative path.

    Kinds: ``curves`` (survival curves with logistic overlays, needs
    ``curves`` and ``fits``), ``snapshot`` (opinion scatter, needs
    ``vertices`` and ``spins``), ``profile`` (f vs z for three weight
    slices, needs ``profile``).
    """
    base = os.path.dirname(os.path.abspath(out_path))

    def rel(key):
        p = data_files[key]
        if not os.path.exists(p):
            raise CLIError(f"missing data file for plot: {p}")
        return os.path.relpath(os.path.abspath(p), base)

    lines = ["# gnuplot script generated by girg-lab", 'set datafile separator ","']
    if kind == "curves":
        curves = rel("curves")
        rel("fits")
        try:
            fits = [(tau, fit.s0, fit.b)
                    for tau, fit in xp.read_fits_csv(data_files["fits"])]
        except (ValueError, KeyError) as exc:
            raise CLIError(f"fits table is missing required columns: {exc}")
        lines += [
            'set xlabel "initial square side s"',
            'set ylabel "survival probability"',
            "set yrange [-0.05:1.05]",
            "set key outside",
            "logistic(x, s0, b) = 1.0/(1.0 + exp(-(x - s0)/b))",
        ]
        plots = []
        for tau, s0, b in fits:
            plots.append(
                f'"{curves}" using (abs($1-{tau:.17g})<1e-9 ? $2 : 1/0):5 '
                f'with points pt 7 title "tau={tau:g}"'
            )
            plots.append(
                f"logistic(x, {s0:.17g}, {b:.17g}) with lines notitle"
            )
        lines.append("plot \\\n  " + ", \\\n  ".join(plots))
    elif kind == "snapshot":
        verts = rel("vertices")
        spins = rel("spins")
        lines[1] = "set datafile separator whitespace"
        lines += [
            "set size ratio -1",
            "unset key",
            # vertices: id w x0 x1; spins: id spin -> pasted columns 3,4 and 6
            f'plot "< paste {verts} {spins}" using ($6 > 0 ? $3 : 1/0):4 '
            'with points pt 7 ps 0.5 lc rgb "blue", \\',
            f'     "< paste {verts} {spins}" using ($6 < 0 ? $3 : 1/0):4 '
            'with points pt 7 ps 0.5 lc rgb "red"',
        ]
    elif kind == "profile":
        prof = rel("profile")
        ws = []
        with open(data_files["profile"]) as fh:
            for row in fh:
                if row.startswith("#") or row.startswith("w,"):
                    continue
                ws.append(float(row.split(",")[0]))
        uniq = sorted(set(ws))
        picks = [uniq[0], uniq[len(uniq) // 2], uniq[-1]]
        lines += [
            'set xlabel "z"', 'set ylabel "f(w, z)"', "set key outside",
        ]
        plots = [
            f'"{prof}" using (abs($1-{wv:.17g})<=1e-9*{max(wv, 1.0):.17g} ? $2 : 1/0):3 '
            f'with lines title "w={wv:.4g}"'
            for wv in picks
        ]
        lines.append("plot \\\n  " + ", \\\n  ".join(plots))
    else:
        raise CLIError(f"unknown plot kind: {kind}")
    with open(out_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return out_path


# ----------------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------------

def _cmd_generate(args) -> int:
    k = _resolve_k(args)
    params = girg.GirgParams(d=args.d, tau=args.tau, k=k, n=args.n, seed=args.seed)
    graph = girg.build_graph(params)
    edges, verts = girg.write_edge_list(graph, args.out_prefix)
    rep = girg.degree_report(graph)
    print(f"n={graph.n} edges={graph.num_edges} mean_degree={rep.mean_degree:.4f} "
          f"(near {rep.mean_near:.4f}, far {rep.mean_far:.4f})")
    write_manifest(args.out_prefix + ".manifest.json", "generate",
                   {"n": args.n, "d": args.d, "tau": args.tau, "k": k,
                    "avg_degree": args.avg_degree},
                   args.seed, [edges, verts])
    return 0


def _shape_from_args(args):
    if args.shape == "square":
        if args.side is None:
            raise CLIError("--side is required for --shape square")
        return dyn.Square(side=args.side)
    if args.shape == "ball":
        if args.radius is None:
            raise CLIError("--radius is required for --shape ball")
        return dyn.Ball(radius=args.radius)
    if args.shape == "halfspace":
        return dyn.HalfSpace()
    if args.shape == "uniform":
        if args.p_blue is None:
            raise CLIError("--p-blue is required for --shape uniform")
        return dyn.UniformRandom(p_blue=args.p_blue)
    raise CLIError(f"unknown shape {args.shape!r}")


def _cmd_simulate(args) -> int:
    k = _resolve_k(args)
    params = girg.GirgParams(d=args.d, tau=args.tau, k=k, n=args.n, seed=args.seed)
    graph = girg.build_graph(params)
    config = dyn.init_opinions(graph, _shape_from_args(args))
    outputs = []
    prefix = args.out_prefix
    _, verts = girg.write_edge_list(graph, prefix)
    outputs += [prefix + ".edges", prefix + ".vertices"]
    outputs.append(dyn.write_snapshot(config, prefix + ".initial.spins"))

    snaps = []
    if args.snapshot_every:
        def on_snap(step_count, cfg):
            p = f"{prefix}.t{step_count}.spins"
            snaps.append(dyn.write_snapshot(cfg, p))

    config, stats = dyn.run_until_stable(
        graph, config, rng=args.seed ^ 0xD1CE, max_steps=args.max_steps,
        snapshot_every=args.snapshot_every or None,
        on_snapshot=on_snap if args.snapshot_every else None,
    )
    outputs += snaps
    outputs.append(dyn.write_snapshot(config, prefix + ".final.spins"))
    stats_path = prefix + ".stats.txt"
    with open(stats_path, "w") as fh:
        fh.write(f"steps_taken={stats.steps_taken}\n")
        fh.write(f"flips={stats.flips}\n")
        fh.write(f"final_blue_count={stats.final_blue_count}\n")
        fh.write(f"survived={int(stats.survived)}\n")
        fh.write(f"converged={int(stats.converged)}\n")
        fh.write(f"elapsed={stats.elapsed:.6f}\n")
    outputs.append(stats_path)
    if args.d == 2:
        outputs.append(emit_plot_script(
            {"vertices": prefix + ".vertices", "spins": prefix + ".final.spins"},
            "snapshot", prefix + ".plot.gp"))
    print(f"steps={stats.steps_taken} flips={stats.flips} "
          f"blue={stats.final_blue_count} survived={stats.survived} "
          f"converged={stats.converged}")
    write_manifest(prefix + ".manifest.json", "simulate",
                   {"n": args.n, "d": args.d, "tau": args.tau, "k": k,
                    "shape": args.shape, "side": args.side,
                    "radius": args.radius, "p_blue": args.p_blue,
                    "max_steps": args.max_steps,
                    "snapshot_every": args.snapshot_every},
                   args.seed, outputs)
    return 0 if stats.converged else 2


def _cmd_sweep(args) -> int:
    with open(args.config) as fh:
        cfg = xp.SweepConfig.from_dict(json.load(fh))
    os.makedirs(args.out, exist_ok=True)
    curves = xp.survival_sweep(cfg, jobs=args.jobs)
    fits = [(c.tau, xp.fit_logistic(c)) for c in curves]
    curves_path = xp.write_curves_csv(curves, os.path.join(args.out, "curves.csv"))
    fits_path = xp.write_fits_csv(fits, os.path.join(args.out, "fits.csv"))
    plot = emit_plot_script({"curves": curves_path, "fits": fits_path},
                            "curves", os.path.join(args.out, "curves.gp"))
    for tau, fit in fits:
        print(f"tau={tau:g}: s0={fit.s0:.3f} b={fit.b:.3f} converged={fit.converged}")
    write_manifest(os.path.join(args.out, "manifest.json"), "sweep",
                   cfg.to_dict(), cfg.seed_base, [curves_path, fits_path, plot])
    return 0


def _cmd_meanfield(args) -> int:
    if args.geometry == "halfspace":
        params = mf.halfspace_params(args.d, args.tau, args.k, w_cap=args.wcap,
                                     n_w=args.nw, n_z=args.nz,
                                     quad_tol=args.quad_tol)
        prof0 = mf.halfspace_indicator(params)
    else:
        if args.r is None:
            raise CLIError("--r is required for the radial geometry")
        params = mf.radial_params(args.tau, args.k, args.r, d=args.d,
                                  w_cap=args.wcap, quad_tol=args.quad_tol)
        prof0 = mf.ball_indicator(params, args.r)
    prof, iters, deltas = mf.iterate(prof0, args.iters, args.conv_tol)
    out = args.out
    outputs = [mf.save_profile_csv(prof, out)]
    print(f"iterations={iters} final_sup_delta={deltas[-1]:.3e}")
    if args.geometry == "halfspace":
        print(f"survival_margin={mf.survival_margin(prof):.6f}")
        outputs.append(emit_plot_script({"profile": out}, "profile", out + ".gp"))
    else:
        cr = mf.crossing_radius(prof)
        print(f"crossing_radius={'none' if cr is None else format(cr, '.6f')}")
    write_manifest(out + ".manifest.json", "meanfield",
                   {"geometry": args.geometry, "d": args.d, "tau": args.tau,
                    "k": args.k, "w_cap": args.wcap, "r": args.r,
                    "iters": args.iters, "conv_tol": args.conv_tol,
                    "n_w": args.nw, "n_z": args.nz, "quad_tol": args.quad_tol},
                   None, outputs)
    return 0


def _cmd_subsolution(args) -> int:
    kmin = th.k_min(args.d, args.tau)
    if args.kmin:
        print(f"k_min={kmin:.17g}")
        return 0
    if args.k is None:
        raise CLIError("--k is required (or pass --kmin)")
    spec, profile = th.build_subsolution(args.d, args.tau, args.k)
    print(f"k_min={kmin:.17g}")
    print(f"y={spec.y_coefficient:.17g}")
    print(f"delta_star={spec.delta_star:.17g}")
    if args.out:
        path = mf.save_profile_csv(profile, args.out)
        write_manifest(args.out + ".manifest.json", "subsolution",
                       {"d": args.d, "tau": args.tau, "k": args.k},
                       None, [path])
    return 0


def _cmd_check(args) -> int:
    if not os.path.exists(args.profile):
        raise CLIError(f"profile file not found: {args.profile}")
    profile = mf.load_profile_csv(args.profile)
    report = th.check_valid(profile, use_operator=args.operator)
    out = args.out or (args.profile + ".validity.txt")
    th.write_validity_report(report, out)
    viol_path = args.profile + ".violations.csv"
    th.write_validity_violations(profile, report, viol_path)
    for line in open(out):
        print(line, end="")
    write_manifest(out + ".manifest.json", "check",
                   {"profile": os.path.basename(args.profile),
                    "operator": bool(args.operator)},
                   None, [out, viol_path])
    return 0


def _cmd_erosion(args) -> int:
    report = th.check_erosion_domination(args.r, args.eps, args.tau, args.k,
                                         args.tmax, d=args.d)
    prefix = args.out or f"erosion_r{args.r:g}"
    path = th.write_erosion_report(report, prefix + ".txt", prefix + ".series.csv")
    for line in open(path):
        print(line, end="")
    write_manifest(prefix + ".manifest.json", "erosion",
                   {"r": args.r, "eps": args.eps, "tau": args.tau, "k": args.k,
                    "t_max": args.tmax, "d": args.d},
                   None, [path, prefix + ".series.csv"])
    return 0


# ----------------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------------

def _add_girg_args(p, with_seed=True):
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--k", type=float, default=None)
    p.add_argument("--avg-degree", type=float, default=None)
    if with_seed:
        p.add_argument("--seed", type=int, default=1)


def build_parser() -> _Parser:
    parser = _Parser(prog="girg-lab",
                     description="GIRG opinion-dynamics laboratory")
    parser.add_argument("--version", action="version",
                        version=f"girg-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a GIRG and export its edge list")
    _add_girg_args(p)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("simulate", help="run majority dynamics from a shaped start")
    _add_girg_args(p)
    p.add_argument("--shape", choices=["square", "ball", "halfspace", "uniform"],
                   required=True)
    p.add_argument("--side", type=float, default=None)
    p.add_argument("--radius", type=float, default=None)
    p.add_argument("--p-blue", type=float, default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--snapshot-every", type=int, default=None)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="survival-probability sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", "-j", type=int,
                   default=int(os.environ.get("GIRG_LAB_JOBS", "1")))
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("meanfield", help="iterate the mean-field update operator")
    p.add_argument("--geometry", choices=["halfspace", "radial"], required=True)
    p.add_argument("--r", type=float, default=None)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--wcap", type=float, default=1e3)
    p.add_argument("--iters", type=int, default=200)
    p.add_argument("--conv-tol", type=float, default=1e-6)
    p.add_argument("--nw", type=int, default=64)
    p.add_argument("--nz", type=int, default=None)
    p.add_argument("--quad-tol", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_meanfield)

    p = sub.add_parser("subsolution", help="build the explicit valid subsolution")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--k", type=float, default=None)
    p.add_argument("--kmin", action="store_true",
                   help="print the analytic k_min and exit")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_subsolution)

    p = sub.add_parser("check", help="validity-check a stored profile")
    p.add_argument("--profile", required=True)
    p.add_argument("--operator", action="store_true",
                   help="also check the subsolution condition via the operator")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("erosion", help="radial vs half-space domination check")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--k", type=float, required=True)
    p.add_argument("--tmax", type=int, default=20)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_erosion)
    return parser


def parse_and_dispatch(argv=None) -> int:
    """Validate flags, run the subcommand, write the manifest; exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except mf.QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


def main(argv=None) -> None:
    sys.exit(parse_and_dispatch(argv))


if __name__ == "__main__":
    main()
