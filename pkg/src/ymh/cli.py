"""The ``ymh`` command line.

Every subcommand reads an optional ``--config`` file (see
:mod:`ymh.config`), writes its CSV tables plus ``manifest.txt`` into
``--out``, prints a one-line summary and exits with

    0 success, 1 invalid input, 2 numerical failure, 3 I/O error.

``manifest.txt`` is itself a valid config file (metadata sits in comments),
so ``ymh <sub> --config <out>/manifest.txt`` repeats a run.
"""

import argparse
import os
import platform
import sys
import time
from dataclasses import replace

SUBCOMMANDS = ("relax", "sweepout", "bps", "radial", "charge", "bubbling", "gap-probe", "verify")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")

# per-subcommand starting points; config files override them
_DEFAULTS = {
    "relax": dict(n=32, h=1 / 32, boundary="periodic", epsilon=1 / 32, lam=1.0, init="perturbed",
                  amplitude=0.1, max_iters=500),
    "sweepout": dict(n=129, h=1 / 64, boundary="dirichlet", epsilon=1 / 8, lam=1.0, y_samples=100),
    "bps": dict(epsilon=1.0, lam=0.0, r_max=20.0, radial_n=4000),
    "radial": dict(epsilon=1.0, lam=1.0, r_max=20.0, radial_n=4000, tol_residual=1e-8,
                   max_iters=200),
    "charge": dict(n=97, h=0.25, boundary="dirichlet", epsilon=1.0, lam=0.0, init="hedgehog",
                   radius=10.0, r_max=40.0, radial_n=8000),
    "bubbling": dict(n=97, h=0.25, boundary="dirichlet", epsilon=1.0, lam=0.0, init="hedgehog",
                     radius=6.0, r_max=40.0, radial_n=8000),
    "gap-probe": dict(n=64, h=1 / 64, boundary="periodic", epsilon=1 / 32, lam=1.0, amplitude=0.1,
                      trials=20, tol_residual=1e-6, max_iters=500),
    "verify": dict(),
}


def _apply_threads(threads):
    """Cap BLAS/OpenMP pools; only effective before numpy is first imported."""
    if threads is None:
        env = os.environ.get("YMH_THREADS")
        threads = int(env) if env else None
    if threads is not None:
        if threads < 1:
            raise ValueError("thread count must be at least 1")
        for var in _THREAD_VARS:
            os.environ[var] = str(threads)
    return threads


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the validation status rather than argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser():
    ap = _Parser(prog="ymh", description=__doc__.split("\n\n")[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", help="key = value configuration file")
    ap.add_argument("--out", help="output directory (default ./ymh-<subcommand>)")
    ap.add_argument("--threads", type=int, help="worker threads (fallback: $YMH_THREADS)")
    ap.add_argument("--seed", type=int, help="random seed, overrides the config")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override one config key; may be repeated")
    return ap


def resolve_config(sub, config_path=None, overrides=(), seed=None):
    from .config import RunConfig, load_config, parse_config

    rc = replace(RunConfig(), **_DEFAULTS[sub])
    if config_path:
        rc = load_config(config_path, base=rc)
    if overrides:
        rc = parse_config("\n".join(overrides), base=rc)
    if seed is not None:
        rc = parse_config(f"seed = {seed}", base=rc)
    return rc


# ----------------------------------------------------------------------------
# shared builders


def _params(rc):
    from .energy import EnergyParams

    return EnergyParams(rc.epsilon, rc.lam)


def _flow_params(rc):
    from .flow import FlowParams

    return FlowParams(rc.step0, rc.tol_residual, rc.max_iters, rc.backtrack)


def _grid(rc):
    from . import grid as G

    return G.Grid((rc.n,) * 3, rc.h, rc.boundary, rc.twist_n)


def _profile(rc, p):
    from . import radial as R

    if p.lam == 0:
        return R.bps_profile(rc.r_max, rc.radial_n, p.epsilon)
    prof, _ = R.radial_relax(R.initial_profile(rc.r_max, rc.radial_n, p), p)
    return prof


def initial_config(rc):
    """Configuration and couplings selected by ``rc.init``."""
    import numpy as np

    from . import flow as Fl
    from . import grid as G
    from . import radial as R
    from .io import load_snapshot

    if rc.init == "snapshot":
        return load_snapshot(rc.input)
    p = _params(rc)
    grid = _grid(rc)
    if rc.init == "trivial":
        return G.Configuration.trivial(grid), p
    if rc.init == "perturbed":
        base = G.Configuration.trivial(grid)
        a, phi = Fl._random_direction(grid, np.random.default_rng(rc.seed))
        if not grid.periodic:
            a = a * grid.free_mask[..., None, None]
            phi = phi * grid.free_mask[..., None]
        return base.perturbed(a, phi, Fl.scale_to_energy(base, a, phi, p, rc.amplitude)), p
    if rc.init == "sweepout":
        if grid.periodic:
            raise ValueError("init = sweepout needs boundary = dirichlet")
        return Fl.build_sweepout(np.zeros(3), p, grid), p
    # hedgehog
    return R.hedgehog_to_grid(_profile(rc, p), grid,
                              min_boundary_higgs=rc.min_boundary_higgs), p


def _grid_center(grid):
    lo, hi = grid.bounds
    return tuple(0.5 * (lo + hi))


# ----------------------------------------------------------------------------
# subcommands; each returns (files, summary, exit status)


def cmd_relax(rc, out):
    from . import flow as Fl
    from .energy import CSV_HEADER, total_energy
    from .io import save_snapshot

    cfg, p = initial_config(rc)
    start = total_energy(cfg, p)
    final, trace = Fl.relax(cfg, p, _flow_params(rc))
    end = total_energy(final, p)
    save_snapshot(final, p, os.path.join(out, "final.ymh"))
    files = {
        "energy.csv": ["stage," + CSV_HEADER, "initial," + start.csv_row(p), "final," + end.csv_row(p)],
        "trace.csv": ["iteration,energy,residual,step"]
                     + [f"{i},{e!r},{r!r},{s!r}" for i, e, r, s in trace.rows()],
    }
    summary = (f"relax: status={trace.status} iterations={trace.iterations} "
               f"energy={end.total:.12g} normalized={end.normalized:.12g} "
               f"residual={trace.final_residual:.3e}")
    return files, summary, EXIT_OK


def cmd_sweepout(rc, out):
    from . import flow as Fl

    p = _params(rc)
    grid = _grid(rc)
    if grid.periodic:
        raise ValueError("sweepout needs boundary = dirichlet")
    scan = Fl.width_scan(p, grid, rc.y_samples, window=rc.window)
    rows = ["y1,y2,y3,curvature,gradient,potential,total,normalized"]
    for y, r in zip(scan.ys, scan.reports):
        rows.append(",".join(repr(float(v)) for v in (*y, *r)))
    y = scan.argmax_y
    summary = (f"sweepout: samples={len(scan.ys)} max_energy={scan.omega_hat:.12g} "
               f"max_normalized={scan.omega_hat / p.epsilon:.12g} "
               f"argmax_y=({y[0]:.6g},{y[1]:.6g},{y[2]:.6g})")
    return {"sweepout.csv": rows}, summary, EXIT_OK


def _profile_rows(prof):
    return ["r,H,K"] + [f"{r!r},{h!r},{k!r}" for r, h, k in zip(prof.r, prof.H, prof.K)]


def cmd_bps(rc, out):
    import numpy as np

    from . import radial as R
    from .energy import EnergyParams

    p = EnergyParams(rc.epsilon, 0.0)
    prof = R.bps_profile(rc.r_max, rc.radial_n, p.epsilon)
    rep = R.radial_energy(prof, p)
    res = R.bogomolny_residuals(prof, p.epsilon)
    bres = float(max(np.max(np.abs(v)) for v in res))
    rows = ["r_max,n,epsilon,curvature,gradient,potential,energy,normalized,ratio_8pi,bogomolny_residual",
            f"{prof.r_max!r},{len(prof.r)},{p.epsilon!r},{rep.curvature_term!r},{rep.gradient_term!r},"
            f"{rep.potential_term!r},{rep.total!r},{rep.normalized!r},"
            f"{rep.normalized / (8 * np.pi)!r},{bres!r}"]
    summary = (f"bps: normalized_energy={rep.normalized:.12g} "
               f"ratio_to_8pi={rep.normalized / (8 * np.pi):.9f}")
    return {"bps.csv": rows, "profile.csv": _profile_rows(prof)}, summary, EXIT_OK


def cmd_radial(rc, out):
    import numpy as np

    from . import radial as R

    p = _params(rc)
    prof, trace = R.radial_relax(R.initial_profile(rc.r_max, rc.radial_n, p), p, _flow_params(rc))
    rep = R.radial_energy(prof, p)
    rows = ["epsilon,lambda,status,iterations,residual,energy,normalized,excess_over_8pi",
            f"{p.epsilon!r},{p.lam!r},{trace.status},{trace.iterations},{trace.final_residual!r},"
            f"{rep.total!r},{rep.normalized!r},{rep.normalized - 8 * np.pi!r}"]
    files = {
        "radial.csv": rows,
        "profile.csv": _profile_rows(prof),
        "trace.csv": ["iteration,energy,residual,step"]
                     + [f"{i},{e!r},{r!r},{s!r}" for i, e, r, s in trace.rows()],
    }
    summary = (f"radial: status={trace.status} normalized_energy={rep.normalized:.12g} "
               f"residual={trace.final_residual:.3e}")
    status = EXIT_OK if trace.converged else EXIT_NUMERIC
    return files, summary, status


def cmd_charge(rc, out):
    from . import grid as G
    from . import measures as M
    from .errors import HiggsVanishesOnSphere

    cfg, p = initial_config(rc)
    m = M.measures(cfg, p)
    center = _grid_center(cfg.grid)
    rows = ["radius,mass,charge,degree"]
    for k in (1, 2, 3, 4):
        r = rc.radius * k / 4
        ball = G.Ball(center, r)
        try:
            deg = M.charge_degree(cfg, center, r, rc.level)
        except HiggsVanishesOnSphere:
            deg = float("nan")
        rows.append(f"{r!r},{m.mass(ball)!r},{M.charge_volume(cfg, p, ball)!r},{deg!r}")
    total = M.charge_volume(cfg, p)
    summary = f"charge: domain_charge={total:.9f} degree_at_r={deg:.9f} radius={rc.radius!r}"
    return {"charge.csv": rows}, summary, EXIT_OK


def cmd_bubbling(rc, out):
    from . import measures as M

    cfg, p = initial_config(rc)
    m = M.measures(cfg, p)
    rep = M.detect_concentration(m, rc.radius, rc.eta_star_user)
    rows = ["index,x,y,z,radius,mass,charge"]
    for i, pt in enumerate(rep.points):
        x, y, z = pt.center
        rows.append(f"{i},{x!r},{y!r},{z!r},{rep.radius!r},{pt.mass!r},{pt.charge!r}")
    files = {"bubbling.csv": rows, "concentration.txt": rep.text().splitlines()}
    summary = f"bubbling: points={len(rep.points)} total_mass={m.mass():.12g}"
    return files, summary, EXIT_OK


def cmd_gap_probe(rc, out):
    from . import flow as Fl

    p = _params(rc)
    rep = Fl.gap_probe(p, _grid(rc), rc.amplitude, rc.trials, rc.seed, _flow_params(rc))
    summary = f"gap-probe: trials={len(rep.trials)} trivial_fraction={rep.trivial_fraction:.6g}"
    return {"gap.csv": list(rep.csv_rows())}, summary, EXIT_OK


def cmd_verify(rc, out):
    from . import verify as V

    checks = V.run_suite(rc.seed)
    failed = [c.name for c in checks if not c.passed]
    rows = [V.CSV_HEADER] + [c.csv_row() for c in checks]
    summary = f"verify: checks={len(checks)} failures={len(failed)}"
    if failed:
        summary += " failed=" + ";".join(failed)
    return {"verify.csv": rows}, summary, EXIT_NUMERIC if failed else EXIT_OK


COMMANDS = {
    "relax": cmd_relax, "sweepout": cmd_sweepout, "bps": cmd_bps, "radial": cmd_radial,
    "charge": cmd_charge, "bubbling": cmd_bubbling, "gap-probe": cmd_gap_probe,
    "verify": cmd_verify,
}


# ----------------------------------------------------------------------------


def _write_lines(path, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def manifest_text(sub, rc, seconds, status, threads):
    import numpy
    import scipy

    from . import __version__
    from .config import emit_config

    head = [
        "# ymh run manifest",
        f"# subcommand = {sub}",
        f"# ymh {__version__}, numpy {numpy.__version__}, scipy {scipy.__version__}, "
        f"python {platform.python_version()}",
        f"# threads = {threads if threads is not None else 'default'}",
        f"# wall_time_s = {seconds:.3f}",
        f"# exit_status = {status}",
    ]
    return "\n".join(head) + "\n" + emit_config(rc)


def run(sub, rc, out, threads=None):
    """Execute one subcommand; returns ``(exit status, summary line)``."""
    from scipy import fft

    os.makedirs(out, exist_ok=True)
    t0 = time.perf_counter()
    with fft.set_workers(threads or 1):
        files, summary, status = COMMANDS[sub](rc, out)
    for name, lines in files.items():
        _write_lines(os.path.join(out, name), lines)
    text = manifest_text(sub, rc, time.perf_counter() - t0, status, threads)
    with open(os.path.join(out, "manifest.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    return status, summary


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code
    sub = args.subcommand
    try:
        threads = _apply_threads(args.threads)
        rc = resolve_config(sub, args.config, args.set, args.seed)
        out = args.out or f"ymh-{sub}"
        status, summary = run(sub, rc, out, threads)
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"ymh {sub}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"ymh {sub}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"ymh {sub}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(summary)
    return status


if __name__ == "__main__":
    sys.exit(main())
