"""``elcalderon`` command line: convergence studies, crack rates, scattering frames, verification suites.

Every run writes ``<outdir>/<command>.csv`` (tables) and
``<outdir>/<command>.manifest.json`` with the resolved configuration.
Set ``ELCALDERON_THREADS`` to bound the numba thread pool.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import platform
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .material import DEFAULT_MATERIAL, Material

THREADS_ENV = "ELCALDERON_THREADS"


def _int_list(text):
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _float_list(text):
    if not text.strip():
        return []
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _complex(text):
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}")


def _material(text):
    try:
        lam, mu, rho = (float(v) for v in text.split(","))
        return Material(lam=lam, mu=mu, rho=rho)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"material must be 'lambda,mu,rho': {exc}")


def _lattice(text):
    from .cq import Lattice

    parts = text.split(",")
    if len(parts) != 6:
        raise argparse.ArgumentTypeError("lattice must be 'xmin,xmax,ymin,ymax,nx,ny'")
    x0, x1, y0, y1 = (float(v) for v in parts[:4])
    return Lattice(x0, x1, y0, y1, int(parts[4]), int(parts[5]))


def _configure_threads():
    value = os.environ.get(THREADS_ENV)
    if not value:
        return None
    import numba

    n = int(value)
    if n < 1:
        raise SystemExit(f"{THREADS_ENV} must be a positive integer")
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return numba.get_num_threads()


def _jsonable(value):
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, Material):
        return value.as_dict()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if hasattr(value, "as_dict"):
        return value.as_dict()
    return value


def _write_outputs(args, rows=None, columns=None, extra=None):
    from .solvers import write_csv

    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    name = args.command
    if rows is not None:
        buf = io.StringIO()
        write_csv(buf, rows, columns)
        (outdir / f"{name}.csv").write_text(buf.getvalue())
        sys.stdout.write(buf.getvalue())
    config = {k: _jsonable(v) for k, v in vars(args).items() if k != "func"}
    manifest = {"command": name, "config": config, "version": __version__,
                "python": platform.python_version(), "threads": args.threads}
    if extra:
        manifest.update({k: _jsonable(v) for k, v in extra.items()})
    (outdir / f"{name}.manifest.json").write_text(json.dumps(manifest, indent=2, default=_jsonable))
    return manifest


def cmd_converge_frequency(args):
    from . import solvers
    from .geometry import load_scene

    curve = load_scene(args.curve)[0] if args.curve else solvers.TESTBED_CURVE
    rows = solvers.convergence_table(args.N, args.equation, args.material, args.s, args.seed, curve)
    columns = solvers.FREQUENCY_COLUMNS if len(args.N) > 1 else ["N", "E_U", "E_lambda", "E_phi"]
    _write_outputs(args, rows, columns)
    return 0


def cmd_converge_time(args):
    from . import cq, solvers
    from .geometry import load_scene

    curve = load_scene(args.curve)[0] if args.curve else solvers.TESTBED_CURVE
    pulse = cq.PlanePulse(args.material, t0=args.t0, width=args.width)
    rows = cq.transient_table(args.M, args.bc, args.N, args.T, args.material, args.seed, curve, pulse)
    columns = ["M", "E_U", "ecr", "seconds"] if len(args.M) > 1 else ["M", "E_U", "seconds"]
    _write_outputs(args, rows, columns, {"smoothing": "degree-9 smoothstep", "eps": cq.EPS})
    return 0


def cmd_crack(args):
    from . import solvers

    bcs = ("dirichlet", "neumann") if args.bc == "both" else (args.bc,)
    if len(args.N) < 3:
        print("crack: three-grid rates need at least three N values", file=sys.stderr)
        return 2
    rows = solvers.crack_table(args.N, bcs, args.material, args.s, args.seed)
    columns = ["N"] + [f"ecr_{bc}" for bc in bcs]
    _write_outputs(args, rows, columns)
    return 0


def cmd_scatter(args):
    from . import cq
    from .geometry import load_scene

    curves = load_scene(args.scene if args.scene else cq.THREE_DISKS)
    if args.eps is None:
        args.eps = cq.SCENE_EPS
    T = args.T if args.T is not None else args.k * args.M
    pulse = cq.PlanePulse(args.material, t0=args.t0, width=args.width)
    for t in args.frames:
        if not 0.0 <= t <= T:
            print(f"scatter: frame time {t} outside [0, {T}]", file=sys.stderr)
            return 2
    outdir = Path(args.outdir)
    if not args.frames:
        _write_outputs(args, extra={"frame_times": [], "files": [], "lattice": args.lattice})
        return 0
    t_start = time.perf_counter()
    times, frames, info = cq.run_scattering_scene(curves, pulse, args.M, T, args.lattice, args.frames,
                                                  args.points_per_curve, eps=args.eps, mat=args.material)
    manifest = cq.write_frames(outdir, times, frames, args.frames, args.lattice,
                               {"peak": info["peak"], "T": T, "M": args.M, "eps": args.eps,
                                "seconds": time.perf_counter() - t_start})
    _write_outputs(args, extra=manifest)
    for f, t in zip(manifest["files"], args.frames):
        print(f"t={t:g}\t{outdir / f}")
    return 0


def _identity_checks(seed, tol):
    from . import hilbert

    rng = np.random.default_rng(seed)
    worst = {"log": 0.0, "cot": 0.0, "quadrature": 0.0}
    for N in range(1, 129):
        for t in hilbert.pole_free_points(N, 50, rng):
            worst["log"] = max(worst["log"], hilbert.verify_log_identity(N, t))
            worst["cot"] = max(worst["cot"], hilbert.verify_cot_identity(N, t))
    for N in range(1, 65):
        for n in range(-(N // 2), N // 2 + 1):
            if 2 * abs(n) >= N:
                continue
            t = hilbert.pole_free_points(N, 50, rng)
            r = hilbert.trig_quadrature_residual(hilbert.TrigPoly.basis(n), N, t)
            worst["quadrature"] = max(worst["quadrature"], float(np.max(r)))
    return [(f"{name} identity", val, val <= tol) for name, val in worst.items()]


def cmd_verify(args):
    from . import hilbert

    results = []
    if args.suite == "identities":
        results = _identity_checks(args.seed, args.tol)
    elif args.suite == "fork":
        study = hilbert.consistency_order_study(args.a, tuple(args.N))
        expect = "third order" if abs(args.a - 5 / 6) < 1e-6 else "reduced order"
        ok = study["slope"] >= 2.9 if expect == "third order" else study["slope"] <= 1.5
        results = [(f"fork slope a={args.a:g} ({expect})", study["slope"], ok)]
        rows = [{"N": N, "error": e, "local_slope": s, "a": args.a}
                for N, e, s in zip(study["N"], study["error"], study["local_slope"])]
        buf = io.StringIO()
        from .solvers import write_csv

        write_csv(buf, rows, ["N", "error", "local_slope", "a"])
        Path(args.outdir).mkdir(parents=True, exist_ok=True)
        (Path(args.outdir) / "verify.csv").write_text(buf.getvalue())
        sys.stdout.write(buf.getvalue())
    for name, value, ok in results:
        print(f"{'PASS' if ok else 'FAIL'}\t{name}\t{value:.3e}")
    passed = all(ok for _, _, ok in results)
    _write_outputs(args, extra={"checks": [{"name": n, "value": v, "pass": bool(ok)} for n, v, ok in results],
                                "passed": passed})
    return 0 if passed else 1


def build_parser():
    p = argparse.ArgumentParser(prog="elcalderon", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--material", type=_material, default=DEFAULT_MATERIAL, help="lambda,mu,rho")
        sp.add_argument("--seed", type=int, default=20240611)
        sp.add_argument("--outdir", default=".")

    sp = sub.add_parser("converge-frequency", help="frequency-domain Dirichlet convergence table")
    sp.add_argument("--equation", choices=("first", "second"), default="first")
    sp.add_argument("--N", type=_int_list, default=[30, 60, 120, 240, 480])
    sp.add_argument("--s", type=_complex, default=-3j)
    sp.add_argument("--curve", help="curve JSON (file or literal); defaults to the 4x3 ellipse")
    common(sp)
    sp.set_defaults(func=cmd_converge_frequency)

    sp = sub.add_parser("converge-time", help="CQ convergence table at the final time")
    sp.add_argument("--bc", choices=("dirichlet", "neumann"), default="dirichlet")
    sp.add_argument("--N", type=int, default=500)
    sp.add_argument("--M", type=_int_list, default=[50, 100, 200, 400])
    sp.add_argument("--T", type=float, default=3.0)
    sp.add_argument("--t0", type=float, default=2.3)
    sp.add_argument("--width", type=float, default=1.0, help="smoothed Heaviside width")
    sp.add_argument("--curve")
    common(sp)
    sp.set_defaults(func=cmd_converge_time)

    sp = sub.add_parser("crack", help="three-grid rates for the half-circle crack")
    sp.add_argument("--bc", choices=("dirichlet", "neumann", "both"), default="both")
    sp.add_argument("--N", type=_int_list, default=[10, 20, 40, 80, 160, 320])
    sp.add_argument("--s", type=_complex, default=-3j)
    common(sp)
    sp.set_defaults(func=cmd_crack)

    sp = sub.add_parser("scatter", help="transient scattering frames for a multi-curve scene")
    sp.add_argument("--scene", help="scene JSON (file or literal); defaults to three unit disks")
    sp.add_argument("--M", type=int, default=1200)
    sp.add_argument("--k", type=float, default=28 / 1200, help="time step when --T is not given")
    sp.add_argument("--T", type=float, default=None)
    sp.add_argument("--frames", type=_float_list, default=[])
    sp.add_argument("--points-per-curve", type=int, default=200)
    sp.add_argument("--lattice", type=_lattice, default=_lattice("-3,8,-3,7,111,101"))
    sp.add_argument("--t0", type=float, default=2.3)
    sp.add_argument("--width", type=float, default=1.0)
    sp.add_argument("--eps", type=float, default=None, help="CQ contour parameter (default: cq.SCENE_EPS)")
    common(sp)
    sp.set_defaults(func=cmd_scatter)

    sp = sub.add_parser("verify", help="Hilbert-transform identity and fork-order suites")
    sp.add_argument("--suite", choices=("identities", "fork"), required=True)
    sp.add_argument("--a", type=float, default=5 / 6)
    sp.add_argument("--N", type=_int_list, default=[16, 32, 64, 128])
    sp.add_argument("--tol", type=float, default=1e-10)
    common(sp)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    warnings.filterwarnings("ignore", message="The TBB threading layer")
    args = build_parser().parse_args(argv)
    args.threads = _configure_threads()
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError, KeyError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
