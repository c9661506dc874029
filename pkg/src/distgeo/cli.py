"""Command-line interface.

Exit codes: 0 success, 1 a classification expectation failed, 2 input error,
3 numeric failure. Results go to stdout as JSON (floats with 17 significant
digits); trajectories go to CSV files.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import curvature as C
from . import dynamics as Dyn
from .dist import frame_at
from .errors import DistGeoError, InputError, NumericError
from .riemann import metric_at
from .scenario import builtin_fixture, load_scenario
from .sff import (bz_decomposition, hypersurface_form, is_involutive,
                  is_totally_geodesic, shape_operator, sff, sobol_points)
from .verify import run_battery

EXIT_OK, EXIT_FAILS, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


# -- output ----------------------------------------------------------------------

def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def dumps(obj, pretty=False, _level=0):
    """JSON with every float written by ``format(x, '.17g')``."""
    obj = _plain(obj) if _level == 0 else obj
    pad = "  " * (_level + 1) if pretty else ""
    sep = ",\n" if pretty else ", "
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_string(k)}: {dumps(v, pretty, _level + 1)}" for k, v in obj.items()]
        end = "\n" + "  " * _level if pretty else ""
        return "{" + ("\n" if pretty else "") + sep.join(items) + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if not pretty or all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, False, _level + 1) for v in obj) + "]"
        items = [pad + dumps(v, pretty, _level + 1) for v in obj]
        return "[\n" + sep.join(items) + "\n" + "  " * _level + "]"
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return "null"
        return format(obj + 0.0, ".17g")      # + 0.0 turns -0 into 0
    return _string(str(obj))


def _string(s):
    return json.dumps(s)


# -- argument helpers --------------------------------------------------------------

def _vector(text, m, name):
    try:
        values = [float(c) for c in str(text).replace(",", " ").split()]
    except ValueError as exc:
        raise InputError(f"{name}: not a list of numbers: {text!r}") from exc
    if len(values) != m:
        raise InputError(f"{name} must have {m} components, got {len(values)}")
    return np.array(values)


def _scenario(args):
    if args.scenario and args.fixture:
        raise InputError("give either --scenario or --fixture, not both")
    if args.scenario:
        return load_scenario(args.scenario)
    if args.fixture:
        return builtin_fixture(args.fixture)
    raise InputError("one of --scenario or --fixture is required")


def _need_dist(sc):
    if sc.distribution is None:
        raise InputError("this command needs a [distribution] in the scenario")
    return sc.distribution


def _points(sc, args):
    if sc.box is None:
        raise InputError("classification needs a [sampling] box")
    n = args.samples if args.samples is not None else sc.samples
    seed = args.seed if args.seed is not None else sc.seed
    return sobol_points(sc.box, n, seed)


def _frame_index(dist, i):
    if not 0 <= i < dist.n:
        raise InputError(f"frame index {i} out of range 0..{dist.n - 1}")
    return dist.E(i)


# -- commands ---------------------------------------------------------------------

_EXPECT = {
    "involutive": ("involutive", True),
    "not-involutive": ("involutive", False),
    "totally-geodesic": ("totally_geodesic", True),
    "not-totally-geodesic": ("totally_geodesic", False),
}


def _verdict(report):
    return None if report.verdict == "inconclusive" else report.holds


def cmd_classify(args, sc):
    dist = _need_dist(sc)
    pts = _points(sc, args)
    tol = args.tol if args.tol is not None else sc.tol("classify")
    inv = is_involutive(dist, pts, tol)
    tg = is_totally_geodesic(dist, pts, tol)
    out = {"involutive": _verdict(inv), "totally_geodesic": _verdict(tg),
           "reports": [inv.to_dict(), tg.to_dict()]}
    code = EXIT_OK
    for e in args.expect or []:
        key, want = _EXPECT[e]
        if out[key] is not want:
            code = EXIT_FAILS
    return out, code


def cmd_tensors(args, sc):
    dist = _need_dist(sc)
    p = _vector(args.at, dist.m, "--at")
    frame = frame_at(dist, p)
    n, r = dist.n, dist.corank
    B = {}
    Stab = [[[0.0] * r for _ in range(n)] for _ in range(n)]
    for a in range(n):
        for b in range(n):
            v = sff(dist, dist.E(a), dist.E(b), p)
            B[f"E{a},E{b}"] = {"value": v.value, "sym": v.sym, "skew": v.skew}
            for j in range(r):
                Stab[a][b][j] = shape_operator(dist, dist.E(a), dist.E(b), dist.Z(j), p)
    out = {"p": p, "frame": frame.to_dict(), "B": B, "S": Stab}
    if args.fields:
        i, j, k = args.fields
        X, Y = _frame_index(dist, i), _frame_index(dist, j)
        if not 0 <= k < r:
            raise InputError(f"normal index {k} out of range 0..{r - 1}")
        sym, skew, lie, ext = bz_decomposition(dist, dist.Z(k), X, Y, p)
        out["selected"] = {"fields": [f"E{i}", f"E{j}", f"Z{k}"],
                           "S": shape_operator(dist, X, Y, dist.Z(k), p),
                           "sym": sym, "skew": skew, "lie_check": lie, "ext_check": ext}
    if r == 1:
        out["hypersurface"] = hypersurface_form(dist, p, sc.orientation).to_dict()
    return out, EXIT_OK


def cmd_curvature(args, sc):
    dist = _need_dist(sc)
    p = _vector(args.at, dist.m, "--at")
    idx = args.frame or [0, 1]
    if len(idx) not in (2, 4):
        raise InputError("--frame takes two or four frame indices")
    if len(idx) == 2:
        idx = [idx[0], idx[1], idx[0], idx[1]]
    X = [_frame_index(dist, i) for i in idx]
    rep = C.gauss_identity(dist, *X, p, labels=[f"E{i}" for i in idx])
    out = {"p": p, "gauss": rep.to_dict(),
           "sectional_ambient": C.sectional(dist, X[0], X[1], p, "ambient"),
           "sectional_intrinsic": C.sectional(dist, X[0], X[1], p, "intrinsic"),
           "residual": rep.residual}
    return out, EXIT_OK


def _run_params(args, sc, m):
    run = sc.run
    q0 = _vector(args.q0, m, "--q0") if args.q0 is not None else run.get("q0")
    v0 = _vector(args.v0, m, "--v0") if args.v0 is not None else run.get("v0")
    T = args.T if args.T is not None else run.get("T")
    dt = args.dt if args.dt is not None else run.get("dt")
    for name, val in (("q0", q0), ("v0", v0), ("T", T), ("dt", dt)):
        if val is None:
            raise InputError(f"--{name} is required (no default in the scenario)")
    return np.asarray(q0, dtype=float), np.asarray(v0, dtype=float), float(T), float(dt)


def _summarize(traj, args, mod, dist):
    path = args.out or "trajectory.csv"
    try:
        traj.to_csv(path)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc.strerror}") from exc
    out = {"csv": path, "samples": len(traj), "error": traj.error,
           "final": {"t": traj.t[-1], "q": traj.q[-1], "v": traj.v[-1]}}
    if traj.constraint_residual is not None:
        out["max_constraint_residual"] = float(np.max(traj.constraint_residual))
        out["max_dalembert_residual"] = float(np.max(traj.dalembert_residual))
        G = [metric_at(mod, q) for q in traj.q]
        out["max_reaction_power"] = float(max(abs(r @ g @ v) for r, g, v in
                                              zip(traj.reaction, G, traj.v)))
    if traj.k is not None:
        out["max_k"] = float(np.max(traj.k))
    if traj.kD is not None:
        out["max_kD"] = float(np.max(traj.kD))
        out["max_kperp"] = float(np.max(traj.kperp))
    if args.report_at is not None:
        q, v = Dyn.state_at(mod, traj, args.report_at)
        g = metric_at(mod, q)
        out["report"] = {"t": args.report_at, "q": q, "v": v,
                         "speed": math.sqrt(max(v @ g @ v, 0.0))}
        if dist is not None:
            # v = sum_a u_a X_a on the declared generators
            X = np.array([[float(c.eval(q)) for c in gen.components]
                          for gen in dist.generators])
            W = X @ g
            out["report"]["generator_coords"] = np.linalg.solve(W @ X.T, W @ v)
    return out, (EXIT_NUMERIC if traj.error else EXIT_OK)


def cmd_geodesic(args, sc):
    mod = sc.manifold
    q0, v0, T, dt = _run_params(args, sc, mod.m)
    if args.type == "intrinsic":
        dist = _need_dist(sc)
        traj = Dyn.geodesic_intrinsic(dist, q0, v0, T, dt)
    else:
        dist = sc.distribution
        traj = Dyn.geodesic_ambient(mod, q0, v0, T, dt)
    if not traj.error:
        Dyn.curve_curvatures(dist if args.type == "intrinsic" else mod, traj)
    return _summarize(traj, args, mod, dist)


def cmd_simulate(args, sc):
    mod = sc.manifold
    q0, v0, T, dt = _run_params(args, sc, mod.m)
    force = None
    if args.force_from_scenario:
        if sc.force is None:
            raise InputError("the scenario declares no [force]")
        force = sc.force
    if args.type == "intrinsic":
        dist = _need_dist(sc)
        if force is None:
            traj = Dyn.geodesic_intrinsic(dist, q0, v0, T, dt)
        else:
            traj = Dyn.nonholonomic(dist, force, q0, v0, T, dt)
    else:
        dist = sc.distribution
        traj = (Dyn.geodesic_ambient(mod, q0, v0, T, dt) if force is None
                else Dyn.newton(mod, force, q0, v0, T, dt))
    out, code = _summarize(traj, args, mod, dist)
    if not traj.error and traj.force is not None:
        out["energy_balance"] = Dyn.energy_balance(mod, traj)
    return out, code


def cmd_verify(args, sc):
    seed = args.seed if args.seed is not None else sc.seed
    n = args.samples if args.samples is not None else 16
    checks = run_battery(sc, n, seed)
    lines = [c.to_dict() for c in checks]
    code = EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERIC
    return lines, code


COMMANDS = {
    "classify": cmd_classify, "tensors": cmd_tensors, "curvature": cmd_curvature,
    "geodesic": cmd_geodesic, "simulate": cmd_simulate, "verify": cmd_verify,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", metavar="PATH")
    common.add_argument("--fixture", metavar="NAME")
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--pretty", action="store_true")

    parser = argparse.ArgumentParser(prog="distgeo",
                                     description="Geometry of regular distributions.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="involutivity and total geodesy")
    p.add_argument("--samples", type=int)
    p.add_argument("--expect", action="append", choices=sorted(_EXPECT))

    p = sub.add_parser("tensors", parents=[common], help="B, S and the corank-one form")
    p.add_argument("--at", required=True, metavar="P")
    p.add_argument("--fields", type=int, nargs=3, metavar=("I", "J", "K"))

    p = sub.add_parser("curvature", parents=[common], help="Gauss identity and sectional curvatures")
    p.add_argument("--at", required=True, metavar="P")
    p.add_argument("--frame", type=int, nargs="+", metavar="A")

    for name, helptext in (("geodesic", "integrate a geodesic"),
                           ("simulate", "integrate forced motion")):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--type", choices=("ambient", "intrinsic"), default="intrinsic")
        p.add_argument("--q0")
        p.add_argument("--v0")
        p.add_argument("--T", type=float)
        p.add_argument("--dt", type=float)
        p.add_argument("--report-at", type=float, metavar="T")
        if name == "simulate":
            p.add_argument("--force-from-scenario", action="store_true")

    p = sub.add_parser("verify", parents=[common], help="run the invariant battery")
    p.add_argument("--samples", type=int)
    return parser


def _emit(out, args):
    if args.command == "verify":
        if args.pretty:
            for c in out:
                mark = "PASS" if c["passed"] else "FAIL"
                print(f"{mark} {c['name']:<32} {format(c['max_residual'], '.3e')}"
                      f"  (tol {format(c['tol'], '.0e')})")
        else:
            for c in out:
                print(dumps(c))
        return
    text = dumps(out, pretty=args.pretty)
    if args.command in ("tensors", "classify", "curvature") and args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        sc = _scenario(args)
        out, code = COMMANDS[args.command](args, sc)
        _emit(out, args)
        return code
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except DistGeoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
