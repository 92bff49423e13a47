"""Command-line interface: gap analysis, scenario runs, comparisons, sweeps, verify.

Exit codes: 0 success, 2 scenario parse error, 3 precondition (feasibility or
gain) error, 4 jump-guard (Zeno) trip.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .potential import Spectrum, build_weight
from .scenario import (PreconditionError, ScenarioError, load_scenario, parse_matrix)
from .simulator import run, sweep_epsilon
from .trajectory import time_to_threshold, write_csv
from .verify import run_suites
from .warping import (SynergyError, critical_points, feasibility, gap, k_bound,
                      make_warped, optimal_u)

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_ZENO = 4


def _scenario_path(name: str) -> str:
    """Resolve a scenario argument: a path, or the name of a bundled scenario."""
    p = Path(name)
    if p.exists():
        return str(p)
    stem = name if name.endswith(".scn") else name + ".scn"
    bundled = resources.files("so3warp.scenarios").joinpath(stem)
    if bundled.is_file():
        return str(bundled)
    raise ScenarioError(f"scenario not found: {name} (not a file, not a bundled scenario)")


def list_bundled() -> list[str]:
    return sorted(p.name for p in resources.files("so3warp.scenarios").iterdir()
                  if p.name.endswith(".scn"))


def cmd_gap(args: argparse.Namespace) -> int:
    try:
        a = parse_matrix(args.weight, "weight")
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    try:
        w = build_weight(a)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION

    print(f"spectrum class : {w.spectrum.value}")
    print(f"eigvals(A)     : {w.eigvals_a[0]:.12g}, {w.eigvals_a[1]:.12g}, {w.eigvals_a[2]:.12g}")
    print(f"eigvals(W)     : {w.w_eigvals[0]:.12g}, {w.w_eigvals[1]:.12g}, {w.w_eigvals[2]:.12g}")
    kb = k_bound(w)
    print(f"gain bound k_bar = {kb:.12g}")

    if w.spectrum is Spectrum.ISOTROPIC:
        print("infeasible: isotropic spectrum admits no synergistic warping axis "
              "(every axis leaves a zero-margin critical direction)")
        return EXIT_PRECONDITION

    try:
        u, dmin = optimal_u(w)
    except SynergyError as exc:
        print(f"infeasible: {exc}")
        return EXIT_PRECONDITION
    rep = feasibility(w, u)
    print(f"optimal u      : [{u[0]:.12g}, {u[1]:.12g}, {u[2]:.12g}]  (min-Delta {dmin:.12g})")
    print(f"feasibility    : {rep.note}")
    for b in rep.branches:
        kind = "continuum worst case" if b.continuum else "isolated"
        print(f"  Delta[{b.label}] = {b.delta:.12g}  (lambda_W = {b.lam_w:.12g}, {kind})")

    k = args.k if args.k is not None else 0.95 * kb
    clamped = False
    if abs(k) >= kb and not args.paper_exact:
        k = math.copysign(0.99 * kb, k)
        clamped = True
        print(f"gain {args.k:.12g} exceeds k_bar; clamped to {k:.12g} (use --paper-exact to bypass)")
    wp = make_warped(w, u=u, k=k, validate=not args.paper_exact)
    pts = critical_points(wp)
    print(f"gain k         : {k:.12g}")
    print("undesired critical points of U (one per eigendirection and index):")
    for p in pts:
        th = 2.0 * math.asin(wp.gains[p.q] * p.v_bar)
        print(f"  q={p.q} v=[{p.v[0]:.6g},{p.v[1]:.6g},{p.v[2]:.6g}] "
              f"V_A = {p.v_bar:.12g}, theta = {th:.12g}, U = {p.u_value:.12g}")
    g = gap(wp)
    print(f"synergy gap    : {g:.12g}")
    print(f"suggested delta: {0.5 * g:.12g} (half the gap)")

    if args.out:
        summary = {
            "spectrum": w.spectrum.value,
            "eigvals_a": w.eigvals_a.tolist(),
            "w_eigvals": w.w_eigvals.tolist(),
            "k_bar": kb,
            "k": k,
            "k_clamped": clamped,
            "u": u.tolist(),
            "min_delta": dmin,
            "deltas": {b.label: b.delta for b in rep.branches},
            "critical_points": [
                {"q": p.q, "v": p.v.tolist(), "v_bar": p.v_bar, "u_value": p.u_value}
                for p in pts
            ],
            "gap": g,
            "suggested_delta": 0.5 * g,
        }
        Path(args.out).write_text(json.dumps(summary, indent=2) + "\n")
        print(f"wrote {args.out}")
    return EXIT_OK


def _load(args) -> tuple:
    sc = load_scenario(_scenario_path(args.scenario), paper_exact=args.paper_exact,
                       seed_override=args.seed)
    return sc


def cmd_simulate(args: argparse.Namespace) -> int:
    sc = _load(args)
    log = run(sc)
    out = args.out or (Path(args.scenario).stem + ".csv")
    write_csv(log, out)
    print(f"wrote {out}: {len(log)} records, {log.n_jumps} jumps, "
          f"final e2 = {log.e2[-1]:.6g}")
    for note in log.notes:
        print(f"  note: {note}")
    if log.zeno:
        print("jump guard tripped: too many jumps (likely misconfiguration)", file=sys.stderr)
        return EXIT_ZENO
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.scenario).stem
    rows = []
    zeno = False
    for kind in ("hybrid", "smooth"):
        sc = _load(args)
        sc = type(sc)(**{**sc.__dict__, "controller": kind,
                         "cfg": sc.cfg if kind == "hybrid" else None})
        if kind == "hybrid" and sc.cfg is None:
            print("error: scenario does not define a hybrid controller", file=sys.stderr)
            return EXIT_PRECONDITION
        log = run(sc)
        zeno = zeno or log.zeno
        path = out_dir / f"{stem}_{kind}.csv"
        write_csv(log, str(path))
        t_cross = time_to_threshold(log, args.threshold)
        rows.append((kind, t_cross, log.n_jumps, float(log.e2[-1]), str(path)))
    print(f"time to e2 < {args.threshold:g} from identical initial conditions:")
    for kind, t_cross, jumps, e2_final, path in rows:
        t_text = f"{t_cross:.3f} s" if t_cross is not None else "never"
        print(f"  {kind:7s}: {t_text:>10s}  jumps = {jumps}  final e2 = {e2_final:.3e}  ({path})")
    return EXIT_ZENO if zeno else EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    sc = _load(args)
    if sc.controller != "smooth":
        print("error: sweep requires a smooth-baseline scenario (sim.controller = smooth)",
              file=sys.stderr)
        return EXIT_PRECONDITION
    try:
        eps_list = [float(x) for x in args.eps.split(",")]
    except ValueError:
        print("error: --eps must be a comma-separated list of reals", file=sys.stderr)
        return EXIT_PARSE
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    logs = sweep_epsilon(sc, eps_list)
    onsets = []
    for eps, log in zip(eps_list, logs):
        path = out_dir / f"sweep_eps_{eps:g}.csv"
        write_csv(log, str(path))
        onset = time_to_threshold(log, args.threshold)
        onsets.append(onset)
        t_text = f"{onset:.3f} s" if onset is not None else "never"
        print(f"  eps = {eps:<10g} time to e2 < {args.threshold:g}: {t_text}  ({path})")
    known = [(e, o) for e, o in zip(eps_list, onsets) if o is not None]
    known.sort(key=lambda p: p[0])
    monotone = all(known[i][1] > known[i + 1][1] for i in range(len(known) - 1))
    print(f"onset ordering (smaller eps -> later escape): "
          f"{'monotone' if monotone else 'NOT monotone'}")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    results = run_suites(level=args.level, seed=args.seed or 0)
    failed = 0
    for res in results:
        print(res.line())
        failed += 0 if res.passed else 1
    if failed:
        print(f"{failed} suite(s) failed", file=sys.stderr)
        return 1
    print(f"all {len(results)} suites passed")
    return EXIT_OK


def cmd_scenarios(_args: argparse.Namespace) -> int:
    for name in list_bundled():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="so3warp",
                                 description="Synergistic warped potentials on SO(3) and the "
                                             "velocity-free hybrid attitude loop built on them.")
    ap.add_argument("--version", action="version", version=f"so3warp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gap", help="analyze a weight matrix: spectrum, k_bar, optimal axis, gap")
    g.add_argument("weight", help="diag(a,b,c) or 9 comma-separated reals")
    g.add_argument("--k", type=float, default=None, help="warping gain (default 0.95 k_bar)")
    g.add_argument("--paper-exact", action="store_true", help="skip the gain clamp/validation")
    g.add_argument("--out", default=None, help="write a JSON summary here")
    g.set_defaults(func=cmd_gap)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "run one scenario and write the trajectory CSV"),
        ("compare", cmd_compare, "run hybrid and smooth from the same initial conditions"),
        ("sweep", cmd_sweep, "smooth-controller family starting eps away from the flip"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("scenario", help="scenario file path or bundled scenario name")
        p.add_argument("--seed", type=int, default=None, help="override the scenario RNG seed")
        p.add_argument("--paper-exact", action="store_true",
                       help="keep literal gains/deltas even beyond their bounds")
        if name == "simulate":
            p.add_argument("--out", default=None, help="output CSV path")
        else:
            p.add_argument("--out-dir", default=".", help="directory for output CSVs")
        if name == "compare":
            p.add_argument("--threshold", type=float, default=0.01,
                           help="error threshold for the time-to-converge table")
        if name == "sweep":
            p.add_argument("--eps", default="0.1,0.01,0.001",
                           help="comma-separated list of offsets from the flip")
            p.add_argument("--threshold", type=float, default=0.5,
                           help="error threshold defining the escape onset")
        p.set_defaults(func=func)

    v = sub.add_parser("verify", help="run the randomized oracle suites")
    v.add_argument("--level", choices=("quick", "full"), default="quick")
    v.add_argument("--seed", type=int, default=None)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("scenarios", help="list the bundled scenario files")
    s.set_defaults(func=cmd_scenarios)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PreconditionError, SynergyError) as exc:
        print(f"precondition error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
