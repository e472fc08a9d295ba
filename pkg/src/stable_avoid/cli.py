"""Command line entry point: ``stable-avoid {eval,verify,sample}``.

Exit codes: 0 success, 1 a verification check failed, 2 usage, domain or
configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import conditioned, densities, harmonic, sampler, suites
from .errors import DomainError, StableAvoidError
from .params import UNIT, Interval, affine_from_unit, affine_to_unit, validate_params

SUBJECTS = ("h", "g", "u", "psi", "avoid", "circ-avoid", "ladder")


def fmt(v) -> str:
    return "%.17g" % v


class UsageError(Exception):
    pass


def _workers(args) -> int:
    if args.workers is not None:
        return args.workers
    env = os.environ.get("STABLE_AVOID_WORKERS")
    if env is None:
        return 1
    try:
        w = int(env)
    except ValueError:
        raise UsageError(f"STABLE_AVOID_WORKERS must be an integer, got {env!r}") from None
    if w < 1:
        raise UsageError("STABLE_AVOID_WORKERS must be positive")
    return w


def _interval(args) -> Interval:
    if args.interval is None:
        return UNIT
    a, b = args.interval
    try:
        return Interval(a, b)
    except ValueError as e:
        raise UsageError(str(e)) from None


# ---------------------------------------------------------------------------
# eval


def _eval_rows(args):
    p = validate_params(args.alpha, args.rho)
    iv = _interval(args)
    lam = iv.half_width
    subj = args.subject
    rows = []
    if subj == "psi":
        if not args.z:
            raise UsageError("eval psi needs --z")
        branch = harmonic.PsiBranch.RHO_HAT if args.hat else harmonic.PsiBranch.RHO
        for z in args.z:
            rows.append((fmt(z), harmonic.psi(p, branch, z), 0.0))
        return rows
    if subj == "ladder":
        for x in _need(args.x, "--x"):
            r = harmonic.ladder_potential_cauchy(x)
            rows.append((fmt(x), r.value, r.err_estimate))
        return rows
    if subj in ("g", "circ-avoid") and iv.a != -iv.b:
        raise UsageError(f"eval {subj} needs an interval symmetric about 0")
    for x in _need(args.x, "--x"):
        u = float(affine_to_unit(iv, x))
        if subj == "h":
            r = harmonic.h_unit(p, u)
            rows.append((fmt(x), r.value, r.err_estimate))
        elif subj == "g":
            r = harmonic.g_circ(p, u)
            rows.append((fmt(x), r.value, r.err_estimate))
        elif subj == "avoid":
            rows.append((fmt(x), harmonic.avoid_prob(p, u),
                         densities.avoid_prob_via_density(p, u).err_estimate))
        elif subj == "circ-avoid":
            rows.append((fmt(x), harmonic.circ_avoid_prob(p, u), 0.0))
        elif subj == "u":
            for y in _need(args.y, "--y"):
                v = float(affine_to_unit(iv, y))
                val = densities.killed_potential_density(p, u, v) * lam ** (p.alpha - 1.0)
                rows.append((f"{fmt(x)},{fmt(y)}", val, 0.0))
    return rows


def _need(vals, flag):
    if not vals:
        raise UsageError(f"this subject needs {flag}")
    return vals


def cmd_eval(args, out) -> int:
    rows = _eval_rows(args)
    out.write("input\tvalue\terr_estimate\n")
    for inp, val, err in rows:
        out.write(f"{inp}\t{fmt(val)}\t{fmt(err)}\n")
    return 0


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args, out) -> int:
    p = validate_params(args.alpha, args.rho)
    budget = suites.Budget(n_paths=args.n, n_samples=args.n_samples, workers=_workers(args))
    iv = _interval(args)
    xs = [float(affine_to_unit(iv, x)) for x in args.x] if args.x else None
    checks = suites.run_suite(args.suite, p, xs, budget, args.seed)
    report = {
        "suite": args.suite,
        "params": {"alpha": p.alpha, "rho": p.rho, "interval": [iv.a, iv.b],
                   "x": args.x, "n": args.n, "n_samples": args.n_samples},
        "checks": [c.as_dict() for c in checks],
        "seed": args.seed,
    }
    text = json.dumps(report, indent=2, allow_nan=False) + "\n"
    _emit(text, args.out, out)
    return 0 if all(c.passed for c in checks) else 1


def _emit(text, path, out):
    if path in (None, "-"):
        out.write(text)
        return
    with open(path, "w", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# sample


def _sample_paths(args, p, iv):
    lam = iv.half_width
    u0 = float(affine_to_unit(iv, args.x))
    if not abs(u0) > 1.0:
        raise DomainError(f"x={args.x} lies in the interval")
    cfg = sampler.SimConfig(step_scale=args.step_scale, workers=_workers(args))
    scale_t = lam ** p.alpha
    if args.conditioned:
        ens = conditioned.conditioned_paths_sir(p, u0, args.t_max / scale_t, args.n,
                                                args.checkpoint_dt / scale_t, cfg, args.seed)
        for i, row in enumerate(ens.positions):
            yield i, ens.times * scale_t, affine_from_unit(iv, row)
        return
    res = sampler.simulate_batch(p, u0, args.n, cfg, args.seed, horizon=args.t_max / scale_t,
                                 record=True)
    for i, rec in enumerate(res.records):
        arr = np.asarray(rec)
        yield i, arr[:, 0] * scale_t, affine_from_unit(iv, arr[:, 1])


def cmd_sample(args, out) -> int:
    p = validate_params(args.alpha, args.rho)
    iv = _interval(args)
    if not args.t_max > 0 or args.n < 1:
        raise UsageError("--t-max must be positive and --n at least 1")
    buf = io.StringIO()
    if args.format == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "position", "path_id"])
        for i, ts, xs in _sample_paths(args, p, iv):
            for t, x in zip(ts, xs):
                w.writerow([fmt(t), fmt(x), i])
    else:
        paths = [{"path_id": i, "time": [float(t) for t in ts], "position": [float(x) for x in xs]}
                 for i, ts, xs in _sample_paths(args, p, iv)]
        buf.write(json.dumps({"params": p.as_dict(), "seed": args.seed,
                              "conditioned": args.conditioned, "paths": paths}) + "\n")
    _emit(buf.getvalue(), args.out, out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stable-avoid",
                                 description="Stable processes conditioned to avoid an interval.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--alpha", type=float, required=True)
        sp.add_argument("--rho", type=float, required=True)
        sp.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"),
                        help="interval to avoid (default -1 1)")

    ev = sub.add_parser("eval", help="evaluate a closed-form quantity")
    ev.add_argument("subject", choices=SUBJECTS)
    common(ev)
    ev.add_argument("--x", type=float, nargs="+")
    ev.add_argument("--y", type=float, nargs="+")
    ev.add_argument("--z", type=float, nargs="+")
    ev.add_argument("--hat", action="store_true", help="psi with rho and rho_hat swapped")

    ve = sub.add_parser("verify", help="run a verification suite, print a JSON report")
    ve.add_argument("suite", choices=suites.SUITES)
    common(ve)
    ve.add_argument("--x", type=float, nargs="+")
    ve.add_argument("--n", type=int, default=100_000, help="paths per Monte Carlo estimate")
    ve.add_argument("--n-samples", type=int, default=1_000_000, help="variates for the sampler suite")
    ve.add_argument("--seed", type=int, default=0)
    ve.add_argument("--workers", type=int)
    ve.add_argument("--out")

    sa = sub.add_parser("sample", help="write simulated paths as CSV or JSON")
    common(sa)
    sa.add_argument("--x", type=float, required=True)
    sa.add_argument("--t-max", type=float, required=True)
    sa.add_argument("--n", type=int, default=1)
    sa.add_argument("--conditioned", action="store_true")
    sa.add_argument("--checkpoint-dt", type=float, default=conditioned.DEFAULT_CHECKPOINT_DT)
    sa.add_argument("--step-scale", type=float, default=0.01)
    sa.add_argument("--seed", type=int, default=0)
    sa.add_argument("--workers", type=int)
    sa.add_argument("--format", choices=("csv", "json"), default="csv")
    sa.add_argument("--out")
    return ap


COMMANDS = {"eval": cmd_eval, "verify": cmd_verify, "sample": cmd_sample}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except (StableAvoidError, UsageError, ValueError, ArithmeticError, OSError) as e:
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return 2


def entry() -> None:
    sys.exit(main())
