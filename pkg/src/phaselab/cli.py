"""Command-line interface: ``phaselab <command> ...``.

Exit codes: 0 success, 1 valid but negative result (not injective, zero
``sigma``, singular Fisher matrix), 2 usage or input error, 3 enumeration
budget exceeded.
"""

import argparse
import json
import math
import os
import sys

import numpy as np

from . import ensemble as ens
from . import injectivity as inj
from . import stability_avg as avg
from . import stability_worst as sw
from ._parallel import ENV_THREADS, BudgetExceeded, resolve_workers

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _clean(v):
    """Make a payload JSON-safe: non-finite floats become ``None``."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


def _emit(payload, out=None):
    text = json.dumps(_clean(payload), indent=2, allow_nan=False) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load(path):
    try:
        return ens.load_ensemble(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}") from exc


def _load_theta(path, Phi):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc
    if isinstance(d, dict):
        d = d.get("theta")
    if not isinstance(d, list) or len(d) != Phi.M:
        raise UsageError(f"theta must be a list of {Phi.M} entries (or an object with key 'theta')")
    try:
        theta = np.array([ens._parse_entry(e) for e in d])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not Phi.is_complex:
        if np.any(theta.imag != 0):
            raise UsageError("complex theta given for a real ensemble")
        theta = theta.real
    return theta


def cmd_check(args):
    Phi = _load(args.input)
    try:
        v = inj.check_injectivity(
            Phi, method=args.method, budget=args.budget, probes=args.probes, seed=args.seed, workers=args.threads
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    _emit(v.to_dict(), args.out)
    return EXIT_NEGATIVE if v.status == inj.NOT_INJECTIVE else EXIT_OK


def cmd_scp(args):
    Phi = _load(args.input)
    if args.subset is not None:
        try:
            rep = sw.scp_bound_at_subset(Phi, _ints(args.subset))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        rep = sw.scp_sigma(Phi, budget=args.budget, workers=args.threads)
    d = rep.to_dict()
    d["field"] = Phi.field
    _emit(d, args.out)
    return EXIT_NEGATIVE if rep.sigma == 0 else EXIT_OK


def cmd_lipschitz(args):
    Phi = _load(args.input)
    if Phi.is_complex:
        raise UsageError("lipschitz analysis requires a real ensemble")
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    rep = sw.lipschitz_report(Phi, args.samples, args.seed, budget=args.budget, workers=args.threads)
    _emit(rep.to_dict(), args.out)
    return EXIT_NEGATIVE if rep.sigma == 0 else EXIT_OK


def cmd_gaussian(args):
    try:
        cfg = sw.GaussianExperimentConfig(args.M, _floats(args.R), args.trials, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = sw.run_gaussian_experiment(cfg, budget=args.budget, workers=args.threads)
    summary = args.summary or _summary_path(args.out)
    with open(args.out, "w", newline="") as fh:
        fh.write(res.points_csv())
    with open(summary, "w", newline="") as fh:
        fh.write(res.summary_csv())
    sys.stdout.write(res.summary_csv())
    return EXIT_OK


def _summary_path(out):
    root, ext = os.path.splitext(out)
    return f"{root}_summary{ext or '.csv'}"


def cmd_crlb(args):
    Phi = _load(args.input)
    theta = _load_theta(args.theta, Phi)
    try:
        noise = avg.NoiseModel(args.noise_sigma)
        rep = avg.fisher_matrix(theta, Phi, noise)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    d = rep.to_dict()
    if args.mc:
        mc = avg.monte_carlo_fisher(rep.theta, Phi, noise, trials=args.mc, seed=args.seed)
        d["monte_carlo"] = {
            "trials": args.mc,
            "seed": args.seed,
            "relative_frobenius_discrepancy": float(np.linalg.norm(mc - rep.J) / np.linalg.norm(rep.J)),
        }
    _emit(d, args.out)
    if args.diagonal_csv and rep.crlb_trace is not None:
        rows = [(i, v) for i, v in enumerate(rep.crlb_diagonal())]
        with open(args.diagonal_csv, "w", newline="") as fh:
            fh.write(sw._csv(("coordinate", "crlb"), rows))
    return EXIT_OK if rep.positive_definite else EXIT_NEGATIVE


def cmd_make(args):
    try:
        if args.kind == "identity":
            Phi = ens.identity_ensemble(_need(args.M, "--M"), args.field)
        elif args.kind == "fourier-localized":
            Phi = sw.localized_fourier_frame(_need(args.M, "--M"), _need(args.N, "--N"))
        elif args.kind == "fracft3":
            alphas = _floats(args.alphas) if args.alphas else (0.0, 0.5, 1.0, 1.5)
            Phi = ens.fractional_dft_stack(alphas, args.branch)
        elif args.kind == "gaussian":
            Phi = sw.gaussian_ensemble(_need(args.M, "--M"), _need(args.N, "--N"), args.seed, args.field)
        elif args.kind == "injective-3x8":
            Phi = ens.injective_3x8_example()
        else:  # argparse restricts the choices
            raise UsageError(f"unknown kind {args.kind!r}")
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.out:
        ens.save_ensemble(Phi, args.out)
    else:
        _emit(ens.ensemble_to_dict(Phi))
    return EXIT_OK


def _need(v, flag):
    if v is None:
        raise UsageError(f"{flag} is required for this kind")
    if v < 1:
        raise UsageError(f"{flag} must be positive")
    return v


def cmd_bounds(args):
    if args.M < 1:
        raise UsageError("--M must be positive")
    _emit(inj.bounds_summary(args.M))
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None, help=f"worker threads (default: ${ENV_THREADS} or CPU count)")
    common.add_argument("--out", default=None, help="write output here instead of stdout")

    p = argparse.ArgumentParser(prog="phaselab", description="Injectivity and stability analysis for phase retrieval ensembles.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", parents=[common], help="decide injectivity of the intensity map")
    c.add_argument("--input", required=True)
    c.add_argument("--method", choices=("auto", "cp", "hmw", "nullspace"), default="auto")
    c.add_argument("--budget", type=int, default=inj.CP_BUDGET)
    c.add_argument("--probes", type=int, default=64)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("scp", parents=[common], help="strong complement property constant")
    s.add_argument("--input", required=True)
    s.add_argument("--budget", type=int, default=sw.SCP_BUDGET)
    s.add_argument("--subset", default=None, help="comma-separated S: report the upper bound at this subset only")
    s.set_defaults(func=cmd_scp)

    lp = sub.add_parser("lipschitz", parents=[common], help="bilipschitz bounds of the root-intensity map")
    lp.add_argument("--input", required=True)
    lp.add_argument("--samples", type=int, default=10_000)
    lp.add_argument("--seed", type=int, default=0)
    lp.add_argument("--budget", type=int, default=sw.SCP_BUDGET)
    lp.set_defaults(func=cmd_lipschitz)

    g = sub.add_parser("gaussian", parents=[common], help="Gaussian-ensemble stability experiment (CSV)")
    g.add_argument("--M", type=int, required=True)
    g.add_argument("--R", required=True, help="comma-separated redundancies")
    g.add_argument("--trials", type=int, default=30)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--budget", type=int, default=sw.SCP_BUDGET)
    g.add_argument("--summary", default=None, help="summary CSV path (default: <out>_summary.csv)")
    g.set_defaults(func=cmd_gaussian)

    f = sub.add_parser("crlb", parents=[common], help="Fisher information and Cramer-Rao bound")
    f.add_argument("--input", required=True)
    f.add_argument("--theta", required=True, help="JSON list (or {'theta': [...]}) of numbers or [re, im] pairs")
    f.add_argument("--noise-sigma", type=float, default=1.0)
    f.add_argument("--mc", type=int, default=0, help="Monte Carlo trials for a cross-check")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--diagonal-csv", default=None, help="write the CRLB diagonal here")
    f.set_defaults(func=cmd_crlb)

    m = sub.add_parser("make", parents=[common], help="write a named ensemble")
    m.add_argument("--kind", required=True, choices=("identity", "fourier-localized", "fracft3", "gaussian", "injective-3x8"))
    m.add_argument("--M", type=int)
    m.add_argument("--N", type=int)
    m.add_argument("--field", choices=(ens.REAL, ens.COMPLEX), default=ens.REAL)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--alphas", default=None, help="fracft3: comma-separated orders (default 0,0.5,1,1.5)")
    m.add_argument("--branch", choices=(ens.FRFT_PRINCIPAL, ens.FRFT_ALTERNATE), default=ens.FRFT_PRINCIPAL)
    m.set_defaults(func=cmd_make)

    b = sub.add_parser("bounds", help="known and conjectured minimal N for complex injectivity")
    b.add_argument("--M", type=int, required=True)
    b.set_defaults(func=cmd_bounds)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        resolve_workers(getattr(args, "threads", None))
    except ValueError as exc:
        print(f"phaselab: error: invalid thread count ({exc}); check --threads or ${ENV_THREADS}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"phaselab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        print(f"phaselab: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
