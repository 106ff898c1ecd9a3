"""Command-line entry point ``covtest``.

Exit codes: 0 success, 2 configuration error, 3 numerical error
(non positive definite covariance model).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import DomainError, NotPositiveDefinite
from .experiments import (
    ExperimentConfig,
    run_adaptive,
    run_comparison,
    run_null_diagnostics,
    run_power_curve,
    run_rate_sweep,
    sidecar,
    versions,
)
from .params import profile, separation_rate
from .procedures import calibrate
from .sampler import SeedSpec

log = logging.getLogger("covtest")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _floats(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _common(sp):
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--L", dest="ell", type=float)
    sp.add_argument("--phi", type=float)
    sp.add_argument("--n", type=int)
    sp.add_argument("--p", type=_ints, help="dimension or comma-separated list")
    sp.add_argument("--B", type=int, help="replicates (power/type I and calibration)")
    sp.add_argument("--level", type=float)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="output path (CSV or JSON); stdout if omitted")
    sp.add_argument("--renormalize", action=argparse.BooleanOptionalAction, default=True)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="covtest", description="Weighted U-statistic test of Sigma = I")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    for name in ("power", "compare"):
        sp = sub.add_parser(name, help="power curves" if name == "power" else "weighted vs unweighted test")
        _common(sp)
        sp.add_argument("--scenario", choices=["fig1", "fig2", "custom"], default="fig1" if name == "power" else "fig2")
        sp.add_argument("--M", type=_floats)
        sp.add_argument("--rho", type=_floats)

    sp = sub.add_parser("calibrate", help="Monte Carlo threshold under Sigma = I")
    _common(sp)

    sp = sub.add_parser("diagnose", help="null moments, normality and W moments")
    _common(sp)
    sp.add_argument("--scenario", choices=["null-moments", "normality"], default="null-moments")

    sp = sub.add_parser("adaptive", help="type I error and power of the adaptive test")
    _common(sp)
    sp.add_argument("--alpha-lo", dest="alpha_lo", type=float, default=1.25)
    sp.add_argument("--alpha-hi", dest="alpha_hi", type=float, default=3.0)
    sp.add_argument("--cstar", dest="c_star", type=float)
    sp.add_argument("--radius", dest="radius_mult", type=float, default=4.0, help="alternative radius in units of psi_alpha")

    sp = sub.add_parser("rate", help="separation rate and the profile built at it")
    _common(sp)
    sp.add_argument("--sweep", action="store_true", help="also run the calibrated power sweep at c * rate")
    return ap


def _emit(text, out, suffix_json=None):
    if out is None:
        sys.stdout.write(text)
        if suffix_json is not None:
            sys.stderr.write(suffix_json + "\n")
        return
    path = Path(out)
    path.write_text(text, encoding="utf-8", newline="")
    if suffix_json is not None:
        path.with_suffix(".json").write_text(suffix_json + "\n", encoding="utf-8")


def _config(args, scenario, **extra):
    over = dict(
        n=args.n,
        p=args.p,
        alpha=args.alpha,
        ell=args.ell,
        phi=args.phi,
        level=args.level,
        seed=args.seed,
        out=args.out,
        renormalize=args.renormalize,
    )
    if args.B is not None:
        over["B_power"] = args.B
        over["B_calibration"] = args.B
    over.update(extra)
    return ExperimentConfig.for_scenario(scenario, **over)


def _run(args) -> int:
    cmd = args.command
    if cmd in ("power", "compare"):
        cfg = _config(args, args.scenario, M=args.M, rho=args.rho)
        report = run_power_curve(cfg) if cmd == "power" else run_comparison(cfg)
        _emit(report.to_csv(), args.out, sidecar(cfg, report))
    elif cmd == "diagnose":
        cfg = _config(args, args.scenario)
        report = run_null_diagnostics(cfg)
        _emit(report.to_csv(), args.out, sidecar(cfg, report))
    elif cmd == "adaptive":
        over = dict(alpha_lo=args.alpha_lo, alpha_hi=args.alpha_hi, c_star=args.c_star, radius_mult=args.radius_mult)
        if args.alpha is None:
            over["alpha"] = 1.5
        if args.n is None:
            over["n"] = 50
        if args.p is None:
            over["p"] = (200,)
        if args.B is None:
            over["B_power"] = 500
        cfg = _config(args, "custom", **over)
        report = run_adaptive(cfg)
        _emit(report.to_csv(), args.out, sidecar(cfg, report))
    elif cmd == "calibrate":
        if args.phi is None:
            raise DomainError("calibrate requires --phi")
        n = args.n or 20
        p = (args.p or (100,))[0]
        prof = profile(args.alpha or 1.0, args.ell or 1.0, args.phi, p, args.renormalize)
        cal = calibrate(prof, n, args.level or 0.05, args.B or 1000, SeedSpec(args.seed, ("calibrate", p)))
        doc = cal.to_dict()
        doc.update({"n": n, "p": p, "standardized_threshold": cal.threshold * n * p**0.5, "profile": prof.to_dict(), "versions": versions()})
        _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    elif cmd == "rate":
        alpha, ell = args.alpha or 1.0, args.ell or 1.0
        n, ps = args.n or 50, args.p or (200,)
        if args.sweep:
            over = {"n": n, "p": ps}
            if args.B is None:
                over["B_power"] = over["B_calibration"] = 500
            cfg = _config(args, "custom", **over)
            report = run_rate_sweep(cfg)
            _emit(report.to_csv(), args.out, sidecar(cfg, report))
        else:
            docs = []
            for p in ps:
                phit = separation_rate(alpha, ell, n, p)
                docs.append({"alpha": alpha, "L": ell, "n": n, "p": p, "phi_tilde": phit, "profile": profile(alpha, ell, phit, p, args.renormalize).to_dict()})
            _emit(json.dumps(docs if len(docs) > 1 else docs[0], indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _run(args)
    except NotPositiveDefinite as exc:
        print(f"covtest: NotPositiveDefinite: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DomainError, ValueError) as exc:
        print(f"covtest: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
