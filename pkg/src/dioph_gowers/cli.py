"""Command line entry point: dioph-gowers <command> ..."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .approximation import ApproxQuery, algebraic_decay_probe, approximate
from .constructions import converse_verdict
from .counting import count_brute, count_fast
from .cutoffs import BoxCutoff, CutoffSpec, LipschitzTent, SharpBox
from .errors import DiophGowersError
from .experiments import ExperimentConfig, run_experiment
from .gowers import gowers_interval
from .linear_systems import LinearSystem, classify
from .normal_form import FormSystem, cs_complexity, extend_normal_form, is_normal_form, reparametrization_error
from .reduction import check_bundle, reduce, verify_decomposition
from .weights import WeightFunction


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit(obj) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True, default=_json_default)
    sys.stdout.write("\n")


def _eps(text: str) -> Fraction:
    return Fraction(text)


def _cutoff(args) -> CutoffSpec:
    if args.G == "box":
        return CutoffSpec(SharpBox(), BoxCutoff(args.eps))
    if args.G == "tent":
        return CutoffSpec(SharpBox(), LipschitzTent(args.sigma, float(args.eps)))
    raise SystemExit(f"unknown cutoff {args.G!r}")


def _weights(spec: str, d: int):
    if spec == "ones":
        return "ones"
    paths = spec.split(",")
    if len(paths) != d:
        raise SystemExit(f"--fs needs {d} files, got {len(paths)}")
    return [WeightFunction.load(p) for p in paths]


def cmd_classify(args) -> int:
    _emit(classify(LinearSystem.load(args.system)).to_json())
    return 0


def cmd_gowers(args) -> int:
    f = WeightFunction.load(args.input)
    _emit(gowers_interval(f, args.degree, args.method).to_json())
    return 0


def cmd_count(args) -> int:
    L = LinearSystem.load(args.system)
    fs = _weights(args.fs, L.d)
    fn = count_brute if args.method == "brute" else count_fast
    _emit(fn(L, args.N, _cutoff(args), fs).to_json())
    return 0


def cmd_reduce(args) -> int:
    L = LinearSystem.load(args.system)
    bundle = reduce(L, args.eps)
    out = bundle.to_json()
    out["checks"] = check_bundle(L, bundle)
    _emit(out)
    return 0


def cmd_verify(args) -> int:
    L = LinearSystem.load(args.system)
    bundle = reduce(L, args.eps)
    lhs, rhs, diff = verify_decomposition(L, bundle, args.N, CutoffSpec.box(args.eps))
    _emit({"N": args.N, "eps": str(args.eps), "lhs": lhs, "rhs": rhs, "max_abs_diff": diff, "equal": diff == 0})
    return 0 if diff == 0 else 1


def cmd_normal_form(args) -> int:
    with open(args.forms) as fh:
        psi = FormSystem.from_json(json.load(fh))
    out = {"complexity": cs_complexity(psi, args.c1).to_json()}
    out["normal_wrt"] = {str(i + 1): is_normal_form(psi, i)[0] for i in range(psi.n_forms)}
    if args.extend is not None:
        ext = extend_normal_form(psi, args.extend - 1, c1=args.c1)
        out["extension"] = ext.to_json()
        out["reparametrization_error"] = reparametrization_error(psi, ext)
    _emit(out)
    return 0


def cmd_approx(args) -> int:
    L = LinearSystem.load(args.system)
    if args.probe:
        probe = algebraic_decay_probe(L, tau1=args.tau1)
        writer = csv.DictWriter(sys.stdout, fieldnames=["tau2", "lower", "upper", "witness_k"], extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(probe.csv_rows())
        print(f"# exponent {probe.exponent}", file=sys.stderr)
        return 0
    res = approximate(L, ApproxQuery(args.tau1, args.tau2, args.delta), args.method, args.frame)
    _emit(res.to_json())
    return 0


def cmd_construct(args) -> int:
    L = LinearSystem.load(args.system)
    rep = converse_verdict(L, args.N, s=args.s, eps=args.eps, p=args.p, trials=args.trials, seed=args.seed)
    if args.case != "auto" and int(args.case) != rep.case:
        print(f"requested case {args.case} but the system falls in case {rep.case}", file=sys.stderr)
        return 2
    out = rep.to_json()
    _emit(out)
    if args.csv:
        Path(args.csv).parent.mkdir(parents=True, exist_ok=True)
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["N", "case", "min_norm", "count_gap", "T_ones"])
            writer.writerow([args.N, rep.case, repr(rep.min_norm), repr(rep.count_gap), repr(rep.unit_count)])
    return 0


def cmd_experiment(args) -> int:
    cfg = ExperimentConfig.load(args.config)
    res = run_experiment(cfg, args.out)
    _emit(res.to_json())
    return 0 if res.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dioph-gowers", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="rank, rationality and degeneracy report")
    p.add_argument("system")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("gowers", help="U^k[N] norm of a weight function")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="auto", choices=["auto", "naive"])
    p.set_defaults(func=cmd_gowers)

    p = sub.add_parser("count", help="weighted solution count")
    p.add_argument("--system", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--eps", type=_eps, default=Fraction(1, 2))
    p.add_argument("--G", default="box", choices=["box", "tent"])
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--fs", default="ones")
    p.add_argument("--method", default="fast", choices=["fast", "brute"])
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("reduce", help="reduction to a purely irrational system")
    p.add_argument("--system", required=True)
    p.add_argument("--eps", type=_eps, default=Fraction(1, 2))
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("verify-reduction", help="check the shift decomposition of the count")
    p.add_argument("--system", required=True)
    p.add_argument("--N", type=int, default=50)
    p.add_argument("--eps", type=_eps, default=Fraction(1, 2))
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("normal-form", help="Cauchy-Schwarz complexity and normal-form extension")
    p.add_argument("--forms", required=True)
    p.add_argument("--c1", type=float, default=0.05)
    p.add_argument("--extend", type=int, default=None, help="1-based index of the target form")
    p.set_defaults(func=cmd_normal_form)

    p = sub.add_parser("approx", help="bounds for the approximation function")
    p.add_argument("--system", required=True)
    p.add_argument("--tau1", type=float, default=0.25)
    p.add_argument("--tau2", type=float, default=0.25)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--method", default="grid", choices=["grid", "adaptive"])
    p.add_argument("--frame", default="integer", choices=["integer", "rank"])
    p.add_argument("--probe", action="store_true", help="emit the decay table as CSV")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("construct", help="adversarial construction near the degeneracy variety")
    p.add_argument("--system", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--case", default="auto", choices=["auto", "2", "3", "4"])
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--eps", type=_eps, default=Fraction(1, 2))
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", default=None, help="path of the verdict CSV")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("experiment", help="run a JSON experiment config")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DiophGowersError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
