"""Command line entry point.

Exit status: 0 when every executed check passes (or, for probes, when the
verdict matches the expected classification), 1 when a check fails, 2 on
usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional

import numpy as np

from . import ops, transforms
from .errors import UsageError
from .expr import field_from_json, random_polynomial_field, sample_points
from .models import MODEL_IDS, ModelParams
from .probes import (HOLDS, KINDS, InvarianceKind, ProbeConfig, expected_verdict, probe,
                     probe_balance, run_classification_matrix)
from .tensor import levi_civita_identity_check, random_rotation

SEED_ENV = "INVLAB_SEED"


def _seed(args) -> int:
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return args.seed


def _params(args) -> ModelParams:
    if getattr(args, "params", None) is None:
        return ModelParams()
    with open(args.params) as fh:
        return ModelParams.from_json(json.load(fh))


def _emit(obj, fmt: str, text: str) -> None:
    if fmt == "json":
        print(json.dumps(obj, indent=2, sort_keys=True))
    else:
        print(text)


# --------------------------------------------------------------------------
# subcommands

def cmd_identities(args) -> int:
    seed = _seed(args)
    rng = np.random.default_rng(seed)
    if args.field_file:
        with open(args.field_file) as fh:
            data = json.load(fh)
        items = data if isinstance(data, list) else [data]
        corpus = [field_from_json(d) for d in items]
        if any(np.shape(u) != (3,) for u in corpus):
            raise UsageError("identity fields must be vector fields")
    else:
        corpus = [random_polynomial_field(args.degree, (-args.coeff, args.coeff), rng)
                  for _ in range(args.corpus)]
    points = [sample_points(args.points, rng) for _ in corpus]
    report = ops.identity_suite(corpus, points, tolerance=args.tolerance)
    lines = [f"{name:22s} {res:.3e}  {'ok' if res <= args.tolerance else 'FAIL'}"
             for name, res in report.residuals.items()]
    lines.append(f"identities: {'PASS' if report.passed else 'FAIL'} "
                 f"({report.fields_checked} fields x {report.points_per_field} points)")
    _emit(report.to_json(), args.format, "\n".join(lines))
    return 0 if report.passed else 1


def _probe_config(args, seed: int) -> ProbeConfig:
    return ProbeConfig(trials=args.trials, seed=seed, tolerance=args.tolerance,
                       field_degree=args.degree, rotation_source=args.rotation_source)


def cmd_probe(args) -> int:
    cfg = _probe_config(args, _seed(args))
    report = probe(args.model, args.kind, cfg, _params(args))
    expected = expected_verdict(args.model, args.kind)
    ok = report.verdict == (expected or HOLDS)
    text = (f"{report.model_id} / {report.kind.value}: {report.verdict} "
            f"(max violation {report.max_violation:.3e}, expected {expected or 'n/a'})")
    _emit(report.to_json(), args.format, text)
    return 0 if ok else 1


def cmd_balance(args) -> int:
    cfg = _probe_config(args, _seed(args))
    report = probe_balance(args.model, cfg, _params(args))
    text = (f"{report.model_id} / balance: {report.verdict} "
            f"(max residual {report.max_violation:.3e})")
    _emit(report.to_json(), args.format, text)
    return 0 if report.verdict == HOLDS else 1


def cmd_matrix(args) -> int:
    cfg = ProbeConfig(trials=args.trials, seed=_seed(args), tolerance=args.tolerance)
    matrix = run_classification_matrix(cfg, _params(args))
    if args.format == "json":
        print(json.dumps(matrix.to_json(), indent=2, sort_keys=True))
    else:
        print(matrix.to_markdown())
        for m, k, exp, got in matrix.mismatches():
            print(f"mismatch: {m} / {k}: expected {exp}, got {got}", file=sys.stderr)
    return 0 if matrix.matches_expected() else 1


def cmd_rules(args) -> int:
    if args.list:
        for rule in transforms.RULES.values():
            print(rule.describe())
        return 0
    ids = [args.rule] if args.rule else list(transforms.RULES)
    for rid in ids:
        transforms.get_rule(rid)
    rng = np.random.default_rng(_seed(args))
    worst = {rid: 0.0 for rid in ids}
    for _ in range(args.fields):
        fields = {0: random_polynomial_field(args.degree, (-1.0, 1.0), rng, shape=()),
                  1: random_polynomial_field(args.degree, (-1.0, 1.0), rng),
                  2: random_polynomial_field(args.degree, (-1.0, 1.0), rng, shape=(3, 3))}
        for _ in range(args.rotations):
            Q = random_rotation(rng)
            pts = sample_points(args.points, rng)
            for rid, r in transforms.verify_catalog(fields, Q, pts, ids).items():
                worst[rid] = max(worst[rid], r)
    ok = all(r <= args.tolerance for r in worst.values())
    lines = [f"{rid:22s} {r:.3e}  {'ok' if r <= args.tolerance else 'FAIL'}"
             for rid, r in worst.items()]
    lines.append(f"rules: {'PASS' if ok else 'FAIL'}")
    _emit({"passed": ok, "tolerance": args.tolerance, "residuals": worst},
          args.format, "\n".join(lines))
    return 0 if ok else 1


def cmd_levi_civita(args) -> int:
    rng = np.random.default_rng(_seed(args))
    worst = max(levi_civita_identity_check(random_rotation(rng)) for _ in range(args.rotations))
    ok = worst <= args.tolerance
    _emit({"passed": ok, "max_residual": worst, "rotations": args.rotations},
          args.format, f"levi-civita: {'PASS' if ok else 'FAIL'} (max residual {worst:.3e})")
    return 0 if ok else 1


# --------------------------------------------------------------------------
# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invlab",
        description="Verify tensor calculus identities and classify SO(3) invariance of energies.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, seed=0, fmt=("text", "json")):
        p.add_argument("--seed", type=int, default=seed,
                       help=f"random seed (overridden by ${SEED_ENV})")
        p.add_argument("--format", choices=fmt, default=fmt[0])

    p = sub.add_parser("identities", help="run the calculus identity suite")
    common(p, seed=42)
    p.add_argument("--corpus", type=int, default=100, help="number of random fields")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--coeff", type=float, default=2.0, help="coefficients drawn from [-c, c]")
    p.add_argument("--points", type=int, default=10, help="points per field")
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--field-file", help="JSON field (or list of fields) replacing the random corpus")
    p.set_defaults(func=cmd_identities)

    kind_names = [k.value for k in KINDS]
    for name, func in (("probe", cmd_probe), ("balance", cmd_balance)):
        p = sub.add_parser(name, help="probe one model" if name == "probe"
                           else "check form-invariance of a balance equation")
        common(p, fmt=("json", "text"))
        p.add_argument("--model", required=True, choices=MODEL_IDS)
        if name == "probe":
            p.add_argument("--kind", required=True, choices=kind_names)
        p.add_argument("--trials", type=int, default=20)
        p.add_argument("--tolerance", type=float, default=1e-9)
        p.add_argument("--degree", type=int, default=3)
        p.add_argument("--rotation-source", default="auto",
                       choices=["auto", "rational-quaternion", "axis-angle-field"])
        p.add_argument("--params", help="JSON file with model parameters")
        p.set_defaults(func=func)

    p = sub.add_parser("matrix", help="classify every model against every invariance kind")
    common(p, fmt=("md", "json"))
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--params", help="JSON file with model parameters")
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("rules", help="verify the transformation rule catalog")
    common(p)
    p.add_argument("--rule", help="run a single rule id")
    p.add_argument("--list", action="store_true", help="list rule ids and exit")
    p.add_argument("--fields", type=int, default=20)
    p.add_argument("--rotations", type=int, default=10)
    p.add_argument("--points", type=int, default=10)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.set_defaults(func=cmd_rules)

    p = sub.add_parser("levi-civita", help="check rotation identities of the permutation symbol")
    common(p)
    p.add_argument("--rotations", type=int, default=100)
    p.add_argument("--tolerance", type=float, default=1e-12)
    p.set_defaults(func=cmd_levi_civita)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"invlab: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as exc:
        print(f"invlab: error: {exc}", file=sys.stderr)
        return 2


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
