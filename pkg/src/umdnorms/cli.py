"""Command-line runner: identity suites, spreading, norm estimation and verification.

Exit codes are 0 on success, 1 when a check fails and 2 on usage or
configuration errors.  Reports are deterministic for a fixed configuration:
keys are sorted and floats carry 12 significant digits.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__, kernels
from .haar import HaarExpansion
from .norms import EXACT_TOL, HEURISTIC_TOL, Budget, Estimator, verify_chain, verify_prop1, verify_prop2
from .signs import SignPattern
from .spaces import Operator, parse_space
from .spreading import ConstructionError, reduce_to_alternating
from .suites import run_all

SEED_ENV = "UMDNORMS_SEED"


class ConfigError(Exception):
    pass


def _clean(value):
    """Round floats to 12 significant digits and make containers JSON-ready."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return float(f"{value:.12g}")
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    return value


def _render_json(doc: dict) -> str:
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def _render_csv(rows: list[dict]) -> str:
    rows = [_clean(r) for r in rows]
    columns = sorted({key for row in rows for key in row})
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: json.dumps(v, sort_keys=True) if isinstance(v, (list, dict)) else v
                         for k, v in row.items()})
    return out.getvalue()


def _positive(name):
    def parse(text):
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number") from None
        if not value > 0:
            raise argparse.ArgumentTypeError(f"{name} must be positive")
        return value
    return parse


def _positive_int(name):
    def parse(text):
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer") from None
        if value < 1:
            raise argparse.ArgumentTypeError(f"{name} must be at least 1")
        return value
    return parse


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=None,
                        help=f"master seed (default: ${SEED_ENV} or 0)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--out", default=None, help="write the report here instead of stdout")
    parser.add_argument("--tol-spec", type=_positive("--tol-spec"), default=1e-9)
    parser.add_argument("--tol-roundtrip", type=_positive("--tol-roundtrip"), default=1e-12)
    parser.add_argument("--tol-theorem", type=_positive("--tol-theorem"), default=HEURISTIC_TOL,
                        help="theorem tolerance on heuristic paths (exact paths use %g)" % EXACT_TOL)


def _budgeted(parser: argparse.ArgumentParser):
    parser.add_argument("--space", action="append", default=None,
                        help="space spec lp:<p>:<m>; repeatable (default lp:1:2)")
    parser.add_argument("--target-space", default=None, help="target space spec (default: same as source)")
    parser.add_argument("--operator", default=None, help="JSON file with rows, cols, entries, source, target")
    parser.add_argument("--budget-restarts", type=_positive_int("--budget-restarts"), default=100)
    parser.add_argument("--budget-iters", type=_positive_int("--budget-iters"), default=1000)
    parser.add_argument("--pattern-cutoff", type=_positive_int("--pattern-cutoff"), default=4096)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="umdnorms", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("identities", help="run the Haar, swap and self-similarity identity suites")
    _common(p)
    p.add_argument("--max-level", type=_positive_int("--max-level"), default=8)

    p = sub.add_parser("spread", help="reduce an expansion with signs to alternating signs")
    _common(p)
    p.add_argument("input", help="JSON file with 'expansion' and 'signs' (optional 'space')")

    p = sub.add_parser("estimate", help="estimate the three ideal norms of an operator")
    _common(p)
    _budgeted(p)
    p.add_argument("--depth", type=_positive_int("--depth"), default=2)

    p = sub.add_parser("verify", help="verify the chain, the theorem and both reductions")
    _common(p)
    _budgeted(p)
    p.add_argument("--depth", type=_positive_int("--depth"), action="append", default=None,
                   help="depth n; repeatable (default 1 and 2)")
    p.add_argument("--trials", type=_positive_int("--trials"), default=20)
    return parser


def _seed(args) -> int:
    if args.seed is not None:
        return args.seed
    text = os.environ.get(SEED_ENV)
    if text is None:
        return 0
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"${SEED_ENV} must be an integer, got {text!r}") from None


def _budget(args, seed: int) -> Budget:
    return Budget(restarts=args.budget_restarts, iterations=args.budget_iters,
                  pattern_cutoff=args.pattern_cutoff, seed=seed)


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read {path}: {err}") from None


def _operators(args) -> list[Operator]:
    try:
        if args.operator is not None:
            return [Operator.from_dict(_load_json(args.operator))]
        target = parse_space(args.target_space) if args.target_space else None
        ops = []
        for text in args.space or ["lp:1:2"]:
            source = parse_space(text)
            tgt = target or source
            if tgt.dim != source.dim:
                raise ConfigError(f"identity needs equal dimensions, got {source.spec()} -> {tgt.spec()}")
            ops.append(Operator(np.eye(source.dim), source, tgt))
        return ops
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"bad operator or space: {err}") from None


def _provenance(args, seed: int, budget: Budget | None = None) -> dict:
    doc = {
        "command": args.command,
        "seed": seed,
        "version": __version__,
        "backend": kernels.BACKEND,
        "tolerances": {"spec": args.tol_spec, "roundtrip": args.tol_roundtrip,
                       "theorem_exact": EXACT_TOL, "theorem_heuristic": args.tol_theorem},
    }
    if budget is not None:
        doc["budget"] = asdict(budget)
    return doc


def cmd_identities(args, seed: int):
    results = run_all(args.max_level, seed, args.tol_spec, args.tol_roundtrip)
    rows = [r.to_dict() for r in results]
    doc = {"provenance": _provenance(args, seed), "max_level": args.max_level, "suites": rows,
           "passed": all(r.passed for r in results)}
    return doc, rows, 0 if doc["passed"] else 1


def cmd_spread(args, seed: int):
    raw = _load_json(args.input)
    try:
        x = HaarExpansion.from_dict(raw["expansion"])
        eps = SignPattern.from_list(x.depth, raw["signs"])
        space = parse_space(raw["space"]) if "space" in raw else None
        if space is not None and space.dim != x.dim:
            raise ValueError("space dimension differs from the expansion")
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"malformed spread input: {err}") from None
    try:
        red = reduce_to_alternating(x, eps, space=space, tol=args.tol_spec, strict=False)
    except ConstructionError as err:
        doc = {"provenance": _provenance(args, seed), "error": str(err), "passed": False}
        return doc, [{"error": str(err)}], 1
    cert = red.certificate.to_dict()
    doc = {
        "provenance": _provenance(args, seed),
        "depth": x.depth,
        "schedule": red.schedule.to_list(),
        "delta": red.delta.to_list(),
        "psi2_swaps": [[idx.level, idx.position] for idx in red.delta.plus()],
        "psi": red.psi.to_dict(),
        "certificate": cert,
        "passed": red.certificate.passed,
    }
    rows = [{"k": k, "j": j, "residual": r} for k, j, r in cert["residuals"]]
    return doc, rows, 0 if red.certificate.passed else 1


def _operator_key(T: Operator) -> str:
    return f"{T.source.spec()}->{T.target.spec()}"


def cmd_estimate(args, seed: int):
    budget = _budget(args, seed)
    grid, rows, status = [], [], 0
    for T in _operators(args):
        report = verify_chain(T, args.depth, budget, heuristic_tol=args.tol_theorem)
        estimates = {e.family: e.to_dict() for e in (report.alternating, report.level, report.free)}
        grid.append({"operator": T.to_dict(), "depth": args.depth, "estimates": estimates,
                     "check": report.summary()})
        for e in (report.alternating, report.level, report.free):
            rows.append({"operator": _operator_key(T), "depth": args.depth, "family": e.family,
                         "value": e.value, "unclamped": e.unclamped, "method": e.method,
                         "patterns": e.patterns_evaluated, "status": report.status})
        status = max(status, 1 if report.status == "fail" else 0)
    doc = {"provenance": _provenance(args, seed, budget), "results": grid}
    return doc, rows, status


def cmd_verify(args, seed: int):
    budget = _budget(args, seed)
    depths = sorted(set(args.depth or [1, 2]))
    grid, status = [], 0
    for T in _operators(args):
        estimator = Estimator(T, budget)
        for n in depths:
            reports = [
                verify_chain(T, n, budget, estimator, heuristic_tol=args.tol_theorem),
                verify_prop1(T, n, args.trials, budget, estimator, heuristic_tol=args.tol_theorem),
                verify_prop2(T, n, budget, args.trials, estimator, heuristic_tol=args.tol_theorem),
            ]
            for report in reports:
                summary = dict(report.summary(), operator=_operator_key(T))
                grid.append(summary)
                status = max(status, 1 if report.status == "fail" else 0)
    grid.sort(key=lambda r: (r["operator"], r["depth"], r["check"]))
    doc = {"provenance": _provenance(args, seed, budget), "depths": depths, "summary": grid,
           "passed": status == 0}
    return doc, grid, status


COMMANDS = {"identities": cmd_identities, "spread": cmd_spread, "estimate": cmd_estimate, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    try:
        seed = _seed(args)
        doc, rows, status = COMMANDS[args.command](args, seed)
    except ConfigError as err:
        print(f"umdnorms: error: {err}", file=sys.stderr)
        return 2
    text = _render_json(doc) if args.format == "json" else _render_csv(rows)
    if args.out:
        try:
            with open(args.out, "w") as fh:
                fh.write(text)
        except OSError as err:
            print(f"umdnorms: error: cannot write {args.out}: {err}", file=sys.stderr)
            return 2
    else:
        sys.stdout.write(text)
    return status
