"""Command-line front end: ``unionvol <command> ...``.

Reports go to standard output (JSON by default, sorted keys, so identical
invocations give identical bytes). Errors go to standard error as one JSON
line ``{"error": ..., "message": ..., "exit_code": ...}``.

Exit codes: 0 success, 1 I/O, parse or validation error, 2 infeasible
parameters, 3 estimation failure (including a failed selftest).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bodies import OracleErrors
from .exceptions import (
    AmplificationError,
    BudgetError,
    EmptyBodyError,
    InfeasibleBudgetError,
    NoCompletedTrialError,
    SamplingTimeoutError,
    UnionVolError,
)
from .intersection import approx_intersection
from .reductions import (
    cnf_to_coboxes,
    cnf_to_kmp,
    count_sat_brute,
    exact_cobox_intersection,
    exact_union_axis_boxes,
    mc_reference_union,
    parse_mcnf,
    random_cnf_corpus,
    random_monotone_cnf,
)
from .specs import SCHEMA_VERSION, dump_bodies, load_bodies
from .union import EstimatorParams, amplify, approx_union, derived_constants
from .weak_oracles import MembershipBody, calibrate, error_budget_check, lemma_budget

EXIT_OK, EXIT_IO, EXIT_INFEASIBLE, EXIT_ESTIMATION = 0, 1, 2, 3
_CALIBRATION_KEY = 1


class CommandFailed(Exception):
    def __init__(self, message, code=EXIT_ESTIMATION, report=None):
        super().__init__(message)
        self.code = code
        self.report = report


def _seed(value: str) -> int:
    if value == "random":
        return int(np.random.SeedSequence().entropy % 2**63)
    try:
        seed = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer or 'random', got {value!r}") from None
    if not 0 <= seed < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return seed


def _open_unit(value: str) -> float:
    x = float(value)
    if not 0 < x < 1:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {value}")
    return x


def _nonneg(value: str) -> float:
    x = float(value)
    if not (x >= 0 and math.isfinite(x)):
        raise argparse.ArgumentTypeError(f"expected a non-negative value, got {value}")
    return x


def _int_list(value: str) -> list[int]:
    return [int(v) for v in value.split(",") if v]


def _float_list(value: str) -> list[float]:
    return [_open_unit(v) for v in value.split(",") if v]


def _envelope(command: str, args, body: dict) -> dict:
    out = {"schema_version": SCHEMA_VERSION, "command": command}
    if hasattr(args, "seed"):
        out["seed"] = args.seed
    out.update(body)
    out.setdefault("params", {})
    return out


def _emit(report: dict, fmt: str, stream=None):
    stream = stream or sys.stdout
    if fmt == "json":
        stream.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
        return
    for key in sorted(report):
        value = report[key]
        if isinstance(value, dict):
            value = ", ".join(f"{k}={v}" for k, v in sorted(value.items()))
        elif isinstance(value, list) and len(value) > 8:
            value = f"[{len(value)} entries]"
        stream.write(f"{key}: {value}\n")


def _error_overrides(args) -> OracleErrors:
    return OracleErrors(args.eps_p or 0.0, args.eps_v or 0.0, args.eps_s or 0.0)


def _calibrate_weak(bodies, eps, n, delta, seed):
    """Calibrate uncalibrated membership bodies ahead of estimation."""
    weak = [i for i, b in enumerate(bodies) if isinstance(b, MembershipBody) and b.volume_estimate is None]
    if not weak:
        return bodies, []
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(_CALIBRATION_KEY,)))
    default_ev = lemma_budget(n, eps).eps_v
    out = list(bodies)
    info = []
    for i in weak:
        ev = bodies[i].errors.eps_v or default_ev
        out[i] = calibrate(bodies[i], ev, delta, rng)
        info.append({"index": i, "eps_v": ev, "delta": delta, "volume": out[i].volume()})
    return out, info


def cmd_union(args) -> dict:
    bodies = load_bodies(args.file)
    n = len(bodies)
    delta_oracle = args.oracle_delta or 1.0 / (100 * n)
    bodies, calibration = _calibrate_weak(bodies, args.eps, n, delta_oracle, args.seed)
    declared = OracleErrors.worst([_error_overrides(args)] + [b.errors for b in bodies])
    budget = lemma_budget(n, args.eps)
    within = error_budget_check(n, args.eps, declared)
    params = EstimatorParams(args.eps, declared, args.seed)
    if not within and not args.no_budget_check:
        raise InfeasibleBudgetError(
            f"declared oracle errors {declared.to_dict()} exceed the budget {budget.to_dict()} "
            f"for n={n}, eps={args.eps} (pass --no-budget-check to rely on the exact feasibility condition)"
        )
    derived_constants(n, params)
    if args.delta is None:
        report = approx_union(bodies, params, method=args.method)
    else:
        report = amplify(bodies, params, args.delta, threads=args.threads, method=args.method)
    body = report.to_dict(timing=args.timing)
    body["params"].update({"delta": args.delta, "threads": args.threads})
    body["lemma_budget"] = budget.to_dict()
    body["within_lemma_budget"] = within
    if calibration:
        body["calibration"] = calibration
    return body


def cmd_intersect(args) -> dict:
    bodies = load_bodies(args.file)
    t0 = time.perf_counter()
    report = approx_intersection(bodies, args.eps, seed=args.seed)
    body = report.to_dict()
    if args.timing:
        body["wall_time"] = time.perf_counter() - t0
    return body


def cmd_exact_union(args) -> dict:
    bodies = load_bodies(args.file)
    return {"volume": exact_union_axis_boxes(bodies), "n": len(bodies), "dim": bodies[0].dim}


def cmd_mc_ref(args) -> dict:
    bodies = load_bodies(args.file)
    value = mc_reference_union(bodies, args.alpha, args.delta, np.random.default_rng(args.seed))
    return {"volume": value, "n": len(bodies), "params": {"alpha": args.alpha, "delta": args.delta}}


def _read_cnf(path):
    return parse_mcnf(Path(path).read_text(encoding="utf-8"))


def _write_doc(doc, out):
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def cmd_gen(args, kind: str):
    cnf = _read_cnf(args.cnf)
    if kind == "kmp":
        bodies = cnf_to_kmp(cnf)
        expected = {"union_volume": count_sat_brute(cnf, negated=True)} if cnf.d <= 25 else {}
    else:
        bodies = cnf_to_coboxes(cnf)
        expected = {"intersection_volume_times_2^d": count_sat_brute(cnf)} if cnf.d <= 25 else {}
    if not bodies:
        raise CommandFailed("formula has no clauses; nothing to generate", EXIT_IO)
    meta = {
        "generator": f"gen-{kind}",
        "cnf": {"d": cnf.d, "clauses": [list(c) for c in cnf.clauses]},
        "volumes": [b.volume() for b in bodies],
        **expected,
    }
    _write_doc(dump_bodies(bodies, meta), args.output)
    return None


def cmd_count_sat(args) -> dict:
    cnf = _read_cnf(args.cnf)
    return {"count": count_sat_brute(cnf, negated=args.negated), "negated": args.negated, "d": cnf.d, "n": cnf.n}


def selftest_results(count: int, seed: int, max_d: int = 8, max_n: int = 6) -> list[dict]:
    """Check both reduction identities on a random corpus; one record per check."""
    corpus = random_cnf_corpus(count, max_d, max_n, seed)
    kmp_bad = [i for i, f in enumerate(corpus)
               if exact_union_axis_boxes(cnf_to_kmp(f)) != count_sat_brute(f, negated=True)]
    cob_bad = [i for i, f in enumerate(corpus)
               if 2**f.d * exact_cobox_intersection(cnf_to_coboxes(f), f.d) != count_sat_brute(f)]
    return [
        {"check": "kmp_union_equals_sat_of_negation", "instances": count, "failures": kmp_bad, "passed": not kmp_bad},
        {"check": "cobox_intersection_equals_sat", "instances": count, "failures": cob_bad, "passed": not cob_bad},
    ]


def cmd_selftest(args) -> dict:
    results = selftest_results(args.count, args.seed)
    body = {"checks": results, "passed": all(r["passed"] for r in results),
            "params": {"count": args.count}}
    if not body["passed"]:
        raise CommandFailed("selftest failed", EXIT_ESTIMATION, report=body)
    return body


def bench_rows(n_values, eps_values, d, seed, method="batched"):
    """Run the union estimator on random box instances over an ``(n, eps)`` grid."""
    rows = []
    rng = np.random.default_rng(seed)
    instances = {n: cnf_to_kmp(random_monotone_cnf(rng, d, n)) for n in n_values}
    for n in n_values:
        boxes = instances[n]
        exact = exact_union_axis_boxes(boxes)
        for eps in eps_values:
            t0 = time.perf_counter()
            rep = approx_union(boxes, EstimatorParams(eps, seed=seed), method=method)
            rows.append({
                "n": n, "eps": eps, "d": d, "t_budget": rep.constants.t_budget, "steps_t": rep.steps_t,
                "trials_m": rep.trials_m, "estimate": rep.estimate, "exact": exact,
                "rel_error": abs(rep.estimate - exact) / exact, "wall_time": time.perf_counter() - t0,
            })
    return rows


def cmd_bench(args) -> dict:
    rows = bench_rows(args.n_values, args.eps_values, args.dim, args.seed, args.method)
    if not args.timing:
        for row in rows:
            row.pop("wall_time")
    if args.format == "human":
        cols = ["n", "eps", "t_budget", "steps_t", "trials_m", "estimate", "exact", "rel_error"]
        if args.timing:
            cols.append("wall_time")
        lines = ["  ".join(f"{c:>10}" for c in cols)]
        for row in rows:
            lines.append("  ".join(f"{row[c]:>10.4g}" if isinstance(row[c], float) else f"{row[c]:>10}" for c in cols))
        sys.stdout.write("\n".join(lines) + "\n")
        return None
    return {"rows": rows, "params": {"n_values": args.n_values, "eps_values": args.eps_values, "dim": args.dim}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unionvol", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, eps_default=None, seed=True):
        p.add_argument("--format", choices=["human", "json"], default="json")
        p.add_argument("--timing", action="store_true", help="include wall-clock times in JSON output")
        if seed:
            p.add_argument("--seed", type=_seed, default=0, help="integer seed or 'random' (default 0)")
        if eps_default is not None:
            p.add_argument("--eps", type=_open_unit, default=eps_default)

    p = sub.add_parser("union", help="estimate the volume of a union of bodies")
    p.add_argument("file")
    common(p, 0.1)
    p.add_argument("--delta", type=_open_unit, default=None, help="amplify to failure probability delta")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--eps-p", type=_nonneg, default=None)
    p.add_argument("--eps-v", type=_nonneg, default=None)
    p.add_argument("--eps-s", type=_nonneg, default=None)
    p.add_argument("--oracle-delta", type=_open_unit, default=None,
                   help="failure probability of each Monte-Carlo volume oracle (default 1/(100n))")
    p.add_argument("--no-budget-check", action="store_true",
                   help="accept oracle errors beyond eps^2/(47n) as long as the step budget is feasible")
    p.add_argument("--method", choices=["batched", "stepwise"], default="batched")
    p.set_defaults(func=cmd_union)

    p = sub.add_parser("intersect", help="additive estimate of the volume of an intersection")
    p.add_argument("file")
    common(p, 0.05)
    p.set_defaults(func=cmd_intersect)

    p = sub.add_parser("exact-union", help="exact union volume of axis boxes")
    p.add_argument("file")
    common(p, seed=False)
    p.set_defaults(func=cmd_exact_union)

    p = sub.add_parser("mc-ref", help="Monte-Carlo reference union volume")
    p.add_argument("file")
    common(p)
    p.add_argument("--alpha", type=_open_unit, default=1e-3, help="absolute error relative to the bounding box")
    p.add_argument("--delta", type=_open_unit, default=0.01)
    p.set_defaults(func=cmd_mc_ref)

    for kind in ("kmp", "cobox"):
        p = sub.add_parser(f"gen-{kind}", help=f"turn a monotone CNF into a {kind} instance file")
        p.add_argument("--cnf", required=True)
        p.add_argument("-o", "--output", default=None)
        p.set_defaults(func=lambda a, k=kind: cmd_gen(a, k), format="json", timing=False)

    p = sub.add_parser("count-sat", help="count satisfying assignments by enumeration")
    p.add_argument("cnf")
    p.add_argument("--negated", action="store_true")
    common(p, seed=False)
    p.set_defaults(func=cmd_count_sat)

    p = sub.add_parser("selftest", help="check the reduction identities on random formulas")
    common(p)
    p.add_argument("--count", type=int, default=200)
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("bench", help="step counts and errors over an (n, eps) grid")
    common(p)
    p.add_argument("--n-values", type=_int_list, default=[2, 4, 8])
    p.add_argument("--eps-values", type=_float_list, default=[0.2, 0.1, 0.05])
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--method", choices=["batched", "stepwise"], default="batched")
    p.set_defaults(func=cmd_bench)
    return parser


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, (InfeasibleBudgetError, BudgetError)):
        return EXIT_INFEASIBLE
    if isinstance(exc, (NoCompletedTrialError, AmplificationError, SamplingTimeoutError, EmptyBodyError)):
        return EXIT_ESTIMATION
    return EXIT_IO


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        body = args.func(args)
    except CommandFailed as exc:
        if exc.report is not None:
            _emit(_envelope(args.command, args, exc.report), args.format)
        return _fail(type(exc).__name__, str(exc), exc.code)
    except (UnionVolError, OSError) as exc:
        return _fail(type(exc).__name__, str(exc), _exit_code(exc))
    if body is not None:
        _emit(_envelope(args.command, args, body), args.format)
    return EXIT_OK


def _fail(kind: str, message: str, code: int) -> int:
    line = json.dumps({"error": kind, "message": " ".join(message.split()), "exit_code": code}, sort_keys=True)
    sys.stderr.write(line + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
