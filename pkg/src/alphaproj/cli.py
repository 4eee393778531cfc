"""Command-line front end: ``alphaproj divergence | project | verify``.

Results go to stdout (or ``--output``) as JSON; convergence traces and error
messages go to stderr. Exit codes: 0 ok, 1 runtime failure, 2 usage or
validation error, 3 solver converged but the certificate failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .divergences import (
    AlphaOrder,
    hellinger_divergence,
    relative_alpha_entropy,
    relative_entropy,
    renyi_divergence,
    tsallis_entropy,
)
from .families import ExpFamilySpec, LinearFamilySpec
from .measures import FiniteDistribution, check_same_alphabet, total_variation
from .oracle import SamplerFailure
from .projection import (
    CertificateFailure,
    ProjectionError,
    SolverOptions,
    forward_project,
    iterative_project,
    reverse_project,
    tsallis_maxent,
)
from .verify import RUNNERS

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CERT = 0, 1, 2, 3

DIVERGENCE_KINDS = ("renyi", "hellinger", "kl", "tv", "relative-alpha", "tsallis-entropy")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# JSON helpers


def _clean(obj):
    """Make ``obj`` JSON-safe: numpy scalars to Python, infinities to strings."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    # repr-based float output is the shortest string that round-trips exactly.
    return json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n"


def _emit(obj, path: str | None):
    text = dumps(obj)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _load_distribution(path: str) -> FiniteDistribution:
    try:
        return FiniteDistribution.from_json(_load_json(path))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _load_family(path: str, alpha: float) -> LinearFamilySpec:
    try:
        return LinearFamilySpec.from_json(_load_json(path), alpha=alpha)
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _load_exp_family(path: str, alpha: float) -> ExpFamilySpec:
    try:
        return ExpFamilySpec.from_json(_load_json(path), alpha=alpha)
    except (ValueError, TypeError, KeyError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _alpha(text: str) -> float:
    try:
        return AlphaOrder(float(text)).value
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid alpha {text!r}: {exc}") from exc


def _projection_alpha(a: float | None) -> float:
    if a is None:
        raise UsageError("--alpha is required")
    if not 0 < a < math.inf:
        raise UsageError("projections need alpha in (0, inf)")
    return a


def _default_seed(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get("ALPHA_PROJ_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"ALPHA_PROJ_SEED must be an integer, got {env!r}") from exc


# ---------------------------------------------------------------------------
# divergence


def run_divergence(args) -> int:
    kind, a = args.kind, args.alpha
    P = _load_distribution(args.p)
    Q = None
    if kind != "tsallis-entropy":
        if args.q is None:
            raise UsageError(f"--q is required for {kind}")
        Q = _load_distribution(args.q)
        try:
            check_same_alphabet(P, Q)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    if kind in ("renyi", "hellinger", "relative-alpha", "tsallis-entropy") and a is None:
        raise UsageError(f"--alpha is required for {kind}")
    if kind in ("hellinger", "relative-alpha", "tsallis-entropy") and not 0 < a < math.inf:
        raise UsageError(f"{kind} needs alpha in (0, inf)")

    if kind == "renyi":
        value = renyi_divergence(P, Q, a)
    elif kind == "hellinger":
        value = hellinger_divergence(P, Q, a)
    elif kind == "kl":
        value = relative_entropy(P, Q)
    elif kind == "tv":
        value = total_variation(P, Q)
    elif kind == "relative-alpha":
        value = relative_alpha_entropy(P, Q, a)
    else:
        value = tsallis_entropy(P, a)
    _emit({"kind": kind, "alpha": a, "value_nats": value}, args.output)
    return EXIT_OK


# ---------------------------------------------------------------------------
# project


def _solver_options(args, seed: int) -> SolverOptions:
    try:
        return SolverOptions(
            tolerance=args.tolerance,
            max_iterations=args.max_iterations,
            jacobian=args.jacobian,
            fallback_enabled=not args.no_fallback,
            certificate_samples=args.certificate_samples,
            certificate_tolerance=args.certificate_tolerance,
            seed=seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _print_trace(trace, header="iter residual divergence"):
    print(header, file=sys.stderr)
    for t in trace:
        print(f"{t.iteration} {t.residual_norm!r} {t.divergence!r}", file=sys.stderr)


def _run_solver(fn, args):
    """Call ``fn``; map solver exceptions to (payload, exit code)."""
    try:
        return fn(), EXIT_OK
    except CertificateFailure as exc:
        return exc.result, EXIT_CERT
    except (ProjectionError, SamplerFailure) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        _print_trace(getattr(exc, "trace", []))
        return None, EXIT_FAIL


def run_project(args) -> int:
    a = _projection_alpha(args.alpha)
    seed = _default_seed(args.seed)
    opts = _solver_options(args, seed)
    mode = args.mode

    if mode == "forward":
        if args.q is None or args.family is None:
            raise UsageError("forward needs --q and --family")
        Q, fam = _load_distribution(args.q), _load_family(args.family, a)
        if Q.alphabet != fam.alphabet:
            raise UsageError("--q and --family use different alphabets")
        if np.any(Q.probs <= 0):
            raise UsageError("--q must have full support")
        res, code = _run_solver(lambda: forward_project(Q, fam, opts), args)
        if res is None:
            return code
        out = res.to_json(include_trace=args.trace)
        trace = res.trace

    elif mode == "iterate":
        if args.q is None or not args.families or len(args.families) < 2:
            raise UsageError("iterate needs --q and at least two --families")
        if not a > 1:
            raise UsageError("iterate needs alpha > 1")
        Q = _load_distribution(args.q)
        fams = [_load_family(p, a) for p in args.families]
        if any(f.alphabet != Q.alphabet for f in fams):
            raise UsageError("--q and --families use different alphabets")
        if np.any(Q.probs <= 0):
            raise UsageError("--q must have full support")
        res, code = _run_solver(
            lambda: iterative_project(Q, fams, tol=args.step_tolerance, max_cycles=args.max_cycles, opts=opts),
            args,
        )
        if res is None:
            return code
        proj = res if code == EXIT_CERT else res.projection
        out = proj.to_json(include_trace=False)
        trace = proj.trace
        if args.trace and code == EXIT_OK:
            out["steps"] = [[s.step, s.family_index, s.step_divergence, s.divergence_from_q] for s in res.steps]

    elif mode == "reverse":
        if args.p_hat is None or args.exp_family is None:
            raise UsageError("reverse needs --p-hat and --exp-family")
        P_hat, fam = _load_distribution(args.p_hat), _load_exp_family(args.exp_family, a)
        if P_hat.alphabet != fam.alphabet:
            raise UsageError("--p-hat and --exp-family use different alphabets")
        res, code = _run_solver(lambda: reverse_project(P_hat, fam, opts), args)
        if res is None:
            return code
        if code == EXIT_CERT:
            out, trace = res.to_json(include_trace=args.trace), res.trace
        else:
            out = res.projection.to_json(include_trace=args.trace)
            trace = res.projection.trace
            out.update(
                {
                    "eta": res.eta,
                    "shifted_family": res.shifted_family.to_json(),
                    "hypothesis_ok": res.hypothesis_ok,
                    "negative_branch": res.negative_branch,
                    "divergence_from_data_nats": res.divergence_from_data,
                    "theta_exp": res.theta_exp,
                    "normalizer_exp": res.normalizer_exp,
                }
            )

    else:  # tsallis
        if not args.energies or args.target is None:
            raise UsageError("tsallis needs --energies and --target")
        try:
            res, code = _run_solver(lambda: tsallis_maxent(args.energies, args.target, a, opts=opts), args)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        if res is None:
            return code
        if code == EXIT_CERT:
            out, trace = res.to_json(include_trace=args.trace), res.trace
        else:
            out = res.projection.to_json(include_trace=args.trace)
            trace = res.projection.trace
            out.update({"tsallis_entropy": res.entropy, "escort_mean": res.escort_mean})

    if args.trace:
        _print_trace(trace)
    if code == EXIT_CERT:
        print("certificate failed", file=sys.stderr)
    _emit(out, args.output)
    return code


# ---------------------------------------------------------------------------
# verify


def run_verify(args) -> int:
    if args.instances < 1:
        raise UsageError("--instances must be at least 1")
    seed = _default_seed(args.seed)
    summary = RUNNERS[args.property](args.instances, seed)
    print(f"{summary.property}: {summary.passed} passed, {summary.failed} failed", file=sys.stderr)
    _emit(summary.to_json(), args.output)
    return EXIT_OK if summary.ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alphaproj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("divergence", help="evaluate one divergence or entropy")
    d.add_argument("--kind", required=True, choices=DIVERGENCE_KINDS)
    d.add_argument("--alpha", type=_alpha)
    d.add_argument("--p", required=True, help="distribution JSON file")
    d.add_argument("--q", help="distribution JSON file")
    d.add_argument("--output")
    d.set_defaults(func=run_divergence)

    p = sub.add_parser("project", help="forward, cyclic, reverse or Tsallis projection")
    p.add_argument("mode", choices=("forward", "iterate", "reverse", "tsallis"))
    p.add_argument("--alpha", type=_alpha)
    p.add_argument("--q", help="reference distribution JSON (forward, iterate)")
    p.add_argument("--family", help="alpha-linear family JSON (forward)")
    p.add_argument("--families", nargs="+", help="two or more family JSON files (iterate)")
    p.add_argument("--p-hat", dest="p_hat", help="data distribution JSON (reverse)")
    p.add_argument("--exp-family", dest="exp_family", help="alpha-exponential family JSON (reverse)")
    p.add_argument("--energies", type=float, nargs="+", help="state energies (tsallis)")
    p.add_argument("--target", type=float, help="escort-mean energy (tsallis)")
    p.add_argument("--tolerance", type=float, default=1e-10)
    p.add_argument("--max-iterations", dest="max_iterations", type=int, default=200)
    p.add_argument("--jacobian", choices=("finite-difference", "analytic"), default="finite-difference")
    p.add_argument("--no-fallback", dest="no_fallback", action="store_true")
    p.add_argument("--certificate-samples", dest="certificate_samples", type=int, default=32)
    p.add_argument("--certificate-tolerance", dest="certificate_tolerance", type=float, default=1e-7)
    p.add_argument("--step-tolerance", dest="step_tolerance", type=float, default=1e-12,
                   help="per-step divergence threshold (iterate)")
    p.add_argument("--max-cycles", dest="max_cycles", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--trace", action="store_true", help="print the convergence trace to stderr")
    p.add_argument("--output")
    p.set_defaults(func=run_project)

    v = sub.add_parser("verify", help="randomized property checks")
    v.add_argument("property", choices=tuple(RUNNERS))
    v.add_argument("--instances", type=int, required=True)
    v.add_argument("--seed", type=int)
    v.add_argument("--output")
    v.set_defaults(func=run_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
