"""Command-line front end.

Four subcommands: ``score`` evaluates a forecast density's score at
observed points, ``verify`` runs the seeded certification suites,
``deriv`` compares the finite-difference directional derivative against
its closed form, and ``demo`` runs the boundary-phenomena demonstrations.

Data goes to stdout as deterministic JSON (sorted keys); diagnostics go
to stderr. Exit codes: 0 success, 1 suite or demo failure, 2 parse or
configuration error, 3 domain or feasibility error. The logarithmic
score of an observation where the forecast vanishes is recorded as the
string sentinel ``"-inf"`` and counted, never dropped.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import boundary, convexity, pairing, rules, sampling
from .densities import (
    GridDensity,
    cone_spec_from_config,
    default_cone_spec,
    density_from_config,
    require_cone,
)
from .errors import (
    ConeMembershipError,
    ConescoreError,
    DomainError,
    InfeasibleStepError,
    InvalidParameterError,
    ModeMeasureZeroError,
    NodeBudgetError,
    OneSidedOnlyError,
    UnsupportedFamilyError,
    ZeroDensityError,
    ZeroMassError,
)

__all__ = ["main"]

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DOMAIN = 3

_DOMAIN_ERRORS = (
    DomainError,
    ZeroDensityError,
    ZeroMassError,
    UnsupportedFamilyError,
    ConeMembershipError,
    NodeBudgetError,
    ModeMeasureZeroError,
    InfeasibleStepError,
    OneSidedOnlyError,
)


def _err(message: str) -> None:
    print(message, file=sys.stderr)


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    if out and out.endswith(".csv"):
        _emit_csv(payload, out)
    elif out:
        Path(out).write_text(text + "\n")
    print(text)


def _emit_csv(payload: dict, out: str) -> None:
    records = payload.get("records")
    if records is None:
        raise InvalidParameterError("CSV output is only defined for score records")
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "score", "rule", "forecast_digest"])
        for rec in records:
            writer.writerow([rec["x"], rec["score"], payload["rule"], payload["forecast_digest"]])


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InvalidParameterError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"invalid JSON in {path}: {exc}") from exc


def _load_density(path: str):
    """Load a density config; an optional 'cone' key rides along."""
    cfg = _load_json(path)
    cone_cfg = None
    if isinstance(cfg, dict) and "density" in cfg:
        cone_cfg = cfg.get("cone")
        cfg = cfg["density"]
    density = density_from_config(cfg)
    cone = cone_spec_from_config(cone_cfg) if cone_cfg else None
    return density, cone, cfg


def _load_observations(path: str) -> np.ndarray:
    try:
        rows = list(csv.reader(Path(path).open()))
    except FileNotFoundError as exc:
        raise InvalidParameterError(f"file not found: {path}") from exc
    values = []
    for i, row in enumerate(rows):
        if not row or not row[0].strip():
            continue
        try:
            values.append(float(row[0]))
        except ValueError:
            if i == 0:
                continue  # header line
            raise InvalidParameterError(f"non-numeric observation on line {i + 1}: {row[0]!r}")
    if not values:
        raise InvalidParameterError("no observations found")
    return np.asarray(values, dtype=float)


def _digest(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True).encode()
    return hashlib.sha256(canon).hexdigest()[:12]


def _scheme_from_args(args) -> pairing.QuadratureScheme | None:
    if args.panels is None and args.nodes is None and args.radius is None and args.tail_tol is None:
        return None
    return pairing.QuadratureScheme(
        panels=args.panels if args.panels is not None else 16,
        nodes=args.nodes if args.nodes is not None else 8,
        radius=args.radius,
        tail_tol=args.tail_tol if args.tail_tol is not None else 1e-10,
    )


def _maybe_require_cone(q, cone, rule, strict: bool, scheme) -> None:
    if not strict:
        return
    spec = cone if cone is not None else default_cone_spec(rule, q.dim)
    require_cone(q, spec, scheme=scheme)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_score(args) -> int:
    rule = rules.canonical_rule(args.rule)
    q, cone, cfg = _load_density(args.forecast)
    obs = _load_observations(args.obs)
    scheme = _scheme_from_args(args)
    _maybe_require_cone(q, cone, rule, args.strict_cone, scheme)

    clamped = 0
    if rule == "logarithmic":
        mass = q.total_mass(scheme)
        qx = np.asarray(q.value(obs), dtype=float)
        scores: list = []
        for v in qx:
            if v > 0:
                scores.append(float(np.log(v / mass)))
            else:
                clamped += 1
                scores.append("-inf")
    else:
        scores = [float(s) for s in np.atleast_1d(rules.score_at(rule, q, obs, scheme))]

    finite = [s for s in scores if isinstance(s, float)]
    mean: float | str = "-inf" if clamped else (float(np.mean(finite)) if finite else "-inf")
    payload = {
        "rule": rule,
        "forecast_digest": _digest(cfg),
        "records": [
            {"x": float(x), "score": s} for x, s in zip(obs, scores)
        ],
        "summary": {"mean": mean, "count": len(scores), "clamped": clamped},
    }
    _emit(payload, args.out)
    if clamped:
        _err(f"{clamped} observation(s) outside the forecast's support scored -inf")
    return EXIT_OK


def cmd_verify(args) -> int:
    scheme = _scheme_from_args(args)
    report = convexity.run_suite(
        args.suite,
        rule=args.rule,
        samples=args.samples,
        seed=args.seed,
        scheme=scheme,
        tol=args.tol,
    )
    payload = report.to_dict()
    _emit(payload, args.out)
    summary = payload["summary"]
    _err(f"suite {args.suite}: {summary['pass']}/{summary['total']} cases passed")
    return EXIT_OK if report.passed else EXIT_FAILURE


def cmd_deriv(args) -> int:
    rule = rules.canonical_rule(args.rule)
    q, cone_q, _ = _load_density(args.q)
    p, _, _ = _load_density(args.p)
    scheme = _scheme_from_args(args)
    _maybe_require_cone(q, cone_q, rule, args.strict_cone, scheme)

    qh = q * (1.0 / q.total_mass(scheme))
    ph = p * (1.0 / p.total_mass(scheme))
    phi = convexity.entropy_line(rule, qh, ph, scheme=scheme)
    est = convexity.right_directional_derivative(phi, qh, ph)
    analytic = convexity.analytic_directional_derivative(rule, q, p, scheme)
    payload = {
        "rule": rule,
        "fd_value": est.value,
        "analytic": analytic,
        "residual": abs(est.value - analytic),
        "converged": est.converged,
        "monotonicity_violations": est.monotonicity_violations,
        "trace": [[t, quotient] for t, quotient in est.trace],
    }
    _emit(payload, args.out)
    return EXIT_OK


def _demo_binary(args) -> tuple[dict, bool]:
    k_max = args.K if args.K is not None else 12
    threshold = args.alpha if args.alpha is not None else -27.0
    xs = [10.0**-k for k in range(1, k_max + 1)]
    trace = boundary.boundary_blowup_trace(xs, y0=1.0, threshold=threshold)
    payload = {
        "demo": "binary-boundary",
        "y0": trace.y0,
        "path": list(trace.xs),
        "partials": list(trace.partials),
        "strictly_decreasing": trace.strictly_decreasing,
        "threshold": trace.threshold,
        "crossed_at_index": trace.crossed_at,
        "final": trace.final(),
    }
    ok = trace.strictly_decreasing and trace.crossed_at is not None
    _err(
        f"partial along x=10^-k decreases from {trace.partials[0]:.4f} to {trace.final():.4f}; "
        f"threshold {threshold} {'crossed' if ok else 'not crossed'}"
    )
    return payload, ok


def _demo_nowhere_dense(args) -> tuple[dict, bool]:
    size = args.K if args.K is not None else 200
    alphas = [args.alpha] if args.alpha is not None else [10.0, 1.0, 0.1, 0.01]
    seq = boundary.DyadicSequence.geometric(0.5, size=size)
    witnesses = boundary.nowhere_dense_witness(seq, alphas)
    partial = seq.b_partial_sums()
    checkpoints = sorted({size // 4, size // 2, (3 * size) // 4, size - 1} - {0})
    payload = {
        "demo": "nowhere-dense",
        "ratio": 0.5,
        "shells": size,
        "witnesses": [[alpha, k] for alpha, k in witnesses],
        "b_sum": float(partial[-1]),
        "b_partial_sums": {str(i): float(partial[i]) for i in checkpoints},
    }
    for alpha, k in witnesses:
        _err(f"alpha={alpha:g}: shell mass turns negative first at k={k}")
    return payload, True


def _demo_sup_mode(args) -> tuple[dict, bool]:
    n = args.grid_points if args.grid_points is not None else 401
    if n < 5:
        raise InvalidParameterError("--grid-points must be at least 5")
    x = np.linspace(0.0, 1.0, n)
    uniform = GridDensity(0.0, 1.0, np.ones(n))
    plateau_vals = np.where((x <= 0.25) | (x >= 0.75), 2.0, 0.1)
    plateau = GridDensity(0.0, 1.0, plateau_vals)
    triangle = GridDensity(0.0, 1.0, 2.0 - 4.0 * np.abs(x - 0.5) + 1e-12)
    reports = {
        "uniform": boundary.sup_dichotomy_demo(uniform),
        "plateau": boundary.sup_dichotomy_demo(plateau),
        "triangle": boundary.sup_dichotomy_demo(triangle),
    }
    payload = {"demo": "sup-mode", "grid_points": n, "reports": {k: r.to_dict() for k, r in reports.items()}}
    ok = all(r.passed for r in reports.values())
    for name, rep in reports.items():
        _err(f"{name}: regime={rep.regime}, mode measure={rep.mode_measure:g}, pass={rep.passed}")
    return payload, ok


def cmd_demo(args) -> int:
    demos = {
        "binary-boundary": _demo_binary,
        "nowhere-dense": _demo_nowhere_dense,
        "sup-mode": _demo_sup_mode,
    }
    if args.name not in demos:
        raise InvalidParameterError(f"unknown demo {args.name!r}; expected one of {sorted(demos)}")
    payload, ok = demos[args.name](args)
    _emit(payload, args.out)
    return EXIT_OK if ok else EXIT_FAILURE


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_scheme_flags(sub):
    sub.add_argument("--panels", type=int, default=None, help="quadrature panels per unit length")
    sub.add_argument("--nodes", type=int, default=None, help="Gauss-Legendre nodes per panel")
    sub.add_argument("--radius", type=float, default=None, help="core truncation radius")
    sub.add_argument("--tail-tol", dest="tail_tol", type=float, default=None, help="tail mass tolerance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conescore",
        description="Scoring rules on positive prediction cones: score, verify, deriv, demo.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    rule_help = "scoring rule: logarithmic, hyvarinen, quadratic, or supremum (aliases accepted)"

    p_score = sub.add_parser("score", help="score observations against a forecast density")
    p_score.add_argument("--rule", required=True, help=rule_help)
    p_score.add_argument("--forecast", required=True, help="forecast density JSON")
    p_score.add_argument("--obs", required=True, help="single-column CSV of observations")
    p_score.add_argument("--strict-cone", dest="strict_cone", action="store_true")
    p_score.add_argument("--out", default=None, help="also write the report (.csv for records)")
    _add_scheme_flags(p_score)
    p_score.set_defaults(func=cmd_score)

    p_verify = sub.add_parser("verify", help="run a certification suite")
    p_verify.add_argument("--rule", default=None, help=rule_help)
    p_verify.add_argument(
        "--suite",
        required=True,
        choices=["propriety", "euler", "homogeneity", "derivatives", "gateaux", "all"],
    )
    p_verify.add_argument("--samples", type=int, default=50)
    p_verify.add_argument("--seed", type=int, default=sampling.DEFAULT_SEED)
    p_verify.add_argument("--tol", type=float, default=None, help="override the suite's primary tolerance")
    p_verify.add_argument("--out", default=None)
    _add_scheme_flags(p_verify)
    p_verify.set_defaults(func=cmd_verify)

    p_deriv = sub.add_parser("deriv", help="finite-difference vs closed-form directional derivative")
    p_deriv.add_argument("--rule", required=True, help=rule_help)
    p_deriv.add_argument("--q", required=True, help="base density JSON")
    p_deriv.add_argument("--p", required=True, help="direction density JSON")
    p_deriv.add_argument("--strict-cone", dest="strict_cone", action="store_true")
    p_deriv.add_argument("--out", default=None)
    _add_scheme_flags(p_deriv)
    p_deriv.set_defaults(func=cmd_deriv)

    p_demo = sub.add_parser("demo", help="boundary-phenomena demonstrations")
    p_demo.add_argument("--name", required=True, choices=["binary-boundary", "nowhere-dense", "sup-mode"])
    p_demo.add_argument("--alpha", type=float, default=None, help="radius (nowhere-dense) or threshold (binary-boundary)")
    p_demo.add_argument("--K", type=int, default=None, help="shells or path length")
    p_demo.add_argument("--grid-points", dest="grid_points", type=int, default=None)
    p_demo.add_argument("--out", default=None)
    p_demo.set_defaults(func=cmd_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "tol", None) is not None and args.tol <= 0:
        _err("--tol must be positive")
        return EXIT_CONFIG
    try:
        return args.func(args)
    except InvalidParameterError as exc:
        _err(f"configuration error: {exc}")
        return EXIT_CONFIG
    except _DOMAIN_ERRORS as exc:
        if args.command == "verify":
            _err(f"configuration error: {exc}")
            return EXIT_CONFIG
        _err(f"domain error: {exc}")
        return EXIT_DOMAIN
    except ConescoreError as exc:
        _err(f"error: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
