"""Directional derivatives of entropies and the certification suites.

The finite-difference engine works on a *frozen* node set: the entropy
callbacks produced by :func:`entropy_line` discretise the entropy once,
on nodes covering every field the caller will touch, and then evaluate
the whole step schedule on that fixed discrete measure. The discretised
entropy is genuinely convex and homogeneous on that measure, so right
difference quotients are nonincreasing to floating point, Richardson
extrapolation is safe, and the quotient trace doubles as a convexity
certificate rather than a quadrature diagnostic.

Suites return :class:`VerificationReport`, a plain record of per-case
residuals and tolerances with a deterministic JSON form: two runs with
the same seed and scheme produce byte-identical reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import pairing, rules, sampling
from .densities import (
    Bump,
    Combination,
    Field,
    GridDensity,
    GridInfo,
    default_cone_spec,
    cone_check,
)
from .errors import (
    ConescoreError,
    InfeasibleStepError,
    InvalidParameterError,
    ModeMeasureZeroError,
    OneSidedOnlyError,
)

__all__ = [
    "FD_STEPS",
    "TOL_FD",
    "MONOTONE_SLACK",
    "DerivativeEstimate",
    "TwoSidedDerivative",
    "CaseResult",
    "VerificationReport",
    "entropy_line",
    "right_directional_derivative",
    "left_directional_derivative",
    "two_sided_derivative",
    "analytic_directional_derivative",
    "certify_subgradient",
    "certify_sublinearity",
    "certify_directional_derivatives",
    "gateaux_check",
    "run_suite",
    "SUITES",
]

# step schedule t_j = 2^-j, j = 3..18; halving steps make the Richardson
# combination 2*Q(t) - Q(2t) exact through the linear error term
FD_STEPS = tuple(2.0**-j for j in range(3, 19))

TOL_FD = 1e-5

# allowed floating-point slack when counting quotient-monotonicity breaks
MONOTONE_SLACK = 1e-9

SUITES = ("propriety", "euler", "homogeneity", "derivatives", "gateaux", "all")


# ---------------------------------------------------------------------------
# frozen-node entropy callbacks
# ---------------------------------------------------------------------------

def entropy_line(rule: str, *fields: Field, scheme: pairing.QuadratureScheme | None = None) -> Callable[[Field], float]:
    """Entropy callback discretised on one node set covering ``fields``.

    The returned callable evaluates the rule's entropy of any field by
    restriction to the frozen nodes. Feasibility violations (negative
    values for the positivity-constrained entropies, nonpositive mass for
    the quadratic one) raise the usual domain errors, which the derivative
    engine translates into step feasibility.
    """
    rule = rules.canonical_rule(rule)
    cover = fields[0] if len(fields) == 1 else Combination((1.0,) * len(fields), fields)
    if rule == "supremum":
        grid = cover.grid
        if grid is None:
            raise InvalidParameterError("supremum entropy lines need grid fields")
        pts = grid.points()

        def phi_sup(f: Field) -> float:
            return float(np.max(np.asarray(f.value(pts), dtype=float)))

        return phi_sup

    ns = pairing.nodes_for(cover, scheme)
    w = ns.weights
    pts = ns.points

    if rule == "logarithmic":

        def phi_log(f: Field) -> float:
            fv = np.asarray(f.value(pts), dtype=float)
            if np.any(fv < 0):
                raise rules.ZeroDensityError("field leaves the nonnegative cone on the node set")
            mass = float(np.sum(w * fv))
            if mass <= 0:
                raise rules.ZeroMassError("nonpositive mass on the node set")
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = np.where(fv > 0, fv * np.log(np.maximum(fv, rules.LOG_CLAMP) / mass), 0.0)
            return float(np.sum(w * terms))

        return phi_log

    if rule == "hyvarinen":

        def phi_hyv(f: Field) -> float:
            fv = np.asarray(f.value(pts), dtype=float)
            if np.any(fv < 0):
                raise rules.ZeroDensityError("field leaves the nonnegative cone on the node set")
            g2 = np.asarray(f.gradient(pts), dtype=float)
            g2 = g2**2 if f.dim == 1 else (g2**2).sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                terms = np.where(fv > 0, g2 / np.maximum(fv, rules.LOG_CLAMP), 0.0)
            return float(np.sum(w * terms))

        return phi_hyv

    def phi_quad(f: Field) -> float:
        fv = np.asarray(f.value(pts), dtype=float)
        mass = float(np.sum(w * fv))
        if mass <= 0:
            raise rules.ZeroMassError("nonpositive mass on the node set")
        return float(np.sum(w * fv**2) / mass)

    return phi_quad


# ---------------------------------------------------------------------------
# derivative estimates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DerivativeEstimate:
    """Directional-derivative estimate with its difference-quotient trace.

    ``trace`` lists (step, quotient) in schedule order; ``value`` is the
    Richardson combination of the last two quotients; ``converged`` means
    the last two quotients agree within the requested tolerance;
    ``monotonicity_violations`` counts breaks of the convexity ordering
    beyond the floating-point slack.
    """

    value: float
    trace: tuple
    side: str
    converged: bool
    monotonicity_violations: int

    def max_monotonicity_excess(self) -> float:
        """Largest break of the quotient ordering, 0.0 when none."""
        worst = 0.0
        qs = [q for _, q in self.trace]
        for prev, nxt in zip(qs, qs[1:]):
            excess = (nxt - prev) if self.side == "right" else (prev - nxt)
            worst = max(worst, excess)
        return worst


@dataclass(frozen=True)
class TwoSidedDerivative:
    """Right and left estimates; ``value`` is set when the sides agree."""

    right: DerivativeEstimate
    left: DerivativeEstimate
    gap: float
    value: float | None
    matched: bool


def _validate_steps(steps: Sequence[float]) -> tuple[float, ...]:
    steps = tuple(float(t) for t in steps)
    if not steps or any(t <= 0 for t in steps):
        raise InvalidParameterError("steps must be positive")
    if any(a <= b for a, b in zip(steps, steps[1:])):
        raise InvalidParameterError("steps must be strictly decreasing")
    return steps


def _richardson(trace: list[tuple[float, float]]) -> float:
    if len(trace) == 1:
        return trace[-1][1]
    (t_prev, q_prev), (t_last, q_last) = trace[-2], trace[-1]
    r = t_prev / t_last
    return (r * q_last - q_prev) / (r - 1.0)


def right_directional_derivative(
    phi: Callable[[Field], float],
    q: Field,
    p: Field,
    steps: Sequence[float] = FD_STEPS,
    tol_fd: float = TOL_FD,
) -> DerivativeEstimate:
    """Right derivative of ``phi`` at ``q`` along ``p`` by monotone quotients.

    For a convex ``phi`` the quotient trace is nonincreasing down the
    schedule; an entropy failure at some step raises
    :class:`InfeasibleStepError` naming it.
    """
    steps = _validate_steps(steps)
    phi_q = _phi_at_base(phi, q)
    trace: list[tuple[float, float]] = []
    for t in steps:
        try:
            val = phi(q + t * p)
        except ConescoreError as exc:
            raise InfeasibleStepError(f"step t={t:g} leaves the entropy's domain: {exc}", step=t) from exc
        if not np.isfinite(val):
            raise InfeasibleStepError(f"entropy not finite at step t={t:g}", step=t)
        trace.append((t, (val - phi_q) / t))
    violations = sum(1 for (_, a), (_, b) in zip(trace, trace[1:]) if b > a + MONOTONE_SLACK)
    converged = len(trace) >= 2 and abs(trace[-1][1] - trace[-2][1]) < tol_fd
    return DerivativeEstimate(_richardson(trace), tuple(trace), "right", converged, violations)


def left_directional_derivative(
    phi: Callable[[Field], float],
    q: Field,
    p: Field,
    steps: Sequence[float] = FD_STEPS,
    tol_fd: float = TOL_FD,
) -> DerivativeEstimate:
    """Left derivative: quotients of q - t p, skipping steps that exit the cone.

    Large steps may be infeasible even when the direction is two-sided;
    those are skipped. If every step fails, the direction is one-sided and
    :class:`OneSidedOnlyError` is raised.
    """
    steps = _validate_steps(steps)
    phi_q = _phi_at_base(phi, q)
    trace: list[tuple[float, float]] = []
    for t in steps:
        try:
            val = phi(q + (-t) * p)
        except ConescoreError:
            continue
        if not np.isfinite(val):
            continue
        trace.append((t, (phi_q - val) / t))
    if not trace:
        raise OneSidedOnlyError("the reversed direction leaves the cone at every scheduled step")
    violations = sum(1 for (_, a), (_, b) in zip(trace, trace[1:]) if b < a - MONOTONE_SLACK)
    converged = len(trace) >= 2 and abs(trace[-1][1] - trace[-2][1]) < tol_fd
    return DerivativeEstimate(_richardson(trace), tuple(trace), "left", converged, violations)


def _phi_at_base(phi: Callable[[Field], float], q: Field) -> float:
    try:
        value = phi(q)
    except ConescoreError as exc:
        raise InfeasibleStepError(f"entropy undefined at the base point: {exc}", step=0.0) from exc
    if not np.isfinite(value):
        raise InfeasibleStepError("entropy not finite at the base point", step=0.0)
    return value


def two_sided_derivative(
    phi: Callable[[Field], float],
    q: Field,
    p: Field,
    steps: Sequence[float] = FD_STEPS,
    tol_fd: float = TOL_FD,
) -> TwoSidedDerivative:
    """Both one-sided derivatives; the two-sided value exists when they agree.

    Raises :class:`OneSidedOnlyError` when the reversed direction never
    enters the domain, i.e. the direction is not two-sided at ``q``.
    """
    right = right_directional_derivative(phi, q, p, steps, tol_fd)
    left = left_directional_derivative(phi, q, p, steps, tol_fd)
    gap = abs(right.value - left.value)
    matched = gap < tol_fd
    value = 0.5 * (right.value + left.value) if matched else None
    return TwoSidedDerivative(right, left, gap, value, matched)


def analytic_directional_derivative(
    rule: str,
    q: Field,
    p: Field,
    scheme: pairing.QuadratureScheme | None = None,
) -> float:
    """Closed-form right derivative of the rule's entropy at q along p.

    For the smooth rules this is the expected score p-hat . S(q-hat); for
    the supremum rule it is the maximum of p-hat over the modal nodes of
    q (Dirac evaluation when the mode set is a single point).
    """
    rule = rules.canonical_rule(rule)
    if rule != "supremum":
        return rules.expected_score(rule, p, q, scheme)
    grid = q.grid
    if grid is None or p.grid != grid:
        raise InvalidParameterError("supremum derivative needs p and q on one grid")
    pts = grid.points()
    qv = np.asarray(q.value(pts), dtype=float)
    pv = np.asarray(p.value(pts), dtype=float)
    ns = pairing.nodes_for(p, None)
    mp = float(np.sum(ns.weights * pv))
    modal = qv >= np.max(qv) * (1.0 - rules.DELTA_MODE)
    return float(np.max(pv[modal]) / mp)


# ---------------------------------------------------------------------------
# verification reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CaseResult:
    case_id: str
    residual: float | None
    tol: float
    passed: bool
    note: str | None = None


@dataclass(frozen=True)
class VerificationReport:
    """Per-case residuals of one suite run, with a deterministic JSON form."""

    suite: str
    cases: tuple
    seed: int | None
    scheme: pairing.QuadratureScheme

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases)

    def to_dict(self) -> dict:
        cases = []
        for c in self.cases:
            rec = {
                "id": c.case_id,
                "residual": None if c.residual is None else float(c.residual),
                "tol": float(c.tol),
                "pass": bool(c.passed),
            }
            if c.note is not None:
                rec["note"] = c.note
            cases.append(rec)
        return {
            "suite": self.suite,
            "seed": self.seed,
            "scheme": {
                "rule": self.scheme.rule,
                "panels": self.scheme.panels,
                "nodes": self.scheme.nodes,
                "radius": self.scheme.radius,
                "tail_tol": self.scheme.tail_tol,
            },
            "cases": cases,
            "summary": {"pass": sum(1 for c in self.cases if c.passed), "total": len(self.cases)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _normalized(f: Field, scheme) -> Field:
    return f * (1.0 / f.total_mass(scheme))


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

def certify_subgradient(
    rule: str,
    pairs: Sequence[tuple[Field, Field]],
    tol_quad: float = 1e-8,
    tol_fd: float = 1e-4,
    steps: Sequence[float] = FD_STEPS,
    scheme: pairing.QuadratureScheme | None = None,
    seed: int | None = None,
) -> VerificationReport:
    """Certify that the rule's score is the entropy's subgradient.

    Per pair: (i) the support inequality entropy(p) >= p.S(q) - tol,
    (ii) the Euler identity at q, (iii) p.S(q) <= FD right derivative
    + tol, (iv) FD derivative equals the closed form within tol. For the
    supremum rule with a measure-zero mode set, (iv) additionally checks
    that no density-integrable subgradient is constructible.
    """
    rule = rules.canonical_rule(rule)
    cases: list[CaseResult] = []
    for i, (p, q) in enumerate(pairs):
        base = f"{rule}/subgradient/pair{i:03d}"
        try:
            cases.extend(_subgradient_cases(rule, base, p, q, tol_quad, tol_fd, steps, scheme))
        except ConescoreError as exc:
            cases.append(CaseResult(base, None, tol_fd, False, note=f"{type(exc).__name__}: {exc}"))
    return VerificationReport("subgradient", tuple(cases), seed, scheme or pairing.DEFAULT_SCHEME)


def _subgradient_cases(rule, base, p, q, tol_quad, tol_fd, steps, scheme) -> list[CaseResult]:
    diagnostics: dict = {}
    div = rules.divergence(rule, p, q, scheme, diagnostics)
    note = diagnostics.get("note")
    cases = [CaseResult(f"{base}/support", div, tol_quad, div >= -tol_quad, note=note)]

    eul = rules.euler_residual(rule, q, scheme)
    cases.append(CaseResult(f"{base}/euler", eul, tol_quad, eul <= tol_quad))

    ph = _normalized(p, scheme)
    qh = _normalized(q, scheme)
    phi = entropy_line(rule, qh, ph, scheme=scheme)
    est = right_directional_derivative(phi, qh, ph, steps)
    expected = rules.expected_score(rule, p, q, scheme)
    excess = expected - est.value
    cases.append(CaseResult(f"{base}/score-below-derivative", excess, tol_fd, excess <= tol_fd))

    analytic = analytic_directional_derivative(rule, q, p, scheme)
    resid = abs(est.value - analytic)
    cert_note = None
    passed = resid <= tol_fd
    if rule == "supremum":
        mode = rules.mode_set(q)
        if mode.measure == 0:
            try:
                rules.sup_subgradient(q)
                passed = False
                cert_note = "subgradient construction unexpectedly succeeded on a measure-zero mode set"
            except ModeMeasureZeroError:
                cert_note = "measure-zero mode set: Dirac evaluation, no density-integrable subgradient"
    cases.append(CaseResult(f"{base}/derivative-certificate", resid, tol_fd, passed, note=cert_note))
    return cases


def certify_sublinearity(
    rule: str,
    samples: Sequence[Field],
    lambdas: Sequence[float] = (0.5, 2.0, 7.0),
    tol: float = 1e-8,
    strict_tol: float = 1e-6,
    scheme: pairing.QuadratureScheme | None = None,
    seed: int | None = None,
) -> VerificationReport:
    """Certify homogeneity, subadditivity, and segment convexity of the entropy.

    Strict rules must additionally show a subadditivity margin above
    ``strict_tol`` on pairs separated in normalised L1 distance.
    """
    rule = rules.canonical_rule(rule)
    strict_rule = rule in ("logarithmic", "hyvarinen", "quadratic")
    cases: list[CaseResult] = []
    for i, f in enumerate(samples):
        line = entropy_line(rule, f, scheme=scheme)
        phi_f = line(f)
        worst = 0.0
        for lam in lambdas:
            resid = abs(line(lam * f) - lam * phi_f) / max(abs(lam * phi_f), 1e-12)
            worst = max(worst, resid)
        cases.append(CaseResult(f"{rule}/sublinearity/scale{i:03d}", worst, tol, worst <= tol))
    for i in range(len(samples) - 1):
        f, g = samples[i], samples[i + 1]
        line = entropy_line(rule, f, g, scheme=scheme)
        phi_f, phi_g = line(f), line(g)
        margin = phi_f + phi_g - line(f + g)
        cases.append(
            CaseResult(f"{rule}/sublinearity/subadd{i:03d}", margin, tol, margin >= -tol)
        )
        if strict_rule and sampling.normalized_l1_distance(f, g, scheme) >= 0.1:
            cases.append(
                CaseResult(
                    f"{rule}/sublinearity/strict{i:03d}",
                    margin,
                    strict_tol,
                    margin >= strict_tol,
                    note="pair separated in normalised L1",
                )
            )
        worst = -np.inf
        for t in (0.25, 0.5, 0.75):
            excess = line((1.0 - t) * f + t * g) - ((1.0 - t) * phi_f + t * phi_g)
            worst = max(worst, excess)
        cases.append(CaseResult(f"{rule}/sublinearity/segment{i:03d}", worst, tol, worst <= tol))
    return VerificationReport("sublinearity", tuple(cases), seed, scheme or pairing.DEFAULT_SCHEME)


def certify_directional_derivatives(
    rule: str,
    q: Field,
    one_sided: Sequence[Field],
    two_sided: Sequence[Field],
    steps: Sequence[float] = FD_STEPS,
    tol_fd: float = TOL_FD,
    scheme: pairing.QuadratureScheme | None = None,
    case_prefix: str = "",
    seed: int | None = None,
) -> VerificationReport:
    """Certify the structural properties of the right directional derivative.

    One record per property: monotone quotient traces; sublinearity of the
    derivative in the direction; invariance under scaling of the base
    point; the support inequality with equality along the base ray; the
    left-right ordering; and additivity on two-sided directions.
    ``one_sided`` directions must be cone elements; ``two_sided``
    directions must be feasible both ways at ``q``.
    """
    rule = rules.canonical_rule(rule)
    if len(one_sided) < 2 or len(two_sided) < 2:
        raise InvalidParameterError("need at least two one-sided and two two-sided directions")
    prefix = case_prefix or f"{rule}/derivatives"
    qh = _normalized(q, scheme)
    cover = [qh] + [d for d in one_sided] + [d for d in two_sided]
    phi = entropy_line(rule, *cover, scheme=scheme)

    def right(base: Field, direction: Field) -> DerivativeEstimate:
        return right_directional_derivative(phi, base, direction, steps, tol_fd)

    cases: list[CaseResult] = []

    ests = [right(qh, d) for d in one_sided]
    worst_excess = max(e.max_monotonicity_excess() for e in ests)
    total_violations = sum(e.monotonicity_violations for e in ests)
    cases.append(
        CaseResult(
            f"{prefix}/monotone-quotients",
            worst_excess,
            MONOTONE_SLACK,
            total_violations == 0,
            note=f"{len(ests)} traces, {len(steps)} steps each",
        )
    )

    d0, d1 = one_sided[0], one_sided[1]
    v0, v1 = ests[0].value, ests[1].value
    homog = abs(right(qh, 2.0 * d0).value - 2.0 * v0)
    subadd = right(qh, d0 + d1).value - (v0 + v1)
    resid = max(homog, subadd)
    cases.append(CaseResult(f"{prefix}/derivative-sublinear", resid, tol_fd, homog <= tol_fd and subadd <= tol_fd))

    worst = 0.0
    for lam in (0.5, 2.0, 7.0):
        worst = max(worst, abs(right(lam * qh, d0).value - v0))
    cases.append(CaseResult(f"{prefix}/base-scale-invariance", worst, 1e-6, worst <= 1e-6))

    ineq_excess = 0.0
    for d, est in zip(one_sided, ests):
        ineq_excess = max(ineq_excess, est.value - phi(d))
    eq_resid = abs(right(qh, qh).value - phi(qh))
    cases.append(
        CaseResult(
            f"{prefix}/support-inequality",
            max(ineq_excess, eq_resid),
            1e-6,
            ineq_excess <= 1e-6 and eq_resid <= 1e-8,
            note=f"equality residual at the base ray {eq_resid:.3e}",
        )
    )

    two = [two_sided_derivative(phi, qh, d, steps, tol_fd) for d in two_sided]
    order_excess = max(t.left.value - t.right.value for t in two)
    cases.append(CaseResult(f"{prefix}/left-right-order", order_excess, 1e-6, order_excess <= 1e-6))

    r0, r1 = two_sided[0], two_sided[1]
    t0, t1 = two[0], two[1]
    tsum = two_sided_derivative(phi, qh, r0 + r1, steps, tol_fd)
    if t0.matched and t1.matched and tsum.matched:
        resid = abs(tsum.value - (t0.value + t1.value))
        cases.append(CaseResult(f"{prefix}/two-sided-additivity", resid, tol_fd, resid <= tol_fd))
    else:
        gaps = f"gaps {t0.gap:.3e}, {t1.gap:.3e}, {tsum.gap:.3e}"
        cases.append(
            CaseResult(
                f"{prefix}/two-sided-additivity",
                None,
                tol_fd,
                False,
                note=f"two-sided values did not match: {gaps}",
            )
        )
    return VerificationReport("derivatives", tuple(cases), seed, scheme or pairing.DEFAULT_SCHEME)


def gateaux_check(
    q: Field,
    directions: Sequence[Field],
    steps: Sequence[float] = FD_STEPS,
    tol: float = TOL_FD,
    tol_linear: float = 1e-7,
    scheme: pairing.QuadratureScheme | None = None,
    case_prefix: str = "",
    seed: int | None = None,
) -> VerificationReport:
    """Gateaux differentiability of the quadratic entropy at an interior point.

    For each direction p (sign-changing allowed, any integral) the
    symmetric difference quotient must converge to the pairing of the
    gradient field 2q/(q.1) - (q.q)/(q.1)^2 with p, and the derivative
    must be additive and homogeneous in p.
    """
    if not directions:
        raise InvalidParameterError("need at least one direction")
    prefix = case_prefix or "quadratic/gateaux"
    steps = _validate_steps(steps)
    cover = Combination((1.0,) * (len(directions) + 1), [q, *directions])
    ns = pairing.nodes_for(cover, scheme)
    w, pts = ns.weights, ns.points
    qv = np.asarray(q.value(pts), dtype=float)
    mq = float(np.sum(w * qv))
    q2 = float(np.sum(w * qv**2))
    grad_values = 2.0 * qv / mq - q2 / mq**2

    def phi(f: Field) -> float:
        fv = np.asarray(f.value(pts), dtype=float)
        mass = float(np.sum(w * fv))
        if mass <= 0:
            raise rules.ZeroMassError("nonpositive mass on the node set")
        return float(np.sum(w * fv**2) / mass)

    def symmetric(p: Field) -> float:
        trace = []
        for t in steps:
            val = (phi(q + t * p) - phi(q + (-t) * p)) / (2.0 * t)
            trace.append((t, val))
        (tp, qp), (tl, ql) = trace[-2], trace[-1]
        r2 = (tp / tl) ** 2
        return (r2 * ql - qp) / (r2 - 1.0)

    margin = cone_check(q, default_cone_spec("quadratic", q.dim), scheme).worst_residual
    cone_note = f"cone margin {margin:.3e}"

    cases: list[CaseResult] = []
    derivs = []
    for i, p in enumerate(directions):
        d = symmetric(p)
        derivs.append(d)
        expected = float(np.sum(w * grad_values * np.asarray(p.value(pts), dtype=float)))
        resid = abs(d - expected)
        note = cone_note if i == 0 else None
        cases.append(CaseResult(f"{prefix}/gradient{i:03d}", resid, tol, resid <= tol, note=note))
    for i in range(len(directions) - 1):
        p, r = directions[i], directions[i + 1]
        resid = abs(symmetric(p + r) - (derivs[i] + derivs[i + 1]))
        cases.append(CaseResult(f"{prefix}/additivity{i:03d}", resid, tol_linear, resid <= tol_linear))
    resid = abs(symmetric(2.0 * directions[0]) - 2.0 * derivs[0])
    cases.append(CaseResult(f"{prefix}/homogeneity", resid, tol_linear, resid <= tol_linear))
    return VerificationReport("gateaux", tuple(cases), seed, scheme or pairing.DEFAULT_SCHEME)


# ---------------------------------------------------------------------------
# suite orchestration
# ---------------------------------------------------------------------------

def _rule_list(rule: str | None) -> tuple[str, ...]:
    if rule is None:
        return rules.RULE_IDS
    return (rules.canonical_rule(rule),)


def _mixture_rules(rule_ids):
    return [r for r in rule_ids if r in ("logarithmic", "hyvarinen", "quadratic")]


def _grid_rules(rule_ids):
    return [r for r in rule_ids if r in ("logarithmic", "quadratic", "supremum")]


def _grid_samples(n: int, seed: int, plateau_every: int = 4) -> list[GridDensity]:
    rng = np.random.default_rng([seed, 7])
    out = []
    for i in range(n):
        if plateau_every and i % plateau_every == plateau_every - 1:
            out.append(sampling.sample_plateau_grid(rng))
        else:
            out.append(sampling.sample_grid_density(rng))
    return out


def _euler_cases(rule_ids, samples, seed, scheme, tol) -> list[CaseResult]:
    cases = []
    n_grid = max(1, (2 * samples) // 5)
    mixtures = [sampling.sample_mixture(np.random.default_rng([seed, 1, k])) for k in range(samples)]
    grids = _grid_samples(n_grid, seed)
    for rule in _mixture_rules(rule_ids):
        for i, q in enumerate(mixtures):
            resid = rules.euler_residual(rule, q, scheme)
            cases.append(CaseResult(f"{rule}/euler/mix{i:03d}", resid, tol, resid <= tol))
    for rule in _grid_rules(rule_ids):
        for i, q in enumerate(grids):
            resid = rules.euler_residual(rule, q, scheme)
            cases.append(CaseResult(f"{rule}/euler/grid{i:03d}", resid, tol, resid <= tol))
    return cases


def _not_strict_witness(seed: int) -> tuple[GridDensity, GridDensity]:
    """p != q sharing one mode plateau, so the supremum divergence vanishes."""
    rng = np.random.default_rng([seed, 11])
    q = sampling.sample_plateau_grid(rng)
    vals = np.asarray(q.values).copy()
    plateau = vals >= np.max(vals) * (1.0 - rules.DELTA_MODE)
    other = 0.4 + 0.4 * np.sin(np.linspace(0.0, 9.0, vals.size)) ** 2
    pv = np.where(plateau, np.max(vals), other)
    return GridDensity(q.lo, q.hi, pv), q


def _propriety_cases(rule_ids, samples, seed, scheme, tol, strict_tol) -> list[CaseResult]:
    cases = []
    mix_pairs = sampling.sample_mixture_pairs(samples, seed)
    grid_pairs = [
        (a, b)
        for a, b in zip(_grid_samples(samples, seed + 1), _grid_samples(samples, seed + 2))
    ]
    for rule in rule_ids:
        pair_set = mix_pairs if rule in ("logarithmic", "hyvarinen", "quadratic") else grid_pairs
        strict_rule = rule != "supremum"
        for i, (p, q) in enumerate(pair_set):
            diagnostics: dict = {}
            div = rules.divergence(rule, p, q, scheme, diagnostics)
            cases.append(
                CaseResult(
                    f"{rule}/propriety/pair{i:03d}",
                    div,
                    tol,
                    div >= -tol,
                    note=diagnostics.get("note"),
                )
            )
            if strict_rule and sampling.normalized_l1_distance(p, q, scheme) >= 0.1:
                cases.append(
                    CaseResult(f"{rule}/propriety/strict{i:03d}", div, strict_tol, div >= strict_tol)
                )
        for i, (p, _) in enumerate(pair_set[: min(10, len(pair_set))]):
            self_div = rules.divergence(rule, p, p, scheme)
            cases.append(
                CaseResult(f"{rule}/propriety/self{i:03d}", abs(self_div), tol, abs(self_div) <= tol)
            )
        if rule == "supremum":
            p, q = _not_strict_witness(seed)
            div = rules.divergence(rule, p, q, scheme)
            separated = sampling.normalized_l1_distance(p, q, scheme) >= 0.1
            cases.append(
                CaseResult(
                    f"{rule}/propriety/not-strict-witness",
                    div,
                    1e-12,
                    separated and abs(div) <= 1e-12,
                    note="distinct densities sharing a mode plateau: proper but not strict",
                )
            )
    return cases


def _score_invariance_residual(rule, q, scheme) -> float:
    if q.grid is not None:
        lo, hi = q.grid.lo, q.grid.hi
        xs = np.linspace(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo), 5)
    else:
        xs = np.array([-1.0, -0.25, 0.0, 0.5, 1.5])
    worst = 0.0
    base = np.asarray(rules.score_at(rule, q, xs, scheme), dtype=float)
    for lam in (0.5, 2.0, 10.0):
        scaled = np.asarray(rules.score_at(rule, lam * q, xs, scheme), dtype=float)
        worst = max(worst, float(np.max(np.abs(scaled - base) / np.maximum(np.abs(base), 1.0))))
    return worst


def _homogeneity_cases(rule_ids, samples, seed, scheme, tol) -> list[CaseResult]:
    cases = []
    n = max(3, min(samples, 12))
    mixtures = [sampling.sample_mixture(np.random.default_rng([seed, 3, k])) for k in range(n)]
    # plateau grids only: the supremum score is undefined in the Dirac regime
    plateaus = _grid_samples(n, seed + 5, plateau_every=1)
    for rule in rule_ids:
        fields = mixtures if rule in ("logarithmic", "hyvarinen", "quadratic") else plateaus
        report = certify_sublinearity(rule, fields, tol=tol, scheme=scheme)
        cases.extend(report.cases)
        for i, q in enumerate(fields[:4]):
            resid = _score_invariance_residual(rule, q, scheme)
            cases.append(CaseResult(f"{rule}/homogeneity/score{i:03d}", resid, tol, resid <= tol))
            mass = q.total_mass(scheme)
            worst = 0.0
            for lam in (0.5, 2.0, 10.0):
                worst = max(worst, abs(pairing.total_mass(lam * q, scheme) - lam * mass) / (lam * mass))
            cases.append(CaseResult(f"{rule}/homogeneity/mass{i:03d}", worst, 1e-10, worst <= 1e-10))
    return cases


def _smooth_direction_sets(q, seed, scheme):
    rng = np.random.default_rng([seed, 17])
    # one-sided directions stay inside the bounded-curvature class at q,
    # otherwise the difference quotients converge too slowly to certify
    p1 = _normalized(sampling.perturbed_mixture(q, rng), scheme)
    p2 = _normalized(sampling.perturbed_mixture(q, rng), scheme)
    qh = _normalized(q, scheme)
    r1 = _normalized(sampling.reweighted_mixture(q, rng), scheme) - qh
    r2 = _normalized(sampling.reweighted_mixture(q, rng), scheme) - qh
    return [p1, p2], [r1, r2]


def _grid_direction_sets(q, seed):
    rng = np.random.default_rng([seed, 19])
    grid = q.grid
    ones = GridDensity(grid.lo, grid.hi, np.ones(grid.n))
    qh = q * (1.0 / q.total_mass())
    extra = sampling.sample_grid_density(rng, grid)
    return [ones, extra], [ones, qh]


def _derivative_cases(rule_ids, samples, seed, scheme, tol_fd) -> list[CaseResult]:
    cases = []
    n_bases = max(1, samples // 10)
    for rule in rule_ids:
        if rule in ("logarithmic", "hyvarinen", "quadratic"):
            bases = [sampling.sample_mixture(np.random.default_rng([seed, 23, k])) for k in range(n_bases)]
        else:
            bases = _grid_samples(n_bases, seed + 13, plateau_every=2)
        for k, q in enumerate(bases):
            if rule in ("logarithmic", "hyvarinen", "quadratic"):
                one_sided, two_sided = _smooth_direction_sets(q, seed + k, scheme)
            else:
                one_sided, two_sided = _grid_direction_sets(q, seed + k)
            report = certify_directional_derivatives(
                rule,
                q,
                one_sided,
                two_sided,
                tol_fd=tol_fd,
                scheme=scheme,
                case_prefix=f"{rule}/derivatives/base{k:02d}",
            )
            cases.extend(report.cases)
    return cases


def _gateaux_directions(rng: np.random.Generator, count: int) -> list[Field]:
    directions: list[Field] = []
    while len(directions) < count:
        kind = len(directions) % 4
        if kind == 0:
            directions.append(
                Bump(rng.uniform(-2.0, 2.0), rng.uniform(0.4, 1.2), rng.uniform(0.1, 0.4))
            )
        elif kind == 1:
            b1 = Bump(rng.uniform(-2.5, 0.0), rng.uniform(0.4, 1.0), rng.uniform(0.1, 0.4))
            b2 = Bump(rng.uniform(0.0, 2.5), rng.uniform(0.3, 0.9), rng.uniform(0.1, 0.3))
            directions.append(b1 - b2)
        elif kind == 2:
            directions.append(Bump(rng.uniform(-1.0, 1.0), rng.uniform(0.5, 1.5), -rng.uniform(0.05, 0.2)))
        else:
            directions.append(sampling.sample_mixture(rng) * rng.uniform(0.05, 0.3))
    return directions


def _gateaux_cases(samples, seed, scheme, tol_fd) -> list[CaseResult]:
    cases = []
    n_bases = min(10, max(1, samples // 5))
    n_dirs = max(4, (2 * samples) // 5)
    for k in range(n_bases):
        rng = np.random.default_rng([seed, 29, k])
        q = sampling.sample_mixture(rng)
        directions = _gateaux_directions(rng, n_dirs)
        report = gateaux_check(
            q,
            directions,
            tol=tol_fd,
            scheme=scheme,
            case_prefix=f"quadratic/gateaux/base{k:02d}",
        )
        cases.extend(report.cases)
    return cases


def run_suite(
    suite: str,
    rule: str | None = None,
    samples: int = 50,
    seed: int = sampling.DEFAULT_SEED,
    scheme: pairing.QuadratureScheme | None = None,
    tol: float | None = None,
) -> VerificationReport:
    """Run a named verification suite and return its report.

    ``suite`` is one of propriety, euler, homogeneity, derivatives,
    gateaux, or all; ``rule`` restricts to one scoring rule (gateaux is
    quadratic-only). ``tol`` overrides the suite's primary tolerance.
    """
    suite = str(suite).lower()
    if suite not in SUITES:
        raise InvalidParameterError(f"unknown suite {suite!r}; expected one of {SUITES}")
    if samples < 1:
        raise InvalidParameterError("samples must be positive")
    rule_ids = _rule_list(rule)
    use_scheme = scheme or pairing.DEFAULT_SCHEME

    cases: list[CaseResult] = []
    if suite in ("euler", "all"):
        cases.extend(_euler_cases(rule_ids, samples, seed, scheme, tol if suite == "euler" and tol else 1e-8))
    if suite in ("propriety", "all"):
        cases.extend(
            _propriety_cases(
                rule_ids,
                samples,
                seed,
                scheme,
                tol if suite == "propriety" and tol else 1e-8,
                1e-6,
            )
        )
    if suite in ("homogeneity", "all"):
        cases.extend(_homogeneity_cases(rule_ids, samples, seed, scheme, tol if suite == "homogeneity" and tol else 1e-8))
    if suite in ("derivatives", "all"):
        cases.extend(_derivative_cases(rule_ids, samples, seed, scheme, tol if suite == "derivatives" and tol else TOL_FD))
    if suite in ("gateaux", "all"):
        if suite == "gateaux" and rule is not None and rules.canonical_rule(rule) != "quadratic":
            raise InvalidParameterError("the gateaux suite applies to the quadratic rule")
        if rule is None or rules.canonical_rule(rule) == "quadratic":
            cases.extend(_gateaux_cases(samples, seed, scheme, tol if suite == "gateaux" and tol else TOL_FD))
    return VerificationReport(suite, tuple(cases), seed, use_scheme)
