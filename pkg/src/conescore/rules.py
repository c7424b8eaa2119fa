"""The four scoring rules: entropies, scores, divergences, mode machinery.

Every rule is exposed in denormalised form: the entropy is 1-homogeneous,
the score is 0-homogeneous, and the divergence of the normalised pair is

    D(p, q) = entropy(p-hat) - expected_score(p-hat, q-hat),

which is nonnegative exactly when the score is a subgradient of the
entropy. Divergences evaluate both densities on one shared node set, so
the logarithmic and quadratic cases reduce to discrete Jensen (or a
discrete squared distance) and are nonnegative to floating point, while
the Hyvarinen case leans on the integration-by-parts identity and the
tail design of :mod:`conescore.pairing`.

The supremum rule lives on grid densities. Its mode set, plateau
subgradient, and Dirac fallback follow the dichotomy between positive-
and zero-measure mode sets; the cell-restricted pairing below is exact
for piecewise-linear densities against the piecewise-constant subgradient,
which is what makes the plateau identities hold to 1e-12 rather than to
grid resolution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar

import numpy as np

from . import pairing
from .densities import Field, GridInfo
from .errors import (
    InvalidParameterError,
    ModeMeasureZeroError,
    UnsupportedFamilyError,
    ZeroDensityError,
    ZeroMassError,
)

__all__ = [
    "RULE_IDS",
    "canonical_rule",
    "DELTA_MODE",
    "LOG_CLAMP",
    "entropy",
    "score_at",
    "expected_score",
    "divergence",
    "hyvarinen_divergence_direct",
    "ModeSet",
    "ModeIndicator",
    "mode_set",
    "sup_subgradient",
    "mode_pairing",
    "euler_residual",
]

RULE_IDS = ("logarithmic", "hyvarinen", "quadratic", "supremum")

_ALIASES = {
    "log": "logarithmic",
    "logarithmic": "logarithmic",
    "hyv": "hyvarinen",
    "hyvarinen": "hyvarinen",
    "quad": "quadratic",
    "quadratic": "quadratic",
    "brier": "quadratic",
    "sup": "supremum",
    "supremum": "supremum",
}

# mode detection tolerance: values within this relative margin of the grid
# maximum count as modal
DELTA_MODE = 1e-9

# floor inside logarithms; clamping where the paired density is above the
# support threshold is flagged, not silently absorbed
LOG_CLAMP = 1e-300


def canonical_rule(name: str) -> str:
    key = str(name).strip().lower()
    if key not in _ALIASES:
        raise InvalidParameterError(f"unknown rule {name!r}; expected one of {sorted(set(_ALIASES))}")
    return _ALIASES[key]


def _require_analytic(q: Field, op: str):
    if q.grid is not None or q.gradient_is_approximate:
        raise UnsupportedFamilyError(f"{op} needs exact derivatives; grid families do not provide them")


def _require_grid(q: Field, op: str) -> GridInfo:
    if q.grid is None:
        raise UnsupportedFamilyError(f"{op} is defined for grid densities")
    return q.grid


def _mass_on(values: np.ndarray, weights: np.ndarray, label: str) -> float:
    mass = float(np.sum(weights * values))
    if not np.isfinite(mass) or mass <= 0:
        raise ZeroMassError(f"{label} has nonpositive mass {mass!r}")
    return mass


def _grad_norm_sq(g, dim: int) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    return g**2 if dim == 1 else (g**2).sum(axis=1)


# ---------------------------------------------------------------------------
# entropies
# ---------------------------------------------------------------------------

def entropy(rule: str, q: Field, scheme: pairing.QuadratureScheme | None = None) -> float:
    """1-homogeneous entropy of the denormalised density ``q``.

    logarithmic: integral of q ln(q/(q.1)); hyvarinen: integral of
    |grad q|^2/q; quadratic: (q.1)^{-1} integral of q^2; supremum: max q
    on the grid.
    """
    rule = canonical_rule(rule)
    if rule == "supremum":
        _require_grid(q, "supremum entropy")
        ns = pairing.nodes_for(q, scheme)
        return float(np.max(np.asarray(q.value(ns.points), dtype=float)))
    if rule == "hyvarinen":
        _require_analytic(q, "hyvarinen entropy")
    ns = pairing.nodes_for(q, scheme)
    qv = np.asarray(q.value(ns.points), dtype=float)
    mass = _mass_on(qv, ns.weights, "q")
    if rule == "logarithmic":
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(qv > 0, qv * np.log(np.maximum(qv, LOG_CLAMP) / mass), 0.0)
        return float(np.sum(ns.weights * terms))
    if rule == "hyvarinen":
        g2 = _grad_norm_sq(q.gradient(ns.points), q.dim)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(qv > 0, g2 / np.maximum(qv, LOG_CLAMP), 0.0)
        return float(np.sum(ns.weights * terms))
    return float(np.sum(ns.weights * qv**2) / mass)


# ---------------------------------------------------------------------------
# scores
# ---------------------------------------------------------------------------

def _log_score(q: Field, x, mass: float):
    qx = np.asarray(q.value(x), dtype=float)
    if np.any(qx <= 0):
        raise ZeroDensityError("logarithmic score undefined where q vanishes")
    return np.log(qx / mass)


def _hyvarinen_score(q: Field, x):
    qx = np.asarray(q.value(x), dtype=float)
    if np.any(qx <= 0):
        raise ZeroDensityError("hyvarinen score undefined where q vanishes")
    g2 = _grad_norm_sq(q.gradient(x), q.dim)
    lap = np.asarray(q.laplacian(x), dtype=float)
    return -2.0 * lap / qx + g2 / qx**2


def score_at(rule: str, q: Field, x, scheme: pairing.QuadratureScheme | None = None):
    """Score function of ``q`` evaluated at point(s) ``x``; 0-homogeneous.

    The supremum rule returns the plateau subgradient value at ``x`` and
    raises :class:`ModeMeasureZeroError` in the Dirac regime.
    """
    rule = canonical_rule(rule)
    if rule == "logarithmic":
        return _log_score(q, x, q.total_mass(scheme))
    if rule == "hyvarinen":
        _require_analytic(q, "hyvarinen score")
        return _hyvarinen_score(q, x)
    if rule == "quadratic":
        ns = pairing.nodes_for(q, scheme)
        qv = np.asarray(q.value(ns.points), dtype=float)
        mass = _mass_on(qv, ns.weights, "q")
        q2 = float(np.sum(ns.weights * qv**2))
        return 2.0 * np.asarray(q.value(x), dtype=float) / mass - q2 / mass**2
    return sup_subgradient(q).value(x)


# ---------------------------------------------------------------------------
# mode machinery for the supremum rule
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeSet:
    """Where a grid density attains its maximum, as closed grid cells.

    ``region`` lists merged intervals of cells whose *both* endpoints are
    within the relative tolerance of the maximum; ``measure`` is their
    total length. An isolated modal point contributes no cell, so a strict
    unimodal peak has measure zero (the Dirac regime).
    """

    region: tuple
    measure: float
    height: float
    argmax: float
    cells: tuple
    grid: GridInfo


def mode_set(q: Field, delta_mode: float = DELTA_MODE) -> ModeSet:
    """Mode cells of a grid density within relative tolerance ``delta_mode``."""
    grid = _require_grid(q, "mode_set")
    if not 0 < delta_mode < 1:
        raise InvalidParameterError("delta_mode must lie in (0, 1)")
    pts = grid.points()
    vals = np.asarray(q.value(pts), dtype=float)
    vmax = float(np.max(vals))
    if vmax <= 0:
        raise ZeroMassError("grid density has no positive values")
    modal = vals >= vmax * (1.0 - delta_mode)
    cells = np.flatnonzero(modal[:-1] & modal[1:])
    measure = grid.spacing * cells.size
    region: list[tuple[float, float]] = []
    for i in cells:
        lo, hi = pts[i], pts[i + 1]
        if region and np.isclose(region[-1][1], lo):
            region[-1] = (region[-1][0], float(hi))
        else:
            region.append((float(lo), float(hi)))
    return ModeSet(
        region=tuple(region),
        measure=float(measure),
        height=vmax,
        argmax=float(pts[int(np.argmax(vals))]),
        cells=tuple(int(i) for i in cells),
        grid=grid,
    )


@dataclass(frozen=True, eq=False)
class ModeIndicator(Field):
    """Plateau subgradient 1_M / mu(M) of the supremum entropy."""

    mode: ModeSet

    dim = 1

    def __post_init__(self):
        if self.mode.measure <= 0:
            raise ModeMeasureZeroError(
                "mode set has measure zero; the supremum entropy has no "
                "density-integrable subgradient there (Dirac regime)"
            )

    @property
    def grid(self) -> GridInfo:
        return self.mode.grid

    def value(self, x):
        a = np.asarray(x, dtype=float)
        scalar = a.ndim == 0
        pts = np.atleast_1d(a)
        inside = np.zeros(pts.shape, dtype=bool)
        for lo, hi in self.mode.region:
            inside |= (pts >= lo) & (pts <= hi)
        vals = np.where(inside, 1.0 / self.mode.measure, 0.0)
        return float(vals[0]) if scalar else vals

    def gradient(self, x):
        raise UnsupportedFamilyError("mode indicators have no gradient")

    def laplacian(self, x):
        raise UnsupportedFamilyError("mode indicators have no Laplacian")

    def core_radius(self) -> float:
        return float(max(abs(self.mode.grid.lo), abs(self.mode.grid.hi)))

    def tail_mass_bound(self, radius: float) -> float:
        return 0.0


def sup_subgradient(q: Field, delta_mode: float = DELTA_MODE) -> ModeIndicator:
    """Subgradient of the supremum entropy at a grid density.

    Only exists when the mode set has positive measure; a measure-zero
    mode set raises :class:`ModeMeasureZeroError`, mirroring the
    nonexistence of a density-integrable subgradient in that regime.
    """
    return ModeIndicator(mode_set(q, delta_mode))


def mode_pairing(p: Field, mode: ModeSet) -> float:
    """Raw pairing p . (1_M / mu(M)) by cell-restricted trapezoid.

    Exact for the piecewise-linear grid interpolant of ``p`` against the
    piecewise-constant subgradient: the result is a convex combination of
    node values of ``p``, which is what makes q.q* = max q and
    p.q* <= max p hold to floating point.
    """
    if mode.measure <= 0:
        raise ModeMeasureZeroError("mode set has measure zero; no pairing is defined")
    grid = _require_grid(p, "mode_pairing")
    if grid != mode.grid:
        raise InvalidParameterError("p and the mode set live on different grids")
    vals = np.asarray(p.value(grid.points()), dtype=float)
    cells = np.asarray(mode.cells, dtype=int)
    cell_means = 0.5 * (vals[cells] + vals[cells + 1])
    return float(grid.spacing * np.sum(cell_means) / mode.measure)


# ---------------------------------------------------------------------------
# expectations and divergences on shared node sets
# ---------------------------------------------------------------------------

def _shared_nodes(p: Field, q: Field, scheme) -> pairing.NodeSet:
    return pairing.nodes_for(p + q, scheme)


def _sup_expected(p: Field, q: Field, diagnostics: dict | None) -> float:
    """Normalised sup expectation: plateau pairing, or Dirac fallback."""
    grid = _require_grid(q, "supremum expected score")
    if _require_grid(p, "supremum expected score") != grid:
        raise InvalidParameterError("p and q live on different grids")
    pts = grid.points()
    pv = np.asarray(p.value(pts), dtype=float)
    ns = pairing.nodes_for(p, None)
    mp = _mass_on(pv, ns.weights, "p")
    mode = mode_set(q)
    if mode.measure > 0:
        return mode_pairing(p, mode) / mp
    if diagnostics is not None:
        diagnostics["dirac"] = True
        diagnostics["note"] = "measure-zero mode set: point evaluation p(x0), not P-integrable"
    return float(np.interp(mode.argmax, pts, pv)) / mp


def expected_score(
    rule: str,
    p: Field,
    q: Field,
    scheme: pairing.QuadratureScheme | None = None,
    diagnostics: dict | None = None,
) -> float:
    """Expected score p-hat . S(q-hat), reported per unit mass of ``p``.

    Both densities are evaluated on one shared node set. ``diagnostics``
    (a dict, mutated in place) collects the log-clamp flag and the Dirac
    flag of the supremum rule.
    """
    rule = canonical_rule(rule)
    if rule == "supremum":
        return _sup_expected(p, q, diagnostics)
    if rule == "hyvarinen":
        _require_analytic(q, "hyvarinen expected score")
    ns = _shared_nodes(p, q, scheme)
    pv = np.asarray(p.value(ns.points), dtype=float)
    qv = np.asarray(q.value(ns.points), dtype=float)
    mp = _mass_on(pv, ns.weights, "p")
    mq = _mass_on(qv, ns.weights, "q")
    if rule == "logarithmic":
        clamped = qv < LOG_CLAMP
        if diagnostics is not None and bool(np.any(clamped & (np.abs(pv) > pairing.SUPPORT_THRESHOLD * mp))):
            diagnostics["log_clamped"] = True
        scores = np.log(np.maximum(qv, LOG_CLAMP) / mq)
        terms = np.where(pv != 0, pv * scores, 0.0)
        return float(np.sum(ns.weights * terms) / mp)
    if rule == "hyvarinen":
        g2 = _grad_norm_sq(q.gradient(ns.points), q.dim)
        lap = np.asarray(q.laplacian(ns.points), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.where(qv > 0, -2.0 * lap / np.maximum(qv, LOG_CLAMP) + g2 / np.maximum(qv, LOG_CLAMP) ** 2, np.inf)
        bad = ~np.isfinite(scores) & (np.abs(pv) > pairing.SUPPORT_THRESHOLD * mp)
        if np.any(bad):
            raise ZeroDensityError("hyvarinen score blows up where p has support")
        terms = np.where(np.isfinite(scores) & (pv != 0), pv * np.where(np.isfinite(scores), scores, 0.0), 0.0)
        return float(np.sum(ns.weights * terms) / mp)
    q2 = float(np.sum(ns.weights * qv**2))
    scores = 2.0 * qv / mq - q2 / mq**2
    return float(np.sum(ns.weights * pv * scores) / mp)


def divergence(
    rule: str,
    p: Field,
    q: Field,
    scheme: pairing.QuadratureScheme | None = None,
    diagnostics: dict | None = None,
) -> float:
    """Divergence D(p, q) = entropy(p-hat) - p-hat . S(q-hat), on shared nodes.

    Nonnegative for all four rules; zero at p = q and, for the strict
    rules, only at positively collinear pairs.
    """
    rule = canonical_rule(rule)
    if rule == "supremum":
        grid = _require_grid(q, "supremum divergence")
        if _require_grid(p, "supremum divergence") != grid:
            raise InvalidParameterError("p and q live on different grids")
        pv = np.asarray(p.value(grid.points()), dtype=float)
        ns = pairing.nodes_for(p, None)
        mp = _mass_on(pv, ns.weights, "p")
        return float(np.max(pv) / mp) - _sup_expected(p, q, diagnostics)
    if rule == "hyvarinen":
        _require_analytic(p, "hyvarinen divergence")
        _require_analytic(q, "hyvarinen divergence")
    ns = _shared_nodes(p, q, scheme)
    w = ns.weights
    pv = np.asarray(p.value(ns.points), dtype=float)
    qv = np.asarray(q.value(ns.points), dtype=float)
    mp = _mass_on(pv, w, "p")
    mq = _mass_on(qv, w, "q")
    ph = pv / mp
    qh = qv / mq
    if rule == "logarithmic":
        clamped = qh < LOG_CLAMP
        if diagnostics is not None and bool(np.any(clamped & (ph > pairing.SUPPORT_THRESHOLD))):
            diagnostics["log_clamped"] = True
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(ph > 0, ph * (np.log(np.maximum(ph, LOG_CLAMP)) - np.log(np.maximum(qh, LOG_CLAMP))), 0.0)
        return float(np.sum(w * terms))
    if rule == "quadratic":
        return float(np.sum(w * (ph - qh) ** 2))
    gp2 = _grad_norm_sq(p.gradient(ns.points), p.dim)
    gq2 = _grad_norm_sq(q.gradient(ns.points), q.dim)
    laq = np.asarray(q.laplacian(ns.points), dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi_terms = np.where(pv > 0, gp2 / np.maximum(pv, LOG_CLAMP), 0.0)
        score_q = np.where(qv > 0, -2.0 * laq / np.maximum(qv, LOG_CLAMP) + gq2 / np.maximum(qv, LOG_CLAMP) ** 2, np.inf)
    bad = ~np.isfinite(score_q) & (ph > pairing.SUPPORT_THRESHOLD)
    if np.any(bad):
        raise ZeroDensityError("hyvarinen score blows up where p has support")
    cross = np.where(np.isfinite(score_q) & (pv != 0), pv * np.where(np.isfinite(score_q), score_q, 0.0), 0.0)
    return float(np.sum(w * phi_terms) / mp - np.sum(w * cross) / mp)


def hyvarinen_divergence_direct(
    p: Field,
    q: Field,
    scheme: pairing.QuadratureScheme | None = None,
) -> float:
    """Fisher divergence: integral of |grad p/p - grad q/q|^2 p-hat.

    Must agree with divergence('hyvarinen', p, q) up to the surface term;
    the agreement is the integration-by-parts identity.
    """
    _require_analytic(p, "fisher divergence")
    _require_analytic(q, "fisher divergence")
    ns = _shared_nodes(p, q, scheme)
    pv = np.asarray(p.value(ns.points), dtype=float)
    qv = np.asarray(q.value(ns.points), dtype=float)
    mp = _mass_on(pv, ns.weights, "p")
    gp = np.asarray(p.gradient(ns.points), dtype=float)
    gq = np.asarray(q.gradient(ns.points), dtype=float)
    live = (pv > 0) & (qv > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        sp = gp / np.maximum(pv, LOG_CLAMP)[..., None] if p.dim == 2 else gp / np.maximum(pv, LOG_CLAMP)
        sq = gq / np.maximum(qv, LOG_CLAMP)[..., None] if q.dim == 2 else gq / np.maximum(qv, LOG_CLAMP)
    diff2 = _grad_norm_sq(sp - sq, p.dim)
    terms = np.where(live, pv * np.where(np.isfinite(diff2), diff2, 0.0), 0.0)
    return float(np.sum(ns.weights * terms) / mp)


# ---------------------------------------------------------------------------
# Euler identity
# ---------------------------------------------------------------------------

def euler_residual(rule: str, q: Field, scheme: pairing.QuadratureScheme | None = None) -> float:
    """Relative Euler residual |q.S(q) - entropy(q)| / |entropy(q)|.

    Pairs score and entropy on the same node set, so the residual measures
    the homogeneous-function identity, not quadrature disagreement. For
    the supremum rule the pairing is the cell-restricted one (plateau
    regime) or the Dirac evaluation q(x0) (measure-zero regime); both
    reproduce max q.
    """
    rule = canonical_rule(rule)
    phi = entropy(rule, q, scheme)
    if rule == "supremum":
        mode = mode_set(q)
        paired = mode_pairing(q, mode) if mode.measure > 0 else float(
            np.interp(mode.argmax, mode.grid.points(), np.asarray(q.value(mode.grid.points()), dtype=float))
        )
        return abs(paired - phi) / abs(phi)
    ns = pairing.nodes_for(q, scheme)
    qv = np.asarray(q.value(ns.points), dtype=float)
    mass = _mass_on(qv, ns.weights, "q")
    if rule == "logarithmic":
        with np.errstate(divide="ignore", invalid="ignore"):
            sv = np.log(np.maximum(qv, LOG_CLAMP) / mass)
        paired = float(np.sum(ns.weights * np.where(qv > 0, qv * sv, 0.0)))
    elif rule == "hyvarinen":
        g2 = _grad_norm_sq(q.gradient(ns.points), q.dim)
        lap = np.asarray(q.laplacian(ns.points), dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            sv = np.where(qv > 0, -2.0 * lap / np.maximum(qv, LOG_CLAMP) + g2 / np.maximum(qv, LOG_CLAMP) ** 2, 0.0)
        paired = float(np.sum(ns.weights * qv * sv))
    else:
        q2 = float(np.sum(ns.weights * qv**2))
        sv = 2.0 * qv / mass - q2 / mass**2
        paired = float(np.sum(ns.weights * qv * sv))
    denom = abs(phi) if abs(phi) > 0 else 1.0
    return abs(paired - phi) / denom
