"""Deterministic quadrature: the bilinear pairing, masses, norms, surface terms.

Every integral in the toolkit reduces to a weighted sum over a *node set*
that is a pure function of the quadrature scheme and the field's decay
metadata. Fixing the nodes first is what makes the discrete convexity
identities (propriety, Euler, quotient monotonicity) hold to floating-point
accuracy rather than to quadrature accuracy: once the node set is frozen,
the toolkit is doing exact convex analysis on a finite measure space.

Analytic families integrate by composite Gauss-Legendre on a core box plus
dyadic tail shells; grid families use the trapezoid rule on their native
grid, which is all the information they carry.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .densities import Field
from .errors import (
    DivergenceError,
    IntegrandSingularityError,
    InvalidParameterError,
    NodeBudgetError,
    ZeroDensityError,
)

__all__ = [
    "QuadratureScheme",
    "NodeSet",
    "DEFAULT_SCHEME",
    "nodes_for",
    "pair",
    "total_mass",
    "weighted_norm",
    "boundary_term",
    "SUPPORT_THRESHOLD",
]

# |p| above this counts as genuine support when deciding whether a
# non-finite integrand value matters.
SUPPORT_THRESHOLD = 1e-12

# hard ceiling on nodes per set; d=2 tensor grids hit this first
_NODE_BUDGET = 6_000_000

# geometric tail shells stop extending once the remaining mass bound drops
# below tail_tol times this safety factor
_TAIL_SAFETY = 0.1

_MAX_SHELLS = 400


@dataclass(frozen=True)
class QuadratureScheme:
    """Deterministic quadrature recipe.

    Parameters
    ----------
    rule : {'gauss_legendre_composite', 'trapezoid'}
        Grid fields always integrate by trapezoid on their native grid
        regardless of this setting; the rule applies to analytic families.
    panels : int
        Panels per unit length on the core box, and panels per side on
        each dyadic tail shell.
    nodes : int
        Gauss-Legendre nodes per panel.
    radius : float or None
        Core truncation radius; None derives it from the field's decay
        metadata.
    tail_tol : float
        Tail shells extend until the field's analytic tail-mass bound
        falls below a safety fraction of this tolerance.
    """

    rule: str = "gauss_legendre_composite"
    panels: int = 16
    nodes: int = 8
    radius: float | None = None
    tail_tol: float = 1e-10

    def __post_init__(self):
        if self.rule not in ("gauss_legendre_composite", "trapezoid"):
            raise InvalidParameterError(f"unknown quadrature rule {self.rule!r}")
        if int(self.panels) < 1 or int(self.nodes) < 1:
            raise InvalidParameterError("panels and nodes must be positive integers")
        if self.radius is not None and not self.radius > 0:
            raise InvalidParameterError("radius must be positive when given")
        if not self.tail_tol > 0:
            raise InvalidParameterError("tail_tol must be positive")
        object.__setattr__(self, "panels", int(self.panels))
        object.__setattr__(self, "nodes", int(self.nodes))
        object.__setattr__(self, "radius", None if self.radius is None else float(self.radius))
        object.__setattr__(self, "tail_tol", float(self.tail_tol))


DEFAULT_SCHEME = QuadratureScheme()


class NodeSet(NamedTuple):
    """Quadrature nodes and weights; points have shape (n,) or (n, 2)."""

    points: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=64)
def _leggauss(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def _panel_nodes(lo: float, hi: float, panels: int, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [lo, hi]."""
    x, w = _leggauss(nodes)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts


def _core_radius(field: Field, scheme: QuadratureScheme) -> float:
    r = scheme.radius if scheme.radius is not None else field.core_radius()
    if not np.isfinite(r) or r <= 0:
        raise InvalidParameterError(f"core radius must be positive and finite, got {r!r}")
    return float(r)


def _shell_edges(field: Field, radius: float, tail_tol: float) -> list[tuple[float, float]]:
    """Dyadic shells [R 2^k, R 2^(k+1)] until the tail-mass bound is negligible."""
    shells: list[tuple[float, float]] = []
    r = radius
    for _ in range(_MAX_SHELLS):
        if field.tail_mass_bound(r) < tail_tol * _TAIL_SAFETY:
            return shells
        shells.append((r, 2.0 * r))
        r *= 2.0
    raise DivergenceError(
        f"tail-mass bound still {field.tail_mass_bound(r):.3e} after {_MAX_SHELLS} dyadic shells"
    )


def _line_nodes(field: Field, scheme: QuadratureScheme) -> NodeSet:
    radius = _core_radius(field, scheme)
    core_panels = max(1, int(np.ceil(2.0 * radius * scheme.panels)))
    pts, wts = _panel_nodes(-radius, radius, core_panels, scheme.nodes)
    parts_p = [pts]
    parts_w = [wts]
    for lo, hi in _shell_edges(field, radius, scheme.tail_tol):
        for a, b in ((lo, hi), (-hi, -lo)):
            sp, sw = _panel_nodes(a, b, scheme.panels, scheme.nodes)
            parts_p.append(sp)
            parts_w.append(sw)
    points = np.concatenate(parts_p)
    weights = np.concatenate(parts_w)
    order = np.argsort(points)
    return NodeSet(points[order], weights[order])


def _box_nodes(field: Field, scheme: QuadratureScheme) -> NodeSet:
    radius = _core_radius(field, scheme)
    if scheme.radius is None:
        for _ in range(_MAX_SHELLS):
            if field.tail_mass_bound(radius) < scheme.tail_tol * _TAIL_SAFETY:
                break
            radius *= 2.0
        else:
            raise DivergenceError("tail-mass bound does not decay under radius doubling")
    panels = max(1, int(np.ceil(2.0 * radius * scheme.panels)))
    per_axis = panels * scheme.nodes
    if per_axis**2 > _NODE_BUDGET:
        raise NodeBudgetError(
            f"tensor grid would need {per_axis**2:,} nodes (budget {_NODE_BUDGET:,}); "
            "pass a scheme with fewer panels or nodes, or a smaller radius"
        )
    pts1, wts1 = _panel_nodes(-radius, radius, panels, scheme.nodes)
    xx, yy = np.meshgrid(pts1, pts1, indexing="ij")
    points = np.column_stack([xx.ravel(), yy.ravel()])
    weights = np.outer(wts1, wts1).ravel()
    return NodeSet(points, weights)


def _grid_nodes(field: Field) -> NodeSet:
    grid = field.grid
    pts = grid.points()
    wts = np.full(grid.n, grid.spacing)
    wts[0] *= 0.5
    wts[-1] *= 0.5
    return NodeSet(pts, wts)


def nodes_for(field: Field, scheme: QuadratureScheme | None = None) -> NodeSet:
    """Node set for integrals against ``field``; pure in (scheme, metadata).

    Two fields with the same decay metadata get identical nodes, and a
    combination's nodes cover every term, so pairing different fields on
    ``nodes_for(p + q, scheme)`` puts them on one shared discrete measure.
    """
    scheme = scheme or DEFAULT_SCHEME
    if field.grid is not None:
        return _grid_nodes(field)
    if scheme.rule == "trapezoid":
        radius = _core_radius(field, scheme)
        n = max(2, int(np.ceil(2.0 * radius * scheme.panels * scheme.nodes)) + 1)
        pts = np.linspace(-radius, radius, n)
        wts = np.full(n, pts[1] - pts[0])
        wts[0] *= 0.5
        wts[-1] *= 0.5
        return NodeSet(pts, wts)
    if field.dim == 1:
        return _line_nodes(field, scheme)
    return _box_nodes(field, scheme)


def _integrand_values(f, points: np.ndarray) -> np.ndarray:
    values = f.value(points) if isinstance(f, Field) else f(points)
    return np.asarray(values, dtype=float)


def pair(f, p: Field, scheme: QuadratureScheme | None = None, nodes: NodeSet | None = None) -> float:
    """Bilinear pairing p.f = integral of f(x) p(x) dx on p's node set.

    ``f`` is a field or a callable on node arrays. Non-finite values of
    ``f`` are tolerated where ``|p|`` is below the support threshold (the
    measure-zero convention 0*inf = 0); above it they raise
    :class:`IntegrandSingularityError` naming the offending node.
    """
    ns = nodes if nodes is not None else nodes_for(p, scheme)
    pv = np.asarray(p.value(ns.points), dtype=float)
    fv = _integrand_values(f, ns.points)
    if fv.shape != pv.shape:
        raise InvalidParameterError(f"integrand returned shape {fv.shape}, expected {pv.shape}")
    bad = ~np.isfinite(fv)
    if bad.any():
        live = bad & (np.abs(pv) > SUPPORT_THRESHOLD)
        if live.any():
            node = ns.points[np.argmax(live)]
            raise IntegrandSingularityError(
                f"non-finite integrand at node {node} where |p| > {SUPPORT_THRESHOLD:g}",
                node=node,
            )
        fv = np.where(bad, 0.0, fv)
    return float(np.sum(ns.weights * fv * pv))


def total_mass(p: Field, scheme: QuadratureScheme | None = None) -> float:
    """Total mass p.1 on p's node set."""
    ns = nodes_for(p, scheme)
    pv = np.asarray(p.value(ns.points), dtype=float)
    return float(np.sum(ns.weights * pv))


def _weight_values(points: np.ndarray, m: float) -> np.ndarray:
    r = np.abs(points) if points.ndim == 1 else np.sqrt((points**2).sum(axis=1))
    return (1.0 + r) ** m


def weighted_norm(
    f,
    m: float,
    domain: tuple[float, float] | None = None,
    scheme: QuadratureScheme | None = None,
) -> float:
    """Weighted L2 norm (integral of f(x)^2 (1+|x|)^m dx)^(1/2).

    With an explicit compact ``domain`` the integral is taken there and
    cannot diverge. Without one, ``f`` must be a field; the core integral
    extends through dyadic shells until contributions are negligible, and
    shells that keep growing raise :class:`DivergenceError`.
    """
    scheme = scheme or DEFAULT_SCHEME
    if not m > 0:
        raise InvalidParameterError("weight exponent m must be positive")

    def chunk(points: np.ndarray, weights: np.ndarray) -> float:
        fv = _integrand_values(f, points)
        return float(np.sum(weights * fv**2 * _weight_values(points, m)))

    if domain is not None:
        lo, hi = float(domain[0]), float(domain[1])
        if not hi > lo:
            raise InvalidParameterError("domain must satisfy lo < hi")
        panels = max(1, int(np.ceil((hi - lo) * scheme.panels)))
        pts, wts = _panel_nodes(lo, hi, panels, scheme.nodes)
        return float(np.sqrt(chunk(pts, wts)))

    if not isinstance(f, Field):
        raise InvalidParameterError("weighted_norm of a bare callable needs an explicit domain")
    if f.grid is not None:
        ns = _grid_nodes(f)
        return float(np.sqrt(chunk(ns.points, ns.weights)))
    if f.dim != 1:
        ns = nodes_for(f, scheme)
        return float(np.sqrt(chunk(ns.points, ns.weights)))

    radius = _core_radius(f, scheme)
    core_panels = max(1, int(np.ceil(2.0 * radius * scheme.panels)))
    pts, wts = _panel_nodes(-radius, radius, core_panels, scheme.nodes)
    total = chunk(pts, wts)
    previous = np.inf
    growth_streak = 0
    r = radius
    for _ in range(_MAX_SHELLS):
        contribution = 0.0
        for a, b in ((r, 2.0 * r), (-2.0 * r, -r)):
            sp, sw = _panel_nodes(a, b, scheme.panels, scheme.nodes)
            contribution += chunk(sp, sw)
        total += contribution
        if contribution <= scheme.tail_tol * max(total, scheme.tail_tol):
            return float(np.sqrt(total))
        growth_streak = growth_streak + 1 if contribution >= previous else 0
        if growth_streak >= 3:
            raise DivergenceError(
                f"weighted norm grows with radius (shell at R={r:g} contributed {contribution:.3e})"
            )
        previous = contribution
        r *= 2.0
    raise DivergenceError(f"weighted norm did not settle within {_MAX_SHELLS} dyadic shells")


def boundary_term(p: Field, q: Field, radius: float) -> float:
    """Surface term (1/R) * sum over y in {-R, R} of (y q'(y)/q(y)) p(y).

    Certifies that the integration-by-parts surface contribution vanishes
    as the truncation radius grows. Defined for d = 1 only.
    """
    if p.dim != 1 or q.dim != 1:
        raise InvalidParameterError("boundary_term is defined for d = 1")
    if not radius > 0:
        raise InvalidParameterError("radius must be positive")
    ys = np.array([-radius, radius])
    qv = np.asarray(q.value(ys), dtype=float)
    if np.any(qv <= 0) or np.any(qv < 1e-280):
        raise ZeroDensityError(f"q vanishes at the boundary points +-{radius:g}")
    qg = np.asarray(q.gradient(ys), dtype=float)
    pv = np.asarray(p.value(ys), dtype=float)
    return float(np.sum(ys * qg / qv * pv) / radius)
