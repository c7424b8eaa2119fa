"""Denormalised predictive densities, prediction cones, and direction probes.

A *field* is a scalar function on R^d (d = 1 or 2) or on a 1-D grid box,
exposing pointwise value, gradient, and Laplacian where the family supports
them. Fields form a real vector space via ``+``, ``-`` and scalar ``*``;
the nonnegative members with family metadata are the densities, and signed
combinations serve as directions for the derivative machinery.

Densities are deliberately *denormalised*: the cone of positive scalings is
the natural home of the entropy calculus, where entropies extend
1-homogeneously and scores 0-homogeneously. ``extend_entropy`` and
``extend_score`` implement exactly those extensions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Callable, ClassVar, NamedTuple, Sequence

import numpy as np
from scipy import special

from .errors import (
    ConeMembershipError,
    DomainError,
    InvalidParameterError,
    UnsupportedFamilyError,
    ZeroMassError,
)

__all__ = [
    "Field",
    "Combination",
    "GaussianDensity",
    "MixtureDensity",
    "PowerLawDensity",
    "GridField",
    "GridDensity",
    "Bump",
    "GridInfo",
    "ConeSpec",
    "ShannonEnvelope",
    "HyvarinenGrowth",
    "QuadraticNorm",
    "GridPositive",
    "ConeWitness",
    "ConeReport",
    "DirectionProbe",
    "make_density",
    "density_from_config",
    "cone_spec_from_config",
    "default_cone_spec",
    "cone_check",
    "feasible_direction",
    "extend_entropy",
    "extend_score",
    "probe_points",
    "DEFAULT_EPSILON_SCHEDULE",
]

# Values below this are treated as numerically indistinguishable from zero
# when forming ratios like grad/value at far-tail probe points.
_RATIO_FLOOR = 1e-280


class GridInfo(NamedTuple):
    """Identity of a uniform 1-D grid; fields sharing it are combinable."""

    lo: float
    hi: float
    n: int

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    def points(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)


def _as_points(x, dim: int) -> tuple[np.ndarray, bool]:
    """Normalise point input to shape (n, dim); report whether it was scalar-like."""
    a = np.asarray(x, dtype=float)
    if dim == 1:
        scalar = a.ndim == 0
        return np.atleast_1d(a).reshape(-1, 1), scalar
    if a.ndim == 1:
        if a.shape[0] != dim:
            raise InvalidParameterError(f"expected a point in R^{dim}, got shape {a.shape}")
        return a.reshape(1, dim), True
    if a.ndim == 2 and a.shape[1] == dim:
        return a, False
    raise InvalidParameterError(f"expected points of shape (n, {dim}), got {a.shape}")


def _squeeze(values: np.ndarray, scalar: bool):
    return float(values[0]) if scalar else values


class Field:
    """Scalar field on R^d with optional derivatives and decay metadata."""

    dim: int = 1
    gradient_is_approximate: ClassVar[bool] = False

    # -- pointwise evaluation -------------------------------------------------
    def value(self, x):
        raise NotImplementedError

    def gradient(self, x):
        raise NotImplementedError

    def laplacian(self, x):
        raise NotImplementedError

    # -- quadrature metadata --------------------------------------------------
    @property
    def grid(self) -> GridInfo | None:
        return None

    def core_radius(self) -> float:
        """Truncation radius capturing the bulk of |field| mass."""
        raise NotImplementedError

    def tail_mass_bound(self, radius: float) -> float:
        """Analytic upper bound on the |field| mass beyond ``radius``."""
        raise NotImplementedError

    # -- vector-space structure -----------------------------------------------
    def terms(self) -> tuple[tuple[float, "Field"], ...]:
        return ((1.0, self),)

    def scaled(self, c: float) -> "Field":
        return Combination((float(c),), (self,))

    def __add__(self, other: "Field") -> "Field":
        return Combination((1.0, 1.0), (self, other))

    def __sub__(self, other: "Field") -> "Field":
        return Combination((1.0, -1.0), (self, other))

    def __mul__(self, c) -> "Field":
        return self.scaled(c)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return self.scaled(-1.0)

    # -- mass -----------------------------------------------------------------
    def total_mass(self, scheme=None) -> float:
        """Total mass (this . 1) by quadrature, cached per scheme."""
        from . import pairing  # deferred: pairing depends on this module

        key = scheme if scheme is not None else pairing.DEFAULT_SCHEME
        cache = self.__dict__.setdefault("_mass_cache", {})
        if key not in cache:
            cache[key] = pairing.total_mass(self, scheme=key)
        return cache[key]


class Combination(Field):
    """Finite linear combination of fields (flattened, signed)."""

    def __init__(self, coeffs: Sequence[float], fields: Sequence[Field]):
        if len(coeffs) != len(fields):
            raise InvalidParameterError("coeffs and fields must have equal length")
        flat_c: list[float] = []
        flat_f: list[Field] = []
        for c, f in zip(coeffs, fields):
            for ci, fi in f.terms():
                flat_c.append(float(c) * ci)
                flat_f.append(fi)
        if not flat_f:
            raise InvalidParameterError("empty combination")
        dims = {f.dim for f in flat_f}
        if len(dims) != 1:
            raise InvalidParameterError(f"mixed dimensions in combination: {sorted(dims)}")
        grids = {f.grid for f in flat_f if f.grid is not None}
        if len(grids) > 1:
            raise InvalidParameterError("combination mixes incompatible grids")
        self.coeffs = tuple(flat_c)
        self.fields = tuple(flat_f)
        self.dim = flat_f[0].dim
        self._grid = grids.pop() if grids else None

    @property
    def grid(self) -> GridInfo | None:
        return self._grid

    @property
    def gradient_is_approximate(self) -> bool:  # type: ignore[override]
        return any(f.gradient_is_approximate for f in self.fields)

    def terms(self):
        return tuple(zip(self.coeffs, self.fields))

    def _accumulate(self, op: str, x):
        total = None
        for c, f in zip(self.coeffs, self.fields):
            part = c * np.asarray(getattr(f, op)(x), dtype=float)
            total = part if total is None else total + part
        return total

    def value(self, x):
        return self._accumulate("value", x)

    def gradient(self, x):
        return self._accumulate("gradient", x)

    def laplacian(self, x):
        return self._accumulate("laplacian", x)

    def core_radius(self) -> float:
        return max(f.core_radius() for f in self.fields)

    def tail_mass_bound(self, radius: float) -> float:
        return sum(abs(c) * f.tail_mass_bound(radius) for c, f in zip(self.coeffs, self.fields))


def _validate_positive(name: str, value: float):
    if not np.isfinite(value) or value <= 0:
        raise InvalidParameterError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True, eq=False)
class GaussianDensity(Field):
    """Gaussian with diagonal covariance, scaled by a positive factor."""

    mean: np.ndarray
    var: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        var = np.asarray(self.var, dtype=float)
        if var.ndim == 0:
            var = np.full_like(mean, float(var))
        if mean.shape != var.shape or mean.ndim != 1:
            raise InvalidParameterError("mean and var must be vectors of equal length")
        if mean.size not in (1, 2):
            raise InvalidParameterError("only dimensions 1 and 2 are supported")
        if not np.all(np.isfinite(mean)):
            raise InvalidParameterError("mean must be finite")
        if not np.all(np.isfinite(var)) or np.any(var <= 0):
            raise InvalidParameterError("var must be positive and finite")
        _validate_positive("scale", self.scale)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "dim", mean.size)

    def _values(self, pts: np.ndarray) -> np.ndarray:
        z2 = (pts - self.mean) ** 2 / self.var
        norm = np.prod(np.sqrt(2.0 * np.pi * self.var))
        return (self.scale / norm) * np.exp(-0.5 * z2.sum(axis=1))

    def value(self, x):
        pts, scalar = _as_points(x, self.dim)
        return _squeeze(self._values(pts), scalar)

    def gradient(self, x):
        pts, scalar = _as_points(x, self.dim)
        g = self._values(pts)[:, None] * (-(pts - self.mean) / self.var)
        if self.dim == 1:
            g = g[:, 0]
        return _squeeze(g, scalar) if self.dim == 1 else (g[0] if scalar else g)

    def laplacian(self, x):
        pts, scalar = _as_points(x, self.dim)
        z = (pts - self.mean) / self.var
        lap = self._values(pts) * ((z**2).sum(axis=1) - (1.0 / self.var).sum())
        return _squeeze(lap, scalar)

    def core_radius(self) -> float:
        sigma = np.sqrt(self.var)
        return float(max(8.0, np.max(6.0 * sigma + np.abs(self.mean))))

    def tail_mass_bound(self, radius: float) -> float:
        sigma = np.sqrt(self.var)
        z = (radius - np.abs(self.mean)) / (sigma * np.sqrt(2.0))
        z = np.maximum(z, 0.0)
        return float(self.scale * np.sum(special.erfc(z)))


@dataclass(frozen=True, eq=False)
class MixtureDensity(Field):
    """Positive combination of Gaussians; weights need not sum to one."""

    components: tuple
    weights: tuple
    scale: float = 1.0

    def __post_init__(self):
        comps = tuple(self.components)
        weights = tuple(float(w) for w in self.weights)
        if not comps:
            raise InvalidParameterError("mixture needs at least one component")
        if len(comps) != len(weights):
            raise InvalidParameterError("components and weights must have equal length")
        if any(not isinstance(c, GaussianDensity) for c in comps):
            raise InvalidParameterError("mixture components must be GaussianDensity")
        if any(not np.isfinite(w) or w <= 0 for w in weights):
            raise InvalidParameterError("weights must be positive and finite")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise InvalidParameterError("mixture components must share a dimension")
        _validate_positive("scale", self.scale)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "dim", comps[0].dim)

    def _combine(self, op: str, x):
        total = None
        for w, c in zip(self.weights, self.components):
            part = (self.scale * w) * np.asarray(getattr(c, op)(x), dtype=float)
            total = part if total is None else total + part
        return total

    def value(self, x):
        return self._combine("value", x)

    def gradient(self, x):
        return self._combine("gradient", x)

    def laplacian(self, x):
        return self._combine("laplacian", x)

    def core_radius(self) -> float:
        return max(c.core_radius() for c in self.components)

    def tail_mass_bound(self, radius: float) -> float:
        return self.scale * sum(w * c.tail_mass_bound(radius) for w, c in zip(self.weights, self.components))


@dataclass(frozen=True, eq=False)
class PowerLawDensity(Field):
    """Normalised density proportional to (1 + |x|^2)^(-beta/2), scaled.

    Requires beta > dim for integrability. beta = 2 in dimension 1 is the
    Cauchy density.
    """

    beta: float
    dim: int = 1
    scale: float = 1.0

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidParameterError("only dimensions 1 and 2 are supported")
        if not np.isfinite(self.beta) or self.beta <= self.dim:
            raise InvalidParameterError(f"beta must exceed the dimension {self.dim}, got {self.beta!r}")
        _validate_positive("scale", self.scale)
        object.__setattr__(self, "_norm", self._normaliser())

    def _normaliser(self) -> float:
        b = float(self.beta)
        if self.dim == 1:
            return math.exp(0.5 * math.log(math.pi) + special.gammaln((b - 1) / 2) - special.gammaln(b / 2))
        return 2.0 * math.pi / (b - 2.0)

    def _values(self, pts: np.ndarray) -> np.ndarray:
        r2 = (pts**2).sum(axis=1)
        return (self.scale / self._norm) * (1.0 + r2) ** (-0.5 * self.beta)

    def value(self, x):
        pts, scalar = _as_points(x, self.dim)
        return _squeeze(self._values(pts), scalar)

    def gradient(self, x):
        pts, scalar = _as_points(x, self.dim)
        r2 = (pts**2).sum(axis=1)
        g = self._values(pts)[:, None] * (-self.beta * pts / (1.0 + r2)[:, None])
        if self.dim == 1:
            return _squeeze(g[:, 0], scalar)
        return g[0] if scalar else g

    def laplacian(self, x):
        pts, scalar = _as_points(x, self.dim)
        r2 = (pts**2).sum(axis=1)
        b, d = self.beta, self.dim
        factor = (b**2 + 2.0 * b) * r2 / (1.0 + r2) ** 2 - b * d / (1.0 + r2)
        return _squeeze(self._values(pts) * factor, scalar)

    def core_radius(self) -> float:
        return 8.0

    def tail_mass_bound(self, radius: float) -> float:
        # beyond radius >= 1 the kernel is bounded by |x|^(-beta)
        r = max(radius, 1.0)
        b = self.beta
        if self.dim == 1:
            return 2.0 * self.scale * r ** (1.0 - b) / (self._norm * (b - 1.0))
        return 2.0 * math.pi * self.scale * r ** (2.0 - b) / (self._norm * (b - 2.0))


@dataclass(frozen=True, eq=False)
class GridField(Field):
    """Signed values on a uniform 1-D grid; evaluation interpolates linearly.

    Gradients come from central differences and are flagged approximate;
    there is no Laplacian (sampled values carry no trustworthy curvature).
    """

    lo: float
    hi: float
    values: np.ndarray

    gradient_is_approximate: ClassVar[bool] = True
    dim = 1

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 2:
            raise InvalidParameterError("grid values must be a 1-D array with at least two points")
        if not np.all(np.isfinite(values)):
            raise InvalidParameterError("grid values must be finite")
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and self.hi > self.lo):
            raise InvalidParameterError("grid domain must satisfy lo < hi")
        object.__setattr__(self, "values", values)

    @property
    def grid(self) -> GridInfo:
        return GridInfo(float(self.lo), float(self.hi), int(self.values.size))

    def _check_domain(self, pts: np.ndarray):
        eps = 1e-12 * (self.hi - self.lo)
        outside = (pts < self.lo - eps) | (pts > self.hi + eps)
        if np.any(outside):
            bad = float(pts[outside][0])
            raise DomainError(f"point {bad} outside grid domain [{self.lo}, {self.hi}]")

    def value(self, x):
        pts, scalar = _as_points(x, 1)
        self._check_domain(pts)
        vals = np.interp(pts[:, 0], self.grid.points(), self.values)
        return _squeeze(vals, scalar)

    def gradient(self, x):
        pts, scalar = _as_points(x, 1)
        self._check_domain(pts)
        slopes = np.gradient(self.values, self.grid.spacing)
        vals = np.interp(pts[:, 0], self.grid.points(), slopes)
        return _squeeze(vals, scalar)

    def laplacian(self, x):
        raise UnsupportedFamilyError("grid fields expose no Laplacian")

    def core_radius(self) -> float:
        return float(max(abs(self.lo), abs(self.hi)))

    def tail_mass_bound(self, radius: float) -> float:
        return 0.0

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(self.lo, self.hi, values)


class GridDensity(GridField):
    """Nonnegative grid field with at least one strictly positive value."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.values < 0):
            raise InvalidParameterError("grid density values must be nonnegative")
        if not np.any(self.values > 0):
            raise InvalidParameterError("grid density must be positive somewhere")


@dataclass(frozen=True, eq=False)
class Bump(Field):
    """Compactly supported polynomial bump a*(1 - u^2)^2, u = |x - c|/h.

    Twice continuously differentiable with closed-form gradient and
    Laplacian; the natural sign-changing direction for interior probes.
    """

    center: np.ndarray
    halfwidth: float
    amplitude: float = 1.0

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        if center.size not in (1, 2):
            raise InvalidParameterError("only dimensions 1 and 2 are supported")
        _validate_positive("halfwidth", self.halfwidth)
        if not np.isfinite(self.amplitude) or self.amplitude == 0:
            raise InvalidParameterError("amplitude must be finite and nonzero")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "dim", center.size)

    def _u2(self, pts: np.ndarray) -> np.ndarray:
        return ((pts - self.center) ** 2).sum(axis=1) / self.halfwidth**2

    def value(self, x):
        pts, scalar = _as_points(x, self.dim)
        u2 = self._u2(pts)
        vals = np.where(u2 < 1.0, self.amplitude * (1.0 - u2) ** 2, 0.0)
        return _squeeze(vals, scalar)

    def gradient(self, x):
        pts, scalar = _as_points(x, self.dim)
        u2 = self._u2(pts)
        inside = (u2 < 1.0)[:, None]
        g = np.where(
            inside,
            -4.0 * self.amplitude * (1.0 - u2)[:, None] * (pts - self.center) / self.halfwidth**2,
            0.0,
        )
        if self.dim == 1:
            return _squeeze(g[:, 0], scalar)
        return g[0] if scalar else g

    def laplacian(self, x):
        pts, scalar = _as_points(x, self.dim)
        u2 = self._u2(pts)
        d = self.dim
        lap = np.where(u2 < 1.0, -4.0 * self.amplitude / self.halfwidth**2 * (d - (d + 2.0) * u2), 0.0)
        return _squeeze(lap, scalar)

    def exact_mass(self) -> float:
        """Closed-form integral of the bump over R^d."""
        if self.dim == 1:
            return self.amplitude * self.halfwidth * 16.0 / 15.0
        return self.amplitude * math.pi * self.halfwidth**2 / 3.0

    def total_mass(self, scheme=None) -> float:
        # the closed form beats quadrature: panel edges rarely align with
        # the support edges, where the third derivative jumps
        return self.exact_mass()

    def core_radius(self) -> float:
        return float(np.max(np.abs(self.center)) + self.halfwidth)

    def tail_mass_bound(self, radius: float) -> float:
        return 0.0 if radius >= self.core_radius() else abs(self.amplitude) * self.exact_mass() / max(abs(self.amplitude), 1.0)


# ---------------------------------------------------------------------------
# construction from configs
# ---------------------------------------------------------------------------

def make_density(family: str, scale: float = 1.0, **params) -> Field:
    """Build a density of the named family and cache its total mass.

    Parameters
    ----------
    family : {'gaussian', 'mixture', 'power_law', 'grid'}
    scale : positive float
        Denormalisation factor multiplying the whole density.
    **params : family parameters
        gaussian: ``mean`` (number or vector), ``var`` (positive number or
        vector). mixture: ``components`` (list of dicts with mean/var),
        ``weights`` (positive list). power_law: ``beta`` (> dim), optional
        ``dim``. grid: ``domain`` ([lo, hi]), ``values`` (nonnegative list).
    """
    family = str(family).lower()
    if family == "gaussian":
        q: Field = GaussianDensity(params["mean"], params["var"], scale=scale)
    elif family == "mixture":
        comps = tuple(
            GaussianDensity(c["mean"], c["var"]) if isinstance(c, dict) else c
            for c in params["components"]
        )
        q = MixtureDensity(comps, tuple(params["weights"]), scale=scale)
    elif family == "power_law":
        q = PowerLawDensity(params["beta"], dim=int(params.get("dim", 1)), scale=scale)
    elif family == "grid":
        lo, hi = params["domain"]
        values = scale * np.asarray(params["values"], dtype=float)
        q = GridDensity(float(lo), float(hi), values)
    else:
        raise InvalidParameterError(f"unknown density family {family!r}")
    q.total_mass()
    return q


def density_from_config(config: dict) -> Field:
    """Build a density from its JSON-style config dict."""
    if not isinstance(config, dict) or "family" not in config:
        raise InvalidParameterError("density config must be a dict with a 'family' key")
    cfg = dict(config)
    family = cfg.pop("family")
    scale = cfg.pop("scale", 1.0)
    try:
        return make_density(family, scale=scale, **cfg)
    except KeyError as exc:
        raise InvalidParameterError(f"density config missing field {exc}") from exc


# ---------------------------------------------------------------------------
# prediction cones
# ---------------------------------------------------------------------------

def probe_points(dim: int = 1) -> np.ndarray:
    """Default cone-check probe grid: a dense core plus dyadic tail points."""
    radii = np.unique(np.concatenate([np.linspace(0.0, 20.0, 201), 2.0 ** np.arange(0, 11)]))
    if dim == 1:
        return np.unique(np.concatenate([-radii[::-1], radii]))
    angles = np.arange(8) * (np.pi / 4.0)
    pts = [np.zeros((1, 2))]
    for r in radii[1:]:
        pts.append(np.column_stack([r * np.cos(angles), r * np.sin(angles)]))
    return np.vstack(pts)


@dataclass(frozen=True)
class ShannonEnvelope:
    """Power-law envelope cone: c1*(1+|x|)^(-a) <= q-hat <= c2*(1+|x|)^(-(d+1))."""

    a: float
    c1: float
    c2: float
    dim: int = 1
    probes: tuple | None = None
    kind: ClassVar[str] = "shannon_envelope"

    def __post_init__(self):
        _validate_positive("c1", self.c1)
        _validate_positive("c2", self.c2)
        if self.a < self.dim + 1:
            raise InvalidParameterError(f"decay exponent a must be >= dim+1 = {self.dim + 1}")


@dataclass(frozen=True)
class HyvarinenGrowth:
    """Growth cone: |grad q/q| + |lap q/q| <= c1*(1+|x|)^k and
    q-hat <= c2*(1+|x|)^(-(d+1+k^2))."""

    c1: float
    k: float
    c2: float
    dim: int = 1
    probes: tuple | None = None
    kind: ClassVar[str] = "hyvarinen_growth"

    def __post_init__(self):
        _validate_positive("c1", self.c1)
        _validate_positive("c2", self.c2)
        _validate_positive("k", self.k)


@dataclass(frozen=True)
class QuadraticNorm:
    """Weighted-L2 annulus cone: k1 - eps < ||q-hat||_{2,w} < k2 + eps
    with weight (1+|x|)^(dim+1); delta is the perturbation-ball radius."""

    k1: float
    k2: float
    delta: float = 0.05
    eps: float = 0.05
    dim: int = 1
    probes: tuple | None = None
    kind: ClassVar[str] = "quadratic_norm"

    def __post_init__(self):
        _validate_positive("k1", self.k1)
        _validate_positive("k2", self.k2)
        _validate_positive("delta", self.delta)
        if self.k2 < self.k1:
            raise InvalidParameterError("k2 must be >= k1")
        if not 0 < self.eps < min(1.0, self.k1):
            raise InvalidParameterError("eps must lie in (0, min(1, k1))")


@dataclass(frozen=True)
class GridPositive:
    """Grid cone: values nonnegative everywhere, positive somewhere."""

    dim: int = 1
    probes: tuple | None = None
    kind: ClassVar[str] = "grid_positive"


ConeSpec = ShannonEnvelope | HyvarinenGrowth | QuadraticNorm | GridPositive


def cone_spec_from_config(config: dict) -> ConeSpec:
    cfg = dict(config)
    kind = str(cfg.pop("kind", "")).lower()
    table = {
        "shannon_envelope": ShannonEnvelope,
        "hyvarinen_growth": HyvarinenGrowth,
        "quadratic_norm": QuadraticNorm,
        "grid_positive": GridPositive,
    }
    if kind not in table:
        raise InvalidParameterError(f"unknown cone kind {config.get('kind')!r}")
    if "probes" in cfg and cfg["probes"] is not None:
        cfg["probes"] = tuple(cfg["probes"])
    try:
        return table[kind](**cfg)
    except TypeError as exc:
        raise InvalidParameterError(f"bad cone spec fields: {exc}") from exc


def default_cone_spec(rule: str, dim: int = 1) -> ConeSpec:
    """Report-only default cone for each rule.

    The constants are generous enough to contain the seeded sampling
    families where the rule's cone admits them at all; Gaussians are *not*
    inside any power-law lower envelope, and the default Shannon cone
    reports that honestly.
    """
    rule = str(rule)
    if rule == "logarithmic":
        return ShannonEnvelope(a=dim + 1, c1=1e-8, c2=1e3, dim=dim)
    if rule == "hyvarinen":
        return HyvarinenGrowth(c1=200.0, k=2.0, c2=1e5, dim=dim)
    if rule == "quadratic":
        return QuadraticNorm(k1=0.1, k2=10.0, delta=0.05, eps=0.05, dim=dim)
    if rule == "supremum":
        return GridPositive(dim=dim)
    raise InvalidParameterError(f"unknown rule {rule!r}")


@dataclass(frozen=True)
class ConeWitness:
    point: tuple
    constraint: str
    lhs: float
    rhs: float


@dataclass(frozen=True)
class ConeReport:
    member: bool
    worst_residual: float
    witnesses: tuple
    checked: int


_MAX_WITNESSES = 8


# relative allowance on cone inequalities: envelopes chosen to touch the
# density with equality must not fail membership over float rounding
_CONE_RTOL = 1e-9


def _collect(slack: np.ndarray, pts: np.ndarray, constraint: str, lhs: np.ndarray, rhs: np.ndarray):
    """Turn a slack array into (worst slack, witnesses for negative entries).

    Slack is measured with a ``_CONE_RTOL`` relative allowance against the
    magnitude of the two sides.
    """
    tol = _CONE_RTOL * (np.abs(lhs) + np.abs(rhs))
    adjusted = slack + tol
    worst = float(np.min(adjusted)) if adjusted.size else 0.0
    witnesses = []
    bad = np.argsort(adjusted)[: _MAX_WITNESSES]
    for i in bad:
        if adjusted[i] >= 0:
            break
        point = tuple(np.atleast_1d(pts[i]).tolist())
        witnesses.append(ConeWitness(point, constraint, float(lhs[i]), float(rhs[i])))
    return worst, witnesses


def cone_check(q: Field, spec: ConeSpec, scheme=None) -> ConeReport:
    """Check the cone inequalities for ``q`` on the spec's probe grid.

    Membership is tested with the spec's own constants against the
    normalised density, so the verdict is invariant under positive scaling
    of ``q``. The report never raises; violations come back as witnesses
    with the worst (most negative) slack.
    """
    from . import pairing

    if isinstance(spec, GridPositive):
        if q.grid is None:
            raise InvalidParameterError("grid_positive cone applies to grid fields")
        vals = np.asarray(q.value(q.grid.points()))
        slack = vals.copy()
        worst, witnesses = _collect(slack, q.grid.points(), "nonnegative", vals, np.zeros_like(vals))
        member = worst >= 0 and bool(np.any(vals > 0))
        if not np.any(vals > 0):
            witnesses = list(witnesses) + [ConeWitness((q.grid.lo,), "somewhere_positive", 0.0, 0.0)]
            worst = min(worst, -1.0)
        return ConeReport(member, worst, tuple(witnesses), vals.size)

    mass = q.total_mass(scheme)
    if not np.isfinite(mass) or mass <= 0:
        return ConeReport(False, -float("inf"), (ConeWitness((), "positive_mass", mass, 0.0),), 0)

    if isinstance(spec, QuadraticNorm):
        norm = pairing.weighted_norm(q.scaled(1.0 / mass), spec.dim + 1, scheme=scheme)
        lo, hi = spec.k1 - spec.eps, spec.k2 + spec.eps
        tol = _CONE_RTOL * (abs(norm) + max(abs(lo), abs(hi)))
        slack = np.array([norm - lo + tol, hi - norm + tol])
        witnesses = []
        if slack[0] < 0:
            witnesses.append(ConeWitness((), "norm_lower", norm, lo))
        if slack[1] < 0:
            witnesses.append(ConeWitness((), "norm_upper", norm, hi))
        worst = float(slack.min())
        return ConeReport(worst >= 0, worst, tuple(witnesses), 1)

    pts = np.asarray(spec.probes, dtype=float) if spec.probes is not None else probe_points(spec.dim)
    if spec.dim == 1 and pts.ndim == 1:
        pts_eval: np.ndarray = pts
        radii = np.abs(pts)
    else:
        pts_eval = pts
        radii = np.sqrt((pts**2).sum(axis=1))
    vhat = np.asarray(q.value(pts_eval), dtype=float) / mass

    worsts: list[float] = []
    witnesses: list[ConeWitness] = []
    if isinstance(spec, ShannonEnvelope):
        lower = spec.c1 * (1.0 + radii) ** (-spec.a)
        upper = spec.c2 * (1.0 + radii) ** (-(spec.dim + 1.0))
        w, ws = _collect(vhat - lower, pts, "lower_envelope", vhat, lower)
        worsts.append(w)
        witnesses += ws
        w, ws = _collect(upper - vhat, pts, "upper_envelope", vhat, upper)
        worsts.append(w)
        witnesses += ws
    elif isinstance(spec, HyvarinenGrowth):
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.asarray(q.value(pts_eval), dtype=float)
            grads = np.asarray(q.gradient(pts_eval), dtype=float)
            laps = np.asarray(q.laplacian(pts_eval), dtype=float)
            gnorm = np.abs(grads) if spec.dim == 1 else np.sqrt((grads**2).sum(axis=1))
            ratio = np.where(vals > _RATIO_FLOOR, (gnorm + np.abs(laps)) / np.maximum(vals, _RATIO_FLOOR), 0.0)
        growth = spec.c1 * (1.0 + radii) ** spec.k
        w, ws = _collect(growth - ratio, pts, "growth", ratio, growth)
        worsts.append(w)
        witnesses += ws
        upper = spec.c2 * (1.0 + radii) ** (-(spec.dim + 1.0 + spec.k**2))
        w, ws = _collect(upper - vhat, pts, "upper_envelope", vhat, upper)
        worsts.append(w)
        witnesses += ws
    else:  # pragma: no cover - exhaustive over spec kinds
        raise InvalidParameterError(f"unknown cone spec {spec!r}")

    worst = min(worsts)
    return ConeReport(worst >= 0, worst, tuple(witnesses[:_MAX_WITNESSES]), int(vhat.size))


def require_cone(q: Field, spec: ConeSpec, scheme=None):
    """Strict-mode gate: raise when ``q`` fails its cone check."""
    report = cone_check(q, spec, scheme=scheme)
    if not report.member:
        first = report.witnesses[0] if report.witnesses else None
        raise ConeMembershipError(
            f"density fails {spec.kind} cone check (worst residual {report.worst_residual:.3e}"
            + (f" at {first.point} [{first.constraint}]" if first else "")
            + ")"
        )
    return report


# ---------------------------------------------------------------------------
# feasible directions
# ---------------------------------------------------------------------------

DEFAULT_EPSILON_SCHEDULE = tuple(2.0**k for k in range(1, -13, -1))


@dataclass(frozen=True)
class DirectionProbe:
    """Feasibility record for a signed direction at a base density.

    ``epsilon`` is the largest tested step with base + epsilon*direction
    nonnegative at the probe points and inside the cone (0.0 when no step
    works); ``two_sided`` reports whether the reversed direction is also
    feasible at some tested step.
    """

    base: Field
    direction: Field
    epsilon: float
    two_sided: bool


def _largest_feasible(q: Field, r: Field, spec: ConeSpec, schedule, scheme) -> float:
    if isinstance(spec, GridPositive):
        pts = q.grid.points() if q.grid is not None else probe_points(1)
    elif spec.probes is not None:
        pts = np.asarray(spec.probes, dtype=float)
    else:
        pts = probe_points(spec.dim)
    for eps in schedule:
        candidate = q + float(eps) * r
        vals = np.asarray(candidate.value(pts), dtype=float)
        if np.any(vals < 0):
            continue
        if cone_check(candidate, spec, scheme=scheme).member:
            return float(eps)
    return 0.0


def feasible_direction(
    q: Field,
    r: Field,
    spec: ConeSpec,
    schedule: Sequence[float] = DEFAULT_EPSILON_SCHEDULE,
    scheme=None,
) -> DirectionProbe:
    """Scan a decreasing step schedule for cone-feasibility of ``q + eps*r``.

    Returns a :class:`DirectionProbe`; an everywhere-infeasible direction
    yields epsilon = 0.0 rather than an error, so callers can report it.
    """
    schedule = tuple(float(e) for e in schedule)
    if not schedule or any(e <= 0 for e in schedule) or any(
        schedule[i] <= schedule[i + 1] for i in range(len(schedule) - 1)
    ):
        raise InvalidParameterError("epsilon schedule must be positive and strictly decreasing")
    eps_plus = _largest_feasible(q, r, spec, schedule, scheme)
    eps_minus = _largest_feasible(q, -r, spec, schedule, scheme)
    return DirectionProbe(q, r, eps_plus, eps_plus > 0 and eps_minus > 0)


# ---------------------------------------------------------------------------
# homogeneous extensions
# ---------------------------------------------------------------------------

def extend_entropy(phi_normalized: Callable[[Field], float], q: Field, scheme=None) -> float:
    """1-homogeneous extension: (q.1) * phi(q / (q.1))."""
    mass = q.total_mass(scheme)
    if not np.isfinite(mass) or mass <= 0:
        raise ZeroMassError(f"total mass must be positive, got {mass!r}")
    return mass * phi_normalized(q.scaled(1.0 / mass))


def extend_score(score_normalized: Callable[[Field], Callable], q: Field, scheme=None) -> Callable:
    """0-homogeneous extension: the score of q / (q.1); scale-invariant."""
    mass = q.total_mass(scheme)
    if not np.isfinite(mass) or mass <= 0:
        raise ZeroMassError(f"total mass must be positive, got {mass!r}")
    return score_normalized(q.scaled(1.0 / mass))
