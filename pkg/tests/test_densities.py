"""Density families, field algebra, cone checks, and homogeneous extensions."""

import numpy as np
import pytest

from conescore import densities, pairing
from conescore.densities import (
    Bump,
    GaussianDensity,
    GridDensity,
    GridField,
    GridInfo,
    MixtureDensity,
    PowerLawDensity,
    cone_check,
    cone_spec_from_config,
    default_cone_spec,
    density_from_config,
    extend_entropy,
    extend_score,
    feasible_direction,
    make_density,
    require_cone,
)
from conescore.errors import (
    ConeMembershipError,
    DomainError,
    InvalidParameterError,
    UnsupportedFamilyError,
    ZeroMassError,
)


def fd_gradient(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def fd_laplacian(f, x, h=1e-4):
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / h**2


# ---------------------------------------------------------------------------
# analytic families
# ---------------------------------------------------------------------------

def test_gaussian_value_matches_closed_form():
    q = GaussianDensity(1.0, 4.0)
    x = np.array([-1.0, 0.0, 2.5])
    expected = np.exp(-0.5 * (x - 1.0) ** 2 / 4.0) / np.sqrt(8.0 * np.pi)
    np.testing.assert_allclose(q.value(x), expected, rtol=1e-14)


@pytest.mark.parametrize("family", [
    GaussianDensity(0.5, 0.8),
    PowerLawDensity(3.0),
    MixtureDensity((GaussianDensity(-1.0, 0.5), GaussianDensity(1.5, 2.0)), (0.3, 0.9)),
    Bump(0.2, 0.6, 1.3),
])
def test_gradient_and_laplacian_match_finite_differences(family):
    for x in (-0.7, 0.1, 0.9):
        np.testing.assert_allclose(
            family.gradient(x), fd_gradient(family.value, x), rtol=1e-6, atol=1e-9
        )
        np.testing.assert_allclose(
            family.laplacian(x), fd_laplacian(family.value, x), rtol=1e-4, atol=1e-6
        )


def test_gaussian_total_mass_equals_scale():
    assert GaussianDensity(0.0, 1.0, scale=2.5).total_mass() == pytest.approx(2.5, abs=1e-12)


def test_mixture_total_mass_is_weight_sum():
    q = MixtureDensity((GaussianDensity(0.0, 1.0), GaussianDensity(1.0, 0.5)), (0.4, 1.1))
    assert q.total_mass() == pytest.approx(1.5, abs=1e-10)


def test_power_law_is_normalised():
    assert PowerLawDensity(2.0).total_mass() == pytest.approx(1.0, abs=1e-9)
    assert PowerLawDensity(2.0).value(0.0) == pytest.approx(1.0 / np.pi, rel=1e-12)


def test_power_law_requires_integrable_exponent():
    with pytest.raises(InvalidParameterError):
        PowerLawDensity(1.0)
    with pytest.raises(InvalidParameterError):
        PowerLawDensity(2.0, dim=2)


def test_bump_mass_closed_form():
    b = Bump(0.3, 0.25, 1.7)
    assert b.total_mass() == pytest.approx(16.0 * 1.7 * 0.25 / 15.0, abs=1e-12)
    assert b.value(np.array([0.3 + 0.3])) == 0.0  # outside the support


def test_invalid_gaussian_parameters():
    with pytest.raises(InvalidParameterError):
        GaussianDensity(0.0, 0.0)
    with pytest.raises(InvalidParameterError):
        GaussianDensity(0.0, -1.0)
    with pytest.raises(InvalidParameterError):
        MixtureDensity((GaussianDensity(0.0, 1.0),), (-0.5,))


# ---------------------------------------------------------------------------
# field algebra
# ---------------------------------------------------------------------------

def test_combination_evaluates_linearly():
    p = GaussianDensity(0.0, 1.0)
    q = GaussianDensity(1.0, 2.0)
    combo = 2.0 * p - q
    x = np.array([-0.5, 0.0, 1.2])
    np.testing.assert_allclose(combo.value(x), 2.0 * p.value(x) - q.value(x), rtol=1e-14)
    np.testing.assert_allclose(
        combo.gradient(x), 2.0 * p.gradient(x) - q.gradient(x), rtol=1e-14
    )


def test_combination_flattens_nested_terms():
    p = GaussianDensity(0.0, 1.0)
    q = GaussianDensity(1.0, 2.0)
    combo = (p + q) + 0.5 * (p - q)
    flat_fields = [f for _, f in combo.terms()]
    assert all(not hasattr(f, "terms") or f in (p, q) for f in flat_fields)
    assert combo.value(0.3) == pytest.approx(1.5 * p.value(0.3) + 0.5 * q.value(0.3))


def test_combination_rejects_mixed_dimensions():
    p = GaussianDensity(0.0, 1.0)
    q2 = GaussianDensity([0.0, 0.0], 1.0)
    with pytest.raises(InvalidParameterError):
        _ = p + q2


def test_combination_rejects_mismatched_grids():
    a = GridDensity(0.0, 1.0, np.ones(11))
    b = GridDensity(0.0, 2.0, np.ones(11))
    with pytest.raises(InvalidParameterError):
        _ = a + b


def test_total_mass_cache_reuses_value():
    q = GaussianDensity(0.0, 1.0)
    first = q.total_mass()
    assert q.total_mass() is first or q.total_mass() == first


# ---------------------------------------------------------------------------
# grid fields
# ---------------------------------------------------------------------------

def test_grid_interpolation_and_domain_error():
    g = GridDensity(0.0, 1.0, np.linspace(1.0, 2.0, 11))
    assert g.value(0.05) == pytest.approx(1.05, abs=1e-12)
    with pytest.raises(DomainError):
        g.value(1.5)
    with pytest.raises(UnsupportedFamilyError):
        g.laplacian(0.5)


def test_grid_density_must_be_nonnegative_somewhere_positive():
    with pytest.raises(InvalidParameterError):
        GridDensity(0.0, 1.0, np.array([1.0, -0.1, 1.0]))
    with pytest.raises(InvalidParameterError):
        GridDensity(0.0, 1.0, np.zeros(5))
    # signed values are fine for a plain field
    GridField(0.0, 1.0, np.array([1.0, -0.1, 1.0]))


def test_grid_info_spacing_and_points():
    info = GridInfo(0.0, 1.0, 5)
    assert info.spacing == pytest.approx(0.25)
    np.testing.assert_allclose(info.points(), [0.0, 0.25, 0.5, 0.75, 1.0])


# ---------------------------------------------------------------------------
# configuration parsing
# ---------------------------------------------------------------------------

def test_density_from_config_round_trip():
    q = density_from_config({"family": "gaussian", "mean": 0.5, "var": 2.0})
    assert isinstance(q, GaussianDensity)
    m = density_from_config(
        {
            "family": "mixture",
            "components": [
                {"mean": 0.0, "var": 1.0},
                {"mean": 1.0, "var": 0.5},
            ],
            "weights": [0.5, 0.5],
        }
    )
    assert isinstance(m, MixtureDensity)
    g = density_from_config({"family": "grid", "domain": [0, 1], "values": [1, 2, 1]})
    assert isinstance(g, GridDensity)
    c = density_from_config({"family": "power_law", "beta": 2.0})
    assert isinstance(c, PowerLawDensity)


def test_density_from_config_rejects_unknown_family():
    with pytest.raises((InvalidParameterError, UnsupportedFamilyError)):
        density_from_config({"family": "tribonacci"})
    with pytest.raises(InvalidParameterError):
        density_from_config({"mean": 0.0})


def test_make_density_matches_config_layer():
    q = make_density("gaussian", mean=0.0, var=1.0)
    assert q.value(0.0) == pytest.approx(1.0 / np.sqrt(2.0 * np.pi))


# ---------------------------------------------------------------------------
# cones
# ---------------------------------------------------------------------------

def test_gaussian_fails_polynomial_envelope():
    # Gaussian tails sink below any polynomial lower envelope
    report = cone_check(GaussianDensity(0.0, 1.0), default_cone_spec("logarithmic", 1))
    assert not report.member
    assert report.witnesses
    assert all(abs(w.point[0]) > 5.0 for w in report.witnesses)


def test_cauchy_passes_polynomial_envelope():
    spec = cone_spec_from_config(
        {"kind": "shannon_envelope", "a": 2, "c1": 1.0 / (2.0 * np.pi), "c2": 2.0 / np.pi}
    )
    report = cone_check(PowerLawDensity(2.0), spec)
    assert report.member, report.witnesses[:3]


def test_gaussians_inside_growth_cone():
    spec = default_cone_spec("hyvarinen", 1)
    assert cone_check(GaussianDensity(0.0, 1.0), spec).member
    assert cone_check(GaussianDensity(-1.5, 3.0), spec).member


def test_cone_check_is_scale_invariant():
    spec = default_cone_spec("hyvarinen", 1)
    q = GaussianDensity(0.0, 1.0)
    assert cone_check(q * 1000.0, spec).member == cone_check(q, spec).member


def test_require_cone_raises_with_witness():
    with pytest.raises(ConeMembershipError):
        require_cone(GaussianDensity(0.0, 1.0), default_cone_spec("logarithmic", 1))


def test_grid_positive_cone():
    spec = default_cone_spec("supremum", 1)
    assert cone_check(GridDensity(0.0, 1.0, np.ones(9)), spec).member
    # zeros are allowed as long as the density is positive somewhere
    partial = GridDensity(0.0, 1.0, np.concatenate([np.zeros(4), np.ones(5)]))
    assert cone_check(partial, spec).member
    signed = GridField(0.0, 1.0, np.array([1.0, -0.2, 1.0]))
    assert not cone_check(signed, spec).member


def test_quadratic_cone_spec_validation():
    with pytest.raises(InvalidParameterError):
        cone_spec_from_config({"kind": "quadratic_norm", "k1": 0.1, "k2": 10.0, "delta": 0.05, "eps": 0.5})
    with pytest.raises(InvalidParameterError):
        cone_spec_from_config({"kind": "shannon_envelope", "a": 1, "c1": 1e-8, "c2": 1e3})


# ---------------------------------------------------------------------------
# directions and extensions
# ---------------------------------------------------------------------------

def test_feasible_direction_mixture_path():
    q = GaussianDensity(0.0, 1.0)
    p = GaussianDensity(0.5, 1.5)
    probe = feasible_direction(q, p - q, default_cone_spec("hyvarinen", 1))
    assert probe.epsilon > 0.0


def test_feasible_direction_reports_infeasible():
    # a deficit deep enough to defeat the whole epsilon schedule
    q = GaussianDensity(0.0, 1.0)
    bad = Bump(0.0, 0.5, -1e7)
    probe = feasible_direction(q, bad, default_cone_spec("hyvarinen", 1))
    assert probe.epsilon == 0.0
    assert not probe.two_sided


def test_gaussian_tail_breaks_power_law_feasibility():
    # adding a Gaussian deficit under a polynomial envelope fails in the tail
    q = PowerLawDensity(2.0)
    spec = cone_spec_from_config(
        {"kind": "shannon_envelope", "a": 2, "c1": 1.0 / (2.0 * np.pi), "c2": 2.0 / np.pi}
    )
    probe = feasible_direction(q, GaussianDensity(0.0, 1.0) - q, spec)
    assert probe.epsilon == 0.0


def test_extend_entropy_is_one_homogeneous():
    q = GaussianDensity(0.3, 1.2)

    def phi_hat(d):  # normalized Shannon entropy
        ns = pairing.nodes_for(d)
        v = np.asarray(d.value(ns.points), dtype=float)
        mass = float(np.sum(ns.weights * v))
        vn = v / mass
        return float(np.sum(ns.weights * np.where(vn > 0, vn * np.log(np.where(vn > 0, vn, 1.0)), 0.0)))

    base = extend_entropy(phi_hat, q)
    scaled = extend_entropy(phi_hat, q * 3.0)
    assert scaled == pytest.approx(3.0 * base, rel=1e-10)


def test_extend_score_is_zero_homogeneous():
    q = GaussianDensity(0.3, 1.2)
    factory = lambda d: (lambda x: float(np.log(d.value(x))))
    a = extend_score(factory, q)(0.5)
    b = extend_score(factory, q * 7.0)(0.5)
    # masses agree to the tail tolerance, not to machine precision
    assert a == pytest.approx(b, abs=1e-10)


def test_extensions_reject_zero_mass():
    zero = GaussianDensity(0.0, 1.0) - GaussianDensity(0.0, 1.0)
    with pytest.raises(ZeroMassError):
        extend_entropy(lambda d: 0.0, zero)


def test_probe_points_are_deterministic():
    a = densities.probe_points(1)
    b = densities.probe_points(1)
    np.testing.assert_array_equal(a, b)
    assert np.max(np.abs(a)) >= 1000.0  # dyadic tail probes reach far out
