"""Independent recomputation of every frozen numeric anchor.

Each constant asserted elsewhere in the suite is rederived here with
scipy.integrate.quad against raw closed-form integrands, never through
the package's own quadrature. If one of these fails, the anchor itself
is wrong and the downstream comparisons are meaningless.
"""

import numpy as np
import pytest
from scipy import integrate

# frozen anchors used across the test suite
SHANNON_PHI_N01 = -1.4189385332046727  # -(1/2) ln(2 pi e)
CROSS_ENTROPY_N11_N01 = -1.9189385332046727  # -(1/2) ln(2 pi) - 1
KL_N01_N11 = 0.5
QUAD_DIV_N01_N11 = 0.1247982940801937  # (1 - e^{-1/4}) / sqrt(pi)
FISHER_N01_N11 = 1.0


def gauss(x, mean=0.0, var=1.0):
    return np.exp(-0.5 * (x - mean) ** 2 / var) / np.sqrt(2.0 * np.pi * var)


# float64 Gaussians underflow to 0 well inside wide windows, turning
# q ln q and |q'|^2/q into nan; [-30, 30] keeps every integrand finite
# for variances up to 4 while the truncated mass stays below 1e-40
def quad(f, lo=-30.0, hi=30.0):
    value, err = integrate.quad(f, lo, hi, limit=800)
    assert err < 1e-7
    return value


def test_shannon_entropy_of_unit_gaussian():
    value = quad(lambda x: gauss(x) * np.log(gauss(x)))
    assert value == pytest.approx(SHANNON_PHI_N01, abs=1e-10)
    assert value == pytest.approx(-0.5 * np.log(2.0 * np.pi * np.e), abs=1e-12)


def test_cross_entropy_shifted_gaussian():
    value = quad(lambda x: gauss(x, 1.0) * np.log(gauss(x)))
    assert value == pytest.approx(CROSS_ENTROPY_N11_N01, abs=1e-10)


def test_kl_divergence_shifted_gaussian():
    value = quad(lambda x: gauss(x) * np.log(gauss(x) / gauss(x, 1.0)))
    assert value == pytest.approx(KL_N01_N11, abs=1e-10)


@pytest.mark.parametrize("var", [0.25, 1.0, 4.0])
def test_gradient_entropy_is_inverse_variance(var):
    def integrand(x):
        q = gauss(x, 0.0, var)
        if q <= 0.0:
            return 0.0
        dq = -(x / var) * q
        return dq**2 / q

    assert quad(integrand) == pytest.approx(1.0 / var, abs=1e-9)


def test_fisher_divergence_shifted_gaussians():
    # grad log p - grad log q = (x-1) - x = -1 for unit variances
    value = quad(lambda x: gauss(x) * ((-x) - (-(x - 1.0))) ** 2)
    assert value == pytest.approx(FISHER_N01_N11, abs=1e-10)


def test_quadratic_divergence_shifted_gaussian():
    value = quad(lambda x: (gauss(x) - gauss(x, 1.0)) ** 2)
    assert value == pytest.approx(QUAD_DIV_N01_N11, abs=1e-12)
    closed = (1.0 - np.exp(-0.25)) / np.sqrt(np.pi)
    assert value == pytest.approx(closed, abs=1e-12)


def test_hyvarinen_score_of_unit_gaussian():
    # -2 lap(q)/q + |grad q|^2/q^2 at x: 2 - x^2 for N(0,1)
    for x in (0.0, 1.0, 2.0):
        q = gauss(x)
        dq = -x * q
        lap = (x**2 - 1.0) * q
        score = -2.0 * lap / q + dq**2 / q**2
        assert score == pytest.approx(2.0 - x**2, abs=1e-12)


def test_hyvarinen_expected_score_vanishes():
    # expected value of 2 - (x-1)^2 under N(0,1) is 2 - (1 + 1) = 0
    value = quad(lambda x: gauss(x) * (2.0 - (x - 1.0) ** 2))
    assert value == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize(
    "radius,bound", [(6.0, 1e-7), (8.0, 1e-10), (10.0, 1e-20)]
)
def test_boundary_term_decay_for_unit_gaussians(radius, bound):
    # (1/R) sum_{y=+-R} y (q'/q)(y) p(y) = -2 R phi(R) for p = q = N(0,1)
    closed = -2.0 * radius * gauss(radius)
    assert abs(closed) < bound


def test_weighted_norm_of_polynomial_under_gaussian():
    # E[(1+x^2)^2] = 1 + 2 E[x^2] + E[x^4] = 6 under N(0,1)
    value = quad(lambda x: (1.0 + x**2) ** 2 * gauss(x))
    assert value == pytest.approx(6.0, abs=1e-10)


def test_cauchy_density_normalisation():
    value, err = integrate.quad(lambda x: (1.0 / np.pi) / (1.0 + x**2), -np.inf, np.inf)
    assert err < 1e-8
    assert value == pytest.approx(1.0, abs=1e-9)


def test_bump_mass_closed_form():
    # int a (1 - u^2)^2 over |u| <= 1 scaled to halfwidth h: 16 a h / 15
    a, h = 0.7, 0.3
    value = quad(lambda x: a * (1.0 - (x / h) ** 2) ** 2, -h, h)
    assert value == pytest.approx(16.0 * a * h / 15.0, abs=1e-12)


def test_binary_shannon_partial_closed_form():
    # Phi(x, y) = x ln(x/(x+y)) + y ln(y/(x+y)); d/dx = ln(x/(x+y))
    x, y, h = 0.25, 0.75, 1e-7
    phi = lambda u, v: u * np.log(u / (u + v)) + v * np.log(v / (u + v))
    fd = (phi(x + h, y) - phi(x - h, y)) / (2.0 * h)
    assert fd == pytest.approx(np.log(x / (x + y)), abs=1e-7)


def test_binary_shannon_blowup_magnitude():
    # at (1e-12, 1) the partial is ln(1e-12/(1+1e-12)) ~ -27.63
    assert np.log(1e-12 / (1.0 + 1e-12)) < -27.0


def test_dyadic_tail_sums_for_geometric_masses():
    # a_k = 2^-k: r_k = sum_{j>=k} a_j = 2^{1-k}; b_k = a_k/sqrt(r_k)
    k = np.arange(120)
    a = 0.5**k
    r = 2.0 * 0.5**k
    b = a / np.sqrt(r)
    # alpha = 1: a_k - alpha*b_k < 0 first at k = 2
    signs = a - b < 0
    assert int(np.argmax(signs)) == 2
    # sum b_k converges to (1/sqrt 2) / (1 - 1/sqrt 2)
    total = (1.0 / np.sqrt(2.0)) / (1.0 - 1.0 / np.sqrt(2.0))
    assert b.sum() == pytest.approx(total, abs=1e-8)
