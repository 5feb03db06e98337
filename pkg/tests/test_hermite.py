import math

import numpy as np
import pytest

from wicklab.fields import Lattice, SpectralField, dealiased_product, grid_values
from wicklab.hermite import hermite_addition_check, hermite_all, hermite_eval, wick_substitute


def hermite_via_generating_function(k, x, sigma):
    # independent oracle: Taylor coefficients of exp(t x - sigma t^2/2)
    # via the explicit double sum H_k = sum_j k!/(j! (k-2j)!) (-sigma/2)^j x^{k-2j}
    total = 0.0
    for j in range(k // 2 + 1):
        total += (
            math.factorial(k)
            / (math.factorial(j) * math.factorial(k - 2 * j))
            * (-sigma / 2.0) ** j
            * x ** (k - 2 * j)
        )
    return total


def test_first_values():
    assert hermite_eval(2, 2.0, 1.0) == 3.0
    assert hermite_eval(1, 5.0, 7.0) == 5.0
    # expanding the generating function to order t^3: H_3 = x^3 - 3 sigma x
    assert hermite_eval(3, 2.0, 4.0) == -16.0
    assert hermite_eval(0, 123.0, 5.0) == 1.0


@pytest.mark.parametrize("k", range(9))
def test_matches_generating_function(k):
    for x in (-2.5, -0.3, 0.0, 1.1, 4.0):
        for sigma in (0.0, 0.5, 1.0, 3.0):
            want = hermite_via_generating_function(k, x, sigma)
            got = hermite_eval(k, x, sigma)
            assert abs(got - want) <= 1e-11 * max(1.0, abs(want))


@pytest.mark.parametrize("k", range(9))
def test_scaling_identity(k):
    # H_k(x; sigma) = sigma^{k/2} H_k(x / sqrt(sigma); 1)
    xs = np.linspace(-10, 10, 41)
    for sigma in (0.1, 1.0, 10.0):
        lhs = hermite_eval(k, xs, sigma)
        rhs = sigma ** (k / 2.0) * hermite_eval(k, xs / math.sqrt(sigma), 1.0)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


def test_sigma_zero_gives_monomials():
    xs = np.linspace(-3, 3, 7)
    for k in range(6):
        assert np.allclose(hermite_eval(k, xs, 0.0), xs**k)


def test_leading_coefficient_is_one():
    # top-degree coefficient extracted by a large-x limit
    x = 1e4
    for k in range(1, 9):
        for sigma in (0.2, 1.0, 5.0):
            assert abs(hermite_eval(k, x, sigma) / x**k - 1.0) < 1e-4


def test_derivative_recurrence():
    # d/dx H_k = k H_{k-1} (sigma = 1), via central differences
    h = 1e-6
    for k in range(1, 7):
        for x in (-1.3, 0.4, 2.2):
            num = (hermite_eval(k, x + h) - hermite_eval(k, x - h)) / (2 * h)
            assert abs(num - k * hermite_eval(k - 1, x)) < 1e-5 * max(1.0, abs(num))


def test_domain_errors():
    with pytest.raises(ValueError):
        hermite_eval(2, 1.0, -1.0)
    with pytest.raises(ValueError):
        hermite_eval(17, 1.0, 1.0)
    with pytest.raises(ValueError):
        hermite_eval(-1, 1.0, 1.0)


def test_hermite_all_consistent():
    xs = np.linspace(-2, 2, 5)
    hs = hermite_all(5, xs, 2.0)
    for k in range(6):
        assert np.allclose(hs[k], hermite_eval(k, xs, 2.0))


def test_addition_identity():
    lhs, rhs = hermite_addition_check(2, 1.0, 1.0, 1.0)
    assert lhs == pytest.approx(3.0) and rhs == pytest.approx(3.0)
    lhs, rhs = hermite_addition_check(0, 9.0, -4.0, 2.0)
    assert (lhs, rhs) == (1.0, 1.0)
    # x = 0 collapses the sum to H_3(y)
    for g in (-1.7, 0.3, 2.9):
        lhs, rhs = hermite_addition_check(3, 0.0, g, 1.0)
        assert lhs == pytest.approx(hermite_eval(3, g, 1.0))
        assert rhs == pytest.approx(lhs)
    for k in range(9):
        lhs, rhs = hermite_addition_check(k, 0.7, -1.2, 2.5)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_orthogonality_monte_carlo():
    # E[H_k(g) H_m(g)] = delta_km k! ; quick version of the acceptance run
    rng = np.random.default_rng(42)
    g = rng.standard_normal(200_000)
    hs = hermite_all(4, g, 1.0)
    for k in range(5):
        for m in range(k, 5):
            prod = hs[k] * hs[m]
            mean = prod.mean()
            se = prod.std(ddof=1) / math.sqrt(len(prod))
            want = math.factorial(k) if k == m else 0.0
            assert abs(mean - want) <= 3.0 * max(se, 1e-12)


# -- wick substitution ---------------------------------------------------------


def _one_stack(lat):
    return [SpectralField.one(lat)]


def test_wick_substitute_v_zero_returns_top_power():
    lat = Lattice(2, 4)
    rng = np.random.default_rng(0)
    powers = _one_stack(lat)
    for _ in range(3):
        f = SpectralField(lat, rng.standard_normal(lat.shape) + 0j)
        f = SpectralField(lat, (f.coeffs + f.conj_reverse()) / 2)
        powers.append(f)
    out = wick_substitute(3, powers, SpectralField.zero(lat))
    assert np.allclose(out.coeffs, powers[3].coeffs)


def test_wick_substitute_z_zero_returns_cube():
    lat = Lattice(2, 4)
    powers = [SpectralField.one(lat)] + [SpectralField.zero(lat)] * 3
    v = SpectralField.from_modes(lat, {(1, 0): 0.5, (-1, 0): 0.5})
    out = wick_substitute(3, powers, v)
    want = dealiased_product(dealiased_product(v, v), v)
    assert np.allclose(out.coeffs, want.coeffs, atol=1e-14)


def test_wick_substitute_constant_sigma_zero_is_plain_cube():
    # z = c with sigma = 0: result is (c + v)^3 pointwise on the grid
    lat = Lattice(2, 4)
    c = 0.7
    powers = [SpectralField.one(lat)]
    for l in (1, 2, 3):
        powers.append(c**l * SpectralField.one(lat))
    rng = np.random.default_rng(1)
    v = SpectralField(lat, rng.standard_normal(lat.shape) + 0j)
    v = SpectralField(lat, (v.coeffs + v.conj_reverse()) / 2)
    out = wick_substitute(3, powers, v)
    # direct cube on a grid fine enough to hold the full cubic spectrum
    direct = (c + grid_values(v.coeffs, lat.M, 32).real) ** 3
    from wicklab.fields import grid_to_coeffs

    direct_c = grid_to_coeffs(direct.astype(complex), lat.M)
    assert np.max(np.abs(out.coeffs - direct_c)) < 1e-12


def test_wick_substitute_binomial_on_monomials():
    # exact monomial inputs reproduce the binomial expansion term by term
    lat = Lattice(1, 6)
    z1 = SpectralField.from_modes(lat, {(1,): 0.5, (-1,): 0.5})
    z2 = dealiased_product(z1, z1) - 0.3 * SpectralField.one(lat)
    z3 = dealiased_product(z2, z1)
    powers = [SpectralField.one(lat), z1, z2, z3]
    v = SpectralField.from_modes(lat, {(2,): 0.25, (-2,): 0.25})
    out = wick_substitute(3, powers, v)
    v2 = dealiased_product(v, v)
    v3 = dealiased_product(v2, v)
    want = v3 + 3 * dealiased_product(z1, v2) + 3 * dealiased_product(z2, v) + z3
    assert np.max(np.abs(out.coeffs - want.coeffs)) < 1e-13


def test_wick_substitute_errors():
    lat = Lattice(2, 3)
    other = Lattice(2, 4)
    powers = [SpectralField.one(lat), SpectralField.zero(lat),
              SpectralField.zero(lat), SpectralField.zero(lat)]
    with pytest.raises(ValueError):
        wick_substitute(3, powers, SpectralField.zero(other))
    with pytest.raises(ValueError):
        wick_substitute(2, powers, SpectralField.zero(lat))
    bad = [SpectralField.zero(lat)] + powers[1:]
    with pytest.raises(ValueError):
        wick_substitute(3, bad, SpectralField.zero(lat))
