import json
import math

import numpy as np
import pytest

from wicklab.fields import (
    FieldPair,
    Lattice,
    SpectralField,
    convolve_brute,
    dealiased_product,
    fourier_lebesgue_norm,
    grid_sup,
    grid_to_coeffs,
    grid_values,
    kernel_hat,
    kernel_hat_1d,
    mollify,
    multiplier_apply,
    project,
    sobolev_norm,
)

KERNELS = ("tent", "fejer", "gaussian-bump")


def random_real_field(lat, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal(lat.shape) + 1j * rng.standard_normal(lat.shape)
    f = SpectralField(lat, c)
    return SpectralField(lat, scale * (f.coeffs + f.conj_reverse()) / 2)


def test_lattice_basics():
    lat = Lattice(2, 3)
    assert lat.shape == (7, 7)
    assert lat.bracket()[lat.index_of((0, 0))] == 1.0
    assert lat.bracket()[lat.index_of((1, 2))] == pytest.approx(math.sqrt(6))
    # mode set symmetric under negation
    sq = lat.abs_sq()
    assert np.allclose(sq, sq[::-1, ::-1])
    with pytest.raises(ValueError):
        Lattice(3, 4)


def test_sobolev_norm_examples():
    lat = Lattice(2, 4)
    one = SpectralField.one(lat)
    for s in (-2.0, 0.0, 3.5):
        assert sobolev_norm(one, s) == pytest.approx(1.0)
    f = SpectralField.from_modes(lat, {(1, 0): 0.5, (-1, 0): 0.5})
    assert sobolev_norm(f, 0.0) == pytest.approx(1 / math.sqrt(2))
    assert sobolev_norm(f, 1.0) == pytest.approx(math.sqrt(2 * 0.25 * 2.0))


def test_fourier_lebesgue_norm_examples():
    lat = Lattice(2, 6)
    one = SpectralField.one(lat)
    assert fourier_lebesgue_norm(one, 0, 1) == pytest.approx(1.0)
    R = 0.7
    f = SpectralField.from_modes(
        lat, {(3, 0): R, (-3, 0): R, (0, 5): R, (0, -5): R}
    )
    assert fourier_lebesgue_norm(f, 0, 1) == pytest.approx(4 * R)
    assert fourier_lebesgue_norm(f, 0, math.inf) == pytest.approx(R)
    assert fourier_lebesgue_norm(f, 0, 2) == pytest.approx(2 * R)
    with pytest.raises(ValueError):
        fourier_lebesgue_norm(f, 0, 0.5)


def test_pair_norms():
    lat = Lattice(2, 2)
    pair = FieldPair(SpectralField.one(lat), 2.0 * SpectralField.one(lat))
    assert pair.sobolev_norm(0.0) == pytest.approx(math.sqrt(5.0))
    assert pair.fourier_lebesgue_norm(0, 1) == pytest.approx(3.0)


def test_multiplier_identity_and_projection():
    lat = Lattice(2, 5)
    f = random_real_field(lat, 3)
    same = multiplier_apply(f, lambda n: 1.0)
    assert np.allclose(same.coeffs, f.coeffs)
    proj = project(f, 2)
    assert np.allclose(proj.coeffs, f.coeffs * lat.ball(2))
    # <n>^{-1} on e_(1,0) + e_(-1,0)
    g = SpectralField.from_modes(lat, {(1, 0): 1.0, (-1, 0): 1.0})
    h = multiplier_apply(g, lambda n: 1.0 / math.sqrt(1 + n[0] ** 2 + n[1] ** 2))
    assert h.coeffs[lat.index_of((1, 0))] == pytest.approx(1 / math.sqrt(2))


def test_sum_mul_are_elementwise_and_symmetric():
    lat = Lattice(1, 5)
    f = random_real_field(lat, 1)
    g = random_real_field(lat, 2)
    assert (f + g).hermitian_defect() < 1e-12
    assert (2.5 * f - g).hermitian_defect() < 1e-12


def test_dealiased_product_examples():
    lat = Lattice(2, 4)
    g = random_real_field(lat, 5)
    one = SpectralField.one(lat)
    assert np.allclose(dealiased_product(one, g).coeffs, g.coeffs, atol=1e-14)
    f = SpectralField.from_modes(lat, {(1, 0): 1.0, (-1, 0): 1.0})
    p = dealiased_product(f, f)
    assert p.coeffs[lat.index_of((0, 0))] == pytest.approx(2.0)
    assert p.coeffs[lat.index_of((2, 0))] == pytest.approx(1.0)
    assert p.coeffs[lat.index_of((-2, 0))] == pytest.approx(1.0)
    assert abs(p.coeffs[lat.index_of((1, 1))]) < 1e-14


@pytest.mark.parametrize("d,M,seed", [(1, 8, 0), (2, 5, 1), (2, 8, 2)])
def test_dealiased_product_matches_brute_convolution(d, M, seed):
    lat = Lattice(d, M)
    f = random_real_field(lat, seed)
    g = random_real_field(lat, seed + 100)
    fast = dealiased_product(f, g)
    slow = convolve_brute(f, g)
    assert np.max(np.abs(fast.coeffs - slow.coeffs)) < 1e-12
    # bilinear + commutative
    swap = dealiased_product(g, f)
    assert np.max(np.abs(fast.coeffs - swap.coeffs)) < 1e-12
    scaled = dealiased_product(2.0 * f, g)
    assert np.max(np.abs(scaled.coeffs - 2.0 * fast.coeffs)) < 1e-12
    assert fast.hermitian_defect() < 1e-12


def test_plancherel_roundtrip():
    lat = Lattice(2, 6)
    f = random_real_field(lat, 9)
    K = lat.pad_size(4)
    grid = grid_values(f.coeffs, lat.M, K).real
    back = grid_to_coeffs(grid.astype(complex), lat.M)
    assert np.max(np.abs(back - f.coeffs)) < 1e-12
    assert np.mean(grid**2) == pytest.approx(sobolev_norm(f, 0.0) ** 2, rel=1e-10)


@pytest.mark.parametrize("A", [2, 4, 8])
def test_cube_indicator_convolution_lower_bound(A):
    # 1_{a+Q_A} * 1_{b+Q_A} >= (A/2)^d on a + b + Q_A, for integer cubes
    d = 2
    M = 3 * A
    lat = Lattice(d, M)
    a = (A, 0)
    b = (-A, A)
    offs = np.arange(-A // 2, A // 2)

    def cube_field(center):
        c = np.zeros(lat.shape, dtype=complex)
        c[np.ix_(center[0] + offs + M, center[1] + offs + M)] = 1.0
        return SpectralField(lat, c)

    conv = dealiased_product(cube_field(a), cube_field(b))
    target = np.array([a[0] + b[0], a[1] + b[1]])
    vals = []
    for ox in offs:
        for oy in offs:
            vals.append(conv.coeffs[lat.index_of((target[0] + ox, target[1] + oy))].real)
    assert min(vals) >= (A / 2.0) ** d - 1e-9


def test_grid_sup_matches_known_field():
    lat = Lattice(2, 3)
    f = SpectralField.from_modes(lat, {(1, 0): 0.5, (-1, 0): 0.5})  # cos(x)
    assert grid_sup(f) == pytest.approx(1.0, abs=1e-3)
    assert grid_sup(f, s=-1.0) == pytest.approx(1 / math.sqrt(2), abs=1e-3)


# -- mollifiers ------------------------------------------------------------------


@pytest.mark.parametrize("kernel", KERNELS)
def test_kernel_hat_normalization_and_mode_zero(kernel):
    assert kernel_hat_1d(kernel, 0.0) == pytest.approx(1.0, abs=1e-15)
    lat = Lattice(2, 5)
    f = random_real_field(lat, 11)
    for delta in (1.0, 0.3, 0.01):
        g = mollify(f, kernel, delta)
        i0 = lat.index_of((0, 0))
        assert g.coeffs[i0] == pytest.approx(f.coeffs[i0])
        assert g.hermitian_defect() < 1e-12


@pytest.mark.parametrize("kernel", KERNELS)
def test_kernel_lipschitz_in_delta(kernel):
    # |rho_hat(delta n) - rho_hat(delta' n)| <= C min(1, |delta-delta'| |n|)
    # with a per-kernel constant; C = 2 covers every profile here (the
    # raised cosine dips slightly negative, so C = 1 is not quite enough)
    ns = np.arange(1, 200)
    C = 2.0
    for d1, d2 in [(0.9, 0.7), (0.31, 0.31001), (1.0, 0.05), (0.2, 0.1)]:
        lhs = np.abs(kernel_hat_1d(kernel, d1 * ns) - kernel_hat_1d(kernel, d2 * ns))
        rhs = C * np.minimum(1.0, abs(d1 - d2) * ns)
        assert np.all(lhs <= rhs + 1e-12)


def test_kernel_decay_table():
    # closed-form decay of the triangle profile: sinc^2(xi/4)
    xs = np.array([0.5, 1.0, 2.0, 4.0, 8.0])
    want = (np.sin(xs / 4) / (xs / 4)) ** 2
    assert np.allclose(kernel_hat_1d("tent", xs), want, rtol=1e-12)
    # all kernels decay to 0 along delta * n growing
    for kernel in KERNELS:
        vals = np.abs(kernel_hat_1d(kernel, np.array([20.0, 60.0, 200.0])))
        assert vals[0] < 0.3 and vals[-1] < 5e-3


def test_kernels_are_distinct_shapes():
    xi = np.linspace(0.5, 6.0, 25)
    t, f, g = (kernel_hat_1d(k, xi) for k in KERNELS)
    assert np.max(np.abs(t - f)) > 1e-2
    assert np.max(np.abs(t - g)) > 1e-2


def test_mollify_delta_domain():
    lat = Lattice(2, 3)
    f = random_real_field(lat, 0)
    with pytest.raises(ValueError):
        mollify(f, "tent", 0.0)
    with pytest.raises(ValueError):
        mollify(f, "tent", 1.5)
    with pytest.raises(ValueError):
        mollify(f, "boxcar", 0.5)


def test_field_serialization_roundtrip():
    lat = Lattice(2, 4)
    f = random_real_field(lat, 13)
    text = f.to_json(tol=0.0)
    g = SpectralField.from_json(text)
    assert g.lattice == lat
    assert np.max(np.abs(g.coeffs - f.coeffs)) < 1e-15
    rec = json.loads(text)
    assert rec["schema"] == "wicklab.field.v1"
    with pytest.raises(ValueError):
        SpectralField.from_record({"schema": "bogus"})


def test_shape_errors():
    lat, other = Lattice(2, 3), Lattice(2, 4)
    f = SpectralField.zero(lat)
    g = SpectralField.zero(other)
    with pytest.raises(ValueError):
        dealiased_product(f, g)
    with pytest.raises(ValueError):
        f + g
    with pytest.raises(ValueError):
        FieldPair(f, g)
