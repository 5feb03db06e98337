"""Gaussian free field data, Wick powers, and exact covariance oracles.

The random data is the Fourier series pair

    u0 = sum_n (g_{0,n} / <n>) e_n,      u1 = sum_n g_{1,n} e_n,

with independent standard complex Gaussians conditioned on
g_{j,-n} = conj(g_{j,n}); real and imaginary parts carry variance 1/2 for
n != 0 and the n = 0 draw is real with unit variance.  The linear wave flow
rotates the coefficient pair,

    g0^t = cos(t<n>) g0 + sin(t<n>) g1,
    g1^t = -sin(t<n>) g0 + cos(t<n>) g1,

so the law of the data is flow-invariant.  Wick powers of the band-limited
free evolution z are formed pointwise as :z^l: = H_l(z(x); sigma) with sigma
the exact per-point variance (sigma_N = sum_{|n|<=N} <n>^{-2} for a sharp
truncation).

Every second moment of a Wick power coefficient has a closed form as a
Gamma_l(n) lattice sum, i.e. an l-fold convolution power of a per-mode
weight; this module evaluates those sums both by exhaustive summation and by
convolution powers, and runs the Monte Carlo comparisons against them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .fields import (
    FieldPair,
    Lattice,
    SpectralField,
    grid_to_coeffs,
    grid_values,
    kernel_hat_1d,
    pair_map,
    project,
)
from .hermite import hermite_all, hermite_eval
from .seeding import derive_rng


# -- sampling ----------------------------------------------------------------


def draw_hermitian_gaussians(lattice: Lattice, rng, batch=()) -> np.ndarray:
    """Standard complex Gaussians with g(-n) = conj(g(n)), E|g|^2 = 1."""
    shape = tuple(batch) + lattice.shape
    a = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    rev = tuple(slice(None) for _ in batch) + tuple(
        slice(None, None, -1) for _ in range(lattice.d)
    )
    # (a + conj(a(-n)))/sqrt(2): unit variance, exactly Hermitian, real at n=0
    return (a + np.conj(a[rev])) / math.sqrt(2.0)


@dataclass(frozen=True)
class GaussianSeed:
    """Drawn coefficient Gaussians (g0, g1) for one sample of the data."""

    lattice: Lattice
    seed: int
    g0: np.ndarray = field(repr=False)
    g1: np.ndarray = field(repr=False)

    @classmethod
    def draw(cls, lattice: Lattice, seed: int, *key):
        rng = derive_rng(seed, "gff", *key)
        g0 = draw_hermitian_gaussians(lattice, rng)
        g1 = draw_hermitian_gaussians(lattice, rng)
        return cls(lattice, seed, g0, g1)

    def data_pair(self) -> FieldPair:
        """The sampled field pair (u0, u1) = (g0/<n>, g1)."""
        w = self.lattice.bracket()
        return FieldPair(
            SpectralField(self.lattice, self.g0 / w),
            SpectralField(self.lattice, self.g1.astype(complex)),
        )


def sample_gff(lattice: Lattice, seed: int, *key) -> FieldPair:
    """One draw of the Gaussian data pair on the lattice."""
    return GaussianSeed.draw(lattice, seed, *key).data_pair()


def linear_flow(data: FieldPair, t: float, mass: float = 1.0) -> FieldPair:
    """Free wave evolution: exact modewise rotation of (u, du/dt)."""
    lat = data.lattice
    om = lat.bracket(mass)
    c, s = np.cos(t * om), np.sin(t * om)
    sinc = t * np.sinc(t * om / math.pi)  # sin(t om)/om, safe at om = 0
    u, v = data.pos.coeffs, data.vel.coeffs
    return FieldPair(
        SpectralField(lat, c * u + sinc * v),
        SpectralField(lat, -om * s * u + c * v),
    )


# -- variances ---------------------------------------------------------------


def sigma_truncated(N: int, d: int) -> float:
    """sigma_N = sum_{|n| <= N} <n>^{-2}; grows like log N in d = 2."""
    lat = Lattice(d, int(N))
    mask = lat.ball(N)
    return float(np.sum(mask / (1.0 + lat.abs_sq())))


def sigma_lattice(lattice: Lattice) -> float:
    """Exact variance of the full-cube lattice field: sum over all modes.

    This is the right renormalization for objects living on the whole cube
    {|n_i| <= M}; the ball sum sigma_M would leave the corner modes
    unsubtracted.
    """
    return float(np.sum(1.0 / (1.0 + lattice.abs_sq())))


def sigma_of_weight(lattice: Lattice, amp: np.ndarray) -> float:
    """Pointwise variance sum |amp(n)|^2 <n>^{-2} of sum amp(n) g_n e_n / <n>."""
    return float(np.sum(np.abs(amp) ** 2 / (1.0 + lattice.abs_sq())))


def sigma_of_profile(profile: FieldPair, t: float) -> float:
    """Variance of the free evolution of randomized data with given profile.

    For deterministic moduli (phi0, phi1),

        sigma(t) = sum_n cos^2(t<n>) |phi0_hat(n)|^2
                 + sin^2(t<n>) <n>^{-2} |phi1_hat(n)|^2.
    """
    lat = profile.lattice
    om = lat.bracket()
    c2 = np.cos(t * om) ** 2
    s2 = 1.0 - c2
    return float(
        np.sum(c2 * np.abs(profile.pos.coeffs) ** 2)
        + np.sum(s2 * np.abs(profile.vel.coeffs) ** 2 / om**2)
    )


# -- Wick powers -------------------------------------------------------------


@dataclass(frozen=True)
class WickStack:
    """A field z with its renormalized powers :z^l: and the variance used."""

    z: SpectralField
    powers: tuple  # powers[l] = :z^l: for l = 0..max_l
    sigma: float
    provenance: str
    t: float = 0.0

    def __getitem__(self, l):
        return self.powers[l]


def wick_powers(z: SpectralField, sigma: float, max_l: int = 3, provenance="", t=0.0):
    """Form :z^l: = H_l(z(x); sigma) on the oversampled grid, l = 0..max_l."""
    if max_l > 3:
        raise ValueError("wick powers are supported up to l = 3")
    lat = z.lattice
    K = lat.pad_size(max(max_l + 1, 2))
    grid = grid_values(z.coeffs, lat.M, K).real
    hs = hermite_all(max_l, grid, sigma)
    powers = [SpectralField.one(lat)]
    for l in range(1, max_l + 1):
        powers.append(SpectralField(lat, grid_to_coeffs(hs[l].astype(complex), lat.M)))
    return WickStack(z, tuple(powers), sigma, provenance, t)


def wick_powers_convolution(z: SpectralField, sigma: float, max_l: int = 3):
    """Exact-convolution oracle for wick_powers, feasible for M <= 16.

    Uses the explicit coefficient forms
        :z^2: = z*z - sigma,      :z^3: = z*z*z - 3 sigma z,
    with * the full (untruncated) coefficient convolution by direct
    summation, cropped to the lattice only at the end; the pseudospectral
    path must agree to rounding.
    """
    lat = z.lattice
    if lat.M > 16:
        raise ValueError("convolution oracle supported for M <= 16 only")
    if max_l > 3:
        raise ValueError("wick powers are supported up to l = 3")

    def crop(arr):
        W = (arr.shape[0] - 1) // 2
        sl = tuple(slice(W - lat.M, W + lat.M + 1) for _ in range(lat.d))
        return arr[sl]

    powers = [SpectralField.one(lat), z]
    if max_l >= 2:
        z2 = signal.convolve(z.coeffs, z.coeffs, mode="full", method="direct")
        powers.append(SpectralField(lat, crop(z2)) - sigma * SpectralField.one(lat))
    if max_l >= 3:
        z2f = signal.convolve(z.coeffs, z.coeffs, mode="full", method="direct")
        z3 = signal.convolve(z2f, z.coeffs, mode="full", method="direct")
        powers.append(SpectralField(lat, crop(z3)) - 3.0 * sigma * z)
    return WickStack(z, tuple(powers[: max_l + 1]), sigma, "convolution-oracle", 0.0)


class WickSource:
    """Time-indexed supplier of z(t) and its Wick data for the solvers.

    Wraps sampled data; z(t) is the free evolution, optionally projected to
    frequencies |n| <= N, and sigma may be constant or a callable of t.
    """

    def __init__(self, data: FieldPair, sigma, N=None, provenance=""):
        self.data = data
        self._sigma = sigma
        self.N = N
        self.provenance = provenance

    def sigma(self, t: float) -> float:
        return self._sigma(t) if callable(self._sigma) else float(self._sigma)

    def z_pair(self, t: float) -> FieldPair:
        zp = linear_flow(self.data, t)
        if self.N is not None:
            zp = pair_map(zp, lambda f: project(f, self.N))
        return zp

    def z_field(self, t: float) -> SpectralField:
        return self.z_pair(t).pos

    def z_grid(self, t: float, K: int) -> np.ndarray:
        """Physical samples of z(t) on the K-grid."""
        zf = self.z_field(t)
        return grid_values(zf.coeffs, zf.lattice.M, K).real

    def stack(self, t: float, max_l: int = 3) -> WickStack:
        return wick_powers(self.z_field(t), self.sigma(t), max_l, self.provenance, t)


def gff_wick_source(lattice: Lattice, seed: int, N=None, *key) -> WickSource:
    """Wick source for a fresh Gaussian draw, sigma matching the cutoff.

    With N given, z is projected to the ball |n| <= N and sigma is the ball
    sum sigma_N; with N = None, z is the full cube field and sigma is the
    exact cube sum.
    """
    data = sample_gff(lattice, seed, *key)
    if N is None:
        sig = sigma_lattice(lattice)
        prov = f"lattice({lattice.M})"
    else:
        sig = sigma_truncated(N, lattice.d)
        prov = f"truncated({N})"
    return WickSource(data, sig, N=N, provenance=prov)


def mollified_wick_source(lattice: Lattice, seed: int, kernel: str, delta: float, *key):
    """Wick source for mollified Gaussian data (rho_delta * u0, rho_delta * u1).

    sigma is the exact lattice variance sum |rho_hat(delta n)|^2 <n>^{-2};
    it equals Var(z_delta(x, t)) for every x and t.
    """
    from .fields import kernel_hat, mollify

    data = sample_gff(lattice, seed, *key)
    mdata = pair_map(data, lambda f: mollify(f, kernel, delta))
    amp = kernel_hat(kernel, lattice, delta)
    sig = sigma_of_weight(lattice, amp)
    return WickSource(mdata, sig, provenance=f"mollified({kernel},{delta})")


# -- exact covariance oracles ------------------------------------------------
#
# For z = sum_n a(n) g_n e_n / <n> (any deterministic real amplitude a), the
# coefficient of :z^l: at mode n has second moment
#
#   E |<:z^l:, e_n>|^2 = l! * (w_aa^{*l})(n),      w_aa(m) = a(m)^2 <m>^{-2},
#
# and for differences of two such fields built from the same draw,
#
#   E |<:z_a^l: - :z_b^l:, e_n>|^2
#       = l! * (w_aa^{*l} + w_bb^{*l} - 2 w_ab^{*l})(n),
#
# with w_ab(m) = a(m) b(m) <m>^{-2}.  For sharp truncations a = 1_{|m|<=M},
# b = 1_{|m|<=N} the difference collapses to the familiar
# "sum over M minus sum over N" form.


def weight_cube(d: int, W: int, amp=None) -> np.ndarray:
    """Per-mode weight a(n)^2 <n>^{-2} on the cube |n_i| <= W (amp=None: a=1)."""
    lat = Lattice(d, W)
    w = 1.0 / (1.0 + lat.abs_sq())
    if amp is not None:
        w = w * np.asarray(amp, dtype=float)
    return w


def amp_truncated(d: int, W: int, N) -> np.ndarray:
    return Lattice(d, W).ball(N).astype(float)


def amp_mollified(d: int, W: int, kernel: str, delta: float) -> np.ndarray:
    ax = kernel_hat_1d(kernel, delta * np.arange(-W, W + 1))
    return ax if d == 1 else np.outer(ax, ax)


def gamma_sum_enumerate(w: np.ndarray, l: int, n) -> float:
    """Exhaustive Gamma_l(n) sum of products of weights, no transforms.

    Sums w(n_1)...w(n_l) over all ordered tuples with n_1 + ... + n_l = n.
    Supports d derived from w.ndim; feasible for small cubes only.
    """
    d = w.ndim
    W = (w.shape[0] - 1) // 2
    n = tuple(np.atleast_1d(n).astype(int))
    if len(n) != d:
        raise ValueError(f"mode {n} has wrong dimension for d = {d}")
    if l == 0:
        return float(all(c == 0 for c in n))
    nz = np.argwhere(w != 0.0)
    if nz.shape[0] == 0:
        return 0.0
    if nz.shape[0] ** max(l - 1, 0) > 5_000_000:
        raise ValueError("enumeration infeasible for this weight support")
    vals = w[tuple(nz.T)]
    modes = nz - W

    def lookup(pts):
        ok = np.all(np.abs(pts) <= W, axis=-1)
        idx = np.clip(pts + W, 0, 2 * W)
        return np.where(ok, w[tuple(idx.reshape(-1, d).T)].reshape(pts.shape[:-1]), 0.0)

    target = np.array(n)
    if l == 1:
        return float(lookup(target[None, :])[0])
    if l == 2:
        rest = target[None, :] - modes
        return float(np.sum(vals * lookup(rest)))
    if l == 3:
        total = 0.0
        for v1, m1 in zip(vals, modes):
            rest = target[None, :] - m1[None, :] - modes
            total += v1 * float(np.sum(vals * lookup(rest)))
        return total
    raise ValueError("enumeration oracle supports l <= 3")


def gamma_sum_convolution(w: np.ndarray, l: int, n=None, method="direct"):
    """Gamma_l sums via the l-fold convolution power of the weight array.

    Returns the full array over the cube |n_i| <= l*W when n is None,
    otherwise the value at mode n.
    """
    if l == 0:
        raise ValueError("l = 0 has no convolution power")
    acc = w
    for _ in range(l - 1):
        acc = signal.convolve(acc, w, mode="full", method=method)
    if n is None:
        return acc
    W_out = (acc.shape[0] - 1) // 2
    n = tuple(np.atleast_1d(n).astype(int))
    if any(abs(c) > W_out for c in n):
        return 0.0
    return float(acc[tuple(c + W_out for c in n)])


def covariance_oracle(l: int, n, d: int, spec, method="direct"):
    """Exact Gamma-sum and second moment of a Wick power coefficient.

    `spec` selects the amplitude:
        ("truncated", N, W)            sharp cutoff, sum cube half-width W
        ("mollified", kernel, delta, W) mollified at scale delta
    Returns (gamma_sum, moment) with moment = l! * gamma_sum.
    """
    if l > 3:
        raise ValueError("covariance oracle supports l <= 3")
    kind = spec[0]
    if kind == "truncated":
        _, N, W = spec
        amp = amp_truncated(d, W, N)
    elif kind == "mollified":
        _, kernel, delta, W = spec
        amp = amp_mollified(d, W, kernel, delta)
    else:
        raise ValueError(f"unknown covariance spec {spec!r}")
    w = weight_cube(d, (len(amp) - 1) // 2, amp**2)
    if l == 0:
        g = float(all(c == 0 for c in np.atleast_1d(n)))
    else:
        g = gamma_sum_convolution(w, l, n, method=method)
    return g, math.factorial(l) * g


def covariance_difference_oracle(l: int, n, d: int, amp_a, amp_b, method="direct"):
    """Exact E|<:z_a^l: - :z_b^l:, e_n>|^2 for two amplitudes of one draw.

    Uses the pairing identity
        l! [ (a^2 w)^{*l} + (b^2 w)^{*l} - 2 (a b w)^{*l} ](n),
    which reduces to the difference of Gamma-sums when a, b are nested sharp
    cutoffs.
    """
    amp_a = np.asarray(amp_a, float)
    amp_b = np.asarray(amp_b, float)
    W = (amp_a.shape[0] - 1) // 2
    waa = weight_cube(d, W, amp_a**2)
    wbb = weight_cube(d, W, amp_b**2)
    wab = weight_cube(d, W, amp_a * amp_b)
    if l == 0:
        return 0.0
    total = (
        gamma_sum_convolution(waa, l, n, method=method)
        + gamma_sum_convolution(wbb, l, n, method=method)
        - 2.0 * gamma_sum_convolution(wab, l, n, method=method)
    )
    return math.factorial(l) * total


def truncation_difference_oracle(l: int, n, d: int, N: int, M: int, method="direct"):
    """E|<:z_N^l: - :z_M^l:, e_n>|^2 as l!(sum over M - sum over N) of weights."""
    if M < N:
        raise ValueError("require M >= N")
    wM = weight_cube(d, M, amp_truncated(d, M, M))
    wN = weight_cube(d, M, amp_truncated(d, M, N))
    gM = gamma_sum_convolution(wM, l, n, method=method)
    gN = gamma_sum_convolution(wN, l, n, method=method)
    return math.factorial(l) * (gM - gN)


def time_modulus_oracle(l: int, d: int, N: int, h, n, method="direct"):
    """Exact E|<:z_N^l:(t+h) - :z_N^l:(t), e_n>|^2 (t-independent).

    Equals 2 l! [ w^{*l}(n) - (w cos(h<.>))^{*l}(n) ] with w the truncated
    weight; the cosine enters through the time-shifted pairing.
    """
    lat = Lattice(d, N)
    amp = amp_truncated(d, N, N)
    w = weight_cube(d, N, amp)
    wc = w * np.cos(h * lat.bracket())
    g = gamma_sum_convolution(w, l, n, method=method)
    gc = gamma_sum_convolution(wc, l, n, method=method)
    return 2.0 * math.factorial(l) * (g - gc)


def time_modulus_check(l: int, N: int, d: int, theta: float, h_grid, n_grid):
    """Exact time-increment moments plus the |h|^theta envelope diagnostics.

    Returns a report with the exact value table, the fitted h-exponent per
    mode (log-log regression over h_grid), and the smallest envelope
    constant C such that value <= C |h|^theta <n>^{theta - 2} everywhere.
    """
    h_grid = np.asarray(h_grid, dtype=float)
    rows = []
    slopes = {}
    c_env = 0.0
    for n in n_grid:
        vals = np.array([time_modulus_oracle(l, d, N, h, n) for h in h_grid])
        nn = np.atleast_1d(n)
        br = math.sqrt(1.0 + float(np.sum(nn.astype(float) ** 2)))
        for h, v in zip(h_grid, vals):
            rows.append({"n": tuple(int(c) for c in nn), "h": float(h), "exact": float(v)})
            if v > 0:
                c_env = max(c_env, v / (h**theta * br ** (theta - 2.0)))
        good = vals > 0
        if np.count_nonzero(good) >= 2:
            slope = np.polyfit(np.log(h_grid[good]), np.log(vals[good]), 1)[0]
            slopes[tuple(int(c) for c in nn)] = float(slope)
    return {
        "l": l,
        "N": N,
        "theta": theta,
        "rows": rows,
        "h_exponents": slopes,
        "envelope_constant": c_env,
    }


# -- Monte Carlo comparisons -------------------------------------------------


def wick_moment_mc(
    lattice: Lattice,
    N: int,
    max_l: int,
    samples: int,
    seed: int,
    t: float = 0.0,
    batch: int = 256,
):
    """Empirical per-mode second moments of <:z_N^l:, e_n> with standard errors.

    Returns {l: (mean, se)} where mean/se are arrays over the lattice cube of
    the statistics of |coefficient|^2, from `samples` independent draws.
    """
    lat = lattice
    om = lat.bracket()
    ball = lat.ball(N)
    sig = sigma_truncated(N, lat.d)
    K = lat.pad_size(max(max_l + 1, 2))
    c, s = np.cos(t * om), np.sin(t * om)

    sums = {l: np.zeros(lat.shape) for l in range(1, max_l + 1)}
    sumsq = {l: np.zeros(lat.shape) for l in range(1, max_l + 1)}
    done = 0
    chunk_id = 0
    while done < samples:
        b = min(batch, samples - done)
        rng = derive_rng(seed, "wick-mc", chunk_id)
        g0 = draw_hermitian_gaussians(lat, rng, batch=(b,))
        g1 = draw_hermitian_gaussians(lat, rng, batch=(b,))
        zc = (c * g0 + s * g1) / om * ball  # z_N(t) coefficients
        grid = grid_values(zc, lat.M, K, d=lat.d).real
        hs = hermite_all(max_l, grid, sig)
        for l in range(1, max_l + 1):
            coef = grid_to_coeffs(hs[l].astype(complex), lat.M, d=lat.d)
            m2 = np.abs(coef) ** 2
            sums[l] += m2.sum(axis=0)
            sumsq[l] += (m2**2).sum(axis=0)
        done += b
        chunk_id += 1

    out = {}
    for l in range(1, max_l + 1):
        mean = sums[l] / samples
        var = np.maximum(sumsq[l] / samples - mean**2, 0.0)
        se = np.sqrt(var / samples)
        out[l] = (mean, se)
    return out


def white_noise_functional(f: SpectralField, g0t: np.ndarray) -> np.ndarray:
    """W_f = sum_n f_hat(n) conj(g0^t(n)); real for real f, unit-normalized f."""
    axes = tuple(range(-f.lattice.d, 0))
    return np.sum(f.coeffs * np.conj(g0t), axis=axes).real


def white_noise_pairing_check(
    f: SpectralField,
    h: SpectralField,
    k: int,
    t1: float,
    t2: float,
    samples: int,
    seed: int = 0,
    batch: int = 100_000,
):
    """Empirical E[H_k(W_f^{t1}) H_k(W_h^{t2})] against k! (I(f,h)[t1-t2])^k.

    I(f,h)[t] = sum_n f_hat(n) conj(h_hat(n)) cos(t <n>); inputs must be
    L^2-normalized real fields on one lattice.
    """
    for name, fld in (("f", f), ("h", h)):
        nrm = math.sqrt(float(np.sum(np.abs(fld.coeffs) ** 2)))
        if abs(nrm - 1.0) > 1e-9:
            raise ValueError(f"{name} must be L^2-normalized, got norm {nrm}")
        if not fld.is_real(1e-9):
            raise ValueError(f"{name} must be a real field")
    lat = f.lattice
    om = lat.bracket()
    pairing = float(np.sum(f.coeffs * np.conj(h.coeffs) * np.cos((t1 - t2) * om)).real)
    exact = math.factorial(k) * pairing**k

    total = 0.0
    total_sq = 0.0
    done = 0
    chunk = 0
    while done < samples:
        b = min(batch, samples - done)
        rng = derive_rng(seed, "wn-pairing", chunk)
        g0 = draw_hermitian_gaussians(lat, rng, batch=(b,))
        g1 = draw_hermitian_gaussians(lat, rng, batch=(b,))
        w1 = white_noise_functional(f, np.cos(t1 * om) * g0 + np.sin(t1 * om) * g1)
        w2 = white_noise_functional(h, np.cos(t2 * om) * g0 + np.sin(t2 * om) * g1)
        prod = hermite_eval(k, w1) * hermite_eval(k, w2)
        total += float(np.sum(prod))
        total_sq += float(np.sum(prod**2))
        done += b
        chunk += 1
    mean = total / samples
    var = max(total_sq / samples - mean**2, 0.0)
    se = math.sqrt(var / samples)
    return {
        "k": k,
        "t1": t1,
        "t2": t2,
        "pairing": pairing,
        "exact": exact,
        "empirical": mean,
        "se": se,
        "samples": samples,
        "deviation_in_se": abs(mean - exact) / se if se > 0 else 0.0,
    }


def strichartz_tail_report(
    profile: FieldPair,
    q: float,
    r: float,
    T: float,
    lambdas,
    samples: int,
    seed: int = 0,
    time_points: int = 9,
    oversample: int = 2,
):
    """Exceedance frequencies of ||S(t) data^omega||_{L^q_T L^r_x} vs lambda.

    Diagnostic only: reports the empirical tail next to the Gaussian shape
    exp(-c lambda^2) via a slope fit in lambda^2; no constant is asserted.
    """
    lat = profile.lattice
    K = lat.pad_size(oversample)
    ts = np.linspace(-T, T, time_points)
    norms = np.empty(samples)
    for i in range(samples):
        g = GaussianSeed.draw(lat, seed, "strichartz", i)
        data = FieldPair(
            SpectralField(lat, g.g0 * np.abs(profile.pos.coeffs)),
            SpectralField(lat, g.g1 * np.abs(profile.vel.coeffs)),
        )
        vals = []
        for t in ts:
            zt = linear_flow(data, t).pos
            gv = np.abs(grid_values(zt.coeffs, lat.M, K).real)
            if math.isinf(r):
                vals.append(float(np.max(gv)))
            else:
                vals.append(float(np.mean(gv**r) ** (1.0 / r)))
        vals = np.asarray(vals)
        if math.isinf(q):
            norms[i] = float(np.max(vals))
        else:
            norms[i] = float(np.trapezoid(vals**q, ts) ** (1.0 / q))
    lambdas = np.asarray(lambdas, dtype=float)
    freq = np.array([float(np.mean(norms > lam)) for lam in lambdas])
    pos = freq > 0
    slope = None
    if np.count_nonzero(pos) >= 2:
        slope = float(np.polyfit(lambdas[pos] ** 2, np.log(freq[pos]), 1)[0])
    return {
        "q": q,
        "r": r,
        "T": T,
        "lambdas": lambdas.tolist(),
        "exceedance": freq.tolist(),
        "log_freq_slope_in_lambda_sq": slope,
        "samples": samples,
    }
