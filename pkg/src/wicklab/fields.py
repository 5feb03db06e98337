"""Real fields on the torus T^d (d = 1, 2) as truncated Fourier series.

A field u is stored through its coefficients u_hat(n) on the symmetric mode
lattice {n : |n_i| <= M}, with the convention

    u(x) = sum_n u_hat(n) e^{i n.x},    <e_n, e_m> = delta_{nm},

so the torus measure is normalized and Plancherel reads
||u||_{L^2}^2 = sum_n |u_hat(n)|^2.  Real-valued fields satisfy the Hermitian
constraint u_hat(-n) = conj(u_hat(n)).  The bracket weight is
<n> = sqrt(1 + |n|^2).

Products are evaluated by zero-padded transforms sized so that cubic products
of band-limited fields pick up no aliasing error before truncation back onto
the lattice.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

_KERNELS = ("gaussian-bump", "fejer", "tent")

_FFT_WORKERS = 1


def set_fft_workers(n: int):
    """Thread budget for the transforms; results are worker-independent."""
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(n))


@dataclass(frozen=True)
class Lattice:
    """Symmetric mode lattice {|n_i| <= M} on T^d with cached <n> weights."""

    d: int
    M: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if self.M < 0:
            raise ValueError("cutoff M must be nonnegative")

    @property
    def shape(self):
        return (2 * self.M + 1,) * self.d

    @property
    def size(self):
        return (2 * self.M + 1) ** self.d

    def axis_modes(self):
        """Mode values -M..M along one axis (index i holds n = i - M)."""
        return np.arange(-self.M, self.M + 1)

    def mode_grids(self):
        """Tuple of d arrays of shape `shape` holding the mode coordinates."""
        ax = self.axis_modes()
        if self.d == 1:
            return (ax,)
        return tuple(np.meshgrid(ax, ax, indexing="ij"))

    def abs_sq(self):
        """|n|^2 per mode."""
        grids = self.mode_grids()
        out = np.zeros(self.shape)
        for g in grids:
            out = out + g.astype(float) ** 2
        return out

    def bracket(self, mass: float = 1.0):
        """<n>_m = sqrt(mass + |n|^2); the default mass 1 gives <n>."""
        return np.sqrt(mass + self.abs_sq())

    def ball(self, N):
        """Boolean mask of the Euclidean ball |n| <= N."""
        return self.abs_sq() <= N * N + 1e-9

    def index_of(self, n):
        """Array index of mode n (tuple or int for d=1)."""
        if self.d == 1:
            if np.ndim(n) > 0:
                n = n[0]
            return int(n) + self.M
        return (int(n[0]) + self.M, int(n[1]) + self.M)

    def pad_size(self, factor: int = 4):
        """Grid length per axis that resolves degree-`factor - 1` products."""
        return sfft.next_fast_len(factor * self.M + 1, real=False)


@dataclass(frozen=True)
class SpectralField:
    """Real field on the torus given by Hermitian-symmetric coefficients."""

    lattice: Lattice
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.coeffs.shape != self.lattice.shape:
            raise ValueError(
                f"coefficient shape {self.coeffs.shape} does not match "
                f"lattice shape {self.lattice.shape}"
            )

    @classmethod
    def zero(cls, lattice):
        return cls(lattice, np.zeros(lattice.shape, dtype=complex))

    @classmethod
    def one(cls, lattice):
        c = np.zeros(lattice.shape, dtype=complex)
        c[lattice.index_of((0,) * lattice.d)] = 1.0
        return cls(lattice, c)

    @classmethod
    def from_modes(cls, lattice, entries):
        """Build a field from {mode: coefficient} without symmetrizing."""
        c = np.zeros(lattice.shape, dtype=complex)
        for n, v in entries.items():
            c[lattice.index_of(n)] = v
        return cls(lattice, c)

    def conj_reverse(self):
        """Coefficients of the complex conjugate field: conj(c(-n))."""
        rev = self.coeffs[tuple(slice(None, None, -1) for _ in range(self.lattice.d))]
        return np.conj(rev)

    def hermitian_defect(self):
        """Max |c(-n) - conj(c(n))|; zero for real-valued fields."""
        return float(np.max(np.abs(self.coeffs - self.conj_reverse())))

    def is_real(self, tol=1e-10):
        return self.hermitian_defect() <= tol * max(1.0, float(np.max(np.abs(self.coeffs))))

    def __add__(self, other):
        _check_same_lattice(self, other)
        return SpectralField(self.lattice, self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same_lattice(self, other)
        return SpectralField(self.lattice, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.lattice, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.lattice, -self.coeffs)

    def to_record(self, tol=0.0):
        """Self-describing record {d, M, modes: [(n..., re, im)]} of nonzero modes."""
        lat = self.lattice
        modes = []
        it = np.ndindex(*lat.shape)
        for idx in it:
            v = self.coeffs[idx]
            if abs(v) > tol:
                n = tuple(int(i) - lat.M for i in idx)
                modes.append([*n, float(v.real), float(v.imag)])
        return {"schema": "wicklab.field.v1", "d": lat.d, "M": lat.M, "modes": modes}

    def to_json(self, tol=0.0):
        return json.dumps(self.to_record(tol), sort_keys=True)

    @classmethod
    def from_record(cls, rec):
        if rec.get("schema") != "wicklab.field.v1":
            raise ValueError(f"unknown field schema {rec.get('schema')!r}")
        lat = Lattice(int(rec["d"]), int(rec["M"]))
        c = np.zeros(lat.shape, dtype=complex)
        for row in rec["modes"]:
            *n, re, im = row
            c[lat.index_of(tuple(n))] = re + 1j * im
        return cls(lat, c)

    @classmethod
    def from_json(cls, text):
        return cls.from_record(json.loads(text))


@dataclass(frozen=True)
class FieldPair:
    """Position/velocity pair (u, du/dt) sharing one lattice."""

    pos: SpectralField
    vel: SpectralField

    def __post_init__(self):
        if self.pos.lattice != self.vel.lattice:
            raise ValueError("position and velocity live on different lattices")

    @property
    def lattice(self):
        return self.pos.lattice

    @classmethod
    def zero(cls, lattice):
        return cls(SpectralField.zero(lattice), SpectralField.zero(lattice))

    def __add__(self, other):
        return FieldPair(self.pos + other.pos, self.vel + other.vel)

    def __sub__(self, other):
        return FieldPair(self.pos - other.pos, self.vel - other.vel)

    def __mul__(self, scalar):
        return FieldPair(self.pos * scalar, self.vel * scalar)

    __rmul__ = __mul__

    def sobolev_norm(self, s):
        """Phase-space norm (||u||_{H^s}^2 + ||du/dt||_{H^{s-1}}^2)^{1/2}."""
        return math.hypot(sobolev_norm(self.pos, s), sobolev_norm(self.vel, s - 1))

    def fourier_lebesgue_norm(self, s, p):
        """Pair norm ||u||_{FL^{s,p}} + ||du/dt||_{FL^{s-1,p}}."""
        return fourier_lebesgue_norm(self.pos, s, p) + fourier_lebesgue_norm(self.vel, s - 1, p)


def _check_same_lattice(f, g):
    if f.lattice != g.lattice:
        raise ValueError("fields live on different lattices")


def sobolev_norm(f: SpectralField, s: float) -> float:
    """H^s norm ( sum_n <n>^{2s} |f_hat(n)|^2 )^{1/2}."""
    w = f.lattice.bracket() ** (2.0 * s)
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def fourier_lebesgue_norm(f: SpectralField, s: float, p: float) -> float:
    """Fourier-Lebesgue norm || <n>^s f_hat ||_{l^p}; p=inf takes the sup.

    (s, p) = (0, 1) is the Wiener-algebra norm.
    """
    if not (p >= 1):
        raise ValueError(f"p must be >= 1, got {p}")
    a = f.lattice.bracket() ** s * np.abs(f.coeffs)
    if math.isinf(p):
        return float(np.max(a))
    return float(np.sum(a**p) ** (1.0 / p))


def multiplier_apply(f: SpectralField, m) -> SpectralField:
    """Apply a Fourier multiplier, given as mode -> complex or a coeff array.

    Hermitian symmetry is preserved whenever m(-n) = conj(m(n)).
    """
    if callable(m):
        grids = f.lattice.mode_grids()
        if f.lattice.d == 1:
            mm = np.vectorize(lambda a: m((int(a),)))(grids[0]).astype(complex)
        else:
            mm = np.vectorize(lambda a, b: m((int(a), int(b))))(*grids).astype(complex)
    else:
        mm = np.asarray(m, dtype=complex)
    return SpectralField(f.lattice, f.coeffs * mm)


def project(f: SpectralField, N) -> SpectralField:
    """Frequency projection onto the Euclidean ball |n| <= N."""
    return SpectralField(f.lattice, f.coeffs * f.lattice.ball(N))


def pair_map(pair: FieldPair, fn) -> FieldPair:
    return FieldPair(fn(pair.pos), fn(pair.vel))


# -- physical-grid transforms ------------------------------------------------
#
# Coefficients c(n), |n_i| <= M, are placed on a K-point grid (K odd not
# required) via the inverse DFT; grid values of a real field come out real up
# to rounding.  K >= 4M + 1 makes cubic products alias-free on readback.


def grid_values(coeffs: np.ndarray, M: int, K: int, d: int | None = None) -> np.ndarray:
    """Evaluate sum_n c(n) e^{i n.x} on the uniform K^d grid.

    Leading axes of `coeffs` beyond the last d are treated as a batch.
    """
    if d is None:
        d = coeffs.ndim
    buf = np.zeros(coeffs.shape[:-d] + (K,) * d, dtype=complex)
    idx = np.arange(-M, M + 1) % K  # DFT slot of mode n is n mod K
    if d == 1:
        buf[..., idx] = coeffs
    else:
        buf[..., idx[:, None], idx[None, :]] = coeffs
    axes = tuple(range(-d, 0))
    # ifft uses 1/K^d; coefficients are plain Fourier coefficients, so scale back
    return sfft.ifftn(buf, axes=axes, workers=_FFT_WORKERS) * (K**d)


def grid_to_coeffs(values: np.ndarray, M: int, d: int | None = None) -> np.ndarray:
    """Read coefficients for |n_i| <= M off a K^d grid (K > 2M assumed)."""
    if d is None:
        d = values.ndim
    K = values.shape[-1]
    axes = tuple(range(-d, 0))
    buf = sfft.fftn(values, axes=axes, workers=_FFT_WORKERS) / (K**d)
    idx = np.arange(-M, M + 1) % K
    if d == 1:
        return buf[..., idx]
    return buf[..., idx[:, None], idx[None, :]]


def to_grid(f: SpectralField, oversample: int = 4) -> np.ndarray:
    """Real physical-grid samples of f on the oversampled grid."""
    K = f.lattice.pad_size(oversample)
    return grid_values(f.coeffs, f.lattice.M, K).real


def grid_sup(f: SpectralField, s: float = 0.0, oversample: int = 4) -> float:
    """Sup over the oversampled grid of <grad>^s f; the W^{s,inf} proxy."""
    g = f if s == 0.0 else SpectralField(f.lattice, f.coeffs * f.lattice.bracket() ** s)
    return float(np.max(np.abs(to_grid(g, oversample))))


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product, exact truncated coefficient convolution.

    Computed on a zero-padded grid large enough that no aliasing image can
    reach the retained band even for a follow-up product (cubic budget).
    """
    _check_same_lattice(f, g)
    lat = f.lattice
    K = lat.pad_size(4)
    a = grid_values(f.coeffs, lat.M, K)
    b = grid_values(g.coeffs, lat.M, K)
    return SpectralField(lat, grid_to_coeffs(a * b, lat.M))


def convolve_brute(f: SpectralField, g: SpectralField) -> SpectralField:
    """O(M^{2d}) direct convolution oracle for dealiased_product."""
    _check_same_lattice(f, g)
    lat = f.lattice
    out = np.zeros(lat.shape, dtype=complex)
    side = 2 * lat.M + 1
    fc, gc = f.coeffs, g.coeffs
    if lat.d == 1:
        for i in range(side):
            for j in range(side):
                k = i + j - lat.M
                if 0 <= k < side:
                    out[k] += fc[i] * gc[j]
    else:
        for i1 in range(side):
            for i2 in range(side):
                if fc[i1, i2] == 0:
                    continue
                for j1 in range(side):
                    k1 = i1 + j1 - lat.M
                    if not (0 <= k1 < side):
                        continue
                    for j2 in range(side):
                        k2 = i2 + j2 - lat.M
                        if 0 <= k2 < side:
                            out[k1, k2] += fc[i1, i2] * gc[j1, j2]
    return SpectralField(lat, out)


# -- mollification -----------------------------------------------------------
#
# A mollification kernel rho is a probability density supported in
# (-1/2, 1/2]^d; mollifying at scale delta multiplies coefficient n by
# rho_hat(delta n), where rho_hat is the d-fold tensor power of a 1d profile
# with rho_hat(0) = 1 exactly.  Profiles (1d, closed form, genuinely
# different shapes, all supported in [-1/2, 1/2]):
#
#   tent          triangle:            sinc^2(xi/4)
#   fejer         raised cosine:       sinc(xi/2) pi^2 / (pi^2 - (xi/2)^2)
#   gaussian-bump truncated Gaussian (w = 1/8), erf-normalized


def _sinc(x):
    # sin(x)/x with the removable singularity
    return np.sinc(np.asarray(x, dtype=float) / np.pi)


def kernel_hat_1d(kernel: str, xi):
    """1d kernel profile rho_hat(xi); exact 1 at xi = 0."""
    xi = np.asarray(xi, dtype=float)
    if kernel == "tent":
        return _sinc(xi / 4.0) ** 2
    if kernel == "fejer":
        u = xi / 2.0
        # sinc(u) pi^2/(pi^2 - u^2) has removable points (value 1/2) at u = +-pi
        near = np.isclose(np.abs(u), math.pi, rtol=0, atol=1e-8)
        den = np.where(near, 1.0, math.pi**2 - u**2)
        return np.where(near, 0.5, _sinc(u) * math.pi**2 / den)
    if kernel == "gaussian-bump":
        from scipy.special import erf

        w, h = 1.0 / 8.0, 0.5
        # integral of exp(-x^2/(2 w^2)) e^{-i xi x} over [-h, h], normalized at 0
        zp = (h / w + 1j * w * xi) / math.sqrt(2.0)
        zm = (h / w - 1j * w * xi) / math.sqrt(2.0)
        num = np.exp(-(w * xi) ** 2 / 2.0) * (erf(zp) + erf(zm))
        den = 2.0 * erf(h / (w * math.sqrt(2.0)))
        return (num / den).real
    raise ValueError(f"unknown kernel {kernel!r}; choose from {_KERNELS}")


def kernel_hat(kernel: str, lattice: Lattice, delta: float) -> np.ndarray:
    """rho_hat(delta n) on the lattice (tensor product across axes)."""
    ax = kernel_hat_1d(kernel, delta * lattice.axis_modes())
    if lattice.d == 1:
        return ax
    return np.outer(ax, ax)


def mollify(f: SpectralField, kernel: str, delta: float) -> SpectralField:
    """Convolve with rho_delta: multiply coefficients by rho_hat(delta n)."""
    if not (0.0 < delta <= 1.0):
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    return SpectralField(f.lattice, f.coeffs * kernel_hat(kernel, f.lattice, delta))
