"""Hermite polynomials with a variance parameter, and Wick substitution.

H_k(x; sigma) is defined by the generating function

    exp(t x - sigma t^2 / 2) = sum_k (t^k / k!) H_k(x; sigma),

so H_0 = 1, H_1 = x, H_2 = x^2 - sigma, H_3 = x^3 - 3 sigma x, and the
leading coefficient in x is always 1.  Values are produced by the three-term
recurrence H_k = x H_{k-1} - (k-1) sigma H_{k-2}, which is numerically stable
and O(k); sigma = 0 degenerates to the plain monomial x^k.

The scaling law H_k(x; sigma) = sigma^{k/2} H_k(sigma^{-1/2} x; 1) and the
addition rule H_k(x + y; sigma) = sum_l C(k,l) H_l(y; sigma) x^{k-l} are what
turn a renormalized power of a sum into the binomial Wick expansion used by
the solvers.
"""

from __future__ import annotations

import math

import numpy as np

from .fields import SpectralField

MAX_DEGREE = 16


def hermite_eval(k: int, x, sigma: float = 1.0):
    """H_k(x; sigma) for scalar or array x.

    k must be a nonnegative integer <= 16; sigma must be >= 0.
    """
    if k < 0 or k != int(k):
        raise ValueError(f"degree must be a nonnegative integer, got {k}")
    if k > MAX_DEGREE:
        raise ValueError(f"degree {k} exceeds supported maximum {MAX_DEGREE}")
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    x = np.asarray(x)
    h_prev = np.ones_like(x, dtype=float if x.dtype.kind != "c" else complex)
    if k == 0:
        return h_prev if h_prev.ndim else h_prev.item()
    h = x.astype(h_prev.dtype)
    for deg in range(2, k + 1):
        h, h_prev = x * h - (deg - 1) * sigma * h_prev, h
    return h if h.ndim else h.item()


def hermite_all(k_max: int, x, sigma: float = 1.0):
    """List [H_0(x; sigma), ..., H_{k_max}(x; sigma)] sharing the recurrence."""
    if k_max > MAX_DEGREE:
        raise ValueError(f"degree {k_max} exceeds supported maximum {MAX_DEGREE}")
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    x = np.asarray(x, dtype=float)
    out = [np.ones_like(x)]
    if k_max >= 1:
        out.append(x.copy())
    for deg in range(2, k_max + 1):
        out.append(x * out[-1] - (deg - 1) * sigma * out[-2])
    return out


def hermite_addition_check(k: int, x: float, y: float, sigma: float = 1.0):
    """Return (lhs, rhs) of H_k(x+y; sigma) = sum_l C(k,l) H_l(y; sigma) x^{k-l}.

    Test-suite helper; the two values agree up to rounding.
    """
    if k > 8:
        raise ValueError("addition check supports k <= 8")
    lhs = hermite_eval(k, x + y, sigma)
    rhs = sum(
        math.comb(k, l) * hermite_eval(l, y, sigma) * x ** (k - l) for l in range(k + 1)
    )
    return lhs, rhs


def wick_substitute(k: int, z_powers, v: SpectralField) -> SpectralField:
    """Renormalized power of z + v: sum_l C(k,l) :z^l: v^{k-l}.

    `z_powers[l]` is the field :z^l: for l = 0..k, with z_powers[0] the
    constant-one field.  All products are formed pointwise on one padded
    grid sized for degree k + 1 content and truncated once at the end, so
    no intermediate projection or aliasing enters.
    """
    if k != 3:
        raise ValueError(f"wick_substitute is specified for k = 3, got {k}")
    if len(z_powers) < k + 1:
        raise ValueError(f"need z powers up to l = {k}, got {len(z_powers)}")
    lat = v.lattice
    for zp in z_powers[: k + 1]:
        if zp.lattice != lat:
            raise ValueError("z powers and v live on different lattices")
    one = z_powers[0]
    if abs(one.coeffs[lat.index_of((0,) * lat.d)] - 1.0) > 1e-12 or (
        float(np.sum(np.abs(one.coeffs))) - 1.0
    ) > 1e-12:
        raise ValueError("z_powers[0] must be the constant-one field")

    from .fields import grid_to_coeffs, grid_values

    K = lat.pad_size(k + 2)  # each term has degree <= k + 1 in band-M factors
    vg = grid_values(v.coeffs, lat.M, K).real
    acc = np.zeros_like(vg)
    for l in range(k + 1):
        zg = grid_values(z_powers[l].coeffs, lat.M, K).real
        acc += math.comb(k, l) * zg * vg ** (k - l)
    return SpectralField(lat, grid_to_coeffs(acc.astype(complex), lat.M))
