"""Ordered ternary trees and the tree-indexed power series of the cubic flow.

A tree is either a leaf or a node with exactly three ordered children; a tree
with j internal nodes has 3j + 1 nodes and 2j + 1 leaves, and the number of
such trees is the Fuss-Catalan number C(3j, j) / (2j + 1).

The substitution map turns a tree into a multilinear term of the solution:
a leaf becomes the free evolution S(t)(u0, u1), and an internal node becomes
the Duhamel operator

    I[a, b, c](t) = -int_0^t sin((t-s)<grad>)/<grad> (a b c)(s) ds

applied to its three children.  The generation-j sum of all such terms is the
degree-(2j + 1) coefficient of the solution's expansion in the data, and the
partial sums converge to the solution on the Wiener-algebra horizon.

Trees are nested tuples (hashable), so sub-term evaluations are shared both
inside one tree and across the trees of a generation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .fields import FieldPair, SpectralField, fourier_lebesgue_norm, grid_to_coeffs, grid_values
from .gaussian import linear_flow

LEAF = None
MAX_GENERATION = 6


def enumerate_trees(j: int):
    """All ordered ternary trees with j internal nodes, canonically ordered."""
    if j < 0 or j != int(j):
        raise ValueError(f"generation must be a nonnegative integer, got {j}")
    if j > MAX_GENERATION:
        raise ValueError(f"generation {j} exceeds the supported maximum {MAX_GENERATION}")
    return _trees(int(j))


def _trees(j, _cache={0: (LEAF,)}):
    if j in _cache:
        return _cache[j]
    out = []
    for j1 in range(j):
        for j2 in range(j - j1):
            j3 = j - 1 - j1 - j2
            for a in _trees(j1):
                for b in _trees(j2):
                    for c in _trees(j3):
                        out.append((a, b, c))
    _cache[j] = tuple(out)
    return _cache[j]


def tree_count(j: int) -> int:
    """Fuss-Catalan count C(3j, j) / (2j + 1); cross-checks the enumeration."""
    return math.comb(3 * j, j) // (2 * j + 1)


def generations(tree) -> int:
    if tree is LEAF:
        return 0
    return 1 + sum(generations(c) for c in tree)


@dataclass(frozen=True)
class PicardTerm:
    """One tree's multilinear term, cached at the requested times."""

    tree: tuple | None
    times: tuple
    values: tuple  # SpectralField per time

    def at(self, t):
        for tt, v in zip(self.times, self.values):
            if abs(tt - t) <= 1e-12:
                return v
        raise KeyError(f"term not evaluated at t = {t}")


class TreeEvaluator:
    """Evaluates tree terms for fixed data, sharing leaf and sub-term caches.

    Inner time integrals use composite Gauss-Legendre panels, doubled until
    the Wiener-norm change relative to the result is below the node's
    tolerance (relative, so the criterion is data-scale invariant); the
    tolerance budget shrinks geometrically with depth.
    """

    def __init__(self, data: FieldPair, tol=1e-9, mass=1.0, max_panels=128, child_tol_ratio=0.25):
        self.data = data
        self.lattice = data.lattice
        self.tol = tol
        self.mass = mass
        self.max_panels = max_panels
        self.child_tol_ratio = child_tol_ratio
        self._om = self.lattice.bracket(mass)
        self._om_max = float(np.max(self._om))
        self._K = self.lattice.pad_size(4)
        self._leaf = {}
        self._nodes = {}
        self._glx, self._glw = leggauss(8)

    def _leaf_coeffs(self, s):
        key = round(s, 14)
        hit = self._leaf.get(key)
        if hit is None:
            hit = linear_flow(self.data, s, self.mass).pos.coeffs
            self._leaf[key] = hit
        return hit

    def _triple_product(self, a, b, c):
        M = self.lattice.M
        ga = grid_values(a, M, self._K).real
        gb = grid_values(b, M, self._K).real
        gc = grid_values(c, M, self._K).real
        return grid_to_coeffs((ga * gb * gc).astype(complex), M, d=self.lattice.d)

    def value(self, tree, t, tol=None):
        """Coefficient array of the tree's term at time t."""
        if tree is LEAF:
            return self._leaf_coeffs(t)
        tol = self.tol if tol is None else tol
        key = (tree, round(t, 14))
        hit = self._nodes.get(key)
        if hit is not None:
            return hit

        child_tol = tol * self.child_tol_ratio

        def integrand(s):
            vals = [self.value(c, s, child_tol) for c in tree]
            return self._triple_product(*vals)

        def integrate(panels):
            edges = np.linspace(0.0, t, panels + 1)
            acc = np.zeros(self.lattice.shape, dtype=complex)
            for a, b in zip(edges[:-1], edges[1:]):
                pts = (self._glx + 1.0) * (b - a) / 2.0 + a
                wts = self._glw * (b - a) / 2.0
                for s, w in zip(pts, wts):
                    kern = (t - s) * np.sinc((t - s) * self._om / math.pi)
                    acc -= w * kern * integrand(float(s))
            return acc

        panels = max(1, math.ceil(abs(t) * self._om_max / 4.0))
        prev = integrate(panels)
        while True:
            panels *= 2
            if panels > self.max_panels:
                raise RuntimeError(
                    f"tree quadrature did not reach tol={tol} within {self.max_panels} panels"
                )
            cur = integrate(panels)
            scale = max(float(np.sum(np.abs(cur))), 1e-300)
            if float(np.sum(np.abs(cur - prev))) <= tol * scale:
                break
            prev = cur

        self._nodes[key] = cur
        return cur

    def field(self, tree, t, tol=None) -> SpectralField:
        return SpectralField(self.lattice, self.value(tree, t, tol))


def evaluate_term(tree, data: FieldPair, t_grid, tol=1e-9, mass=1.0, evaluator=None):
    """Evaluate one tree at the times in t_grid; returns a PicardTerm."""
    ev = evaluator or TreeEvaluator(data, tol=tol, mass=mass)
    vals = tuple(ev.field(tree, float(t)) for t in t_grid)
    return PicardTerm(tree, tuple(float(t) for t in t_grid), vals)


def xi_sum(j: int, data: FieldPair, t: float, tol=1e-9, mass=1.0, evaluator=None):
    """Generation-j term of the expansion: the sum over all j-trees at time t."""
    ev = evaluator or TreeEvaluator(data, tol=tol, mass=mass)
    acc = np.zeros(data.lattice.shape, dtype=complex)
    for tree in enumerate_trees(j):
        acc += ev.value(tree, t)
    return SpectralField(data.lattice, acc)


def partial_sum(J: int, data: FieldPair, t: float, tol=1e-9, mass=1.0):
    """sum_{j <= J} of the generation terms at time t, sharing one cache."""
    ev = TreeEvaluator(data, tol=tol, mass=mass)
    acc = np.zeros(data.lattice.shape, dtype=complex)
    for j in range(J + 1):
        for tree in enumerate_trees(j):
            acc += ev.value(tree, t)
    return SpectralField(data.lattice, acc)


def xi_norm_table(data: FieldPair, j_max: int, t_grid, tol=1e-9):
    """Wiener norms of the generation terms over a time grid.

    Rows carry (x, y, series) = (t, ||Xi_j(t)||_{FL1}, j), the layout the
    slope figures consume.
    """
    ev = TreeEvaluator(data, tol=tol)
    rows = []
    for j in range(j_max + 1):
        for t in np.atleast_1d(t_grid):
            f = xi_sum(j, data, float(t), evaluator=ev)
            rows.append({"x": float(t), "y": fourier_lebesgue_norm(f, 0, 1), "series": f"j={j}"})
    return rows
