"""Turn experiment CSV tables into figures.

This package never recomputes any science: it consumes the CSV/JSON files
the simulation side writes and renders five figure kinds:

  growth      perturbation norm falling while the solution norm rises vs N
  margins     condition margins vs N (one line per condition)
  covariance  exact per-mode moments with Monte Carlo error bands
  slope       log-log series with least-squares slopes in the legend
  ladder      distance-vs-delta ladders per kernel and seed

Output is SVG with pinned style, no timestamps, and a fixed hash salt, so a
given input renders to identical bytes every time.  Schema problems are
reported by column name.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

KINDS = ("growth", "margins", "covariance", "slope", "ladder")

_STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 100,
    "font.size": 10,
    "svg.hashsalt": "wicklab-plots",
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "path.simplify": False,
}

REQUIRED = {
    "growth": ("N", "phi_hs", "u_hs_at_T"),
    "margins": ("N",),  # plus at least one margin_* column, checked in-render
    "covariance": ("n", "exact", "mc_mean", "mc_se"),
    "slope": ("x", "y"),
    "ladder": ("seed", "kernel", "delta", "sup_distance"),
}


class SchemaError(ValueError):
    """Input table does not match the expected columns."""


def read_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty table (no data rows)")
    return rows


def _check_columns(kind, rows, path):
    have = set(rows[0])
    missing = [c for c in REQUIRED[kind] if c not in have]
    if missing:
        raise SchemaError(f"{path}: missing column(s) {', '.join(missing)} for kind {kind!r}")
    return have


def _floats(rows, col):
    try:
        return np.array([float(r[col]) for r in rows])
    except ValueError as err:
        raise SchemaError(f"column {col!r} has a non-numeric entry: {err}") from None


def _save(fig, output):
    out = Path(output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out


def render(spec) -> Path:
    """Render one figure from a spec mapping; returns the output path.

    Spec keys: kind (one of the five), input (CSV path), output (SVG path),
    optional title / xscale / yscale overrides.
    """
    kind = spec.get("kind")
    if kind not in KINDS:
        raise SchemaError(f"unknown figure kind {kind!r}; choose from {KINDS}")
    for key in ("input", "output"):
        if key not in spec:
            raise SchemaError(f"figure spec is missing the {key!r} entry")
    rows = read_table(spec["input"])
    have = _check_columns(kind, rows, spec["input"])

    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        if kind == "growth":
            _render_growth(ax, rows, have)
        elif kind == "margins":
            _render_margins(ax, rows, have, spec["input"])
        elif kind == "covariance":
            _render_covariance(ax, rows)
        elif kind == "slope":
            _render_slope(ax, rows, have)
        else:
            _render_ladder(ax, rows)
        if spec.get("title"):
            ax.set_title(spec["title"])
        if spec.get("xscale"):
            ax.set_xscale(spec["xscale"])
        if spec.get("yscale"):
            ax.set_yscale(spec["yscale"])
        return _save(fig, spec["output"])


def _render_growth(ax, rows, have):
    N = _floats(rows, "N")
    order = np.argsort(N)
    ax.plot(N[order], _floats(rows, "phi_hs")[order], "o-", label="perturbation at t=0")
    ax.plot(N[order], _floats(rows, "u_hs_at_T")[order], "s-", label="solution at t=T")
    if "u_hs_se" in have:
        ax.errorbar(
            N[order],
            _floats(rows, "u_hs_at_T")[order],
            yerr=_floats(rows, "u_hs_se")[order],
            fmt="none",
            ecolor="gray",
            capsize=3,
        )
    if "xi1_hs" in have:
        ax.plot(N[order], _floats(rows, "xi1_hs")[order], "^--", label="growth term")
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("H^s norm")
    ax.legend()


def _render_margins(ax, rows, have, path):
    margin_cols = sorted(c for c in have if c.startswith("margin_"))
    if not margin_cols:
        raise SchemaError(f"{path}: missing column(s) margin_* for kind 'margins'")
    N = _floats(rows, "N")
    order = np.argsort(N)
    for col in margin_cols:
        ax.plot(N[order], _floats(rows, col)[order], "o-", label=col.removeprefix("margin_"))
    ax.axhline(1.0, color="k", lw=0.8)
    ax.set_xscale("log", base=2)
    ax.set_yscale("log")
    ax.set_xlabel("N")
    ax.set_ylabel("condition margin")
    ax.legend(ncols=2)


def _render_covariance(ax, rows):
    idx = np.arange(len(rows))
    exact = _floats(rows, "exact")
    mean = _floats(rows, "mc_mean")
    se = _floats(rows, "mc_se")
    ax.plot(idx, exact, "k-", label="exact lattice sum")
    ax.errorbar(idx, mean, yerr=3 * se, fmt=".", ms=4, label="Monte Carlo (3 SE)")
    ax.set_xlabel("mode index (row order)")
    ax.set_ylabel("second moment")
    ax.legend()


def _render_slope(ax, rows, have):
    series_col = "series" if "series" in have else None
    groups = {}
    for r in rows:
        groups.setdefault(r[series_col] if series_col else "", []).append(r)
    for name, grp in sorted(groups.items()):
        x = np.array([float(r["x"]) for r in grp])
        y = np.array([float(r["y"]) for r in grp])
        order = np.argsort(x)
        x, y = x[order], y[order]
        good = (x > 0) & (y > 0)
        label = name or "series"
        if np.count_nonzero(good) >= 2:
            slope = np.polyfit(np.log(x[good]), np.log(y[good]), 1)[0]
            label = f"{label} (slope {slope:.2f})"
        ax.plot(x, y, "o-", label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.legend()


def _render_ladder(ax, rows):
    groups = {}
    for r in rows:
        groups.setdefault((r["kernel"], r["seed"]), []).append(r)
    for (kernel, seed), grp in sorted(groups.items()):
        deltas = np.array([float(r["delta"]) for r in grp])
        sups = np.array([float(r["sup_distance"]) for r in grp])
        pairs = sorted(set(zip(deltas, sups)), reverse=True)
        d = np.array([p[0] for p in pairs])
        v = np.array([p[1] for p in pairs])
        ax.plot(d, v, "o-", alpha=0.7, label=f"{kernel} seed {seed}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.invert_xaxis()
    ax.set_xlabel("mollification scale delta")
    ax.set_ylabel("sup_t distance")
    if len(groups) <= 8:
        ax.legend(fontsize=7)
