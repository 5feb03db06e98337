"""Time integration of the wave equation variants on the mode lattice.

All variants share the abstract form

    d^2/dt^2 u + (m - Lap) u + F(u, t) = 0,

whose mild solution is

    u(t) = S(t)(u0, u1) - int_0^t sin((t-s) om)/om F(s) ds   (per mode),

with om = sqrt(m + |n|^2).  The stepper applies the exact linear propagator
and corrects with the Duhamel integral evaluated by collocation: the
nonlinearity is interpolated at Gauss-Legendre nodes inside the step and
integrated against the sin/cos kernels exactly (Filon weights, precomputed
per step size), with a fixed small number of Picard sweeps to converge the
node values.  There is no CFL restriction; accuracy is set by the node count
and sweep count.

Variants:
  plain            F = u^3 (defocusing cubic; mass m configurable)
  truncated_wick   F = P_N H_3(P_N u; sigma_N)  (direct renormalized flow)
  wick             F = P H_k(z(t) + u; sigma(t)) for a supplied Wick source;
                   covers the residual equation for v = u - z, the smooth-data
                   renormalized equation, and the randomly perturbed equation
  linear           F = 0 (exact rotation; used as a consistency limit)
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.legendre import leggauss

from .fields import (
    FieldPair,
    Lattice,
    SpectralField,
    grid_to_coeffs,
    grid_values,
    sobolev_norm,
)
from .gaussian import WickSource
from .hermite import hermite_eval


def duhamel(source, t: float, lattice: Lattice, mass=1.0, tol=1e-9, max_panels=256):
    """-int_0^t sin((t-s) om)/om f(s) ds for a time-indexed coefficient source.

    `source(s)` must return the coefficient array of f(s) on `lattice`.
    Composite Gauss-Legendre panels are doubled until the Wiener-norm change
    relative to the result drops below `tol`; failure to converge raises an
    accuracy error.
    """
    om = lattice.bracket(mass)
    om_max = float(np.max(om))
    gl_x, gl_w = leggauss(8)

    def integrate(panels):
        edges = np.linspace(0.0, t, panels + 1)
        acc = np.zeros(lattice.shape, dtype=complex)
        for a, b in zip(edges[:-1], edges[1:]):
            pts = (gl_x + 1.0) * (b - a) / 2.0 + a
            wts = gl_w * (b - a) / 2.0
            for s, w in zip(pts, wts):
                kern = (t - s) * np.sinc((t - s) * om / math.pi)
                acc -= w * kern * np.asarray(source(float(s)))
        return acc

    panels = max(1, math.ceil(abs(t) * om_max / 4.0))
    prev = integrate(panels)
    while panels <= max_panels:
        panels *= 2
        cur = integrate(panels)
        scale = max(float(np.sum(np.abs(cur))), 1e-300)
        if float(np.sum(np.abs(cur - prev))) <= tol * scale:
            return SpectralField(lattice, cur)
        prev = cur
    raise RuntimeError(f"duhamel quadrature did not reach tol={tol} within {max_panels} panels")


class BlowupError(RuntimeError):
    """Raised when the Wiener-norm guard trips; carries the last valid time."""

    def __init__(self, t_last, norm):
        super().__init__(f"solution norm {norm:.3e} exceeded the blowup guard at t = {t_last}")
        self.t_last = t_last
        self.norm = norm


BLOWUP_GUARD = 1e8  # on the Wiener norm, which dominates the grid sup


@dataclass(frozen=True)
class EquationSpec:
    """Which equation to integrate; see the module docstring for the forms."""

    kind: str  # "plain" | "truncated_wick" | "wick" | "linear"
    k: int = 3
    mass: float = 1.0
    N: int | None = None  # frequency projection for the truncated variants
    source: WickSource | None = None
    sigma: float | None = None  # overrides sigma_N for truncated_wick

    @classmethod
    def plain_cubic(cls, mass=1.0):
        return cls(kind="plain", k=3, mass=mass)

    @classmethod
    def linear(cls, mass=1.0):
        return cls(kind="linear", mass=mass)

    @classmethod
    def truncated_wick(cls, N, sigma=None):
        # sigma defaults to sigma_N computed by the stepper from N
        return cls(kind="truncated_wick", k=3, N=N, sigma=sigma)

    @classmethod
    def residual_wick(cls, source: WickSource, N=None, k=3):
        return cls(kind="wick", k=k, N=N, source=source)

    @classmethod
    def sigma_renormalized(cls, source: WickSource, k=3):
        if k % 2 == 0 or k < 3:
            raise ValueError("the renormalized flow is defined for odd k >= 3")
        return cls(kind="wick", k=k, source=source)


@dataclass
class Trajectory:
    """Recorded times, per-time diagnostics, and checkpoint states."""

    times: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)
    checkpoints: list = field(default_factory=list)  # (t, FieldPair)
    blown_up: bool = False
    t_last: float = 0.0

    def column(self, name):
        return np.asarray(self.diagnostics[name])

    def state_at(self, t, tol=1e-9):
        for tc, st in self.checkpoints:
            if abs(tc - t) <= tol:
                return st
        raise KeyError(f"no checkpoint at t = {t}")


def energy(state: FieldPair, mass: float = 1.0, k: int = 3) -> float:
    """Hamiltonian (1/2)int(u^2 + |grad u|^2) + (1/2)int v^2 + int u^{k+1}/(k+1).

    The gradient part uses the operator mass, so the value is conserved by
    the plain flow with that mass.  Exact on the dealiased grid.
    """
    lat = state.lattice
    om2 = mass + lat.abs_sq()
    quad = 0.5 * float(np.sum(om2 * np.abs(state.pos.coeffs) ** 2))
    kin = 0.5 * float(np.sum(np.abs(state.vel.coeffs) ** 2))
    K = lat.pad_size(k + 1)
    grid = grid_values(state.pos.coeffs, lat.M, K).real
    pot = float(np.mean(grid ** (k + 1))) / (k + 1)
    return quad + kin + pot


def _gl_nodes(q):
    x, w = leggauss(q)
    return (x + 1.0) / 2.0, w / 2.0  # on (0, 1)


def _lagrange_matrix(nodes, points):
    """L[j, p] = j-th Lagrange basis (on `nodes`) evaluated at `points`."""
    nodes = np.asarray(nodes)
    points = np.asarray(points)
    L = np.ones((len(nodes), len(points)))
    for j, xj in enumerate(nodes):
        for mth, xm in enumerate(nodes):
            if mth != j:
                L[j] *= (points - xm) / (xj - xm)
    return L


class Stepper:
    """Collocation stepper for one equation spec, lattice, and step size."""

    def __init__(self, spec: EquationSpec, lattice: Lattice, dt: float, q=3, npic=3):
        if dt == 0:
            raise ValueError("dt must be nonzero")
        self.spec = spec
        self.lattice = lattice
        self.dt = float(dt)
        self.q = int(q)
        self.npic = int(npic)
        self.K = lattice.pad_size(4) if spec.k == 3 else lattice.pad_size(spec.k + 1)
        self._om = lattice.bracket(spec.mass)
        self._ball = lattice.ball(spec.N) if spec.N is not None else None
        self._sigma_N = None
        if spec.kind == "truncated_wick":
            self._sigma_N = spec.sigma
            if self._sigma_N is None:
                from .gaussian import sigma_truncated

                self._sigma_N = sigma_truncated(spec.N, lattice.d)
        if spec.kind == "wick" and spec.source is None:
            raise ValueError("the wick variant needs a WickSource")
        if spec.kind in ("plain", "truncated_wick") and spec.k != 3:
            raise ValueError("only the renormalized-with-source flow admits k > 3")
        self._zgrid_cache = {}
        self._build_tables()

    # -- precomputed tables ---------------------------------------------------

    def _build_tables(self):
        lat, dt, q = self.lattice, self.dt, self.q
        x, _ = _gl_nodes(q)
        self.x_nodes = x
        targets = np.append(x, 1.0)

        om2_int = np.rint(lat.abs_sq()).astype(np.int64)
        uniq, inv = np.unique(om2_int, return_inverse=True)
        om_u = np.sqrt(self.spec.mass + uniq.astype(float))
        inv = inv.reshape(lat.shape)

        # free-flight factors at each node/target, full lattice shape
        om = self._om
        self._cos = [np.cos(dt * xt * om) for xt in targets]
        self._sinc = [dt * xt * np.sinc(dt * xt * om / math.pi) for xt in targets]
        self._omsin = [om * np.sin(dt * xt * om) for xt in targets]

        if self.spec.kind == "linear":
            self.Ws = self.Wc = None
            return

        # Filon weights on unique frequencies:
        #   Ws[t, j] = dt * int_0^{x_t} sin((x_t - xi) dt om)/om L_j(xi) dxi
        #   Wc[j]    = dt * int_0^{1}  cos((1  - xi) dt om)   L_j(xi) dxi
        gl_x, gl_w = leggauss(12)
        om_max = float(om_u[-1])
        Ws_u = np.zeros((q + 1, q, om_u.size))
        Wc_u = np.zeros((q, om_u.size))
        zero = om_u == 0.0
        for ti, xt in enumerate(targets):
            panels = max(1, math.ceil(abs(dt) * om_max * xt / 3.0))
            edges = np.linspace(0.0, xt, panels + 1)
            pts, wts = [], []
            for a, b in zip(edges[:-1], edges[1:]):
                pts.append((gl_x + 1.0) * (b - a) / 2.0 + a)
                wts.append(gl_w * (b - a) / 2.0)
            pts = np.concatenate(pts)
            wts = np.concatenate(wts)
            Lb = _lagrange_matrix(self.x_nodes, pts)  # (q, P)
            phase = (xt - pts)[:, None] * dt * om_u[None, :]  # (P, U)
            kern_s = np.empty_like(phase)
            nz = ~zero
            kern_s[:, nz] = np.sin(phase[:, nz]) / om_u[None, nz]
            if np.any(zero):
                kern_s[:, zero] = (xt - pts)[:, None] * dt
            for j in range(q):
                Ws_u[ti, j] = dt * np.einsum("p,p,pu->u", wts, Lb[j], kern_s)
            if ti == q:  # target row also carries the cosine kernel
                kern_c = np.cos(phase)
                for j in range(q):
                    Wc_u[j] = dt * np.einsum("p,p,pu->u", wts, Lb[j], kern_c)

        self.Ws = Ws_u[:, :, inv]  # (q+1, q, *lattice.shape)
        self.Wc = Wc_u[:, inv]

    # -- nonlinearity ----------------------------------------------------------

    def _zgrid(self, t):
        key = round(t, 12)
        hit = self._zgrid_cache.get(key)
        if hit is None:
            hit = self.spec.source.z_grid(t, self.K)
            if len(self._zgrid_cache) > 64:
                self._zgrid_cache.clear()
            self._zgrid_cache[key] = hit
        return hit

    def _nonlinearity(self, u_hat, t):
        """Fourier coefficients of F(u, t), dealiased on the padded grid."""
        spec, lat = self.spec, self.lattice
        if spec.kind == "linear":
            return None
        if spec.kind == "plain":
            grid = grid_values(u_hat, lat.M, self.K).real
            return grid_to_coeffs((grid**3).astype(complex), lat.M, d=lat.d)
        if spec.kind == "truncated_wick":
            ph = u_hat * self._ball
            grid = grid_values(ph, lat.M, self.K).real
            G = hermite_eval(spec.k, grid, self._sigma_N)
            F = grid_to_coeffs(G.astype(complex), lat.M, d=lat.d)
            return F * self._ball
        if spec.kind == "wick":
            uh = u_hat if self._ball is None else u_hat * self._ball
            grid = grid_values(uh, lat.M, self.K).real
            G = hermite_eval(spec.k, self._zgrid(t) + grid, self.spec.source.sigma(t))
            F = grid_to_coeffs(G.astype(complex), lat.M, d=lat.d)
            return F if self._ball is None else F * self._ball
        raise ValueError(f"unknown equation kind {spec.kind!r}")

    # -- stepping ---------------------------------------------------------------

    def step(self, state: FieldPair, t: float) -> FieldPair:
        """Advance one step from time t; raises BlowupError on divergence."""
        lat = self.lattice
        u, v = state.pos.coeffs, state.vel.coeffs
        q = self.q

        flights = [self._cos[i] * u + self._sinc[i] * v for i in range(q + 1)]
        if self.spec.kind == "linear":
            vel = -self._omsin[q] * u + self._cos[q] * v
            return FieldPair(SpectralField(lat, flights[q]), SpectralField(lat, vel))

        node_ts = [t + self.dt * x for x in self.x_nodes]
        u_nodes = [flights[i].copy() for i in range(q)]
        F = [None] * q
        for _ in range(self.npic):
            for j in range(q):
                F[j] = self._nonlinearity(u_nodes[j], node_ts[j])
            for i in range(q):
                acc = flights[i].copy()
                for j in range(q):
                    acc -= self.Ws[i, j] * F[j]
                u_nodes[i] = acc

        u_new = flights[q].copy()
        v_new = -self._omsin[q] * u + self._cos[q] * v
        for j in range(q):
            u_new -= self.Ws[q, j] * F[j]
            v_new -= self.Wc[j] * F[j]

        guard = float(np.sum(np.abs(u_new)))
        if not np.isfinite(guard) or guard > BLOWUP_GUARD:
            raise BlowupError(t, guard)
        return FieldPair(SpectralField(lat, u_new), SpectralField(lat, v_new))


def step(spec: EquationSpec, state: FieldPair, t: float, dt: float, q=3, npic=3):
    """One-off single step (builds tables; prefer solve() for many steps)."""
    return Stepper(spec, state.lattice, dt, q=q, npic=npic).step(state, t)


def default_dt(data: FieldPair, wick_sup: float | None = None) -> float:
    """Step choice dt <= min(0.1/||data||_{FL^{0,1}}, 0.05), shrunk further
    to 0.5/(1 + sup|Wick forcing|) when a rough source drives the equation."""
    cand = [0.05]
    b = data.fourier_lebesgue_norm(0, 1)
    if b > 0:
        cand.append(0.1 / b)
    if wick_sup is not None and wick_sup > 0:
        cand.append(0.5 / (1.0 + wick_sup))
    return min(cand)


def solve(
    spec: EquationSpec,
    data: FieldPair,
    t_end: float,
    dt: float | None = None,
    observers=None,
    checkpoint_times=(),
    q=3,
    npic=3,
    record_energy=True,
) -> Trajectory:
    """Integrate from t = 0 to t_end, recording diagnostics at every step.

    `observers` maps names to callables (state, t) -> float; the energy is
    recorded too unless turned off (it costs a transform per step).  States
    are retained only at `checkpoint_times` (plus t_end).  A tripped blowup
    guard truncates the trajectory and flags it.
    """
    if dt is None:
        wick_sup = None
        if spec.kind == "wick":
            st = spec.source.stack(0.0, 3)
            from .fields import grid_sup

            wick_sup = max(grid_sup(st[l]) ** (1.0 / l) for l in (1, 2, 3))
        dt = default_dt(data, wick_sup)
    if t_end == 0:
        raise ValueError("t_end must be nonzero")
    dt = abs(dt) * (1 if t_end > 0 else -1)

    obs = {}
    if record_energy:
        obs["energy"] = lambda st, t: energy(st, spec.mass, spec.k if spec.kind != "linear" else 3)
    if observers:
        obs.update(observers)

    traj = Trajectory(diagnostics={name: [] for name in obs})
    cps = sorted(set(round(float(tc), 12) for tc in checkpoint_times) | {round(t_end, 12)})

    def record(state, t):
        traj.times.append(t)
        for name, fn in obs.items():
            traj.diagnostics[name].append(fn(state, t))
        for tc in cps:
            if abs(t - tc) <= 1e-12 * max(1.0, abs(t_end)):
                traj.checkpoints.append((t, state))
                break

    state = data
    record(state, 0.0)
    nsteps = max(1, math.ceil(abs(t_end) / abs(dt) - 1e-12))
    h = t_end / nsteps

    # split the uniform march so that explicit checkpoints are hit exactly
    marks = {round(i * h, 12) for i in range(1, nsteps + 1)} | set(cps)
    if t_end > 0:
        marks = sorted(m for m in marks if 0 < m <= t_end + 1e-12)
    else:
        marks = sorted((m for m in marks if t_end - 1e-12 <= m < 0), reverse=True)

    steppers = {}
    t = 0.0
    for m in marks:
        hh = m - t
        if abs(hh) < 1e-14 * max(1.0, abs(t_end)):
            continue
        key = round(hh, 14)
        cur = steppers.get(key)
        if cur is None:
            cur = Stepper(spec, data.lattice, hh, q=q, npic=npic)
            steppers[key] = cur
        try:
            state = cur.step(state, t)
        except BlowupError as err:
            traj.blown_up = True
            traj.t_last = err.t_last
            return traj
        t = m
        record(state, t)
    traj.t_last = t
    return traj


# -- local-theory horizons ----------------------------------------------------

WIENER_CONTRACTION = 0.2
"""Contraction constant of the cubic fixed point in the Wiener algebra:
T = 0.2 / ||data||_{FL^{0,1} pair} keeps the Picard map a contraction on the
doubled ball (the module's own constant, from |Duhamel| <= t^2 and the
algebra property)."""


def wiener_lwp_time(data: FieldPair) -> float:
    """Guaranteed existence/series horizon c / ||data||_{FL^{0,1} pair}."""
    b = data.fourier_lebesgue_norm(0, 1)
    if b == 0:
        return math.inf
    return WIENER_CONTRACTION / b


@dataclass(frozen=True)
class PerturbedLwpEstimate:
    """Guaranteed horizon for the randomly perturbed cubic flow.

    T = c * max( B^{1/(1-alpha)},  K (1 + B) )^{-1} with B the data norm in
    FL^{alpha, 1/(1-alpha)} and K the sampled sup of the smoothed Wick
    forcing; both branches are reported.  c = 1/8 is this module's
    contraction constant, not a sharp one.
    """

    alpha: float
    data_norm: float
    K: float
    branch_data: float
    branch_wick: float
    T_guaranteed: float


def perturbed_lwp_estimate(data: FieldPair, source: WickSource, alpha: float, t_grid=None):
    """Sample K over [-1, 1] and combine both horizon branches."""
    if not (0 < alpha <= 0.25):
        raise ValueError(f"alpha must lie in (0, 1/4], got {alpha}")
    from .fields import grid_sup

    p = 1.0 / (1.0 - alpha)
    B = data.fourier_lebesgue_norm(alpha, p)
    if t_grid is None:
        t_grid = np.linspace(-1.0, 1.0, 9)
    K = 0.0
    for t in t_grid:
        st = source.stack(float(t), 3)
        for l in (1, 2, 3):
            K = max(K, grid_sup(st[l], s=-alpha / 2.0))
    c = 1.0 / 8.0
    # contraction needs T^{2(1-alpha)} B^2 <= c and T K (1 + B) <= c
    branch_data = math.inf if B == 0 else (c / B**2) ** (1.0 / (2.0 * (1.0 - alpha)))
    branch_wick = math.inf if K == 0 else c / (K * (1.0 + B))
    return PerturbedLwpEstimate(
        alpha=alpha,
        data_norm=B,
        K=K,
        branch_data=branch_data,
        branch_wick=branch_wick,
        T_guaranteed=min(branch_data, branch_wick),
    )


def approximation_gap(traj_u: Trajectory, traj_v: Trajectory) -> float:
    """sup over common checkpoints of the L^2 distance of positions."""
    tu = [round(t, 9) for t, _ in traj_u.checkpoints]
    tv = [round(t, 9) for t, _ in traj_v.checkpoints]
    if tu != tv:
        raise ValueError(f"trajectories recorded different checkpoint grids: {tu} vs {tv}")
    gap = 0.0
    for (t1, s1), (_, s2) in zip(traj_u.checkpoints, traj_v.checkpoints):
        gap = max(gap, sobolev_norm(s1.pos - s2.pos, 0.0))
    return gap
