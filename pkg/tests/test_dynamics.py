import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from wicklab.dynamics import (
    BlowupError,
    EquationSpec,
    Stepper,
    approximation_gap,
    default_dt,
    duhamel,
    energy,
    perturbed_lwp_estimate,
    solve,
    step,
    wiener_lwp_time,
)
from wicklab.fields import FieldPair, Lattice, SpectralField, pair_map, sobolev_norm
from wicklab.gaussian import WickSource, gff_wick_source, linear_flow, sample_gff, sigma_truncated


def constant_pair(lat, c):
    return FieldPair(c * SpectralField.one(lat), SpectralField.zero(lat))


def ode_oracle(rhs, y0, t_end):
    sol = solve_ivp(rhs, (0.0, t_end), y0, rtol=1e-12, atol=1e-14, dense_output=True)
    return sol.y[:, -1]


# -- duhamel -------------------------------------------------------------------


def test_duhamel_zero_source():
    lat = Lattice(2, 3)
    out = duhamel(lambda s: np.zeros(lat.shape, dtype=complex), 0.7, lat)
    assert np.max(np.abs(out.coeffs)) == 0.0


def test_duhamel_constant_source_closed_form():
    # f = e_0 constant in time: modewise -(1 - cos t) since <0> = 1
    lat = Lattice(2, 2)
    one = SpectralField.one(lat)
    for t in (0.3, 0.8, 1.5):
        out = duhamel(lambda s: one.coeffs, t, lat)
        got = out.coeffs[lat.index_of((0, 0))].real
        assert got == pytest.approx(-(1 - math.cos(t)), abs=1e-10)


def test_duhamel_oscillating_source_closed_form():
    # f(s) = cos(w s) e_n: integral (cos(w t) - cos(om t)) / (om^2 - w^2) / ...
    lat = Lattice(2, 3)
    n = (2, 1)
    om = math.sqrt(1 + 5)
    w = 0.7
    base = SpectralField.from_modes(lat, {n: 1.0, (-n[0], -n[1]): 1.0})

    out = duhamel(lambda s: math.cos(w * s) * base.coeffs, 0.9, lat)
    t = 0.9
    want = -(math.cos(w * t) - math.cos(om * t)) / (om**2 - w**2)
    assert out.coeffs[lat.index_of(n)].real == pytest.approx(want, abs=1e-10)


def test_duhamel_multiplier_bound():
    # int_0^t |sin((t-s)om)|/om ds <= t^2, against the exact closed form
    def exact(t, om):
        # (1/om^2) int_0^{t om} |sin u| du
        x = t * om
        m, r = divmod(x, math.pi)
        return (2.0 * m + 1.0 - math.cos(r)) / om**2

    for om in (1.0, 2.5, 31.0, 317.0, 1000.0):
        for t in (0.05, 0.3, 1.0):
            val = exact(t, om)
            assert val <= t * t * (1 + 1e-12)
            # quadrature of |integrand| split at the sign changes
            x = t * om
            edges = np.arange(0.0, x, math.pi)
            edges = np.append(edges, x)
            from numpy.polynomial.legendre import leggauss

            gx, gw = leggauss(16)
            acc = 0.0
            for a, b in zip(edges[:-1], edges[1:]):
                pts = (gx + 1) * (b - a) / 2 + a
                acc += float(np.sum(gw * (b - a) / 2 * np.abs(np.sin(pts))))
            assert acc / om**2 == pytest.approx(val, abs=1e-10)


# -- stepping ------------------------------------------------------------------


def test_zero_data_stays_zero():
    lat = Lattice(2, 3)
    traj = solve(EquationSpec.plain_cubic(), FieldPair.zero(lat), 0.5, dt=0.1)
    assert traj.diagnostics["energy"][-1] == 0.0


def test_constant_data_matches_ode_oracle():
    # u'' + u + u^3 = 0 with u(0) = 0.5
    lat = Lattice(2, 2)
    data = constant_pair(lat, 0.5)
    traj = solve(EquationSpec.plain_cubic(), data, 1.0, dt=0.05, q=4, npic=4,
                 checkpoint_times=[1.0])
    got = traj.state_at(1.0).pos.coeffs[lat.index_of((0, 0))].real
    want = ode_oracle(lambda t, y: [y[1], -y[0] - y[0] ** 3], [0.5, 0.0], 1.0)[0]
    assert abs(got - want) < 1e-8


def test_single_low_mode_matches_two_term_expansion():
    # small data: solution = S(t) data + Xi_1 + O(t^4 ||data||^5)
    from wicklab.trees import partial_sum

    lat = Lattice(2, 2)
    eps = 1e-2
    data = FieldPair(
        SpectralField.from_modes(lat, {(1, 0): eps, (-1, 0): eps}),
        SpectralField.zero(lat),
    )
    t = 0.2
    traj = solve(EquationSpec.plain_cubic(), data, t, dt=0.05, q=4, npic=4,
                 checkpoint_times=[t])
    got = traj.state_at(t).pos
    two_terms = partial_sum(1, data, t, tol=1e-12)
    defect = sobolev_norm(got - two_terms, 0.0)
    assert defect < 10 * t**4 * (4 * eps) ** 5


def test_linear_limit_is_exact_rotation():
    lat = Lattice(2, 4)
    pair = sample_gff(lat, 5)
    traj = solve(EquationSpec.linear(), pair, 0.9, dt=0.09, checkpoint_times=[0.9])
    exact = linear_flow(pair, 0.9)
    got = traj.state_at(0.9)
    assert np.max(np.abs(got.pos.coeffs - exact.pos.coeffs)) < 1e-12
    assert np.max(np.abs(got.vel.coeffs - exact.vel.coeffs)) < 1e-12


def test_energy_conservation_smooth_data():
    lat = Lattice(2, 8)
    u0 = SpectralField(lat, np.exp(-0.5 * lat.abs_sq()).astype(complex))
    data = FieldPair(u0, SpectralField.zero(lat))
    traj = solve(EquationSpec.plain_cubic(), data, 1.0, dt=0.05, q=4, npic=4)
    e = traj.column("energy")
    assert np.max(np.abs(e - e[0])) / abs(e[0]) < 1e-6


def test_hamiltonian_constant_state():
    lat = Lattice(2, 3)
    c = 0.8
    assert energy(constant_pair(lat, c)) == pytest.approx(c * c / 2 + c**4 / 4)


def test_time_reversal_symmetry():
    lat = Lattice(2, 3)
    data = FieldPair(
        SpectralField.from_modes(lat, {(0, 0): 0.3, (1, 0): 0.1, (-1, 0): 0.1}),
        SpectralField.zero(lat),
    )
    fw = solve(EquationSpec.plain_cubic(), data, 0.6, dt=0.05, q=4, npic=4,
               checkpoint_times=[0.6])
    bw = solve(EquationSpec.plain_cubic(), data, -0.6, dt=0.05, q=4, npic=4,
               checkpoint_times=[-0.6])
    pf = fw.state_at(0.6).pos
    pb = bw.state_at(-0.6).pos
    assert np.max(np.abs(pf.coeffs - pb.coeffs)) < 1e-10


def test_self_convergence_order():
    lat = Lattice(2, 3)
    data = FieldPair(
        SpectralField.from_modes(lat, {(0, 0): 0.4, (1, 1): 0.2, (-1, -1): 0.2}),
        SpectralField.from_modes(lat, {(1, 0): 0.3, (-1, 0): 0.3}),
    )
    ref = solve(EquationSpec.plain_cubic(), data, 0.8, dt=0.0125, q=4, npic=5,
                checkpoint_times=[0.8]).state_at(0.8).pos
    errs = []
    for dt in (0.2, 0.1, 0.05):
        got = solve(EquationSpec.plain_cubic(), data, 0.8, dt=dt, q=2, npic=2,
                    checkpoint_times=[0.8]).state_at(0.8).pos
        errs.append(sobolev_norm(got - ref, 0.0))
    order = np.polyfit(np.log([0.2, 0.1, 0.05]), np.log(errs), 1)[0]
    assert order >= 2.0


def test_truncated_wick_n0_one_mode_ode():
    # data at n = 0 with N = 0: a'' + a + (a^3 - 3 sigma_0 a) = 0, sigma_0 = 1
    lat = Lattice(2, 2)
    data = constant_pair(lat, 0.4)
    traj = solve(EquationSpec.truncated_wick(0), data, 1.0, dt=0.05, q=4, npic=4,
                 checkpoint_times=[1.0])
    got = traj.state_at(1.0).pos.coeffs[lat.index_of((0, 0))].real
    want = ode_oracle(lambda t, y: [y[1], -y[0] - (y[0] ** 3 - 3 * y[0])], [0.4, 0.0], 1.0)[0]
    assert abs(got - want) < 1e-8


def test_residual_equals_direct_truncated_wick():
    # u = z + v from the residual solver matches evolving u directly
    lat = Lattice(2, 6)
    N = 3
    pair = sample_gff(lat, 11)
    T, dt = 0.4, 0.02
    direct = solve(EquationSpec.truncated_wick(N), pair, T, dt=dt, q=4, npic=4,
                   checkpoint_times=[T]).state_at(T)
    src = WickSource(pair, sigma_truncated(N, 2), N=N)
    res = solve(EquationSpec.residual_wick(src, N=N), FieldPair.zero(lat), T,
                dt=dt, q=4, npic=4, checkpoint_times=[T]).state_at(T)
    recomposed = linear_flow(pair, T) + res
    assert np.max(np.abs(direct.pos.coeffs - recomposed.pos.coeffs)) < 1e-8
    assert np.max(np.abs(direct.vel.coeffs - recomposed.vel.coeffs)) < 1e-8


def test_residual_with_zero_noise_is_plain_cubic():
    lat = Lattice(2, 3)
    src = WickSource(FieldPair.zero(lat), 0.0)
    data = FieldPair(
        SpectralField.from_modes(lat, {(0, 0): 0.3, (1, 0): 0.2, (-1, 0): 0.2}),
        SpectralField.zero(lat),
    )
    a = solve(EquationSpec.residual_wick(src), data, 0.5, dt=0.05, q=4, npic=4,
              checkpoint_times=[0.5]).state_at(0.5)
    b = solve(EquationSpec.plain_cubic(), data, 0.5, dt=0.05, q=4, npic=4,
              checkpoint_times=[0.5]).state_at(0.5)
    assert np.max(np.abs(a.pos.coeffs - b.pos.coeffs)) < 1e-10


def test_sigma_renormalized_defocusing_global_behavior():
    # smooth randomized data; the renormalized flow stays bounded over [0, 1]
    lat = Lattice(2, 4)
    from wicklab.gaussian import sigma_of_profile

    prof = FieldPair(
        SpectralField.from_modes(lat, {(1, 0): 0.5, (-1, 0): 0.5}),
        SpectralField.from_modes(lat, {(0, 1): 0.5, (0, -1): 0.5}),
    )
    realization = sample_gff(lat, 3)
    zdata = FieldPair(
        SpectralField(lat, realization.pos.coeffs * lat.bracket() * np.abs(prof.pos.coeffs)),
        SpectralField(lat, realization.vel.coeffs * np.abs(prof.vel.coeffs)),
    )
    src = WickSource(zdata, lambda t: sigma_of_profile(prof, t))
    spec = EquationSpec.sigma_renormalized(src, k=3)
    traj = solve(spec, FieldPair.zero(lat), 1.0, dt=0.05, q=3, npic=3)
    assert not traj.blown_up


def test_blowup_guard_trips():
    # focusing one-mode reduction: a'' - 2a + a^3 = 0 has no blowup, so use
    # a huge plain state instead to trip the Wiener guard quickly
    lat = Lattice(2, 2)
    data = constant_pair(lat, 2.0e4)
    traj = solve(EquationSpec.plain_cubic(), data, 1.0, dt=0.01, q=2, npic=2)
    assert traj.blown_up
    assert traj.t_last < 1.0


def test_step_single_call_matches_solve():
    lat = Lattice(2, 3)
    data = FieldPair(
        SpectralField.from_modes(lat, {(0, 0): 0.5, (1, 0): 0.1, (-1, 0): 0.1}),
        SpectralField.zero(lat),
    )
    one = step(EquationSpec.plain_cubic(), data, 0.0, 0.05, q=3, npic=3)
    traj = solve(EquationSpec.plain_cubic(), data, 0.05, dt=0.05, q=3, npic=3,
                 checkpoint_times=[0.05])
    assert np.max(np.abs(one.pos.coeffs - traj.state_at(0.05).pos.coeffs)) < 1e-14


# -- horizons --------------------------------------------------------------------


def test_wiener_lwp_homogeneity():
    lat = Lattice(2, 3)
    data = FieldPair(
        SpectralField.from_modes(lat, {(1, 0): 0.5, (-1, 0): 0.5}),
        SpectralField.zero(lat),
    )
    t1 = wiener_lwp_time(data)
    t2 = wiener_lwp_time(2.0 * data)
    assert t2 == pytest.approx(t1 / 2.0)
    assert wiener_lwp_time(FieldPair.zero(lat)) == math.inf


def test_wiener_lwp_block_data_scale():
    from wicklab.inflation import make_plan, plan_data

    plan = make_plan(2, -1.2, 16, delta=0.3)
    phi = plan_data(plan)
    T = wiener_lwp_time(phi)
    b = phi.fourier_lebesgue_norm(0, 1)
    assert T == pytest.approx(0.2 / b)
    # the pair norm is ~ 2 * 4 R A^d (position + velocity parts)
    assert b == pytest.approx(8 * plan.R * plan.A**2, rel=0.35)


@pytest.mark.slow
def test_wiener_horizon_stepper_stability():
    # run to the guaranteed horizon; halving dt barely moves the answer
    lat = Lattice(2, 3)
    data = FieldPair(
        SpectralField.from_modes(lat, {(0, 0): 0.5, (1, 1): 0.25, (-1, -1): 0.25}),
        SpectralField.zero(lat),
    )
    T = wiener_lwp_time(data)
    a = solve(EquationSpec.plain_cubic(), data, T, dt=T / 24, q=4, npic=10,
              checkpoint_times=[T]).state_at(T).pos
    b = solve(EquationSpec.plain_cubic(), data, T, dt=T / 48, q=4, npic=10,
              checkpoint_times=[T]).state_at(T).pos
    assert sobolev_norm(a - b, 0.0) < 1e-6


def test_perturbed_lwp_branches():
    lat = Lattice(2, 4)
    src = gff_wick_source(lat, 3)
    zero = FieldPair.zero(lat)
    est0 = perturbed_lwp_estimate(zero, src, 0.1)
    assert est0.branch_data == math.inf
    assert est0.T_guaranteed == pytest.approx(est0.branch_wick)
    data = FieldPair(
        SpectralField.from_modes(lat, {(1, 0): 1.0, (-1, 0): 1.0}),
        SpectralField.zero(lat),
    )
    est = perturbed_lwp_estimate(data, src, 0.1)
    assert est.T_guaranteed <= est0.T_guaranteed
    # doubling K at fixed data at most halves the wick branch
    assert est.branch_wick * est.K == pytest.approx((1 / 8) / (1 + est.data_norm))
    with pytest.raises(ValueError):
        perturbed_lwp_estimate(data, src, 0.3)


def test_approximation_gap():
    lat = Lattice(2, 3)
    data = FieldPair(
        SpectralField.from_modes(lat, {(0, 0): 0.4}),
        SpectralField.zero(lat),
    )
    cps = [0.1, 0.2]
    a = solve(EquationSpec.plain_cubic(), data, 0.2, dt=0.05, checkpoint_times=cps)
    b = solve(EquationSpec.plain_cubic(), data, 0.2, dt=0.05, checkpoint_times=cps)
    assert approximation_gap(a, b) == 0.0
    src = WickSource(FieldPair.zero(lat), 0.0)
    c = solve(EquationSpec.residual_wick(src), data, 0.2, dt=0.05, checkpoint_times=cps)
    assert approximation_gap(a, c) < 1e-10
    d = solve(EquationSpec.plain_cubic(), data, 0.2, dt=0.05, checkpoint_times=[0.2])
    with pytest.raises(ValueError):
        approximation_gap(a, d)


def test_default_dt_rule():
    lat = Lattice(2, 2)
    small = FieldPair.zero(lat)
    assert default_dt(small) == 0.05
    big = constant_pair(lat, 10.0)
    assert default_dt(big) == pytest.approx(0.01)
    assert default_dt(small, wick_sup=99.0) == pytest.approx(0.5 / 100.0)


def test_sigma_renormalized_quintic_smoke():
    # k = 5 is admitted only through the renormalized smooth-data flow
    lat = Lattice(2, 3)
    from wicklab.gaussian import sigma_of_profile

    prof = FieldPair(
        SpectralField.from_modes(lat, {(1, 0): 0.4, (-1, 0): 0.4}),
        SpectralField.zero(lat),
    )
    realization = sample_gff(lat, 9)
    zdata = FieldPair(
        SpectralField(lat, realization.pos.coeffs * lat.bracket() * np.abs(prof.pos.coeffs)),
        SpectralField.zero(lat),
    )
    src = WickSource(zdata, lambda t: sigma_of_profile(prof, t))
    spec = EquationSpec.sigma_renormalized(src, k=5)
    traj = solve(spec, FieldPair.zero(lat), 0.5, dt=0.05, q=3, npic=3)
    assert not traj.blown_up
    import pytest as _pytest

    with _pytest.raises(ValueError):
        EquationSpec.sigma_renormalized(src, k=4)
