import numpy as np
import pytest

from imbq.grid import (
    SpectralField,
    lambda_symbol,
    make_grid,
    sobolev_norm,
    sup_norm,
)
from imbq.solver import (
    CauchyData,
    ConvergenceError,
    SolverConfig,
    Trajectory,
    dispersion_check,
    duhamel_functional,
    energy,
    energy_series,
    free_propagator,
    free_velocity,
    gaussian_data,
    picard_window,
    rk4_solve,
    single_mode_data,
    solve,
)
from imbq.solver import _prefix_weights


def small_data(grid=None, amplitude=0.2):
    grid = grid or make_grid(16.0, 512)
    return gaussian_data(grid, amplitude=amplitude, width=1.0, velocity_amplitude=amplitude / 2)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(p=1, sign=1, horizon=1.0)
    with pytest.raises(ValueError):
        SolverConfig(p=2, sign=0, horizon=1.0)
    with pytest.raises(ValueError):
        SolverConfig(p=2, sign=1, horizon=-1.0)
    with pytest.raises(ValueError):
        SolverConfig(p=2, sign=1, horizon=1.0, quadrature_nodes=10)
    with pytest.raises(ValueError):
        SolverConfig(p=2, sign=1, horizon=1.0, s=-0.5)


def test_cauchy_data_validation():
    g1, g2 = make_grid(4.0, 32), make_grid(4.0, 64)
    with pytest.raises(ValueError):
        CauchyData(SpectralField.zero(g1), SpectralField.zero(g2))
    with pytest.raises(ValueError):
        CauchyData(SpectralField.zero(g1), SpectralField.zero(g1, real_valued=False))


def test_prefix_weights_fourth_order():
    # rows integrate exp exactly enough: O(h^4) composite rules
    n, h = 33, 0.25 / 32
    w = _prefix_weights(n, h)
    t = np.arange(n) * h
    err = np.max(np.abs(w @ np.exp(t) - (np.exp(t) - 1.0)))
    assert err < 1e-9
    # halving h drops the error ~16x
    w2 = _prefix_weights(2 * (n - 1) + 1, h / 2)
    t2 = np.arange(2 * (n - 1) + 1) * h / 2
    err2 = np.max(np.abs(w2 @ np.exp(t2) - (np.exp(t2) - 1.0)))
    assert err / err2 > 10


def test_free_propagator_identity_at_zero():
    d = small_data()
    out = free_propagator(d, 0.0)
    assert np.array_equal(out.amplitudes, d.u0.amplitudes)
    assert np.array_equal(free_velocity(d, 0.0).amplitudes, d.u1.amplitudes)


def test_free_propagator_single_mode():
    g = make_grid(4.0, 64)
    k, t = 1.0, 0.9
    d = single_mode_data(g, k)
    out = free_propagator(d, t)
    idx = g.index_of(k)
    assert out.amplitudes[idx] == pytest.approx(
        np.cos(t * lambda_symbol(k)) * d.u0.amplitudes[idx], rel=1e-14
    )
    vel = free_velocity(d, t)
    assert vel.amplitudes[idx] == pytest.approx(
        -lambda_symbol(k) * np.sin(t * lambda_symbol(k)) * d.u0.amplitudes[idx], rel=1e-13
    )


def test_free_velocity_matches_central_difference():
    d = small_data(make_grid(8.0, 128))
    t, dt = 0.6, 1e-4
    fd = (free_propagator(d, t + dt).amplitudes - free_propagator(d, t - dt).amplitudes) / (2 * dt)
    exact = free_velocity(d, t).amplitudes
    scale = np.max(np.abs(exact))
    assert np.max(np.abs(fd - exact)) < 1e-7 * scale  # O(dt^2)


def test_free_propagator_time_reversal():
    d = small_data(make_grid(8.0, 128))
    t = 0.7
    fwd = CauchyData(free_propagator(d, t), free_velocity(d, t))
    back = free_propagator(fwd, -t)
    assert np.max(np.abs(back.amplitudes - d.u0.amplitudes)) < 1e-10


def test_duhamel_zero_trajectory_reduces_to_free():
    g = make_grid(8.0, 128)
    d = small_data(g)
    cfg = SolverConfig(p=2, sign=1, horizon=0.2)
    times = np.linspace(0.0, 0.2, cfg.quadrature_nodes)
    zero_traj = Trajectory(
        times=times,
        u=[SpectralField.zero(g)] * len(times),
        u_t=[SpectralField.zero(g)] * len(times),
    )
    z = duhamel_functional(d, zero_traj, cfg)
    for i, t in enumerate(times):
        free = free_propagator(d, t)
        assert np.max(np.abs(z.u[i].amplitudes - free.amplitudes)) < 1e-13
    assert np.array_equal(z.u[0].amplitudes, d.u0.amplitudes)


def test_duhamel_against_refined_quadrature():
    # one application on the free trajectory vs the same with 10x nodes
    g = make_grid(8.0, 128)
    d = small_data(g)
    cfg = SolverConfig(p=2, sign=1, horizon=0.2, quadrature_nodes=33)
    t_end = 0.2

    def apply_with(nodes):
        times = np.linspace(0.0, t_end, nodes)
        traj = Trajectory(
            times=times,
            u=[free_propagator(d, t) for t in times],
            u_t=[free_velocity(d, t) for t in times],
        )
        local = SolverConfig(p=2, sign=1, horizon=t_end, quadrature_nodes=nodes)
        return duhamel_functional(d, traj, local)

    coarse = apply_with(33)
    fine = apply_with(321)
    uc = coarse.u[-1]
    uf = fine.u[-1]
    assert sobolev_norm(uc - uf, 0.0) <= 1e-8 * sobolev_norm(uf, 0.0)


def test_picard_without_forcing_converges_in_one_iteration():
    d = small_data()
    cfg = SolverConfig(p=2, sign=1, horizon=0.3)
    traj, report = picard_window(d, 0.3, cfg, forcing=False)
    assert report.iterations == 1
    assert report.ratios == ()
    final = free_propagator(d, 0.3)
    assert np.max(np.abs(traj.u[-1].amplitudes - final.amplitudes)) < 1e-13


def test_picard_contraction_is_at_least_geometric():
    g = make_grid(16.0, 512)
    d = gaussian_data(g, amplitude=0.8, width=1.0, velocity_amplitude=0.4)
    cfg = SolverConfig(p=2, sign=1, horizon=1.5, max_iterations=80)
    _, report = picard_window(d, 1.5, cfg)
    assert len(report.ratios) >= 4
    assert all(r < 1 for r in report.ratios)
    # quotients never exceed the first one: differences decay at least
    # geometrically at the measured contraction factor (the prefix-integral
    # structure in fact makes them shrink further with each sweep)
    first = report.ratios[0]
    assert all(r <= first * 1.05 for r in report.ratios)
    d_pred = report.differences[0] * first ** np.arange(len(report.differences))
    assert np.all(np.array(report.differences) <= d_pred * 1.05)


def test_picard_contraction_scales_as_window_squared():
    d = small_data()
    cfg = SolverConfig(p=2, sign=1, horizon=0.25)
    _, rep_full = picard_window(d, 0.2, cfg)
    _, rep_half = picard_window(d, 0.1, cfg)
    factor = rep_full.contraction_ratio / rep_half.contraction_ratio
    assert 3.0 <= factor <= 5.0


def test_picard_nonconvergence_reports_history():
    g = make_grid(16.0, 256)
    d = gaussian_data(g, amplitude=5.0, width=2.0)
    cfg = SolverConfig(p=2, sign=1, horizon=1.0, max_iterations=6)
    with pytest.raises(ConvergenceError) as exc:
        picard_window(d, 1.0, cfg)
    assert len(exc.value.history) == 6


def test_solve_zero_data_stays_zero():
    g = make_grid(8.0, 64)
    d = CauchyData(SpectralField.zero(g), SpectralField.zero(g))
    traj = solve(d, SolverConfig(p=3, sign=-1, horizon=1.0))
    assert all(np.all(f.amplitudes == 0) for f in traj.u)


def test_solve_linear_single_mode_two_windows_exact():
    g = make_grid(4.0, 64)
    k, t_final = 1.0, 0.8
    d = single_mode_data(g, k)
    cfg = SolverConfig(p=2, sign=1, horizon=t_final, window_override=t_final / 2)
    traj = solve(d, cfg, forcing=False)
    assert len(traj.window_reports) == 2
    idx = g.index_of(k)
    expect = np.cos(t_final * lambda_symbol(k)) * d.u0.amplitudes[idx]
    got = traj.u[-1].amplitudes[idx]
    assert abs(got - expect) <= 1e-10 * abs(expect)
    others = np.delete(np.abs(traj.u[-1].amplitudes), [idx, g.index_of(-k)])
    assert np.max(others) < 1e-12 * abs(expect)


def test_solve_agrees_with_rk4():
    d = small_data()
    cfg = SolverConfig(p=2, sign=1, horizon=0.25)
    picard = solve(d, cfg)
    rk = rk4_solve(d, cfg, dt=1e-3, store_stride=10**9)
    diff = picard.u[-1] - rk.u[-1]
    assert sobolev_norm(diff, 0.0) <= 1e-6 * sobolev_norm(rk.u[-1], 0.0)


def test_solve_fixed_point_is_stable_under_extra_application():
    d = small_data()
    cfg = SolverConfig(p=2, sign=1, horizon=0.2)
    traj, _ = picard_window(d, 0.2, cfg)
    again = duhamel_functional(d, traj, cfg)
    change = max(
        sobolev_norm(a - b, cfg.s) + sup_norm(a - b) for a, b in zip(again.u, traj.u)
    )
    assert change < 10 * cfg.picard_tol


def test_solve_small_amplitude_stays_near_free_flow():
    g = make_grid(16.0, 512)
    eps = 1e-4
    d = gaussian_data(g, amplitude=eps, width=1.0, velocity_amplitude=eps / 2)
    cfg = SolverConfig(p=2, sign=1, horizon=1.0)
    traj = solve(d, cfg)
    worst = 0.0
    for i, t in enumerate(traj.times):
        diff = traj.u[i] - free_propagator(d, t)
        worst = max(worst, sobolev_norm(diff, 0.0) + sup_norm(diff))
    assert worst <= 2 * eps


def test_solve_grid_convergence_for_band_limited_data():
    finals = []
    for m in (256, 512):
        g = make_grid(16.0, m)
        d = gaussian_data(g, amplitude=0.3, width=1.5, velocity_amplitude=0.1)
        traj = solve(d, SolverConfig(p=2, sign=1, horizon=0.25))
        finals.append(sobolev_norm(traj.u[-1], 0.0))
    assert abs(finals[1] - finals[0]) < 1e-6


def test_solve_propagates_window_index_on_failure():
    g = make_grid(16.0, 256)
    d = gaussian_data(g, amplitude=5.0, width=2.0)
    cfg = SolverConfig(
        p=2, sign=1, horizon=1.0, window_override=1.0, max_window_halvings=0, max_iterations=6
    )
    with pytest.raises(ConvergenceError) as exc:
        solve(d, cfg)
    assert exc.value.window_index == 0
    assert "window 0" in str(exc.value)


def test_rk4_zero_data():
    g = make_grid(8.0, 64)
    d = CauchyData(SpectralField.zero(g), SpectralField.zero(g))
    traj = rk4_solve(d, SolverConfig(p=2, sign=1, horizon=0.5), dt=0.05)
    assert all(np.all(f.amplitudes == 0) for f in traj.u)


def test_rk4_self_convergence_order():
    g = make_grid(4.0, 64)
    k = 1.0
    d = single_mode_data(g, k)
    idx = g.index_of(k)
    errs = []
    for dt in (2e-2, 1e-2):
        cfg = SolverConfig(p=2, sign=1, horizon=1.0)
        traj = rk4_solve(d, cfg, dt, forcing=False, store_stride=10**9)
        exact = np.cos(lambda_symbol(k)) * d.u0.amplitudes[idx]
        errs.append(abs(traj.u[-1].amplitudes[idx] - exact))
    assert 10 < errs[0] / errs[1] < 24  # fourth order: ~16x per halving


def test_rk4_instability_detected():
    g = make_grid(16.0, 128)
    d = gaussian_data(g, amplitude=50.0, width=2.0)
    cfg = SolverConfig(p=3, sign=-1, horizon=50.0)
    with pytest.raises(ConvergenceError):
        rk4_solve(d, cfg, dt=0.5)


def test_energy_zero_state():
    g = make_grid(8.0, 64)
    z = SpectralField.zero(g)
    assert energy(z, z, 2, 1) == 0.0


def test_energy_requires_mean_zero_velocity():
    g = make_grid(8.0, 64)
    amp = np.zeros(g.node_count, dtype=complex)
    amp[g.node_count // 2] = 1.0
    u1 = SpectralField(g, amp, real_valued=True)
    with pytest.raises(ValueError):
        energy(SpectralField.zero(g), u1, 2, 1)


def test_energy_constant_on_single_mode_nonlinear_flow():
    g = make_grid(4.0, 64)
    d = single_mode_data(g, 1.0, amplitude=0.1)
    cfg = SolverConfig(p=2, sign=1, horizon=0.5)
    traj = rk4_solve(d, cfg, 5e-4, store_stride=100)
    e = energy_series(traj, 2, 1)
    assert np.max(np.abs(e - e[0])) <= 1e-10 * abs(e[0])


def test_energy_drift_vanishes_under_dt_refinement():
    g = make_grid(16.0, 256)
    d = gaussian_data(g, amplitude=150.0, width=2.0, velocity_amplitude=45.0)
    cfg = SolverConfig(p=2, sign=1, horizon=0.5)
    drifts = []
    for dt in (1e-3, 5e-4):
        traj = rk4_solve(d, cfg, dt, store_stride=100)
        e = energy_series(traj, 2, 1)
        drifts.append(np.max(np.abs(e - e[0])) / abs(e[0]))
    assert drifts[0] <= 1e-8
    assert drifts[0] / drifts[1] >= 8.0


def test_energy_directional_derivative_vanishes():
    # machine-precision check that dE/dt = 0 along the semidiscrete flow,
    # evaluated analytically (no time stepping) on random states
    from imbq.grid import _padded_node_count, _position_samples_padded, _power_amplitudes
    from imbq.grid import random_real_field

    rng = np.random.default_rng(61)
    g = make_grid(8.0, 128)
    p, sign = 2, 1
    lam = lambda_symbol(g.xi)
    zero_idx = g.node_count // 2
    mask = np.arange(g.node_count) != zero_idx
    for _ in range(10):
        u = random_real_field(g, rng)
        ut_amp = random_real_field(g, rng).amplitudes.copy()
        ut_amp[zero_idx] = 0.0
        ut = SpectralField(g, ut_amp, real_valued=True)
        ghat = _power_amplitudes(u.amplitudes, g, p, 1, (p + 1) / 2)
        utt = -(lam**2) * (u.amplitudes + sign * ghat)
        d_quad = float(
            np.sum((np.conj(ut_amp[mask]) * (utt[mask] / lam[mask] ** 2 + u.amplitudes[mask])).real)
            * g.dxi
        )
        padded = _padded_node_count(g.node_count, (p + 1) / 2)
        dx_fine = 2 * np.pi / (padded * g.dxi)
        us = _position_samples_padded(u, padded).real
        uts = _position_samples_padded(ut, padded).real
        d_pot = 2 * np.pi * sign * float(np.sum(us**p * uts)) * dx_fine
        scale = abs(d_quad) + abs(d_pot) + 1e-30
        assert abs(d_quad + d_pot) < 1e-12 * scale


@pytest.mark.parametrize(
    "k,expected",
    [(1.0, 0.7071067811865475), (100.0, 0.9999500037496876)],
)
def test_dispersion_fitted_omega(k, expected):
    got = dispersion_check(k)
    assert got == pytest.approx(expected, rel=1e-6)
    assert expected == pytest.approx(k / np.sqrt(1 + k * k), rel=1e-12)


def test_dispersion_long_wave_limit():
    k = 0.125
    om = dispersion_check(k)
    assert om / k == pytest.approx(1.0, abs=1e-2)
    assert om / k < 1.0
