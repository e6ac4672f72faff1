"""Time evolution for u_tt - u_xx - u_xxtt = sign * (u^p)_xx.

In frequency space the equation reads u_hat_tt = -lambda^2 (u_hat +
sign * (u^p)_hat) with lambda(xi) = |xi|/<xi>, and its Duhamel form is

    u_hat(t) = cos(t lam) u0_hat + (sin(t lam)/lam) u1_hat
               - sign * int_0^t lam sin((t - tau) lam) (u^p)_hat(tau) dtau,

where the composition of the propagator with the symbol of the forcing
has been simplified analytically to lam*sin (no 0/0 at xi = 0).  The
solver iterates this map to its fixed point on short time windows
(Picard), with window length tied to the data size; a classical RK4
integrator of the first-order system serves as the independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    FrequencyGrid,
    SpectralField,
    _padded_node_count,
    _position_samples_padded,
    _power_amplitudes,
    lambda_symbol,
    sobolev_norm,
    sup_norm,
)

__all__ = [
    "CauchyData",
    "SolverConfig",
    "Trajectory",
    "ContractionReport",
    "ConvergenceError",
    "free_propagator",
    "free_velocity",
    "duhamel_functional",
    "picard_window",
    "solve",
    "rk4_solve",
    "energy",
    "energy_series",
    "dispersion_check",
    "mode_amplitude_trace",
    "single_mode_data",
    "gaussian_data",
]


class ConvergenceError(RuntimeError):
    """Picard iteration or time stepping failed to converge.

    ``history`` carries the per-step difference norms, ``window_index`` the
    failing window when raised from :func:`solve`.
    """

    def __init__(self, message: str, history=None, window_index: int | None = None):
        super().__init__(message)
        self.history = list(history) if history is not None else []
        self.window_index = window_index


@dataclass(frozen=True)
class CauchyData:
    """Initial position u0 and velocity u1, both real-valued, on one grid."""

    u0: SpectralField
    u1: SpectralField

    def __post_init__(self):
        if self.u0.grid != self.u1.grid:
            raise ValueError("u0 and u1 must share a grid")
        if not (self.u0.real_valued and self.u1.real_valued):
            raise ValueError("Cauchy data must be real_valued")

    @property
    def grid(self) -> FrequencyGrid:
        return self.u0.grid

    def scaled(self, c: float) -> "CauchyData":
        return CauchyData(self.u0.scaled(c), self.u1.scaled(c))


@dataclass(frozen=True)
class SolverConfig:
    """Nonlinearity, horizon, and iteration controls.

    The window length used by :func:`solve` is
    ``window_safety * R^{-(p-1)/2}`` with R = ``radius_constant`` times the
    summed H^s-plus-sup size of the data; on non-convergence the windows
    are halved, up to ``max_window_halvings`` times.
    """

    p: int
    sign: int
    horizon: float
    s: float = 0.0
    picard_tol: float = 1e-12
    max_iterations: int = 50
    quadrature_nodes: int = 33
    window_safety: float = 0.1
    dealias_factor: float | None = None
    radius_constant: float = 1.0
    window_override: float | None = None
    max_window_halvings: int = 5

    def __post_init__(self):
        if not (isinstance(self.p, int) and self.p >= 2):
            raise ValueError(f"p must be an integer >= 2, got {self.p}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if self.s < 0:
            raise ValueError("solver regularity s must be >= 0")
        if self.quadrature_nodes % 2 == 0 or self.quadrature_nodes < 5:
            raise ValueError("quadrature_nodes must be odd and >= 5")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    @property
    def dealias(self) -> float:
        base = (self.p + 1) / 2
        if self.dealias_factor is None:
            return base
        if self.dealias_factor < base:
            raise ValueError(f"dealias_factor must be >= {base}")
        return self.dealias_factor


@dataclass(frozen=True)
class ContractionReport:
    """Per-window Picard diagnostics."""

    window_length: float
    iterations: int
    differences: tuple[float, ...]
    ratios: tuple[float, ...]

    @property
    def contraction_ratio(self) -> float | None:
        """First difference quotient d2/d1, the measured contraction factor."""
        return self.ratios[0] if self.ratios else None


@dataclass(frozen=True)
class Trajectory:
    """Sampled states u(t_i), u_t(t_i) plus per-window solver diagnostics."""

    times: np.ndarray
    u: tuple[SpectralField, ...]
    u_t: tuple[SpectralField, ...]
    window_edges: tuple[float, ...] = ()
    window_reports: tuple[ContractionReport, ...] = ()

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "u", tuple(self.u))
        object.__setattr__(self, "u_t", tuple(self.u_t))
        if len(self.u) != t.shape[0] or len(self.u_t) != t.shape[0]:
            raise ValueError("field count does not match sample times")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def grid(self) -> FrequencyGrid:
        return self.u[0].grid

    def final(self) -> tuple[SpectralField, SpectralField]:
        return self.u[-1], self.u_t[-1]

    def index_at(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"no sample at t = {t}")
        return i


# ----------------------------------------------------------------------
# linear propagator


def _sin_over(lam: np.ndarray, t: float) -> np.ndarray:
    s = t * lam
    small = np.abs(s) < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = np.sin(s) / lam
    series = t * (1.0 - s**2 / 6.0 + s**4 / 120.0)
    return np.where(small, series, direct)


def free_propagator(d: CauchyData, t: float) -> SpectralField:
    """u_hat(t) = cos(t lam) u0_hat + (sin(t lam)/lam) u1_hat of the free flow.

    At xi = 0 this reduces to u0_hat(0) + t*u1_hat(0).
    """
    lam = lambda_symbol(d.grid.xi)
    amp = np.cos(t * lam) * d.u0.amplitudes + _sin_over(lam, t) * d.u1.amplitudes
    return SpectralField(d.grid, amp, real_valued=True)


def free_velocity(d: CauchyData, t: float) -> SpectralField:
    """Time derivative of the free flow: -lam sin(t lam) u0_hat + cos(t lam) u1_hat."""
    lam = lambda_symbol(d.grid.xi)
    amp = -lam * np.sin(t * lam) * d.u0.amplitudes + np.cos(t * lam) * d.u1.amplitudes
    return SpectralField(d.grid, amp, real_valued=True)


# ----------------------------------------------------------------------
# quadrature over the window nodes

_HALF_STEP_ROW = np.array([5.0, 8.0, -1.0]) / 12.0
_THREE_EIGHTHS_ROW = np.array([1.0, 3.0, 3.0, 1.0]) * (3.0 / 8.0)


def _simpson_row(i: int) -> np.ndarray:
    w = np.ones(i + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w / 3.0


def _prefix_weights(n_nodes: int, h: float) -> np.ndarray:
    """Rows W[i] with  int_0^{t_i} f  ~=  sum_j W[i, j] f(t_j),  t_j = j*h.

    Even prefixes use composite Simpson; odd prefixes splice a 3/8 block
    (or, for i = 1, the half-interval rule through nodes 0..2) so every row
    is fourth-order accurate and closed over the node set.
    """
    w = np.zeros((n_nodes, n_nodes))
    for i in range(1, n_nodes):
        if i == 1:
            w[1, :3] = _HALF_STEP_ROW
        elif i % 2 == 0:
            w[i, : i + 1] = _simpson_row(i)
        else:
            if i > 3:
                w[i, : i - 2] = _simpson_row(i - 3)
            w[i, i - 3 : i + 1] += _THREE_EIGHTHS_ROW
    return w * h


# ----------------------------------------------------------------------
# Duhamel functional and Picard iteration


def _power_matrix(u_mat: np.ndarray, grid: FrequencyGrid, cfg: SolverConfig) -> np.ndarray:
    out = np.empty_like(u_mat)
    for j in range(u_mat.shape[0]):
        out[j] = _power_amplitudes(u_mat[j], grid, cfg.p, 1, cfg.dealias)
    return out


def _duhamel_apply(
    u_mat: np.ndarray,
    d: CauchyData,
    times: np.ndarray,
    weights: np.ndarray,
    cfg: SolverConfig,
    forcing: bool,
) -> np.ndarray:
    """Evaluate the Duhamel functional on node-sampled amplitudes."""
    lam = lambda_symbol(d.grid.xi)
    cos_t = np.cos(times[:, None] * lam[None, :])
    sin_t = np.sin(times[:, None] * lam[None, :])
    sin_over = np.vstack([_sin_over(lam, t) for t in times])
    free = cos_t * d.u0.amplitudes[None, :] + sin_over * d.u1.amplitudes[None, :]
    if not forcing:
        return free
    g = _power_matrix(u_mat, d.grid, cfg)
    # sin((t_i - t_j) lam) = sin(t_i lam) cos(t_j lam) - cos(t_i lam) sin(t_j lam)
    integral = sin_t * (weights @ (cos_t * g)) - cos_t * (weights @ (sin_t * g))
    return free - cfg.sign * lam[None, :] * integral


def _duhamel_velocity(
    u_mat: np.ndarray,
    d: CauchyData,
    times: np.ndarray,
    weights: np.ndarray,
    cfg: SolverConfig,
    forcing: bool,
) -> np.ndarray:
    """Differentiated Duhamel formula, used for window continuation."""
    lam = lambda_symbol(d.grid.xi)
    cos_t = np.cos(times[:, None] * lam[None, :])
    sin_t = np.sin(times[:, None] * lam[None, :])
    out = -lam[None, :] * sin_t * d.u0.amplitudes[None, :] + cos_t * d.u1.amplitudes[None, :]
    if not forcing:
        return out
    g = _power_matrix(u_mat, d.grid, cfg)
    integral = cos_t * (weights @ (cos_t * g)) + sin_t * (weights @ (sin_t * g))
    return out - cfg.sign * lam[None, :] ** 2 * integral


def _node_size(amp: np.ndarray, grid: FrequencyGrid, s: float) -> float:
    f = SpectralField(grid, amp)
    return sobolev_norm(f, s) + sup_norm(f)


def _trajectory_from_matrices(
    grid: FrequencyGrid, times: np.ndarray, u_mat: np.ndarray, ut_mat: np.ndarray, **kwargs
) -> Trajectory:
    u = [SpectralField(grid, row, real_valued=True) for row in u_mat]
    ut = [SpectralField(grid, row, real_valued=True) for row in ut_mat]
    return Trajectory(times=times, u=u, u_t=ut, **kwargs)


def duhamel_functional(
    d: CauchyData, u: Trajectory, cfg: SolverConfig, forcing: bool = True
) -> Trajectory:
    """One application of the Duhamel map to a node-sampled trajectory.

    The trajectory must be sampled on uniform nodes 0 = t_0 < ... < t_m
    (odd count); the tau-integral uses the closed fourth-order prefix rules
    of :func:`_prefix_weights`, so the output lives on the same nodes.
    """
    times = u.times
    n = times.shape[0]
    if n % 2 == 0 or n < 5:
        raise ValueError("trajectory must be sampled on an odd number (>= 5) of nodes")
    h = times[1] - times[0]
    if times[0] != 0.0 or not np.allclose(np.diff(times), h, rtol=1e-12, atol=0):
        raise ValueError("trajectory nodes must be uniform and start at 0")
    weights = _prefix_weights(n, h)
    u_mat = np.vstack([f.amplitudes for f in u.u])
    z = _duhamel_apply(u_mat, d, times, weights, cfg, forcing)
    zt = _duhamel_velocity(u_mat, d, times, weights, cfg, forcing)
    return _trajectory_from_matrices(d.grid, times, z, zt)


def picard_window(
    d: CauchyData, window: float, cfg: SolverConfig, forcing: bool = True
) -> tuple[Trajectory, ContractionReport]:
    """Iterate the Duhamel map to its fixed point on [0, window].

    Starts from the free evolution and stops when the max-over-nodes of
    (H^s + sup) of the iterate difference drops below ``picard_tol``.
    Raises :class:`ConvergenceError` with the difference history when
    ``max_iterations`` is exhausted (window too long or data too large).
    """
    if not window > 0:
        raise ValueError("window length must be positive")
    n = cfg.quadrature_nodes
    times = np.linspace(0.0, window, n)
    weights = _prefix_weights(n, times[1])
    zeros = np.zeros((n, d.grid.node_count), dtype=np.complex128)
    current = _duhamel_apply(zeros, d, times, weights, cfg, forcing=False)  # free evolution
    diffs: list[float] = []
    converged = False
    for _ in range(cfg.max_iterations):
        new = _duhamel_apply(current, d, times, weights, cfg, forcing)
        diff = max(_node_size(new[i] - current[i], d.grid, cfg.s) for i in range(n))
        diffs.append(diff)
        current = new
        if diff < cfg.picard_tol:
            converged = True
            break
    ratios = tuple(b / a for a, b in zip(diffs[:-1], diffs[1:]) if a > 0)
    if not converged:
        raise ConvergenceError(
            f"Picard iteration did not reach {cfg.picard_tol:g} within "
            f"{cfg.max_iterations} iterations on a window of length {window:g}",
            history=diffs,
        )
    report = ContractionReport(
        window_length=window,
        iterations=len(diffs),
        differences=tuple(diffs),
        ratios=ratios,
    )
    ut = _duhamel_velocity(current, d, times, weights, cfg, forcing)
    traj = _trajectory_from_matrices(
        d.grid, times, current, ut, window_edges=(0.0, window), window_reports=(report,)
    )
    return traj, report


def _window_length(d: CauchyData, cfg: SolverConfig) -> float:
    if cfg.window_override is not None:
        return min(cfg.window_override, cfg.horizon)
    r = cfg.radius_constant * (
        sobolev_norm(d.u0, cfg.s)
        + sup_norm(d.u0)
        + sobolev_norm(d.u1, cfg.s)
        + sup_norm(d.u1)
    )
    if r == 0.0:
        return cfg.horizon
    return min(cfg.window_safety * r ** (-(cfg.p - 1) / 2.0), cfg.horizon)


def solve(d: CauchyData, cfg: SolverConfig, forcing: bool = True) -> Trajectory:
    """March the Picard solver over [0, horizon] in windows.

    Continuation data at each window end is the converged state and the
    velocity from the differentiated Duhamel formula (spectrally exact, no
    finite-difference stencil).  Windows halve on non-convergence, up to
    ``max_window_halvings`` times.
    """
    base = _window_length(d, cfg)
    n_windows = max(1, math.ceil(cfg.horizon / base - 1e-12))
    for halving in range(cfg.max_window_halvings + 1):
        w = cfg.horizon / n_windows
        try:
            return _march(d, cfg, w, n_windows, forcing)
        except ConvergenceError:
            if halving == cfg.max_window_halvings:
                raise
            n_windows *= 2


def _march(d: CauchyData, cfg: SolverConfig, w: float, n_windows: int, forcing: bool) -> Trajectory:
    times = [np.array([0.0])]
    u = []
    ut = []
    edges = [0.0]
    reports = []
    data = d
    for k in range(n_windows):
        start = k * w
        try:
            traj, report = picard_window(data, w, cfg, forcing)
        except ConvergenceError as err:
            raise ConvergenceError(
                f"window {k} ([{start:g}, {start + w:g}]) failed: {err}",
                history=err.history,
                window_index=k,
            ) from err
        sl = slice(None) if k == 0 else slice(1, None)
        times.append(traj.times[sl] + start)
        u.extend(traj.u[0 if k == 0 else 1 :])
        ut.extend(traj.u_t[0 if k == 0 else 1 :])
        edges.append(start + w)
        reports.append(report)
        data = CauchyData(*traj.final())
    all_times = np.concatenate(times[1:])
    return Trajectory(
        times=all_times,
        u=u,
        u_t=ut,
        window_edges=tuple(edges),
        window_reports=tuple(reports),
    )


# ----------------------------------------------------------------------
# independent integrator


def rk4_solve(
    d: CauchyData,
    cfg: SolverConfig,
    dt: float,
    forcing: bool = True,
    store_stride: int = 1,
) -> Trajectory:
    """Classical RK4 on the first-order system (u_hat, v_hat) in frequency space.

    v_hat_t = -lam^2 (u_hat + sign*(u^p)_hat), nonlinearity dealiased by
    zero padding.  Raises :class:`ConvergenceError` if the L^2 size grows
    by more than a factor 1e6 (instability guard).
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if store_stride < 1:
        raise ValueError("store_stride must be >= 1")
    n_steps = max(1, round(cfg.horizon / dt))
    h = cfg.horizon / n_steps
    grid = d.grid
    lam2 = lambda_symbol(grid.xi) ** 2

    def rhs(ustate: np.ndarray, vstate: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        force = ustate
        if forcing:
            force = ustate + cfg.sign * _power_amplitudes(ustate, grid, cfg.p, 1, cfg.dealias)
        return vstate, -lam2 * force

    u_now = d.u0.amplitudes.copy()
    v_now = d.u1.amplitudes.copy()
    scale0 = max(np.linalg.norm(u_now), 1e-300)
    times = [0.0]
    u_states = [u_now.copy()]
    v_states = [v_now.copy()]
    for step in range(1, n_steps + 1):
        try:
            k1u, k1v = rhs(u_now, v_now)
            k2u, k2v = rhs(u_now + 0.5 * h * k1u, v_now + 0.5 * h * k1v)
            k3u, k3v = rhs(u_now + 0.5 * h * k2u, v_now + 0.5 * h * k2v)
            k4u, k4v = rhs(u_now + h * k3u, v_now + h * k3v)
        except OverflowError as err:
            raise ConvergenceError(f"instability detected at step {step}: {err}") from err
        u_now = u_now + (h / 6.0) * (k1u + 2 * k2u + 2 * k3u + k4u)
        v_now = v_now + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if np.linalg.norm(u_now) > 1e6 * scale0:
            raise ConvergenceError(f"instability detected at step {step}: norm grew > 1e6x")
        if step % store_stride == 0 or step == n_steps:
            times.append(step * h)
            u_states.append(u_now.copy())
            v_states.append(v_now.copy())
    return _trajectory_from_matrices(grid, np.array(times), np.vstack(u_states), np.vstack(v_states))


# ----------------------------------------------------------------------
# conserved energy


def energy(
    u: SpectralField, u_t: SpectralField, p: int, sign: int, dealias_factor: float | None = None
) -> float:
    """Conserved functional of the frequency-space flow.

    E = 1/2 sum_{xi != 0} (|u_hat_t|^2/lam^2 + |u_hat|^2) dxi
        + 2pi*sign/(p+1) * sum_j u(x_j)^{p+1} dx,

    with the potential sum taken on the dealiased (padded) position grid so
    that dE/dt vanishes identically along the semidiscrete flow -- see the
    directional-derivative identity exercised in the tests.  Requires mean
    zero velocity (u_hat_t(0) = 0), without which the xi = 0 mode grows
    linearly and is excluded from the quadratic sum.
    """
    if u.grid != u_t.grid:
        raise ValueError("grid mismatch")
    grid = u.grid
    zero_idx = grid.node_count // 2
    scale = float(np.max(np.abs(u_t.amplitudes))) or 1.0
    if abs(u_t.amplitudes[zero_idx]) > 1e-8 * scale:
        raise ValueError("energy requires mean-zero velocity (u_hat_t(0) = 0)")
    lam = lambda_symbol(grid.xi)
    mask = np.arange(grid.node_count) != zero_idx
    with np.errstate(divide="ignore", invalid="ignore"):
        kinetic = np.abs(u_t.amplitudes[mask]) ** 2 / lam[mask] ** 2
    quad = 0.5 * np.sum(kinetic + np.abs(u.amplitudes[mask]) ** 2) * grid.dxi
    factor = max(dealias_factor or 0.0, (p + 1) / 2)
    padded = _padded_node_count(grid.node_count, factor)
    samples = _position_samples_padded(u, padded).real
    dx_fine = 2.0 * np.pi / (padded * grid.dxi)
    potential = 2.0 * np.pi * sign / (p + 1) * np.sum(samples ** (p + 1)) * dx_fine
    return float(quad + potential)


def energy_series(traj: Trajectory, p: int, sign: int) -> np.ndarray:
    return np.array([energy(u, ut, p, sign) for u, ut in zip(traj.u, traj.u_t)])


# ----------------------------------------------------------------------
# data builders and physical checks


def single_mode_data(grid: FrequencyGrid, k: float, amplitude: float = 1.0) -> CauchyData:
    """u0 = amplitude*cos(k x), u1 = 0; k must be a grid node."""
    amp = np.zeros(grid.node_count, dtype=np.complex128)
    scale = amplitude * np.pi / grid.dxi
    amp[grid.index_of(k)] = scale
    amp[grid.index_of(-k)] = scale
    u0 = SpectralField(grid, amp, real_valued=True)
    return CauchyData(u0, SpectralField.zero(grid))


def gaussian_data(
    grid: FrequencyGrid, amplitude: float = 0.1, width: float = 1.0, velocity_amplitude: float = 0.0
) -> CauchyData:
    """Smooth bump data: u0_hat = a e^{-(xi/w)^2}, u1_hat = b (i xi) e^{-(xi/w)^2}.

    The velocity profile is mean-zero by construction, so the energy
    diagnostics apply.
    """
    xi = grid.xi
    bump = np.exp(-((xi / width) ** 2))
    amp0 = amplitude * bump.astype(np.complex128)
    amp0[0] = 0.0
    amp1 = velocity_amplitude * 1j * xi * bump
    amp1[0] = 0.0
    return CauchyData(
        SpectralField(grid, amp0, real_valued=True),
        SpectralField(grid, amp1, real_valued=True),
    )


def mode_amplitude_trace(k: float, horizon: float = 20.0, dt: float = 2e-3):
    """Uniform samples of the normalized mode amplitude of the free flow.

    Evolves u0 = cos(kx), u1 = 0 with the RK4 integrator (forcing off) and
    returns (times, Re u_hat(k, t)/u_hat(k, 0)), sampled roughly every half
    time unit.
    """
    grid = make_mode_grid(k)
    d = single_mode_data(grid, k)
    cfg = SolverConfig(p=2, sign=1, horizon=horizon)
    stride = max(1, round(0.5 / dt))
    traj = rk4_solve(d, cfg, dt, forcing=False, store_stride=stride)
    idx = grid.index_of(k)
    ref = d.u0.amplitudes[idx].real
    a = np.array([f.amplitudes[idx].real for f in traj.u]) / ref
    times = traj.times
    steps = np.diff(times)
    if steps.shape[0] > 1 and not np.isclose(steps[-1], steps[0], rtol=1e-9):
        times, a = times[:-1], a[:-1]  # final sample off the uniform stride
    return times, a


def dispersion_check(k: float, horizon: float = 20.0, dt: float = 2e-3) -> float:
    """Fit the oscillation frequency of a linearly evolved cosine mode.

    Recovers omega from the three-term recursion a_{i-1} + a_{i+1} =
    2 cos(omega Delta) a_i satisfied by uniform samples of cos(omega t).
    """
    times, a = mode_amplitude_trace(k, horizon, dt)
    if a.shape[0] < 5:
        raise RuntimeError("dispersion fit needs at least 5 samples")
    denom = 2.0 * np.sum(a[1:-1] ** 2)
    if denom <= 0:
        raise RuntimeError("dispersion fit failed: degenerate mode amplitude")
    c = float(np.sum(a[1:-1] * (a[:-2] + a[2:])) / denom)
    if not -1.0 < c < 1.0:
        raise RuntimeError(f"dispersion fit failed: cos(omega*dt) = {c}")
    delta = times[1] - times[0]
    return math.acos(c) / delta


def make_mode_grid(k: float) -> FrequencyGrid:
    """Small grid with k on it, comfortably inside the extent."""
    if not k > 0:
        raise ValueError("k must be positive")
    return FrequencyGrid(dxi=k / 8.0, node_count=32)
