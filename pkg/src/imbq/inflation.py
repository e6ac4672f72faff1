"""Frequency-box data and the p-th derivative of the flow map at zero.

The rough-data experiments drive the solver's flow map S(t)(u0, u1) with
data concentrated on the unit frequency boxes +-[N, N+1):

    u0_hat = 1_{B_N} + 1_{-B_N},      u1_hat = -i lambda (1_{B_N} - 1_{-B_N}),

whose free evolution is the pure phase e^{-i t lambda} on B_N (and its
conjugate mirror).  The p-th directional derivative of the flow map at the
origin along this data is an explicit oscillatory integral over a p-fold
frequency convolution; its restricted H^s size, divided by the p-th power
of the data's H^s size, grows like a power of N for s < 0.  Measuring that
growth exponent is the point of this module.

Two independent routes compute the derivative: a padded-FFT convolution
with Simpson time quadrature (:func:`compute_Ap`) and a direct nested sum
with the time integral in closed form (:func:`brute_force_Ap`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import (
    BandWindow,
    FrequencyGrid,
    SpectralField,
    _pad_amplitudes,
    _padded_node_count,
    _truncate_amplitudes,
    lambda_symbol,
    restricted_norm,
    sobolev_norm,
)
from .solver import CauchyData, SolverConfig, free_propagator, solve

__all__ = [
    "IPData",
    "QuadratureConfig",
    "GenericTermParams",
    "InflationRow",
    "InflationReport",
    "DerivativeCheck",
    "EVEN_BAND",
    "make_ip_data",
    "grid_for_boxes",
    "free_evolution_hat",
    "generic_term_real",
    "generic_term_complex",
    "compute_Ap",
    "brute_force_Ap",
    "inflation_ratio",
    "ratio_sweep",
    "flowmap_derivative_check",
    "WrapError",
    "QuadratureError",
]

EVEN_BAND = BandWindow(0.25, 0.5)
DEGENERACY_RTOL = 1e-8


class WrapError(RuntimeError):
    """The padded convolution leaked mass to the boundary (circular wrap)."""


class QuadratureError(RuntimeError):
    """The time quadrature did not stabilize under node doubling."""


@dataclass(frozen=True)
class QuadratureConfig:
    """Controls for the derivative computation.

    ``dxi`` must divide 1 so the unit boxes are resolved by whole bins;
    ``pad_factor`` defaults to p+1, comfortably past the wrap-free minimum.
    """

    tau_nodes: int = 65
    pad_factor: float | None = None
    dxi: float = 1.0 / 64.0

    def __post_init__(self):
        if self.tau_nodes % 2 == 0 or self.tau_nodes < 5:
            raise ValueError("tau_nodes must be odd and >= 5")
        if self.pad_factor is not None and self.pad_factor < 1.0:
            raise ValueError("pad_factor must be >= 1")
        if abs(1.0 / self.dxi - round(1.0 / self.dxi)) > 1e-9:
            raise ValueError(f"dxi must divide 1 exactly, got {self.dxi}")


@dataclass(frozen=True)
class IPData:
    """Realized box data on a grid: masks of the two boxes plus the CauchyData."""

    N: int
    grid: FrequencyGrid
    data: CauchyData
    plus_mask: np.ndarray = field(repr=False)
    minus_mask: np.ndarray = field(repr=False)

    @property
    def box(self) -> BandWindow:
        return BandWindow(float(self.N), float(self.N + 1))


def grid_for_boxes(n_max: int, p: int, dxi: float = 1.0 / 64.0) -> FrequencyGrid:
    """Default experiment grid: extent p*(n_max + 2) + 2 at spacing dxi."""
    extent = p * (n_max + 2) + 2
    node_count = int(round(2 * extent / dxi))
    return FrequencyGrid(dxi=dxi, node_count=node_count + node_count % 2)


def make_ip_data(N: int, grid: FrequencyGrid) -> IPData:
    """Box data with u0_hat the indicator of [N, N+1) union its mirror.

    Bins are left-closed on the positive side and mirrored exactly on the
    negative side (so Hermitian symmetry is exact and the box mass is
    exactly 1 per box).  Requires 1/dxi integer and the box inside the grid.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    bins_per_unit = 1.0 / grid.dxi
    if abs(bins_per_unit - round(bins_per_unit)) > 1e-9:
        raise ValueError(f"grid spacing {grid.dxi} does not divide 1")
    if N + 1 >= grid.extent:
        raise ValueError(f"box [{N}, {N + 1}] falls outside the grid extent {grid.extent}")
    xi = grid.xi
    plus = (xi >= N) & (xi < N + 1)
    # mirror node of index k is M - k; the leftmost node (k = 0) has no partner
    minus = np.zeros_like(plus)
    minus[1:] = plus[1:][::-1]
    lam = lambda_symbol(xi)
    amp0 = plus.astype(np.complex128) + minus.astype(np.complex128)
    amp1 = -1j * lam * (plus.astype(np.complex128) - minus.astype(np.complex128))
    data = CauchyData(
        SpectralField(grid, amp0, real_valued=True),
        SpectralField(grid, amp1, real_valued=True),
    )
    return IPData(N=N, grid=grid, data=data, plus_mask=plus, minus_mask=minus)


def free_evolution_hat(d: IPData, t: float) -> SpectralField:
    """Closed form of the free flow on box data: pure phases on the boxes."""
    lam = lambda_symbol(d.grid.xi)
    amp = np.exp(-1j * t * lam) * d.plus_mask + np.exp(1j * t * lam) * d.minus_mask
    return SpectralField(d.grid, amp, real_valued=True)


# ----------------------------------------------------------------------
# the generic oscillatory time integral


def _sinc(x):
    return np.sinc(np.asarray(x) / np.pi)


def generic_term_real(alpha, beta, t):
    """Re of int_0^t sin(alpha (t - tau)) e^{i beta tau} dtau, in closed form.

    Away from the degeneracy |alpha| = |beta| this is
    alpha (cos(beta t) - cos(alpha t)) / (alpha^2 - beta^2), evaluated
    through the product identity cos b - cos a = 2 sin((a+b)/2) sin((a-b)/2)
    so no cancellation occurs; within |beta^2 - alpha^2| <
    1e-8 max(alpha^2, beta^2, 1) it switches to the series about the
    degenerate branch t sin(alpha t)/2, second order in (beta^2 - alpha^2).
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be >= 0")
    delta = beta**2 - alpha**2
    threshold = DEGENERACY_RTOL * np.maximum(np.maximum(alpha**2, beta**2), 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        plus = (alpha + beta) * t / 2.0
        minus = (alpha - beta) * t / 2.0
        closed = 2.0 * alpha * np.sin(plus) * np.sin(minus) / ((alpha - beta) * (alpha + beta))
        ta = t * alpha
        sin_ta, cos_ta = np.sin(ta), np.cos(ta)
        c1 = (t**2 * alpha * cos_ta - t * sin_ta) / (8.0 * alpha**2)
        c2 = -(t**3 * alpha**2 * sin_ta + 3.0 * t**2 * alpha * cos_ta - 3.0 * t * sin_ta) / (
            48.0 * alpha**4
        )
        series = 0.5 * t * sin_ta + c1 * delta + c2 * delta**2
    out = np.where(np.abs(delta) < threshold, series, closed)
    out = np.where(alpha == 0.0, 0.0, out)
    return out if out.ndim else float(out[()])


def generic_term_complex(alpha, beta, t):
    """Full complex value of int_0^t sin(alpha (t - tau)) e^{i beta tau} dtau.

    Stable product-of-sinc forms, valid through both degeneracies
    beta = +-alpha.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    plus = (alpha + beta) * t / 2.0
    minus = (alpha - beta) * t / 2.0
    re = (alpha * t**2 / 2.0) * _sinc(plus) * _sinc(minus)
    im = (t / 2.0) * (np.cos(minus) * _sinc(plus) - np.cos(plus) * _sinc(minus))
    out = re + 1j * im
    return out if out.ndim else complex(out[()])


@dataclass(frozen=True)
class GenericTermParams:
    """One sign-pattern cell of the p-fold sum: frequencies a_j in the box.

    ``alpha`` is the output-frequency symbol value lambda(sum eps_j a_j)
    and ``beta`` the accumulated phase rate -sum eps_j lambda(a_j).
    """

    alpha: float
    beta: float
    t: float
    signs: tuple[int, ...]
    freqs: tuple[float, ...]

    def __post_init__(self):
        xi = sum(e * a for e, a in zip(self.signs, self.freqs))
        if abs(self.alpha - lambda_symbol(xi)) > 1e-9:
            raise ValueError("alpha must equal lambda(sum eps_j a_j)")

    @classmethod
    def from_cell(cls, signs, freqs, t: float) -> "GenericTermParams":
        xi = sum(e * a for e, a in zip(signs, freqs))
        beta = -sum(e * lambda_symbol(a) for e, a in zip(signs, freqs))
        return cls(
            alpha=float(lambda_symbol(xi)),
            beta=float(beta),
            t=t,
            signs=tuple(int(e) for e in signs),
            freqs=tuple(float(a) for a in freqs),
        )

    def value(self) -> complex:
        return generic_term_complex(self.alpha, self.beta, self.t)


# ----------------------------------------------------------------------
# the p-th derivative, FFT route


def _line_convolution_power(
    amp: np.ndarray, grid: FrequencyGrid, p: int, pad_factor: float
) -> tuple[np.ndarray, np.ndarray]:
    """p-fold convolution power of a Hermitian spectrum via padded transforms.

    Returns the result truncated to the grid and the full padded spectrum
    (for wrap inspection).  Equals the nested dxi^{p-1}-weighted node sum
    times (1/2pi)^{p-1}: the normalization the flow map itself produces for
    the transform of a pointwise p-th power, which keeps the derivative
    comparable to the solver extraction in :func:`flowmap_derivative_check`.
    """
    padded = _padded_node_count(grid.node_count, pad_factor)
    dx_fine = 2.0 * np.pi / (padded * grid.dxi)
    pos = np.fft.ifft(np.fft.ifftshift(_pad_amplitudes(amp, padded))).real / dx_fine
    spec = dx_fine * np.fft.fftshift(np.fft.fft(pos**p))
    return _truncate_amplitudes(spec, grid.node_count), spec


def _check_wrap(padded_spec: np.ndarray, scale: float):
    guard = 3  # nodes within 2*dxi of each padded edge
    edge = max(np.max(np.abs(padded_spec[:guard])), np.max(np.abs(padded_spec[-guard:])))
    if edge > 1e-10 * scale:
        raise WrapError(
            f"convolution mass {edge:.3e} within 2 bins of the padded boundary "
            f"(scale {scale:.3e}); increase the grid extent or padding"
        )


def _ap_amplitudes(
    d: IPData, p: int, sign: int, t: float, tau_nodes: int, pad_factor: float, check_wrap: bool
) -> np.ndarray:
    grid = d.grid
    lam = lambda_symbol(grid.xi)
    taus = np.linspace(0.0, t, tau_nodes)
    w = np.ones(tau_nodes)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (taus[1] - taus[0]) / 3.0
    accum = np.zeros(grid.node_count, dtype=np.complex128)
    for j, tau in enumerate(taus):
        g_tau = np.exp(-1j * tau * lam) * d.plus_mask + np.exp(1j * tau * lam) * d.minus_mask
        conv, padded_spec = _line_convolution_power(g_tau, grid, p, pad_factor)
        if check_wrap and j == 0:
            _check_wrap(padded_spec, float(np.max(np.abs(padded_spec))))
        accum += w[j] * np.sin((t - tau) * lam) * conv
    return -sign * math.factorial(p) * lam * accum


def compute_Ap(
    d: IPData, p: int, sign: int, t: float, q: QuadratureConfig | None = None
) -> SpectralField:
    """p-th derivative of the flow map at zero along the box data, at time t.

    For each Simpson node tau the free evolution's spectrum is raised to
    the p-th convolution power on a padded grid, weighted by
    -sign * p! * lambda * sin((t - tau) lambda), and accumulated.  The
    result is recomputed with doubled tau nodes and must agree to 1e-6
    relative; mass near the padded boundary raises :class:`WrapError`.
    """
    q = q or QuadratureConfig()
    if p < 2:
        raise ValueError("p must be >= 2")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if t < 0:
        raise ValueError("t must be >= 0")
    if d.grid.extent < p * (d.N + 2) - 1e-9:
        raise ValueError(
            f"grid extent {d.grid.extent} below p*(N+2) = {p * (d.N + 2)}; convolution would wrap"
        )
    if t == 0.0:
        return SpectralField.zero(d.grid)
    pad = q.pad_factor if q.pad_factor is not None else float(p + 1)
    base = _ap_amplitudes(d, p, sign, t, q.tau_nodes, pad, check_wrap=True)
    refined = _ap_amplitudes(d, p, sign, t, 2 * (q.tau_nodes - 1) + 1, pad, check_wrap=False)
    scale = float(np.linalg.norm(refined))
    if scale > 0 and float(np.linalg.norm(refined - base)) > 1e-6 * scale:
        raise QuadratureError(
            f"time quadrature changed by more than 1e-6 relative under node doubling "
            f"(tau_nodes={q.tau_nodes})"
        )
    return SpectralField(d.grid, base, real_valued=True)


# ----------------------------------------------------------------------
# the p-th derivative, direct-sum oracle


def brute_force_Ap(d: IPData, p: int, sign: int, t: float) -> SpectralField:
    """Direct nested summation over the box nodes, exact in the time variable.

    Tractable for p in {2, 3} on coarse grids; guards the FFT route against
    scaling and wrap mistakes.
    """
    if p not in (2, 3):
        raise ValueError("brute force supports p in {2, 3}")
    grid = d.grid
    m = grid.node_count
    half = m // 2
    xi = grid.xi
    lam = lambda_symbol(xi)
    support = np.flatnonzero(d.plus_mask | d.minus_mask)
    out = np.zeros(m, dtype=np.complex128)
    scale = (grid.dxi / (2.0 * np.pi)) ** (p - 1)
    for i1 in support:
        for i2 in support:
            if p == 2:
                k = i1 + i2 - half
                if 0 <= k < m:
                    cell = GenericTermParams.from_cell(
                        (_box_sign(d, i1), _box_sign(d, i2)),
                        (abs(xi[i1]), abs(xi[i2])),
                        t,
                    )
                    out[k] += scale * cell.value()
            else:
                for i3 in support:
                    k = i1 + i2 + i3 - m
                    if 0 <= k < m:
                        cell = GenericTermParams.from_cell(
                            (_box_sign(d, i1), _box_sign(d, i2), _box_sign(d, i3)),
                            (abs(xi[i1]), abs(xi[i2]), abs(xi[i3])),
                            t,
                        )
                        out[k] += scale * cell.value()
    out *= -sign * math.factorial(p) * lam
    return SpectralField(grid, out, real_valued=True)


def _box_sign(d: IPData, idx: int) -> int:
    return 1 if d.plus_mask[idx] else -1


# ----------------------------------------------------------------------
# ratios and sweeps


@dataclass(frozen=True)
class InflationRow:
    N: int
    band_lo: float
    band_hi: float
    numerator: float
    denominator: float
    ratio: float


@dataclass(frozen=True)
class InflationReport:
    """Per-N inflation ratios plus the fitted log-log growth exponent."""

    p: int
    s: float
    t: float
    sign: int
    rows: tuple[InflationRow, ...]
    slope: float | None
    intercept: float | None
    residual: float | None
    expected_slope: float

    def passes(self, slope_tol: float = 0.2) -> bool:
        return self.slope is not None and abs(self.slope - self.expected_slope) <= slope_tol


def _band_for(p: int, N: int) -> BandWindow:
    return EVEN_BAND if p % 2 == 0 else BandWindow(float(N), float(N + 1))


def inflation_ratio(
    d: IPData, p: int, sign: int, s: float, t: float, q: QuadratureConfig | None = None
) -> InflationRow:
    """Restricted H^s size of the derivative over the p-th power of the data size.

    The restriction band is [1/4, 1/2] for even p (where only balanced sign
    patterns land) and [N, N+1] for odd p.
    """
    band = _band_for(p, d.N)
    ap = compute_Ap(d, p, sign, t, q)
    numerator = restricted_norm(ap, band, s)
    denominator = (sobolev_norm(d.data.u0, s) + sobolev_norm(d.data.u1, s)) ** p
    return InflationRow(
        N=d.N,
        band_lo=band.lo,
        band_hi=band.hi,
        numerator=numerator,
        denominator=denominator,
        ratio=numerator / denominator,
    )


def expected_slope(p: int, s: float) -> float:
    return -s * p if p % 2 == 0 else -s * (p - 1)


def ratio_sweep(
    n_list,
    p: int,
    sign: int,
    s: float,
    t: float,
    q: QuadratureConfig | None = None,
    rows: list[InflationRow] | None = None,
) -> InflationReport:
    """Inflation ratios over an increasing list of N, with a log-log slope fit.

    All N share one grid sized by the largest; pass precomputed ``rows``
    (e.g. from a worker pool) to skip the computation and just assemble.
    """
    if any(n != int(n) for n in n_list):
        raise ValueError("N values must be whole numbers")
    n_list = [int(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("N list must be strictly increasing")
    q = q or QuadratureConfig()
    if rows is None:
        grid = grid_for_boxes(max(n_list), p, q.dxi)
        rows = [inflation_ratio(make_ip_data(n, grid), p, sign, s, t, q) for n in n_list]
    rows = sorted(rows, key=lambda r: r.N)
    slope = intercept = residual = None
    if len(rows) >= 3:
        x = np.log([r.N for r in rows])
        y = np.log([r.ratio for r in rows])
        coeffs = np.polyfit(x, y, 1)
        slope = float(coeffs[0])
        intercept = float(coeffs[1])
        residual = float(np.sqrt(np.mean((np.polyval(coeffs, x) - y) ** 2)))
    return InflationReport(
        p=p,
        s=s,
        t=t,
        sign=sign,
        rows=tuple(rows),
        slope=slope,
        intercept=intercept,
        residual=residual,
        expected_slope=expected_slope(p, s),
    )


# ----------------------------------------------------------------------
# cross-validation of the solver against the derivative


@dataclass(frozen=True)
class DerivativeCheck:
    """Residual of the solver-extracted derivative against compute_Ap."""

    relative_error: float
    halving_ratio: float
    eps: float


def _solver_residual(
    d: IPData, p: int, sign: int, t: float, eps: float, ap: SpectralField, cfg: SolverConfig
) -> float:
    scaled = d.data.scaled(eps)
    traj = solve(scaled, cfg)
    u_final = traj.u[traj.index_at(t)]
    free = free_propagator(scaled, t)
    extracted = (u_final - free).scaled(math.factorial(p) / eps**p)
    return sobolev_norm(extracted - ap, 0.0) / sobolev_norm(ap, 0.0)


def flowmap_derivative_check(
    N: int,
    p: int,
    sign: int,
    t: float,
    eps: float,
    q: QuadratureConfig | None = None,
) -> DerivativeCheck:
    """Run the full solver on eps-scaled box data and extract the p-th term.

    (u(t) - eps*free(t)) * p!/eps^p converges to the derivative field at
    rate O(eps); the check returns the relative L^2 residual at ``eps`` and
    the ratio of residuals at eps and eps/2 (expected near 2).
    """
    q = q or QuadratureConfig()
    grid = grid_for_boxes(N, p, q.dxi)
    d = make_ip_data(N, grid)
    ap = compute_Ap(d, p, sign, t, q)
    cfg = SolverConfig(p=p, sign=sign, horizon=t)
    err_full = _solver_residual(d, p, sign, t, eps, ap, cfg)
    err_half = _solver_residual(d, p, sign, t, eps / 2.0, ap, cfg)
    return DerivativeCheck(
        relative_error=err_full,
        halving_ratio=err_full / err_half,
        eps=eps,
    )
