"""Frequency grids, spectral fields, transforms, and norms.

Everything downstream (multiplier operators, the Duhamel solver, the
inflation experiments) works on a uniform symmetric discretization of the
Fourier line.  Conventions, fixed once here:

* grid nodes  xi_k = (k - M/2) * dxi  for k = 0..M-1,  dxi = 2*extent/M,
  so xi = 0 is always a node and the leftmost node -extent has no mirror
  partner;
* forward transform  u_hat(xi_k) = dx * sum_j u(x_j) exp(-i xi_k x_j)
  (trapezoid approximation of the line transform), inverse transform
  u(x_j) = (dxi/2pi) * sum_k u_hat(xi_k) exp(i xi_k x_j);
* with these weights the discrete Parseval relation
  sum |u(x_j)|^2 dx = (1/2pi) sum |u_hat(xi_k)|^2 dxi  holds exactly,
  and every norm below carries the explicit 1/2pi.

Fields are immutable; all operations return new objects and are safe to
call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "FrequencyGrid",
    "SpectralField",
    "PositionField",
    "BandWindow",
    "make_grid",
    "lambda_symbol",
    "to_position",
    "to_frequency",
    "sobolev_norm",
    "sup_norm",
    "restricted_norm",
    "pointwise_power",
    "pointwise_product",
    "random_real_field",
    "EmptyWindowWarning",
]

HERMITIAN_RTOL = 1e-12


class EmptyWindowWarning(UserWarning):
    """A band window that misses every grid node was reduced to the value 0."""


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform symmetric frequency grid with nodes (k - M/2)*dxi."""

    dxi: float
    node_count: int

    def __post_init__(self):
        if self.node_count % 2 != 0 or self.node_count < 8:
            raise ValueError(f"node_count must be even and >= 8, got {self.node_count}")
        if not (self.dxi > 0 and math.isfinite(self.dxi)):
            raise ValueError(f"dxi must be positive and finite, got {self.dxi}")

    @property
    def extent(self) -> float:
        return 0.5 * self.node_count * self.dxi

    @cached_property
    def xi(self) -> np.ndarray:
        k = np.arange(self.node_count)
        out = (k - self.node_count // 2) * self.dxi
        out.setflags(write=False)
        return out

    @property
    def dx(self) -> float:
        return 2.0 * np.pi / (self.node_count * self.dxi)

    @property
    def period(self) -> float:
        return 2.0 * np.pi / self.dxi

    @cached_property
    def x(self) -> np.ndarray:
        out = np.arange(self.node_count) * self.dx
        out.setflags(write=False)
        return out

    def index_of(self, xi: float) -> int:
        """Index of the node equal to ``xi`` (must lie on the grid)."""
        k = xi / self.dxi + self.node_count // 2
        ki = int(round(k))
        if not (0 <= ki < self.node_count) or abs(k - ki) > 1e-9:
            raise ValueError(f"{xi} is not a node of this grid")
        return ki


def make_grid(extent: float, node_count: int) -> FrequencyGrid:
    """Grid covering [-extent, extent) with ``node_count`` nodes.

    ``node_count`` must be even (so xi = 0 is a node) and at least 8.
    """
    if node_count % 2 != 0 or node_count < 8:
        raise ValueError(f"node_count must be even and >= 8, got {node_count}")
    if not (extent > 0 and math.isfinite(extent)):
        raise ValueError(f"extent must be positive, got {extent}")
    return FrequencyGrid(dxi=2.0 * extent / node_count, node_count=node_count)


def lambda_symbol(xi):
    """|xi| / sqrt(1 + xi^2), the phase speed profile of the linearized flow.

    Nonnegative, strictly increasing in |xi|, and below 1 (in float64 it
    rounds up to exactly 1.0 once |xi| exceeds ~1e8).
    """
    return np.abs(xi) / np.hypot(1.0, xi)


def _hermitian_defect(grid: FrequencyGrid, amplitudes: np.ndarray) -> float:
    # pairs (k, M-k) for k = 1..M-1; the leftmost node k = 0 has no partner
    a = amplitudes[1:]
    scale = float(np.max(np.abs(amplitudes))) or 1.0
    return float(np.max(np.abs(a - np.conj(a[::-1])))) / scale


@dataclass(frozen=True)
class SpectralField:
    """Complex amplitudes on a frequency grid.

    ``real_valued`` asserts Hermitian symmetry u_hat(-xi) = conj(u_hat(xi))
    at every symmetric node pair (checked on construction to 1e-12
    relative), i.e. the position-space samples are real.
    """

    grid: FrequencyGrid
    amplitudes: np.ndarray = field(repr=False)
    real_valued: bool = False

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        if amp.shape != (self.grid.node_count,):
            raise ValueError(
                f"amplitude count {amp.shape} does not match grid size {self.grid.node_count}"
            )
        if not np.all(np.isfinite(amp.view(np.float64))):
            raise ValueError("amplitudes must be finite")
        amp = amp.copy()
        amp.setflags(write=False)
        object.__setattr__(self, "amplitudes", amp)
        if self.real_valued and _hermitian_defect(self.grid, amp) > HERMITIAN_RTOL:
            raise ValueError("field marked real_valued violates Hermitian symmetry")

    @classmethod
    def zero(cls, grid: FrequencyGrid, real_valued: bool = True) -> "SpectralField":
        return cls(grid, np.zeros(grid.node_count, dtype=np.complex128), real_valued)

    def hermitian_defect(self) -> float:
        return _hermitian_defect(self.grid, self.amplitudes)

    # Linear arithmetic preserves Hermitian symmetry exactly (conjugation
    # commutes with IEEE +/-/scale), so derived fields keep the flag without
    # re-validation; a difference of nearly equal fields would otherwise
    # trip the relative check on rounding noise alone.

    def scaled(self, c: float) -> "SpectralField":
        return _combine(self.grid, c * self.amplitudes, self.real_valued)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if self.grid != other.grid:
            raise ValueError("grid mismatch")
        return _combine(
            self.grid, self.amplitudes + other.amplitudes, self.real_valued and other.real_valued
        )

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if self.grid != other.grid:
            raise ValueError("grid mismatch")
        return _combine(
            self.grid, self.amplitudes - other.amplitudes, self.real_valued and other.real_valued
        )


def _combine(grid: FrequencyGrid, amplitudes: np.ndarray, real_valued: bool) -> SpectralField:
    """Field from arithmetic on validated fields: finiteness checked, symmetry trusted."""
    f = object.__new__(SpectralField)
    amp = np.asarray(amplitudes, dtype=np.complex128)
    if not np.all(np.isfinite(amp.view(np.float64))):
        raise ValueError("amplitudes must be finite")
    amp = amp.copy()
    amp.setflags(write=False)
    object.__setattr__(f, "grid", grid)
    object.__setattr__(f, "amplitudes", amp)
    object.__setattr__(f, "real_valued", real_valued)
    return f


@dataclass(frozen=True)
class PositionField:
    """Samples u(x_j) on the dual grid, period 2pi/dxi."""

    grid: FrequencyGrid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.shape != (self.grid.node_count,):
            raise ValueError("sample count does not match grid size")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def period(self) -> float:
        return self.grid.period

    def real_samples(self, rtol: float = 1e-10) -> np.ndarray:
        scale = float(np.max(np.abs(self.samples))) or 1.0
        residue = float(np.max(np.abs(self.samples.imag))) / scale
        if residue > rtol:
            raise ValueError(f"imaginary residue {residue:.3e} exceeds {rtol:.1e}")
        return self.samples.real.copy()


@dataclass(frozen=True)
class BandWindow:
    """Closed frequency interval [lo, hi]."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"window requires lo < hi, got [{self.lo}, {self.hi}]")

    def mask(self, grid: FrequencyGrid) -> np.ndarray:
        xi = grid.xi
        return (xi >= self.lo) & (xi <= self.hi)


# ----------------------------------------------------------------------
# transforms


def to_position(f: SpectralField) -> PositionField:
    """Inverse transform: u(x_j) = (dxi/2pi) sum_k u_hat(xi_k) e^{i xi_k x_j}."""
    samples = np.fft.ifft(np.fft.ifftshift(f.amplitudes)) / f.grid.dx
    return PositionField(f.grid, samples)


def to_frequency(g: PositionField, real_valued: bool | None = None) -> SpectralField:
    """Forward transform: u_hat(xi_k) = dx sum_j u(x_j) e^{-i xi_k x_j}.

    ``real_valued`` defaults to auto-detection from the Hermitian defect of
    the result.
    """
    amp = g.grid.dx * np.fft.fftshift(np.fft.fft(g.samples))
    if real_valued is None:
        real_valued = _hermitian_defect(g.grid, amp) <= HERMITIAN_RTOL
    return SpectralField(g.grid, amp, real_valued)


def _padded_node_count(node_count: int, factor: float) -> int:
    padded = int(math.ceil(node_count * factor))
    return padded + padded % 2


def _pad_amplitudes(amp: np.ndarray, padded: int) -> np.ndarray:
    m = amp.shape[0]
    out = np.zeros(padded, dtype=np.complex128)
    lo = padded // 2 - m // 2
    out[lo : lo + m] = amp
    return out


def _truncate_amplitudes(amp: np.ndarray, node_count: int) -> np.ndarray:
    m = amp.shape[0]
    lo = m // 2 - node_count // 2
    return amp[lo : lo + node_count]


def _position_samples_padded(f: SpectralField, padded: int) -> np.ndarray:
    # padding in frequency = trigonometric interpolation onto a finer dual grid
    dx_fine = 2.0 * np.pi / (padded * f.grid.dxi)
    return np.fft.ifft(np.fft.ifftshift(_pad_amplitudes(f.amplitudes, padded))) / dx_fine


def _frequency_from_padded(samples: np.ndarray, grid: FrequencyGrid) -> np.ndarray:
    padded = samples.shape[0]
    dx_fine = 2.0 * np.pi / (padded * grid.dxi)
    amp = dx_fine * np.fft.fftshift(np.fft.fft(samples))
    return _truncate_amplitudes(amp, grid.node_count)


# ----------------------------------------------------------------------
# norms


def sobolev_norm(f: SpectralField, s: float) -> float:
    """H^s norm: ( sum <xi>^{2s} |u_hat|^2 dxi / 2pi )^{1/2}."""
    weights = (1.0 + f.grid.xi**2) ** s
    total = np.sum(weights * np.abs(f.amplitudes) ** 2) * f.grid.dxi / (2.0 * np.pi)
    return float(np.sqrt(total))


def restricted_norm(f: SpectralField, window: BandWindow, s: float) -> float:
    """Same weighted sum as :func:`sobolev_norm`, restricted to nodes in the window.

    An empty intersection returns 0 and raises :class:`EmptyWindowWarning`.
    """
    mask = window.mask(f.grid)
    if not mask.any():
        import warnings

        warnings.warn(
            f"window [{window.lo}, {window.hi}] contains no grid node", EmptyWindowWarning
        )
        return 0.0
    xi = f.grid.xi[mask]
    weights = (1.0 + xi**2) ** s
    total = np.sum(weights * np.abs(f.amplitudes[mask]) ** 2) * f.grid.dxi / (2.0 * np.pi)
    return float(np.sqrt(total))


def sup_norm(f: SpectralField, oversample: int = 8) -> float:
    """L^inf norm of the band-limited interpolant.

    Max of |u| over an ``oversample``-times refined dual grid, sharpened by
    a parabolic fit through the winning sample and its two neighbours.  The
    refinement never decreases the plain sample maximum, which keeps the
    exact product bound |vw|_{L^2} <= |v|_{L^2} sup|w| provable whenever
    the product is formed on a coarser padded grid.
    """
    padded = _padded_node_count(f.grid.node_count, float(oversample))
    mag = np.abs(_position_samples_padded(f, padded))
    j = int(np.argmax(mag))
    y0, y1, y2 = mag[j - 1], mag[j], mag[(j + 1) % padded]
    denom = y0 - 2.0 * y1 + y2
    peak = y1
    if denom < 0.0:  # strict local max: parabola vertex lies above the sample
        peak = y1 - 0.125 * (y2 - y0) ** 2 / denom
    return float(max(peak, y1))


# ----------------------------------------------------------------------
# nonlinearity


def _power_amplitudes(
    amp: np.ndarray, grid: FrequencyGrid, p: int, sign: int, dealias_factor: float
) -> np.ndarray:
    """Amplitudes of sign * u^p for a Hermitian ``amp``, via padded transforms."""
    padded = _padded_node_count(grid.node_count, dealias_factor)
    dx_fine = 2.0 * np.pi / (padded * grid.dxi)
    samples = np.fft.ifft(np.fft.ifftshift(_pad_amplitudes(amp, padded))).real / dx_fine
    with np.errstate(over="ignore", invalid="ignore"):
        powered = sign * samples**p
    if not np.all(np.isfinite(powered)):
        raise OverflowError("position samples overflowed while forming the pointwise power")
    out = dx_fine * np.fft.fftshift(np.fft.fft(powered))
    return _truncate_amplitudes(out, grid.node_count)


def pointwise_power(f: SpectralField, p: int, sign: int, dealias_factor: float | None = None) -> SpectralField:
    """Spectral representation of sign * u^p, dealiased by zero padding.

    The field is transformed to position space on a grid padded by
    ``dealias_factor`` (default (p+1)/2, the smallest factor making the
    degree-p product alias-free on the represented band), raised to the
    p-th power pointwise, transformed back, and truncated to the original
    grid.
    """
    if not f.real_valued:
        raise ValueError("pointwise_power requires a real_valued field")
    if p < 1:
        raise ValueError("power must be a positive integer")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if dealias_factor is None:
        dealias_factor = (p + 1) / 2
    if dealias_factor < (p + 1) / 2:
        raise ValueError(f"dealias_factor must be >= (p+1)/2 = {(p + 1) / 2}")
    out = _power_amplitudes(f.amplitudes, f.grid, p, sign, dealias_factor)
    return SpectralField(f.grid, out, real_valued=True)


def pointwise_product(v: SpectralField, w: SpectralField, dealias_factor: float = 2.0) -> SpectralField:
    """Dealiased spectral representation of the pointwise product v*w."""
    if v.grid != w.grid:
        raise ValueError("grid mismatch")
    if dealias_factor < 1.0:
        raise ValueError("dealias_factor must be >= 1")
    padded = _padded_node_count(v.grid.node_count, dealias_factor)
    a = _position_samples_padded(v, padded)
    b = _position_samples_padded(w, padded)
    amp = _frequency_from_padded(a * b, v.grid)
    return SpectralField(v.grid, amp, real_valued=v.real_valued and w.real_valued)


# ----------------------------------------------------------------------
# test corpora


def random_real_field(
    grid: FrequencyGrid, rng: np.random.Generator, decay: float = 1.0, band_fraction: float = 0.5
) -> SpectralField:
    """Random Hermitian field with <xi>^-decay amplitudes on a centered band."""
    m = grid.node_count
    xi = grid.xi
    amp = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) * (1.0 + xi**2) ** (-decay / 2.0)
    amp[np.abs(xi) > band_fraction * grid.extent] = 0.0
    amp[0] = 0.0
    half = amp[m // 2 + 1 :]
    amp[1 : m // 2] = np.conj(half[::-1])
    amp[m // 2] = amp[m // 2].real
    return SpectralField(grid, amp, real_valued=True)
