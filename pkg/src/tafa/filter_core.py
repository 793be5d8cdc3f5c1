"""Discrete-time FIR prototype design and zero-order-hold conversion."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.signal import firwin

MODES = ("lowpass", "bandpass-target")

# Below this many taps the least-squares fit is poorly conditioned; use a window.
_WINDOW_FALLBACK_TAPS = 3
_GRID_PER_BAND = 1024


class SpecError(ValueError):
    """A FilterSpec violates one of its invariants."""


class InfeasibleSpecError(RuntimeError):
    """The requested stopband attenuation cannot be reached with the given taps."""

    def __init__(self, achieved_db: float, requested_db: float):
        self.achieved_db = achieved_db
        self.requested_db = requested_db
        super().__init__(
            f"achieved attenuation {achieved_db:.2f} dB < requested {requested_db:.2f} dB"
        )


@dataclass(frozen=True)
class FilterSpec:
    """User-facing filter description.

    ``band_edges`` holds ``[passband_edge]`` or ``[passband_edge, stopband_edge]``
    in lowpass mode, and ``[B1, f0, B2]`` (signal band, notch start, notch width)
    in bandpass-target mode. All frequencies in Hz.
    """

    mode: str
    num_taps: int
    tap_interval: float
    clock_period: float
    band_edges: tuple[float, ...]
    attenuation_db: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "band_edges", tuple(float(b) for b in self.band_edges))
        self.validate()

    @property
    def nyquist(self) -> float:
        """Reference band B = 1/(2 T_tap) for the full-band loss."""
        return 1.0 / (2.0 * self.tap_interval)

    @property
    def grid_factor(self) -> int:
        return int(round(self.tap_interval / self.clock_period))

    def validate(self) -> None:
        if self.mode not in MODES:
            raise SpecError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.num_taps) != self.num_taps or self.num_taps < 1:
            raise SpecError(f"num_taps must be a positive integer, got {self.num_taps!r}")
        if not (self.tap_interval > 0 and self.clock_period > 0):
            raise SpecError("tap_interval and clock_period must be positive")
        ratio = self.tap_interval / self.clock_period
        if abs(ratio - round(ratio)) > 1e-9 * ratio or round(ratio) < 2:
            raise SpecError(
                f"tap_interval must be an integer multiple (>= 2) of clock_period, ratio={ratio}"
            )
        fmax = 1.0 / (2.0 * self.clock_period)
        for b in self.band_edges:
            if not 0.0 < b < fmax:
                raise SpecError(f"band edge {b} Hz outside (0, {fmax}) Hz")
        if self.mode == "lowpass":
            if len(self.band_edges) not in (1, 2):
                raise SpecError("lowpass mode takes [passband_edge] or [passband_edge, stopband_edge]")
            if len(self.band_edges) == 2 and self.band_edges[1] <= self.band_edges[0]:
                raise SpecError("stopband edge must exceed passband edge")
        else:
            if len(self.band_edges) != 3:
                raise SpecError("bandpass-target mode takes [B1, f0, B2]")
            b1, f0, _ = self.band_edges
            if f0 <= b1:
                raise SpecError("notch start f0 must lie above the signal band B1")


@dataclass(frozen=True)
class ImpulseResponse:
    coeffs: np.ndarray
    tap_interval: float

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coeffs must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(c)):
            raise ValueError("coeffs must be finite")
        if not np.any(c != 0):
            raise ValueError("at least one coefficient must be nonzero")
        if not self.tap_interval > 0:
            raise ValueError("tap_interval must be positive")

    @property
    def num_taps(self) -> int:
        return self.coeffs.size


@dataclass(frozen=True)
class CtResponse:
    """Piecewise-constant waveform: contiguous ``[starts[i], ends[i])`` at ``levels[i]``."""

    starts: np.ndarray
    ends: np.ndarray
    levels: np.ndarray
    total_duration: float = field(default=0.0)

    def __post_init__(self):
        for name in ("starts", "ends", "levels"):
            a = np.asarray(getattr(self, name), dtype=float).copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        if not (self.starts.shape == self.ends.shape == self.levels.shape):
            raise ValueError("starts, ends and levels must have equal length")
        if self.starts.size:
            if np.any(self.ends < self.starts):
                raise ValueError("segment ends before it starts")
            if np.any(self.starts[1:] != self.ends[:-1]):
                raise ValueError("segments must be contiguous and ordered")

    @classmethod
    def from_segments(cls, segments: Sequence[tuple[float, float, float]]) -> "CtResponse":
        arr = np.asarray(segments, dtype=float).reshape(-1, 3)
        total = float(arr[-1, 1] - arr[0, 0]) if len(arr) else 0.0
        return cls(arr[:, 0], arr[:, 1], arr[:, 2], total)

    @property
    def segments(self) -> list[tuple[float, float, float]]:
        return [(float(s), float(e), float(v)) for s, e, v in zip(self.starts, self.ends, self.levels)]

    @property
    def widths(self) -> np.ndarray:
        return self.ends - self.starts

    def integral(self) -> float:
        return float(np.sum(self.levels * self.widths))


def _fold(nu: np.ndarray) -> np.ndarray:
    """Map normalized frequencies (cycles per tap) onto the DT base band [0, 0.5]."""
    nu = np.mod(nu, 1.0)
    return np.where(nu > 0.5, 1.0 - nu, nu)


def _band_grids(spec: FilterSpec) -> tuple[np.ndarray, np.ndarray]:
    """Passband and stopband sample points in cycles per tap."""
    t = spec.tap_interval
    if spec.mode == "lowpass":
        fp = spec.band_edges[0]
        fs = spec.band_edges[1]
        if fs >= spec.nyquist:
            raise SpecError(f"stopband edge {fs} Hz must lie below the tap-rate Nyquist {spec.nyquist} Hz")
        passband = _fold(np.linspace(0.0, fp, _GRID_PER_BAND) * t)
        stopband = np.linspace(fs * t, 0.5, _GRID_PER_BAND)
    else:
        b1, f0, b2 = spec.band_edges
        passband = _fold(np.linspace(0.0, b1, _GRID_PER_BAND) * t)
        stopband = _fold(np.linspace(f0, f0 + b2, _GRID_PER_BAND) * t)
    return passband, stopband


def _symmetric_lstsq(num_taps: int, passband: np.ndarray, stopband: np.ndarray) -> np.ndarray:
    """Least-squares linear-phase fit of 1 on the passband and 0 on the stopband."""
    half = (num_taps + 1) // 2
    mid = (num_taps - 1) / 2.0
    nu = np.concatenate([passband, stopband])
    desired = np.concatenate([np.ones_like(passband), np.zeros_like(stopband)])
    n = np.arange(half)
    # Amplitude of a symmetric filter: sum over mirrored pairs of 2 h_n cos(2 pi nu (n - mid)).
    basis = np.cos(2.0 * np.pi * np.outer(nu, n - mid))
    pair = np.where(n == mid, 1.0, 2.0)
    coef, *_ = np.linalg.lstsq(basis * pair, desired, rcond=None)
    return np.concatenate([coef, coef[: num_taps - half][::-1]])


def _window_design(spec: FilterSpec) -> np.ndarray:
    t = spec.tap_interval
    if spec.mode == "lowpass" and len(spec.band_edges) == 2:
        cutoff = 0.5 * (spec.band_edges[0] + spec.band_edges[1]) * t
    else:
        cutoff = spec.band_edges[0] * t
    cutoff = float(np.clip(_fold(np.array([cutoff]))[0], 1e-6, 0.5 - 1e-6))
    return firwin(spec.num_taps, cutoff, window="hamming", fs=1.0)


def dtft(coeffs: np.ndarray, nu: np.ndarray) -> np.ndarray:
    """DTFT of ``coeffs`` at normalized frequencies ``nu`` (cycles per tap)."""
    n = np.arange(len(coeffs))
    return np.exp(-2j * np.pi * np.outer(nu, n)) @ np.asarray(coeffs, dtype=float)


def achieved_attenuation_db(coeffs: np.ndarray, spec: FilterSpec) -> float:
    """Stopband attenuation relative to DC, worst case over the stopband grid."""
    _, stopband = _band_grids(spec)
    dc = abs(np.sum(coeffs))
    worst = np.max(np.abs(dtft(coeffs, stopband)))
    if worst == 0:
        return np.inf
    if dc == 0:
        return -np.inf
    return float(20.0 * np.log10(dc / worst))


def design_fir(spec: FilterSpec) -> ImpulseResponse:
    """Design the DT prototype h[n] and normalize it to max |h[n]| = 1.

    Uses a linear-phase least-squares fit on a dense grid. Short filters, and
    lowpass specs with no stopband edge, fall back to a Hamming-windowed sinc.
    """
    spec.validate()
    n = spec.num_taps
    if n == 1:
        return ImpulseResponse(np.array([1.0]), spec.tap_interval)
    has_stopband = spec.mode == "bandpass-target" or len(spec.band_edges) == 2
    if n <= _WINDOW_FALLBACK_TAPS or not has_stopband:
        h = _window_design(spec)
    else:
        h = _symmetric_lstsq(n, *_band_grids(spec))
    h = h / np.max(np.abs(h))
    if spec.attenuation_db is not None and has_stopband:
        achieved = achieved_attenuation_db(h, spec)
        if achieved < spec.attenuation_db:
            raise InfeasibleSpecError(achieved, spec.attenuation_db)
    return ImpulseResponse(h, spec.tap_interval)


def zoh_interpolate(h: ImpulseResponse) -> CtResponse:
    """Hold each tap for one tap interval: segment n spans [n T, (n+1) T)."""
    t = h.tap_interval
    n = np.arange(h.num_taps, dtype=float)
    return CtResponse(n * t, (n + 1.0) * t, h.coeffs, h.num_taps * t)
