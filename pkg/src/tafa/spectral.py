"""Frequency responses of piecewise-constant waveforms and the pattern loss functions."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tafa.filter_core import CtResponse, ImpulseResponse

# Segments per chunk when building the segment x frequency matrix.
_CHUNK = 4096


class GridError(ValueError):
    """Spectra are sampled on different grids, or a grid misses a required band."""


class PoleError(ZeroDivisionError):
    """Frequency sits on a null of sinc(T_tap f)."""


@dataclass(frozen=True)
class Spectrum:
    freqs: np.ndarray
    values: np.ndarray
    norm: str = "raw"

    def __post_init__(self):
        f = np.asarray(self.freqs, dtype=float).copy()
        v = np.asarray(self.values, dtype=complex).copy()
        f.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "values", v)
        if f.shape != v.shape or f.ndim != 1:
            raise ValueError("freqs and values must be 1-D and of equal length")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise ValueError("freqs must be strictly increasing")
        if self.norm not in ("raw", "dc-normalized"):
            raise ValueError(f"unknown norm {self.norm!r}")

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)

    def dc_normalized(self) -> "Spectrum":
        """Scale so the lowest bin has unit magnitude.

        A spectrum whose lowest bin vanishes is scaled by its peak instead; an
        identically zero spectrum is returned as zeros.
        """
        if self.norm == "dc-normalized":
            return self
        mag = self.magnitude
        peak = mag.max() if mag.size else 0.0
        ref = mag[0] if mag.size else 0.0
        if ref <= 1e-12 * peak:
            ref = peak
        values = self.values / ref if ref > 0 else self.values
        return Spectrum(self.freqs, values, "dc-normalized")

    def to_csv(self, path, header_lines: list[str] | None = None) -> None:
        mag = self.magnitude
        with np.errstate(divide="ignore"):
            mag_db = 20.0 * np.log10(mag)
        with open(path, "w", newline="") as fh:
            for line in header_lines or []:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["freq_hz", "re", "im", "mag_db"])
            for f, v, m in zip(self.freqs, self.values, mag_db):
                w.writerow([repr(float(f)), repr(float(v.real)), repr(float(v.imag)), repr(float(m))])


def read_spectrum_csv(path) -> Spectrum:
    rows = [r for r in Path(path).read_text().splitlines() if r and not r.startswith("#")]
    data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]]).reshape(-1, 4)
    return Spectrum(data[:, 0], data[:, 1] + 1j * data[:, 2])


def pulse_spectrum(widths, centers, levels, freqs) -> np.ndarray:
    """Fourier transform of a sum of rectangular pulses.

    Each pulse contributes ``level * width * sinc(width f) * exp(-j 2 pi f center)``.
    """
    widths = np.asarray(widths, dtype=float)
    centers = np.asarray(centers, dtype=float)
    levels = np.asarray(levels, dtype=float)
    freqs = np.asarray(freqs, dtype=float)
    out = np.zeros(freqs.shape, dtype=complex)
    for k in range(0, widths.size, _CHUNK):
        w = widths[k:k + _CHUNK, None]
        c = centers[k:k + _CHUNK, None]
        a = levels[k:k + _CHUNK, None]
        term = a * w * np.sinc(w * freqs) * np.exp(-2j * np.pi * c * freqs)
        out += term.sum(axis=0)
    return out


def ct_response_spectrum(ct: CtResponse, freqs) -> Spectrum:
    """Exact CT Fourier transform of a piecewise-constant waveform."""
    keep = ct.levels != 0
    values = pulse_spectrum(
        ct.widths[keep], 0.5 * (ct.starts[keep] + ct.ends[keep]), ct.levels[keep], freqs
    )
    return Spectrum(freqs, values)


def fir_spectrum(h: ImpulseResponse, freqs) -> Spectrum:
    """DTFT of the taps times the ZOH envelope; equals the spectrum of the ZOH waveform."""
    freqs = np.asarray(freqs, dtype=float)
    t = h.tap_interval
    n = np.arange(h.num_taps)
    dt_part = np.exp(-2j * np.pi * np.outer(freqs * t, n)) @ h.coeffs
    envelope = t * np.sinc(t * freqs) * np.exp(-1j * np.pi * freqs * t)
    return Spectrum(freqs, envelope * dt_part)


def intrinsic_error(a_min: float, tap_interval: float, f) -> np.ndarray | float:
    """Intrinsic approximation error in dB: 20 log10(sinc(a_min T f) / sinc(T f))."""
    if not 0.0 < a_min <= 1.0:
        raise ValueError(f"a_min must lie in (0, 1], got {a_min}")
    x = tap_interval * np.asarray(f, dtype=float)
    at_null = (x != 0) & (np.abs(x - np.round(x)) < 1e-12)
    if np.any(at_null):
        raise PoleError(f"sinc(T_tap f) vanishes at f = {np.asarray(f)[at_null] if np.ndim(f) else f}")
    out = 20.0 * np.log10(np.abs(np.sinc(a_min * x) / np.sinc(x)))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class LossSpec:
    """Loss selection. ``full_band`` uses ``B``; ``band_notch`` uses ``B1``, ``f0``, ``B2``.

    ``printed_sign`` keeps the band-notch difference as (in-band - notch) instead
    of the default (notch - in-band) where lower means a deeper notch.
    """

    kind: str
    B: float = 0.0
    B1: float = 0.0
    B2: float = 0.0
    f0: float = 0.0
    grid_points: int = 2048
    normalize: bool = True
    printed_sign: bool = False

    def __post_init__(self):
        if self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        if self.kind == "full_band":
            if not self.B > 0:
                raise ValueError("full_band loss requires B > 0")
        elif self.kind == "band_notch":
            if not (self.B1 > 0 and self.B2 > 0 and self.f0 > self.B1):
                raise ValueError("band_notch loss requires 0 < B1 < f0 and B2 > 0")
        else:
            raise ValueError(f"unknown loss kind {self.kind!r}")

    def check_nyquist(self, clock_period: float) -> None:
        top = self.B if self.kind == "full_band" else self.f0 + self.B2
        if top > 1.0 / (2.0 * clock_period):
            raise ValueError(f"loss band reaches {top} Hz beyond the grid Nyquist")

    def frequency_grid(self) -> np.ndarray:
        """Uniform grid over [0, B], or two uniform grids over the signal and notch bands."""
        n = self.grid_points
        if self.kind == "full_band":
            return np.linspace(0.0, self.B, n)
        return np.concatenate([np.linspace(0.0, self.B1, n), np.linspace(self.f0, self.f0 + self.B2, n)])

    def to_dict(self) -> dict:
        return dict(kind=self.kind, B=self.B, B1=self.B1, B2=self.B2, f0=self.f0,
                    grid_points=self.grid_points, normalize=self.normalize,
                    printed_sign=self.printed_sign)


def band_mean(freqs: np.ndarray, mag: np.ndarray, lo: float, hi: float):
    """Trapezoidal mean of ``mag`` over [lo, hi] along the last axis.

    Band edges that fall between grid points are linearly interpolated. Returns
    a float for 1-D input and an array for stacked rows.
    """
    tol = 1e-9 * max(abs(hi), 1.0)
    if freqs.size == 0 or freqs[0] > lo + tol or freqs[-1] < hi - tol:
        raise GridError(f"grid does not cover [{lo}, {hi}] Hz")
    mag = np.asarray(mag, dtype=float)
    inside = np.flatnonzero((freqs >= lo - tol) & (freqs <= hi + tol))
    f = freqs[inside]
    m = mag[..., inside]

    def edge(x):
        k = int(np.clip(np.searchsorted(freqs, x), 1, freqs.size - 1))
        w = (x - freqs[k - 1]) / (freqs[k] - freqs[k - 1])
        return (1.0 - w) * mag[..., k - 1:k] + w * mag[..., k:k + 1]

    if f.size == 0 or f[0] > lo + tol:
        f = np.concatenate([[lo], f])
        m = np.concatenate([edge(lo), m], axis=-1)
    if f[-1] < hi - tol:
        f = np.concatenate([f, [hi]])
        m = np.concatenate([m, edge(hi)], axis=-1)
    out = np.trapezoid(m, f, axis=-1) / (hi - lo)
    return float(out) if out.ndim == 0 else out


def _normalized_magnitudes(values: np.ndarray) -> np.ndarray:
    """Row-wise version of ``Spectrum.dc_normalized().magnitude``."""
    mag = np.abs(values)
    peak = mag.max(axis=-1, keepdims=True)
    ref = mag[..., :1]
    ref = np.where(ref <= 1e-12 * peak, peak, ref)
    return mag / np.where(ref > 0, ref, 1.0)


def batch_loss(loss: "LossSpec", freqs: np.ndarray, values: np.ndarray,
               target: "Spectrum | None" = None) -> np.ndarray:
    """Loss of many candidate spectra at once; ``values`` has one row per candidate."""
    values = np.atleast_2d(values)
    mag = _normalized_magnitudes(values) if loss.normalize else np.abs(values)
    if loss.kind == "full_band":
        if target is None:
            raise ValueError("full_band loss needs a target spectrum")
        if not np.array_equal(target.freqs, freqs):
            raise GridError("target and candidate spectra are sampled on different grids")
        t = target.dc_normalized().magnitude if loss.normalize else target.magnitude
        return band_mean(freqs, np.abs(t - mag), 0.0, loss.B)
    inband = band_mean(freqs, mag, 0.0, loss.B1)
    notch = band_mean(freqs, mag, loss.f0, loss.f0 + loss.B2)
    return inband - notch if loss.printed_sign else notch - inband


def loss_full_band(target: Spectrum, candidate: Spectrum, B: float, normalize: bool = True) -> float:
    """Mean absolute magnitude mismatch over [0, B]."""
    if target.freqs.shape != candidate.freqs.shape or not np.array_equal(target.freqs, candidate.freqs):
        raise GridError("target and candidate spectra are sampled on different grids")
    if normalize:
        target, candidate = target.dc_normalized(), candidate.dc_normalized()
    diff = np.abs(target.magnitude - candidate.magnitude)
    return band_mean(candidate.freqs, diff, 0.0, B)


def loss_band_notch(candidate: Spectrum, B1: float, B2: float, f0: float,
                    normalize: bool = True, printed_sign: bool = False) -> float:
    """Mean magnitude over the notch band [f0, f0+B2] minus that over [0, B1].

    Lower is a deeper notch relative to the signal band. ``printed_sign``
    returns the opposite difference.
    """
    if normalize:
        candidate = candidate.dc_normalized()
    mag = candidate.magnitude
    inband = band_mean(candidate.freqs, mag, 0.0, B1)
    notch = band_mean(candidate.freqs, mag, f0, f0 + B2)
    return inband - notch if printed_sign else notch - inband


def evaluate_loss(loss: LossSpec, candidate: Spectrum, target: Spectrum | None = None) -> float:
    if loss.kind == "full_band":
        if target is None:
            raise ValueError("full_band loss needs a target spectrum")
        return loss_full_band(target, candidate, loss.B, loss.normalize)
    return loss_band_notch(candidate, loss.B1, loss.B2, loss.f0, loss.normalize, loss.printed_sign)
