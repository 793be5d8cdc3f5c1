"""Pulse-width/position encoding of a CT FIR response and its clock-grid quantization."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tafa.filter_core import CtResponse

_SYMBOLS = {1: "+", 0: "0", -1: "-"}
_VALUES = {"+": 1, "0": 0, "-": -1}


class NormalizationError(ValueError):
    """A coefficient exceeds the pulse amplitude, so its pulse would overflow the tap."""


class CollapsedPulseWarning(UserWarning):
    """One or more pulses rounded to zero width on the clock grid."""

    def __init__(self, taps):
        self.taps = tuple(int(t) for t in taps)
        super().__init__(f"pulses collapsed to zero width at taps {self.taps}")


@dataclass(frozen=True)
class PulseTrain:
    """Constant-amplitude pulses, one per nonzero tap.

    ``widths`` and ``centers`` are in seconds; ``taps`` records which tap each
    pulse came from (zero taps emit no pulse).
    """

    widths: np.ndarray
    centers: np.ndarray
    signs: np.ndarray
    taps: np.ndarray
    amplitude: float
    tap_interval: float
    num_taps: int

    def __post_init__(self):
        for name, dtype in (("widths", float), ("centers", float), ("signs", int), ("taps", int)):
            a = np.asarray(getattr(self, name), dtype=dtype).copy()
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def __len__(self) -> int:
        return self.widths.size

    @property
    def a_min(self) -> float:
        """Smallest nonzero pulse width as a fraction of the tap interval."""
        w = self.widths[self.widths > 0]
        return float(w.min() / self.tap_interval) if w.size else 0.0

    def area(self) -> float:
        return float(np.sum(self.signs * self.widths) * self.amplitude)


@dataclass(frozen=True)
class TafPattern:
    """Three-valued clock-grid pattern, one symbol per clock slot."""

    bits: np.ndarray
    clock_period: float
    num_taps: int
    amplitude: float = 1.0

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 1 or not np.all(np.isin(b, (-1, 0, 1))):
            raise ValueError("bits must be a 1-D sequence over {-1, 0, +1}")
        b = b.astype(np.int8).copy()
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)
        if self.num_taps < 1 or b.size % self.num_taps:
            raise ValueError(f"pattern length {b.size} is not a multiple of num_taps={self.num_taps}")
        if not self.clock_period > 0:
            raise ValueError("clock_period must be positive")

    def __len__(self) -> int:
        return self.bits.size

    @property
    def grid_factor(self) -> int:
        return self.bits.size // self.num_taps

    @property
    def tap_interval(self) -> float:
        return self.grid_factor * self.clock_period

    def with_bits(self, bits) -> "TafPattern":
        return TafPattern(bits, self.clock_period, self.num_taps, self.amplitude)

    def runs(self) -> list[tuple[int, int, int]]:
        """Maximal runs of equal nonzero symbols as ``(start, stop, sign)`` slot ranges."""
        return runs(self.bits)

    def to_string(self) -> str:
        return "".join(_SYMBOLS[int(v)] for v in self.bits)

    def header(self) -> dict:
        return {
            "clock_period_s": self.clock_period,
            "amplitude": self.amplitude,
            "num_taps": self.num_taps,
            "grid_factor": self.grid_factor,
        }


def runs(bits) -> list[tuple[int, int, int]]:
    b = np.asarray(bits)
    out = []
    k, n = 0, b.size
    while k < n:
        v = int(b[k])
        j = k + 1
        while j < n and b[j] == v:
            j += 1
        if v != 0:
            out.append((k, j, v))
        k = j
    return out


def approximate(ct: CtResponse, amplitude: float) -> PulseTrain:
    """Replace each ZOH tap by a full-amplitude pulse of equal area and centroid."""
    if not amplitude > 0:
        raise ValueError("amplitude must be positive")
    levels = ct.levels
    if np.any(np.abs(levels) > amplitude):
        worst = int(np.argmax(np.abs(levels)))
        raise NormalizationError(
            f"|h[{worst}]| = {abs(levels[worst])} exceeds amplitude {amplitude}"
        )
    widths_tap = ct.widths
    if widths_tap.size and not np.allclose(widths_tap, widths_tap[0], rtol=1e-12, atol=0):
        raise ValueError("approximate expects a ZOH response with uniform tap intervals")
    t_tap = float(widths_tap[0]) if widths_tap.size else 0.0
    keep = levels != 0
    taps = np.flatnonzero(keep)
    return PulseTrain(
        widths=np.abs(levels[keep]) * t_tap / amplitude,
        centers=0.5 * (ct.starts[keep] + ct.ends[keep]),
        signs=np.sign(levels[keep]).astype(int),
        taps=taps,
        amplitude=float(amplitude),
        tap_interval=t_tap,
        num_taps=levels.size,
    )


def _round_half_up(x: np.ndarray) -> np.ndarray:
    # Snap away float noise so exact ties are recognised as ties.
    return np.floor(np.round(x, 9) + 0.5).astype(int)


def _round_half_down(x: np.ndarray) -> np.ndarray:
    return np.ceil(np.round(x, 9) - 0.5).astype(int)


def quantize(pt: PulseTrain, clock_period: float, rule: str = "width") -> TafPattern:
    """Snap a pulse train onto the clock grid.

    ``rule="width"`` (default) rounds each width to a whole number of slots and
    then places the leading edge on the nearest grid line, so widths are off by
    at most half a slot. ``rule="edges"`` rounds leading and trailing edges
    independently, so each edge moves at most half a slot. Ties are broken away
    from the pulse center in both rules.

    Pulses that round to zero width are dropped and reported through a
    ``CollapsedPulseWarning``.
    """
    ratio = pt.tap_interval / clock_period
    grid = int(round(ratio))
    if abs(ratio - grid) > 1e-9 * ratio or grid < 1:
        raise ValueError("clock_period must divide tap_interval")
    length = pt.num_taps * grid
    bits = np.zeros(length, dtype=np.int8)
    centers = pt.centers / clock_period
    half = pt.widths / clock_period / 2.0
    if rule == "width":
        nslots = _round_half_up(2.0 * half)
        lead = _round_half_down(centers - nslots / 2.0)
        trail = lead + nslots
    elif rule == "edges":
        lead = _round_half_down(centers - half)
        trail = _round_half_up(centers + half)
    else:
        raise ValueError(f"unknown quantization rule {rule!r}")
    lead = np.clip(lead, 0, length)
    trail = np.clip(trail, 0, length)
    collapsed = []
    for a, b, s, tap in zip(lead, trail, pt.signs, pt.taps):
        if b <= a:
            collapsed.append(tap)
            continue
        if np.any(bits[a:b] != 0):
            raise ValueError(f"quantized pulse of tap {tap} overlaps its neighbour")
        bits[a:b] = s
    if collapsed:
        warnings.warn(CollapsedPulseWarning(collapsed), stacklevel=2)
    return TafPattern(bits, clock_period, pt.num_taps, pt.amplitude)


def pattern_to_ct(p: TafPattern, amplitude: float | None = None) -> CtResponse:
    """Piecewise-constant view of a pattern; equal adjacent slots are merged."""
    amp = p.amplitude if amplitude is None else amplitude
    b = p.bits
    t = p.clock_period
    if b.size == 0:
        return CtResponse([], [], [], 0.0)
    change = np.flatnonzero(np.diff(b)) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [b.size]])
    levels = amp * b[starts].astype(float)
    return CtResponse(starts * t, ends * t, levels, b.size * t)


def write_pattern(path, pattern: TafPattern, meta: dict | None = None) -> None:
    """Write a JSON header line followed by the {+,0,-} pattern line."""
    header = pattern.header()
    if meta:
        header = {**header, **meta}
    text = json.dumps(header, sort_keys=True) + "\n" + pattern.to_string() + "\n"
    Path(path).write_text(text)


def read_pattern(path) -> TafPattern:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 2:
        raise ValueError(f"{path}: expected a JSON header line and a pattern line")
    header = json.loads(lines[0])
    try:
        bits = [_VALUES[c] for c in lines[1].strip()]
    except KeyError as exc:
        raise ValueError(f"{path}:2: invalid pattern symbol {exc.args[0]!r}") from None
    p = TafPattern(np.array(bits, dtype=np.int8), float(header["clock_period_s"]),
                   int(header["num_taps"]), float(header.get("amplitude", 1.0)))
    if "grid_factor" in header and int(header["grid_factor"]) != p.grid_factor:
        raise ValueError(f"{path}: grid_factor {header['grid_factor']} disagrees with pattern length")
    return p
