"""Coordinate-descent fine tuning of a quantized TAF pattern."""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Protocol

import numpy as np

from tafa.spectral import LossSpec, Spectrum, batch_loss, evaluate_loss
from tafa.taf_pattern import TafPattern

MOVES = ("edge_left", "edge_right", "shift_pulse", "toggle_slot")
DEFAULT_MOVES = ("edge_left", "edge_right", "shift_pulse")
# (move, which edge/shift, direction): fixed visiting order inside a sweep.
_ORDER = (
    ("edge_left", -1),
    ("edge_left", +1),
    ("edge_right", -1),
    ("edge_right", +1),
    ("shift_pulse", -1),
    ("shift_pulse", +1),
)


class Evaluator(Protocol):
    freqs: np.ndarray

    def __call__(self, pattern: TafPattern) -> Spectrum: ...


class IdealEvaluator:
    """Exact spectrum of the pattern's own CT waveform (no circuit effects)."""

    def __init__(self, freqs):
        self.freqs = np.asarray(freqs, dtype=float)
        self._basis = {}

    def _slot_basis(self, length: int, clock_period: float) -> np.ndarray:
        key = (length, clock_period)
        if key not in self._basis:
            t = clock_period
            centers = (np.arange(length) + 0.5) * t
            self._basis[key] = (
                t * np.sinc(t * self.freqs)[None, :] * np.exp(-2j * np.pi * np.outer(centers, self.freqs))
            )
        return self._basis[key]

    def __call__(self, pattern: TafPattern) -> Spectrum:
        basis = self._slot_basis(len(pattern), pattern.clock_period)
        return Spectrum(self.freqs, pattern.amplitude * (pattern.bits.astype(float) @ basis))

    def batch(self, bits: np.ndarray, clock_period: float, amplitude: float = 1.0) -> np.ndarray:
        """Spectra of many patterns at once, one row per pattern."""
        basis = self._slot_basis(bits.shape[1], clock_period)
        return amplitude * (bits.astype(float) @ basis)


@dataclass(frozen=True)
class TuneConfig:
    loss: LossSpec
    max_sweeps: int = 100
    move_set: tuple[str, ...] = DEFAULT_MOVES
    step: int = 1
    rng_seed: int = 0
    shuffle: bool = False
    bounded_mode: bool = False
    restore_collapsed: bool = True

    def __post_init__(self):
        object.__setattr__(self, "move_set", tuple(self.move_set))
        if self.step < 1 or self.max_sweeps < 1:
            raise ValueError("step and max_sweeps must be >= 1")
        bad = set(self.move_set) - set(MOVES)
        if bad:
            raise ValueError(f"unknown moves {sorted(bad)}")
        if self.bounded_mode and "toggle_slot" in self.move_set:
            raise ValueError("toggle_slot is not available in bounded mode")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["loss"] = self.loss.to_dict()
        d["move_set"] = list(self.move_set)
        return d

    @classmethod
    def from_dict(cls, d: dict, loss: LossSpec | None = None) -> "TuneConfig":
        d = dict(d)
        if loss is None:
            loss = LossSpec(**d.pop("loss"))
        else:
            d.pop("loss", None)
        return cls(loss=loss, **d)


@dataclass
class TuneReport:
    initial_loss: float
    final_loss: float
    accepted_moves: int = 0
    sweeps_run: int = 0
    loss_trace: list[float] = field(default_factory=list)
    optimum_loss: float | None = None
    gap: float | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)


@dataclass
class _Pulse:
    start: int
    stop: int
    sign: int
    lo: int
    hi: int

    @property
    def width(self) -> int:
        return self.stop - self.start


def _initial_pulses(p0: TafPattern, restore: bool) -> list[_Pulse]:
    g = p0.grid_factor
    pulses = []
    occupied = np.zeros(p0.num_taps, dtype=bool)
    for a, b, s in p0.runs():
        lo = (a // g) * g
        hi = -(-b // g) * g
        occupied[a // g: hi // g] = True
        pulses.append(_Pulse(a, b, s, lo, hi))
    if restore:
        for tap in np.flatnonzero(~occupied):
            mid = int(tap * g + g // 2)
            for s in (1, -1):
                pulses.append(_Pulse(mid, mid, s, int(tap * g), int((tap + 1) * g)))
    pulses.sort(key=lambda q: (q.lo, q.start, -q.sign))
    return pulses


def _valid(pulses: list[_Pulse], i: int, a: int, b: int, length: int, bounded: bool) -> bool:
    if a < 0 or b > length or b < a:
        return False
    me = pulses[i]
    if bounded and (a < me.lo or b > me.hi):
        return False
    if b == a:
        return True
    for j, q in enumerate(pulses):
        if j == i or q.width == 0:
            continue
        if q.sign == me.sign:
            # Same-sign pulses must keep a gap, otherwise they merge into one run.
            if not (b < q.start or a > q.stop):
                return False
        elif not (b <= q.start or a >= q.stop):
            return False
    return True


def _bits(pulses: list[_Pulse], length: int) -> np.ndarray:
    bits = np.zeros(length, dtype=np.int8)
    for q in pulses:
        if q.width:
            bits[q.start:q.stop] = q.sign
    return bits


def evaluate_candidate(p: TafPattern, cfg: TuneConfig, evaluator: Callable[[TafPattern], Spectrum],
                       target: Spectrum | None = None) -> float:
    """Loss of a single pattern under ``cfg.loss``."""
    return evaluate_loss(cfg.loss, evaluator(p), target)


def fine_tune(p0: TafPattern, cfg: TuneConfig, evaluator: Callable[[TafPattern], Spectrum],
              target: Spectrum | None = None) -> tuple[TafPattern, TuneReport]:
    """Greedy coordinate descent over pulse edges and positions.

    Each coordinate move is tried in a fixed order and kept only if it strictly
    lowers the loss. Stops after a sweep with no accepted move or after
    ``cfg.max_sweeps`` sweeps.
    """
    length = len(p0)
    step = cfg.step
    pulses = _initial_pulses(p0, cfg.restore_collapsed)
    current = p0.with_bits(_bits(pulses, length))
    loss = evaluate_candidate(current, cfg, evaluator, target)
    report = TuneReport(initial_loss=loss, final_loss=loss)
    rng = np.random.default_rng(cfg.rng_seed)

    def attempt(bits) -> bool:
        nonlocal current, loss
        cand = p0.with_bits(bits)
        new = evaluate_candidate(cand, cfg, evaluator, target)
        if new < loss:
            current, loss = cand, new
            report.accepted_moves += 1
            report.loss_trace.append(new)
            return True
        return False

    for _ in range(cfg.max_sweeps):
        report.sweeps_run += 1
        improved = False
        order = np.arange(len(pulses))
        if cfg.shuffle:
            order = rng.permutation(order)
        for i in order:
            for move, d in _ORDER:
                if move not in cfg.move_set:
                    continue
                q = pulses[i]
                a, b = q.start, q.stop
                if move == "edge_left":
                    a += d * step
                elif move == "edge_right":
                    b += d * step
                else:
                    if q.width == 0:
                        continue
                    a += d * step
                    b += d * step
                if not _valid(pulses, i, a, b, length, cfg.bounded_mode):
                    continue
                old = (q.start, q.stop)
                q.start, q.stop = a, b
                if attempt(_bits(pulses, length)):
                    improved = True
                else:
                    q.start, q.stop = old
        if "toggle_slot" in cfg.move_set:
            for k in range(length):
                for v in (-1, 0, 1):
                    if v == current.bits[k]:
                        continue
                    bits = current.bits.copy()
                    bits[k] = v
                    if attempt(bits):
                        improved = True
                        pulses = _initial_pulses(current, cfg.restore_collapsed)
                        break
        if not improved:
            break

    report.final_loss = loss
    if length <= 10:
        opt, _ = exhaustive_minimum(p0, cfg, evaluator, target)
        # The tuned pattern is itself a candidate, so it bounds the optimum.
        opt = min(opt, loss)
        report.optimum_loss = opt
        report.gap = loss - opt
    return current, report


def exhaustive_minimum(p0: TafPattern, cfg: TuneConfig, evaluator: Callable[[TafPattern], Spectrum],
                       target: Spectrum | None = None) -> tuple[float, TafPattern]:
    """Global minimum over all 3**L patterns of the same length (small L only)."""
    length = len(p0)
    if length > 12:
        raise ValueError(f"exhaustive search over 3**{length} patterns is not supported")
    combos = np.array(list(itertools.product((-1, 0, 1), repeat=length)), dtype=np.int8)
    best, best_bits = np.inf, None
    if isinstance(evaluator, IdealEvaluator):
        for k in range(0, len(combos), 4096):
            chunk = combos[k:k + 4096]
            vals = batch_loss(cfg.loss, evaluator.freqs,
                              evaluator.batch(chunk, p0.clock_period, p0.amplitude), target)
            i = int(np.argmin(vals))
            if vals[i] < best:
                best, best_bits = vals[i], chunk[i]
    else:
        for bits in combos:
            val = evaluate_candidate(p0.with_bits(bits), cfg, evaluator, target)
            if val < best:
                best, best_bits = val, bits
    best_pattern = p0.with_bits(best_bits)
    return evaluate_candidate(best_pattern, cfg, evaluator, target), best_pattern


def write_trace_csv(path, report: TuneReport, header_lines: list[str] | None = None) -> None:
    with open(path, "w") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        fh.write("move,loss\n")
        for k, v in enumerate(report.loss_trace, start=1):
            fh.write(f"{k},{v!r}\n")
