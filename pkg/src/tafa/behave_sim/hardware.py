"""Clock-level model of the counter-based TAF waveform generator and TI capacitor DAC."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.signal import lfilter

from tafa.spectral import Spectrum, pulse_spectrum


@dataclass(frozen=True)
class HwConfig:
    """Hardware knobs of the interleaved TAF.

    ``chop_divisor`` d gives a chop frequency of 1/(2 d T_clk). DAC settling is
    first order with time constant ``dac_settling_tau`` (0 = ideal hold), and
    ``dac_inl_coeffs`` are the odd-order INL terms [c3, c5, ...] applied as
    v + c3 v**3 + c5 v**5 + ...
    """

    num_channels: int = 8
    pattern_len: int = 64
    clock_period: float = 1.0 / 2.4e9
    mode: str = "lowpass"
    chop_divisor: int = 1
    dac_settling_tau: float = 0.0
    dac_inl_coeffs: tuple[float, ...] = ()
    oversample: int = 16

    def __post_init__(self):
        object.__setattr__(self, "dac_inl_coeffs", tuple(float(c) for c in self.dac_inl_coeffs))
        if self.num_channels < 1 or self.pattern_len < 1 or self.pattern_len % self.num_channels:
            raise ValueError("pattern_len must be a positive multiple of num_channels")
        if self.mode not in ("lowpass", "bandpass"):
            raise ValueError(f"mode must be lowpass or bandpass, got {self.mode!r}")
        if self.chop_divisor < 1 or self.oversample < 1:
            raise ValueError("chop_divisor and oversample must be >= 1")
        if self.dac_settling_tau < 0 or not self.clock_period > 0:
            raise ValueError("dac_settling_tau must be >= 0 and clock_period > 0")

    @property
    def sample_slots(self) -> int:
        """Clock slots between consecutive input samples (one ring-counter tick)."""
        return self.pattern_len // self.num_channels

    @property
    def input_period(self) -> float:
        return self.sample_slots * self.clock_period

    @property
    def chop_frequency(self) -> float:
        return 1.0 / (2.0 * self.chop_divisor * self.clock_period)

    @property
    def ideal(self) -> bool:
        return self.dac_settling_tau == 0 and not any(self.dac_inl_coeffs)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["dac_inl_coeffs"] = list(self.dac_inl_coeffs)
        return d


@dataclass(frozen=True)
class TransientTrace:
    sample_period: float
    samples: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def __len__(self) -> int:
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.sample_period

    def to_csv(self, path, header_lines: list[str] | None = None) -> None:
        with open(path, "w", newline="") as fh:
            for line in header_lines or []:
                fh.write(f"# {line}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["time_s", "value"])
            for t, v in zip(self.times, self.samples):
                w.writerow([repr(float(t)), repr(float(v))])


class WaveformGenerator:
    """Pattern memory, counter, MUX and retiming DFF of one channel.

    ``tick`` advances one clock edge and returns the DFF output for the slot
    that edge opens.
    """

    def __init__(self, bits):
        self.bits = np.asarray(bits)
        self.counter = 0
        self.q = 0

    def tick(self) -> int:
        out = self.q
        self.q = int(self.bits[self.counter])
        self.counter = (self.counter + 1) % self.bits.size
        return out


def serialize_pattern(bits, hw: HwConfig, num_slots: int | None = None) -> np.ndarray:
    """Clock the generator for ``num_slots`` edges (default one pattern cycle).

    The DFF delays the MUX output by one clock: ``stream[k] = bits[(k-1) % L]``
    for k >= 1, and slot 0 holds the DFF reset value 0.
    """
    bits = np.asarray(bits)
    if bits.size != hw.pattern_len:
        raise ValueError(f"pattern has {bits.size} bits, hardware expects {hw.pattern_len}")
    n = hw.pattern_len if num_slots is None else num_slots
    gen = WaveformGenerator(bits)
    return np.array([gen.tick() for _ in range(n)], dtype=np.int8)


def chop_wave(num_slots: int, hw: HwConfig, offset: int = 0) -> np.ndarray:
    k = np.arange(offset, offset + num_slots)
    return np.where((k // hw.chop_divisor) % 2 == 0, 1, -1).astype(np.int8)


def chop(stream, hw: HwConfig, offset: int = 0) -> np.ndarray:
    """Multiply by the +/-1 chop square wave in bandpass mode; pass through otherwise."""
    stream = np.asarray(stream)
    if hw.mode == "lowpass":
        return stream.copy()
    return stream * chop_wave(stream.size, hw, offset)


def ring_counter_phases(hw: HwConfig, num_ticks: int) -> np.ndarray:
    """One-hot channel enables, shape (num_channels, num_ticks).

    Channel c is enabled on ticks k with k % num_channels == c.
    """
    state = np.zeros(hw.num_channels, dtype=np.int8)
    state[0] = 1
    out = np.zeros((hw.num_channels, num_ticks), dtype=np.int8)
    for k in range(num_ticks):
        out[:, k] = state
        state = np.roll(state, 1)
    return out


def _inl(v: np.ndarray, coeffs: tuple[float, ...]) -> np.ndarray:
    out = v.copy()
    for i, c in enumerate(coeffs):
        if c:
            out += c * v ** (2 * i + 3)
    return out


def _settle(slot_values: np.ndarray, hw: HwConfig) -> np.ndarray:
    target = np.repeat(slot_values, hw.oversample)
    if hw.dac_settling_tau == 0:
        return target
    dt = hw.clock_period / hw.oversample
    alpha = np.exp(-dt / hw.dac_settling_tau)
    return lfilter([1.0 - alpha], [1.0, -alpha], target)


def tail_slots(hw: HwConfig) -> int:
    """Extra slots appended so the settling transient decays (8 time constants)."""
    if hw.dac_settling_tau == 0:
        return 0
    return int(np.ceil(8.0 * hw.dac_settling_tau / hw.clock_period))


def channel_outputs(input_samples, bits, hw: HwConfig) -> np.ndarray:
    """Per-channel DAC levels at clock resolution, shape (num_channels, num_slots).

    Sample m lands on channel m % C (the ring counter), starts at slot
    m * L / C and is multiplied by the serialized pattern for L slots. The DFF
    latency is removed so slot 0 is the first retimed pattern bit.
    """
    x = np.asarray(input_samples, dtype=float)
    bits = np.asarray(bits)
    if bits.size != hw.pattern_len:
        raise ValueError(f"pattern has {bits.size} bits, hardware expects {hw.pattern_len}")
    d, length, c = hw.sample_slots, hw.pattern_len, hw.num_channels
    num_slots = (x.size - 1) * d + length if x.size else 0
    out = np.zeros((c, num_slots))
    enables = ring_counter_phases(hw, x.size)
    # The serializer replays the pattern from its counter reset on each load.
    stream = serialize_pattern(bits, hw, length + 1)[1:].astype(float)
    for ch in range(c):
        for m in np.flatnonzero(enables[ch]):
            out[ch, m * d: m * d + length] = x[m] * stream
    if hw.mode == "bandpass":
        out = out * chop_wave(num_slots, hw)
    return out


def simulate_filter(input_samples, pattern, hw: HwConfig) -> TransientTrace:
    """Transient output of the interleaved TAF for input samples at the channel rate.

    ``pattern`` is a TafPattern or a bit sequence. Channel levels pass through
    the INL polynomial, are summed, then held (and settled) at
    ``hw.oversample`` samples per clock.
    """
    bits = getattr(pattern, "bits", pattern)
    levels = channel_outputs(input_samples, bits, hw)
    dt = hw.clock_period / hw.oversample
    if levels.shape[1] == 0:
        return TransientTrace(dt, np.zeros(0))
    if any(hw.dac_inl_coeffs):
        levels = _inl(levels, hw.dac_inl_coeffs)
    total = levels.sum(axis=0)
    total = np.concatenate([total, np.zeros(tail_slots(hw))])
    return TransientTrace(dt, _settle(total, hw))


def simulate_full_rate(input_samples, pattern, hw: HwConfig) -> np.ndarray:
    """Single-channel reference at clock resolution: upsample-by-(L/C) then convolve."""
    bits = np.asarray(getattr(pattern, "bits", pattern), dtype=float)
    x = np.asarray(input_samples, dtype=float)
    if x.size == 0:
        return np.zeros(0)
    up = np.zeros((x.size - 1) * hw.sample_slots + 1)
    up[:: hw.sample_slots] = x
    y = np.convolve(up, bits)
    if hw.mode == "bandpass":
        y = y * chop_wave(y.size, hw)
    return y


def trace_spectrum(trace: TransientTrace, freqs=None, nfft: int | None = None) -> Spectrum:
    """CT spectrum of the held trace.

    With ``freqs`` the transform is evaluated directly; otherwise on FFT bins
    (zero-padded to ``nfft``) with the hold droop dt*sinc(f dt) restored.
    """
    dt = trace.sample_period
    s = trace.samples
    if s.size == 0 and freqs is None:
        return Spectrum(np.zeros(0), np.zeros(0))
    if freqs is not None:
        n = np.arange(s.size)
        return Spectrum(freqs, pulse_spectrum(np.full(s.size, dt), (n + 0.5) * dt, s, freqs))
    n = nfft or s.size
    fbins = np.fft.rfftfreq(n, dt)
    hold = dt * np.sinc(fbins * dt) * np.exp(-1j * np.pi * fbins * dt)
    return Spectrum(fbins, hold * np.fft.rfft(s, n))


def sfdr_from_trace(trace: TransientTrace, tone_hz: float) -> float:
    """Tone power over the largest other non-DC FFT bin, in dB (Hann window)."""
    s = trace.samples - trace.samples.mean()
    win = np.hanning(s.size)
    spec = np.abs(np.fft.rfft(s * win))
    f = np.fft.rfftfreq(s.size, trace.sample_period)
    k = int(np.argmin(np.abs(f - tone_hz)))
    guard = 3
    signal = spec[max(k - guard, 0): k + guard + 1].max()
    mask = np.ones(spec.size, dtype=bool)
    mask[: guard + 1] = False
    mask[max(k - guard, 0): k + guard + 1] = False
    spur = spec[mask].max() if mask.any() else 0.0
    return float(20.0 * np.log10(signal / spur)) if spur > 0 else np.inf
