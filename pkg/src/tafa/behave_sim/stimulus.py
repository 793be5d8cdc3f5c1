"""Input sample generators at the channel (input) rate."""

from __future__ import annotations

import numpy as np

KINDS = ("impulse", "tone", "two_tone", "qam")


def impulse(num_samples: int, position: int = 0, amplitude: float = 1.0) -> np.ndarray:
    x = np.zeros(num_samples)
    if num_samples:
        x[position] = amplitude
    return x


def tone(num_samples: int, freq_hz: float, sample_period: float, amplitude: float = 1.0,
         phase: float = 0.0) -> np.ndarray:
    t = np.arange(num_samples) * sample_period
    return amplitude * np.cos(2.0 * np.pi * freq_hz * t + phase)


def two_tone(num_samples: int, freqs_hz, sample_period: float, amplitude: float = 0.5) -> np.ndarray:
    f1, f2 = freqs_hz
    return tone(num_samples, f1, sample_period, amplitude) + tone(num_samples, f2, sample_period, amplitude)


def qam(num_samples: int, sample_period: float, samples_per_symbol: int = 8, order: int = 256,
        carrier_hz: float = 0.0, amplitude: float = 1.0, seed: int = 0) -> np.ndarray:
    """Real square-QAM stream with rectangular symbol shaping.

    With ``carrier_hz = 0`` this is the in-phase rail; otherwise I cos - Q sin.
    """
    side = int(round(np.sqrt(order)))
    if side * side != order:
        raise ValueError(f"QAM order {order} is not a perfect square")
    rng = np.random.default_rng(seed)
    nsym = -(-num_samples // samples_per_symbol) if num_samples else 0
    levels = 2 * np.arange(side) - (side - 1)
    i = levels[rng.integers(0, side, nsym)] / (side - 1)
    q = levels[rng.integers(0, side, nsym)] / (side - 1)
    i = np.repeat(i, samples_per_symbol)[:num_samples]
    q = np.repeat(q, samples_per_symbol)[:num_samples]
    if carrier_hz == 0:
        return amplitude * i
    t = np.arange(num_samples) * sample_period
    w = 2.0 * np.pi * carrier_hz * t
    return amplitude * (i * np.cos(w) - q * np.sin(w))


def from_config(cfg: dict, sample_period: float) -> np.ndarray:
    """Build a stimulus from a JSON-style dict with a ``kind`` key."""
    cfg = dict(cfg)
    kind = cfg.pop("kind")
    n = int(cfg.pop("num_samples"))
    if kind == "impulse":
        return impulse(n, **cfg)
    if kind == "tone":
        return tone(n, sample_period=sample_period, **cfg)
    if kind == "two_tone":
        return two_tone(n, sample_period=sample_period, **cfg)
    if kind == "qam":
        return qam(n, sample_period=sample_period, **cfg)
    raise ValueError(f"unknown stimulus kind {kind!r}; expected one of {KINDS}")
