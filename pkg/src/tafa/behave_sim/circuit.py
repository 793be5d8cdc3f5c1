"""Synthetic parameter-to-metric evaluator standing in for circuit simulation.

The schematic map is a fixed sum of smooth saturating terms over the ten
normalized parameters. The post-layout map wraps it in an affine transform of
inputs and outputs plus a bounded sinusoidal perturbation. None of this is a
claim about real silicon; it only gives the surrogate flow something
deterministic and learnable to fit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PARAM_NAMES = (
    "driver_strength",
    "cap_unit_ff",
    "vbias_driver",
    "vbias_buffer",
    "buffer_width_um",
    "clock_fanout",
    "dff_size",
    "mux_size",
    "supply_v",
    "routing_width_um",
)
PARAM_RANGES = np.array([
    [1.0, 16.0],
    [0.5, 4.0],
    [0.3, 0.9],
    [0.3, 0.9],
    [1.0, 20.0],
    [2.0, 8.0],
    [1.0, 4.0],
    [1.0, 4.0],
    [0.9, 1.3],
    [0.1, 1.0],
])
METRIC_NAMES = ("power_mw", "sfdr_db")
VARIANTS = ("schematic", "postlayout")


class ParamRangeError(ValueError):
    pass


def normalize_params(params) -> np.ndarray:
    lo, hi = PARAM_RANGES[:, 0], PARAM_RANGES[:, 1]
    return (np.asarray(params, dtype=float) - lo) / (hi - lo)


def denormalize_params(u) -> np.ndarray:
    lo, hi = PARAM_RANGES[:, 0], PARAM_RANGES[:, 1]
    return lo + np.asarray(u, dtype=float) * (hi - lo)


def _schematic(u: np.ndarray) -> np.ndarray:
    u0, u1, u2, u3, u4, u5, u6, u7, u8, u9 = np.moveaxis(u, -1, 0)
    vdd = 0.9 + 0.4 * u8
    power = vdd**2 * (
        0.4
        + 1.6 * u0
        + 0.9 * u1 * (0.5 + u5)
        + 0.6 * np.tanh(2.0 * u2)
        + 0.5 * u4 * u3
        + 0.3 * u6
        + 0.25 * u7
        + 0.15 * u9
    )
    sfdr = (
        45.0
        + 12.0 * np.tanh(2.5 * (u0 - 0.3))
        + 8.0 * (1.0 - np.exp(-3.0 * u1))
        + 6.0 * np.sin(np.pi * u2) * u3
        - 5.0 * (u4 - 0.6) ** 2
        + 4.0 * np.tanh(3.0 * (u8 - 0.5))
        - 3.0 * u9 * u5
        + 2.0 * u6
        - 2.0 * (u7 - 0.5) ** 2
    )
    return np.stack([power, sfdr], axis=-1)


@dataclass(frozen=True)
class LayoutModel:
    """Post-layout distortion: metrics = out_matrix @ f(in_matrix @ u + in_bias) + out_bias + ripple.

    ``ripple_amplitude`` bounds the perturbation per metric.
    """

    in_matrix: np.ndarray = field(default_factory=lambda: np.eye(10))
    in_bias: np.ndarray = field(default_factory=lambda: np.zeros(10))
    out_matrix: np.ndarray = field(default_factory=lambda: np.eye(2))
    out_bias: np.ndarray = field(default_factory=lambda: np.zeros(2))
    ripple_amplitude: np.ndarray = field(default_factory=lambda: np.zeros(2))
    ripple_seed: int = 7

    @classmethod
    def identity(cls) -> "LayoutModel":
        return cls()

    @classmethod
    def exact_affine(cls, seed: int = 2021) -> "LayoutModel":
        rng = np.random.default_rng(seed)
        return cls(
            in_matrix=np.eye(10) + 0.05 * rng.standard_normal((10, 10)) / np.sqrt(10),
            in_bias=0.03 * rng.standard_normal(10),
            out_matrix=np.array([[1.12, 0.0], [0.0, 0.94]]),
            out_bias=np.array([0.25, -1.5]),
        )

    @classmethod
    def default(cls) -> "LayoutModel":
        base = cls.exact_affine()
        return cls(base.in_matrix, base.in_bias, base.out_matrix, base.out_bias,
                   ripple_amplitude=np.array([0.02, 0.3]))

    def ripple(self, u: np.ndarray) -> np.ndarray:
        amp = np.asarray(self.ripple_amplitude, dtype=float)
        if not np.any(amp):
            return np.zeros(u.shape[:-1] + (2,))
        rng = np.random.default_rng(self.ripple_seed)
        w = rng.standard_normal((10, 2)) * 1.5
        phase = rng.uniform(0, 2 * np.pi, 2)
        return amp * np.sin(2.0 * np.pi * (u @ w) + phase)


def synth_eval(params, variant: str = "schematic", layout: LayoutModel | None = None) -> np.ndarray:
    """Metrics ``[power_mw, sfdr_db]`` for one parameter vector or a batch of shape (n, 10)."""
    p = np.asarray(params, dtype=float)
    if p.shape[-1] != len(PARAM_NAMES):
        raise ValueError(f"expected {len(PARAM_NAMES)} parameters, got shape {p.shape}")
    lo, hi = PARAM_RANGES[:, 0], PARAM_RANGES[:, 1]
    if np.any(p < lo) or np.any(p > hi) or not np.all(np.isfinite(p)):
        raise ParamRangeError("parameters outside their declared ranges")
    u = normalize_params(p)
    if variant == "schematic":
        return _schematic(u)
    if variant != "postlayout":
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    lay = LayoutModel.default() if layout is None else layout
    inner = u @ np.asarray(lay.in_matrix).T + lay.in_bias
    return _schematic(inner) @ np.asarray(lay.out_matrix).T + lay.out_bias + lay.ripple(u)
