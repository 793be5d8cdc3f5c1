"""Random parameter sampling labelled by the synthetic circuit evaluator."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tafa.behave_sim.circuit import METRIC_NAMES, PARAM_NAMES, PARAM_RANGES, LayoutModel, synth_eval


@dataclass(frozen=True)
class Dataset:
    params: np.ndarray
    metrics: np.ndarray

    def __len__(self) -> int:
        return self.params.shape[0]

    def to_csv(self, path, header_lines: list[str] | None = None) -> None:
        lines = [f"# {h}" for h in header_lines or []]
        lines.append(",".join(PARAM_NAMES + METRIC_NAMES))
        for p, m in zip(self.params, self.metrics):
            lines.append(",".join(repr(float(v)) for v in np.concatenate([p, m])))
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "Dataset":
        rows = [r for r in Path(path).read_text().splitlines() if r and not r.startswith("#")]
        header = rows[0].split(",")
        if tuple(header) != PARAM_NAMES + METRIC_NAMES:
            raise ValueError(f"{path}: unexpected columns {header}")
        data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]]).reshape(-1, len(header))
        k = len(PARAM_NAMES)
        return cls(data[:, :k], data[:, k:])


def sample_params(n: int, rng: np.random.Generator, ranges: np.ndarray = PARAM_RANGES) -> np.ndarray:
    lo, hi = ranges[:, 0], ranges[:, 1]
    return lo + rng.random((n, lo.size)) * (hi - lo)


def sample_dataset(n: int, variant: str = "schematic", seed: int = 0,
                   layout: LayoutModel | None = None, ranges: np.ndarray = PARAM_RANGES) -> Dataset:
    """``n`` uniform samples over ``ranges`` labelled by ``synth_eval``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    params = sample_params(n, np.random.default_rng(seed), ranges)
    return Dataset(params, synth_eval(params, variant, layout))
