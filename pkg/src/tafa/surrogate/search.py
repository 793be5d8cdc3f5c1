"""Multi-start projected gradient search over circuit parameters against metric targets."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from tafa.behave_sim.circuit import PARAM_RANGES


@dataclass(frozen=True)
class SearchConfig:
    """Targets are a power ceiling (mW) and an SFDR floor (dB).

    Violations are measured in units of ``metric_scales`` (defaults to the
    model's output normalization scales).
    """

    power_max: float
    sfdr_min: float
    num_restarts: int = 64
    max_iters: int = 200
    learning_rate: float = 0.05
    rng_seed: int = 0
    param_ranges: np.ndarray = field(default_factory=lambda: PARAM_RANGES.copy())
    weights: tuple[float, float] = (1.0, 1.0)
    metric_scales: tuple[float, float] | None = None
    tol: float = 1e-6

    def __post_init__(self):
        if self.num_restarts < 1 or self.max_iters < 0:
            raise ValueError("num_restarts must be >= 1 and max_iters >= 0")
        r = np.asarray(self.param_ranges, dtype=float)
        if r.ndim != 2 or r.shape[1] != 2 or np.any(r[:, 1] <= r[:, 0]):
            raise ValueError("param_ranges must be nonempty [min, max] rows")

    def to_dict(self) -> dict:
        return dict(power_max=self.power_max, sfdr_min=self.sfdr_min, num_restarts=self.num_restarts,
                    max_iters=self.max_iters, learning_rate=self.learning_rate, rng_seed=self.rng_seed,
                    weights=list(self.weights), tol=self.tol)


@dataclass(frozen=True)
class Candidate:
    params: np.ndarray
    metrics: np.ndarray
    loss: float
    restart: int
    feasible: bool

    def to_dict(self) -> dict:
        return dict(params=self.params.tolist(), power_mw=float(self.metrics[0]),
                    sfdr_db=float(self.metrics[1]), loss=self.loss, restart=self.restart,
                    feasible=self.feasible)


@dataclass(frozen=True)
class SearchResult:
    candidates: list[Candidate]

    @property
    def feasible(self) -> list[Candidate]:
        return [c for c in self.candidates if c.feasible]

    @property
    def infeasible(self) -> bool:
        return not self.feasible


def _spec_loss(metrics: np.ndarray, cfg: SearchConfig, scales: np.ndarray):
    """One-sided hinge per metric: (power - ceiling)+ and (floor - sfdr)+, scaled and weighted."""
    w = np.asarray(cfg.weights, dtype=float) / scales
    with np.errstate(invalid="ignore"):
        viol = np.stack([metrics[:, 0] - cfg.power_max, cfg.sfdr_min - metrics[:, 1]], axis=1)
    active = viol > 0
    loss = np.sum(np.where(active, viol * w, 0.0), axis=1)
    loss = np.where(np.isnan(loss), np.inf, loss)
    grad = np.where(active, w * np.array([1.0, -1.0]), 0.0)
    grad = np.where(np.isfinite(grad), grad, 0.0)
    return loss, grad


def search_params(model, cfg: SearchConfig) -> SearchResult:
    """Projected gradient descent from ``num_restarts`` seeded uniform starting points.

    Every restart runs in one batch. A restart only moves when the trial step does
    not increase its loss; otherwise its step size is halved. Restarts stop
    once their loss is zero.
    """
    ranges = np.asarray(cfg.param_ranges, dtype=float)
    lo, hi = ranges[:, 0], ranges[:, 1]
    span = hi - lo
    scales = np.asarray(cfg.metric_scales if cfg.metric_scales is not None
                        else _out_scale(model), dtype=float)
    rng = np.random.default_rng(cfg.rng_seed)
    u = rng.random((cfg.num_restarts, lo.size))
    step = np.full(cfg.num_restarts, cfg.learning_rate)

    def to_params(u):
        # Clip again: lo + 1.0 * span can round past hi.
        return np.clip(lo + u * span, lo, hi)

    def evaluate(u):
        x = to_params(u)
        dmetric = lambda m: _spec_loss(m, cfg, scales)[1]
        metrics, dx = model.value_and_input_grad(x, dmetric)
        loss, _ = _spec_loss(metrics, cfg, scales)
        return metrics, loss, dx * span

    metrics, loss, grad = evaluate(u)
    for _ in range(cfg.max_iters):
        live = (loss > 0) & np.isfinite(loss) & (step > 1e-10)
        if not live.any():
            break
        norm = np.linalg.norm(grad, axis=1, keepdims=True)
        direction = np.where(norm > 0, grad / np.where(norm > 0, norm, 1.0), 0.0)
        trial = np.clip(u - step[:, None] * direction, 0.0, 1.0)
        t_metrics, t_loss, t_grad = evaluate(trial)
        accept = live & (t_loss <= loss)
        u = np.where(accept[:, None], trial, u)
        metrics = np.where(accept[:, None], t_metrics, metrics)
        grad = np.where(accept[:, None], t_grad, grad)
        loss = np.where(accept, t_loss, loss)
        step = np.where(accept, np.minimum(step * 1.2, 0.5), np.where(live, step * 0.5, step))

    params = to_params(u)
    cands = [
        Candidate(params[i], metrics[i], float(loss[i]), i, bool(loss[i] <= cfg.tol))
        for i in range(cfg.num_restarts)
    ]
    cands.sort(key=lambda c: (c.loss, c.restart))
    return SearchResult(cands)


def _out_scale(model) -> np.ndarray:
    core = getattr(model, "core", model)
    return core.out_norm.scale


def search_many(model, configs: list[SearchConfig], workers: int = 1) -> list[SearchResult]:
    """Run independent searches; results come back in input order."""
    if workers <= 1:
        return [search_params(model, c) for c in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: search_params(model, c), configs))
