"""Fully connected parameter-to-metric regressor with hand-written backprop."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("tanh",)


class TrainingDivergedError(RuntimeError):
    pass


@dataclass
class Normalizer:
    mean: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.scale = np.asarray(self.scale, dtype=float)
        if np.any(self.scale <= 0):
            raise ValueError("normalization scales must be positive")

    @classmethod
    def fit(cls, data: np.ndarray) -> "Normalizer":
        scale = data.std(axis=0)
        return cls(data.mean(axis=0), np.where(scale > 0, scale, 1.0))

    def normalize(self, x):
        return (np.asarray(x, dtype=float) - self.mean) / self.scale

    def denormalize(self, z):
        return np.asarray(z, dtype=float) * self.scale + self.mean


@dataclass
class MlpModel:
    """tanh MLP acting on normalized inputs and producing normalized outputs.

    ``weights[i]`` has shape (layer_dims[i], layer_dims[i+1]); the last layer is linear.
    """

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    in_norm: Normalizer
    out_norm: Normalizer
    activation: str = "tanh"

    def __post_init__(self):
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unsupported activation {self.activation!r}")
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("number of weight/bias tensors does not match layer_dims")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_dims[i], self.layer_dims[i + 1]) or b.shape != (self.layer_dims[i + 1],):
                raise ValueError(f"layer {i} tensors do not chain with layer_dims")

    @classmethod
    def init(cls, layer_dims, in_norm: Normalizer, out_norm: Normalizer,
             rng: np.random.Generator) -> "MlpModel":
        dims = tuple(layer_dims)
        weights = [rng.standard_normal((a, b)) / np.sqrt(a) for a, b in zip(dims[:-1], dims[1:])]
        biases = [np.zeros(b) for b in dims[1:]]
        return cls(dims, weights, biases, in_norm, out_norm)

    def params(self) -> list[np.ndarray]:
        return [t for pair in zip(self.weights, self.biases) for t in pair]

    def copy(self) -> "MlpModel":
        return MlpModel(self.layer_dims, [w.copy() for w in self.weights], [b.copy() for b in self.biases],
                        Normalizer(self.in_norm.mean.copy(), self.in_norm.scale.copy()),
                        Normalizer(self.out_norm.mean.copy(), self.out_norm.scale.copy()),
                        self.activation)

    # Normalized-space pass.

    def forward(self, z: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        acts = [z]
        a = z
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = a @ w + b
            if i < last:
                a = np.tanh(a)
            acts.append(a)
        return a, acts

    def backward(self, acts: list[np.ndarray], dy: np.ndarray, need_input: bool = False):
        """Gradients for ``dy = dLoss/d(output)``; returns (param grads, input grad)."""
        grads = []
        g = dy
        for i in range(len(self.weights) - 1, -1, -1):
            if i < len(self.weights) - 1:
                g = g * (1.0 - acts[i + 1] ** 2)
            grads.append(g.sum(axis=0))
            grads.append(acts[i].T @ g)
            if i > 0 or need_input:
                g = g @ self.weights[i].T
        grads.reverse()
        return grads, (g if need_input else None)

    # Raw-space helpers.

    def predict(self, x) -> np.ndarray:
        y, _ = self.forward(self.in_norm.normalize(x))
        return self.out_norm.denormalize(y)

    def value_and_input_grad(self, x: np.ndarray, dmetric) -> tuple[np.ndarray, np.ndarray]:
        """Predicted metrics and d(loss)/dx, where ``dmetric(metrics)`` returns d(loss)/d(metrics)."""
        y, acts = self.forward(self.in_norm.normalize(x))
        metrics = self.out_norm.denormalize(y)
        dy = dmetric(metrics) * self.out_norm.scale
        _, dz = self.backward(acts, dy, need_input=True)
        return metrics, dz / self.in_norm.scale


def mse_loss(model: MlpModel, z: np.ndarray, t: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """0.5 * mean over samples of the squared normalized error, and its parameter gradients."""
    y, acts = model.forward(z)
    r = y - t
    n = z.shape[0]
    loss = 0.5 * float(np.sum(r * r)) / n
    grads, _ = model.backward(acts, r / n)
    return loss, grads


@dataclass(frozen=True)
class TrainConfig:
    hidden: tuple[int, ...] = (128, 256, 128)
    epochs: int = 300
    learning_rate: float = 0.1
    momentum: float = 0.9
    batch_size: int | None = 128
    test_fraction: float = 0.1
    patience: int | None = 60
    seed: int = 0

    def to_dict(self) -> dict:
        return dict(hidden=list(self.hidden), epochs=self.epochs, learning_rate=self.learning_rate,
                    momentum=self.momentum, batch_size=self.batch_size,
                    test_fraction=self.test_fraction, patience=self.patience, seed=self.seed)


@dataclass
class TrainReport:
    train_loss: float
    test_loss: float | None
    train_rel_error: float
    test_rel_error: float | None
    epochs_run: int
    best_epoch: int
    history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return dict(train_loss=self.train_loss, test_loss=self.test_loss,
                    train_rel_error=self.train_rel_error, test_rel_error=self.test_rel_error,
                    epochs_run=self.epochs_run, best_epoch=self.best_epoch)


def relative_error(pred: np.ndarray, true: np.ndarray) -> float:
    """Mean over samples and metrics of |pred - true| / |true|."""
    return float(np.mean(np.abs(pred - true) / np.abs(true)))


def split_indices(n: int, test_fraction: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    n_test = int(round(n * test_fraction))
    if test_fraction > 0 and n > 1:
        n_test = min(max(n_test, 1), n - 1)
    else:
        n_test = 0
    perm = rng.permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def momentum_descent(params: list[np.ndarray], loss_grad, batches, cfg: TrainConfig, test_loss=None):
    """Nesterov momentum with cosine learning-rate decay and early stopping on ``test_loss``.

    ``loss_grad(batch)`` returns (loss, grads aligned with ``params``); params are
    updated in place. ``batches(epoch)`` yields the batches of one epoch.
    Returns (best snapshot, best epoch, epochs run, history of epoch losses).
    """
    velocity = [np.zeros_like(p) for p in params]
    best = [p.copy() for p in params]
    best_val, best_epoch = np.inf, 0
    history = []
    epoch = 0
    for epoch in range(1, cfg.epochs + 1):
        lr = cfg.learning_rate * 0.5 * (1.0 + np.cos(np.pi * (epoch - 1) / cfg.epochs))
        total, count = 0.0, 0
        for batch in batches(epoch):
            for p, v in zip(params, velocity):
                p += cfg.momentum * v
            loss, grads = loss_grad(batch)
            for p, v, g in zip(params, velocity, grads):
                p -= cfg.momentum * v
                v *= cfg.momentum
                v -= lr * g
                p += v
            total += loss
            count += 1
        epoch_loss = total / max(count, 1)
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(
                f"loss became {epoch_loss} at epoch {epoch} (lr={lr:.3g}, last finite "
                f"{history[-1] if history else None})"
            )
        history.append(epoch_loss)
        val = test_loss() if test_loss is not None else epoch_loss
        if val < best_val:
            best_val, best_epoch = val, epoch
            best = [p.copy() for p in params]
        elif cfg.patience is not None and epoch - best_epoch >= cfg.patience:
            break
    return best, best_epoch, epoch, history


def train_mlp(params: np.ndarray, metrics: np.ndarray, cfg: TrainConfig = TrainConfig(),
              layer_dims: tuple[int, ...] | None = None) -> tuple[MlpModel, TrainReport]:
    """Fit an MLP to (params, metrics) by minimizing normalized MSE."""
    x = np.asarray(params, dtype=float)
    y = np.asarray(metrics, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise ValueError("params and metrics must be non-empty 2-D arrays with matching rows")
    # Independent streams so the split does not shift the weight initialization.
    split_rng, init_rng, rng = (np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(3))
    tr, te = split_indices(x.shape[0], cfg.test_fraction, split_rng)
    in_norm, out_norm = Normalizer.fit(x[tr]), Normalizer.fit(y[tr])
    dims = layer_dims or (x.shape[1], *cfg.hidden, y.shape[1])
    model = MlpModel.init(dims, in_norm, out_norm, init_rng)
    z_tr, t_tr = in_norm.normalize(x[tr]), out_norm.normalize(y[tr])
    z_te, t_te = in_norm.normalize(x[te]), out_norm.normalize(y[te])

    def batches(_epoch):
        n = z_tr.shape[0]
        if cfg.batch_size is None or cfg.batch_size >= n:
            yield slice(None)
            return
        perm = rng.permutation(n)
        for k in range(0, n, cfg.batch_size):
            yield perm[k:k + cfg.batch_size]

    def loss_grad(batch):
        return mse_loss(model, z_tr[batch], t_tr[batch])

    test_loss = (lambda: mse_loss(model, z_te, t_te)[0]) if te.size else None
    state = model.params()
    best, best_epoch, epochs_run, history = momentum_descent(state, loss_grad, batches, cfg, test_loss)
    for p, b in zip(state, best):
        p[...] = b
    report = TrainReport(
        train_loss=mse_loss(model, z_tr, t_tr)[0],
        test_loss=mse_loss(model, z_te, t_te)[0] if te.size else None,
        train_rel_error=relative_error(model.predict(x[tr]), y[tr]),
        test_rel_error=relative_error(model.predict(x[te]), y[te]) if te.size else None,
        epochs_run=epochs_run,
        best_epoch=best_epoch,
        history=history,
    )
    return model, report
