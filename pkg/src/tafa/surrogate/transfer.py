"""Linear transfer learning: train affine input/output adapters around a frozen core."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tafa.surrogate.mlp import (
    MlpModel,
    TrainConfig,
    TrainReport,
    momentum_descent,
    relative_error,
    split_indices,
)


@dataclass
class TransferModel:
    """``core`` wrapped as out_linear(core(in_linear(z))) in normalized coordinates.

    ``in_weight`` is (10, 10) and ``out_weight`` (2, 2); both act as ``v @ W.T + b``.
    """

    core: MlpModel
    in_weight: np.ndarray
    in_bias: np.ndarray
    out_weight: np.ndarray
    out_bias: np.ndarray

    @classmethod
    def identity(cls, core: MlpModel) -> "TransferModel":
        n_in, n_out = core.layer_dims[0], core.layer_dims[-1]
        return cls(core, np.eye(n_in), np.zeros(n_in), np.eye(n_out), np.zeros(n_out))

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return self.core.layer_dims

    def adapter_params(self) -> list[np.ndarray]:
        return [self.in_weight, self.in_bias, self.out_weight, self.out_bias]

    def forward(self, z: np.ndarray):
        zi = z @ self.in_weight.T + self.in_bias
        yc, acts = self.core.forward(zi)
        return yc @ self.out_weight.T + self.out_bias, (z, yc, acts)

    def backward(self, cache, dy: np.ndarray, need_input: bool = False):
        z, yc, acts = cache
        g_out_w = dy.T @ yc
        g_out_b = dy.sum(axis=0)
        _, dzi = self.core.backward(acts, dy @ self.out_weight, need_input=True)
        grads = [dzi.T @ z, dzi.sum(axis=0), g_out_w, g_out_b]
        return grads, (dzi @ self.in_weight if need_input else None)

    def predict(self, x) -> np.ndarray:
        y, _ = self.forward(self.core.in_norm.normalize(x))
        return self.core.out_norm.denormalize(y)

    def value_and_input_grad(self, x: np.ndarray, dmetric):
        y, cache = self.forward(self.core.in_norm.normalize(x))
        metrics = self.core.out_norm.denormalize(y)
        dy = dmetric(metrics) * self.core.out_norm.scale
        _, dz = self.backward(cache, dy, need_input=True)
        return metrics, dz / self.core.in_norm.scale


def transfer_loss(model: TransferModel, z: np.ndarray, t: np.ndarray):
    y, cache = model.forward(z)
    r = y - t
    n = z.shape[0]
    grads, _ = model.backward(cache, r / n)
    return 0.5 * float(np.sum(r * r)) / n, grads


TRANSFER_DEFAULTS = TrainConfig(epochs=3000, learning_rate=0.05, momentum=0.9, batch_size=None,
                                test_fraction=0.1, patience=None)


def transfer_train(core: MlpModel, params: np.ndarray, metrics: np.ndarray,
                   cfg: TrainConfig = TRANSFER_DEFAULTS) -> tuple[TransferModel, TrainReport]:
    """Fit only the adapters to post-layout data; the core tensors are never written."""
    x = np.asarray(params, dtype=float)
    y = np.asarray(metrics, dtype=float)
    if x.ndim != 2 or x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise ValueError("params and metrics must be non-empty 2-D arrays with matching rows")
    split_rng, rng = (np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(2))
    tr, te = split_indices(x.shape[0], cfg.test_fraction, split_rng)
    model = TransferModel.identity(core)
    z = core.in_norm.normalize(x)
    t = core.out_norm.normalize(y)
    z_tr, t_tr, z_te, t_te = z[tr], t[tr], z[te], t[te]

    def batches(_epoch):
        n = z_tr.shape[0]
        if cfg.batch_size is None or cfg.batch_size >= n:
            yield slice(None)
            return
        perm = rng.permutation(n)
        for k in range(0, n, cfg.batch_size):
            yield perm[k:k + cfg.batch_size]

    state = model.adapter_params()
    test_loss = (lambda: transfer_loss(model, z_te, t_te)[0]) if te.size else None
    best, best_epoch, epochs_run, history = momentum_descent(
        state, lambda b: transfer_loss(model, z_tr[b], t_tr[b]), batches, cfg, test_loss
    )
    for p, b in zip(state, best):
        p[...] = b
    report = TrainReport(
        train_loss=transfer_loss(model, z_tr, t_tr)[0],
        test_loss=transfer_loss(model, z_te, t_te)[0] if te.size else None,
        train_rel_error=relative_error(model.predict(x[tr]), y[tr]),
        test_rel_error=relative_error(model.predict(x[te]), y[te]) if te.size else None,
        epochs_run=epochs_run,
        best_epoch=best_epoch,
        history=history,
    )
    return model, report
