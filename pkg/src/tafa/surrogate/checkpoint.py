"""Plain-text model checkpoints.

Line 1: ``tafa-surrogate <version> kind=<mlp|transfer> layer_dims=<a,b,...> activation=<name>``
plus optional ``key=value`` provenance tokens.
Each following line: ``<tensor name> <rows> <cols> <row-major values>``, with
values written via ``repr`` so reloads are bit-identical.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from tafa.surrogate.mlp import MlpModel, Normalizer
from tafa.surrogate.transfer import TransferModel

MAGIC = "tafa-surrogate"
FORMAT_VERSION = 1


def _line(name: str, a: np.ndarray) -> str:
    a = np.atleast_2d(np.asarray(a, dtype=float))
    vals = " ".join(repr(float(v)) for v in a.ravel())
    return f"{name} {a.shape[0]} {a.shape[1]} {vals}"


def _core_tensors(m: MlpModel) -> list[tuple[str, np.ndarray]]:
    out = [("in_mean", m.in_norm.mean), ("in_scale", m.in_norm.scale),
           ("out_mean", m.out_norm.mean), ("out_scale", m.out_norm.scale)]
    for i, (w, b) in enumerate(zip(m.weights, m.biases)):
        out += [(f"W{i}", w), (f"b{i}", b)]
    return out


def save_model(path, model, meta: dict | None = None) -> None:
    if isinstance(model, TransferModel):
        kind, core = "transfer", model.core
    else:
        kind, core = "mlp", model
    dims = ",".join(str(d) for d in core.layer_dims)
    head = f"{MAGIC} {FORMAT_VERSION} kind={kind} layer_dims={dims} activation={core.activation}"
    for k in sorted(meta or {}):
        head += f" {k}={str(meta[k]).replace(' ', '-')}"
    lines = [head]
    tensors = _core_tensors(core)
    if kind == "transfer":
        tensors += [("in_weight", model.in_weight), ("in_bias", model.in_bias),
                    ("out_weight", model.out_weight), ("out_bias", model.out_bias)]
    lines += [_line(n, a) for n, a in tensors]
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path):
    lines = Path(path).read_text().splitlines()
    head = lines[0].split()
    if len(head) < 2 or head[0] != MAGIC:
        raise ValueError(f"{path}:1: not a {MAGIC} checkpoint")
    if int(head[1]) != FORMAT_VERSION:
        raise ValueError(f"{path}:1: unsupported format version {head[1]}")
    meta = dict(tok.split("=", 1) for tok in head[2:])
    dims = tuple(int(d) for d in meta["layer_dims"].split(","))
    tensors = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        name, rows, cols, *vals = line.split()
        rows, cols = int(rows), int(cols)
        if len(vals) != rows * cols:
            raise ValueError(f"{path}:{lineno}: tensor {name} expects {rows * cols} values, got {len(vals)}")
        tensors[name] = np.array([float(v) for v in vals]).reshape(rows, cols)
    vec = lambda n: tensors[n].ravel()
    n_layers = len(dims) - 1
    core = MlpModel(
        dims,
        [tensors[f"W{i}"] for i in range(n_layers)],
        [vec(f"b{i}") for i in range(n_layers)],
        Normalizer(vec("in_mean"), vec("in_scale")),
        Normalizer(vec("out_mean"), vec("out_scale")),
        meta.get("activation", "tanh"),
    )
    if meta["kind"] == "mlp":
        return core
    return TransferModel(core, tensors["in_weight"], vec("in_bias"), tensors["out_weight"], vec("out_bias"))
