"""Sample efficiency of transfer learning versus training from scratch.

Trains one schematic core, then for each post-layout budget compares an
adapter-only transfer model against a freshly trained MLP on a held-out set.
Usage: python3 scripts/transfer_sweep.py [--budgets 50 100 200 400] [--seeds 3]
"""

import argparse
from dataclasses import replace

import numpy as np

from tafa.surrogate import TrainConfig, relative_error, sample_dataset, train_mlp, transfer_train
from tafa.surrogate.transfer import TRANSFER_DEFAULTS


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budgets", type=int, nargs="+", default=[50, 100, 200, 400])
    ap.add_argument("--seeds", type=int, default=3)
    ap.add_argument("--core-samples", type=int, default=5500)
    args = ap.parse_args()

    core_data = sample_dataset(args.core_samples, "schematic", seed=0)
    core, rep = train_mlp(core_data.params, core_data.metrics, TrainConfig(seed=0))
    print(f"core: {args.core_samples} schematic samples, test error {rep.test_rel_error:.3%}")
    test = sample_dataset(2000, "postlayout", seed=10_000)
    print("budget  transfer  scratch")
    for n in args.budgets:
        tl_err, sc_err = [], []
        for seed in range(args.seeds):
            d = sample_dataset(n, "postlayout", seed=100 + seed)
            tl, _ = transfer_train(core, d.params, d.metrics, replace(TRANSFER_DEFAULTS, seed=seed))
            sc, _ = train_mlp(d.params, d.metrics, TrainConfig(seed=seed))
            tl_err.append(relative_error(tl.predict(test.params), test.metrics))
            sc_err.append(relative_error(sc.predict(test.params), test.metrics))
        print(f"{n:6d}  {np.mean(tl_err):8.3%}  {np.mean(sc_err):7.3%}")


if __name__ == "__main__":
    main()
