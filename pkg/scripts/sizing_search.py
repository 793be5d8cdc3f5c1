"""Multi-start sizing search on a trained surrogate, checked against the synthetic evaluator.

Usage: python3 scripts/sizing_search.py [--power 3.0] [--sfdr 55] [--restarts 64]
"""

import argparse

from tafa.behave_sim import PARAM_NAMES, synth_eval
from tafa.surrogate import SearchConfig, TrainConfig, sample_dataset, search_params, train_mlp


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--power", type=float, default=3.0, help="power ceiling in mW")
    ap.add_argument("--sfdr", type=float, default=55.0, help="SFDR floor in dB")
    ap.add_argument("--restarts", type=int, default=64)
    ap.add_argument("--samples", type=int, default=3000)
    args = ap.parse_args()

    data = sample_dataset(args.samples, "schematic", seed=0)
    model, rep = train_mlp(data.params, data.metrics, TrainConfig(seed=0))
    print(f"surrogate test error {rep.test_rel_error:.3%}")
    res = search_params(model, SearchConfig(args.power, args.sfdr, num_restarts=args.restarts))
    print(f"{len(res.feasible)} of {args.restarts} restarts meet the predicted specs")
    for cand in res.feasible[:3]:
        power, sfdr = synth_eval(cand.params[None, :])[0]
        print(f"  predicted power {cand.metrics[0]:.3f} mW, SFDR {cand.metrics[1]:.2f} dB; "
              f"evaluated {power:.3f} mW, {sfdr:.2f} dB")
        print("   " + ", ".join(f"{n}={v:.4g}" for n, v in zip(PARAM_NAMES, cand.params)))


if __name__ == "__main__":
    main()
