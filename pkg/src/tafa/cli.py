"""Command-line entry point: design, tune, simulate, surrogate."""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from tafa import behave_sim
from tafa.behave_sim import BehavioralEvaluator, HwConfig, LayoutModel
from tafa.config import (
    PROJECT_SCHEMA,
    ConfigError,
    header_lines,
    load_filter_spec,
    load_json,
    loss_from_spec,
    provenance,
)
from tafa.filter_core import InfeasibleSpecError, design_fir, zoh_interpolate
from tafa.spectral import fir_spectrum, ct_response_spectrum
from tafa.surrogate import (
    TRANSFER_DEFAULTS,
    Dataset,
    SearchConfig,
    TrainConfig,
    load_model,
    sample_dataset,
    save_model,
    search_many,
    train_mlp,
    transfer_train,
)
from tafa.taf_pattern import CollapsedPulseWarning, approximate, pattern_to_ct, quantize, read_pattern, write_pattern
from tafa.tuner import IdealEvaluator, TuneConfig, fine_tune, write_trace_csv

EXIT_OK, EXIT_INFEASIBLE, EXIT_CONFIG = 0, 1, 2

LAYOUTS = {"default": LayoutModel.default, "exact_affine": LayoutModel.exact_affine,
           "identity": LayoutModel.identity}


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _project(path) -> dict:
    return load_json(path, PROJECT_SCHEMA) if path else {}


def _hw_from(cfg: dict, pattern=None) -> HwConfig:
    hw = dict(cfg.get("hardware", {}))
    if pattern is not None:
        hw.setdefault("pattern_len", len(pattern))
        hw.setdefault("clock_period", pattern.clock_period)
        hw.setdefault("num_channels", pattern.num_taps)
    try:
        return HwConfig(**hw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"hardware: {exc}") from None


def cmd_design(args) -> int:
    spec, raw = load_filter_spec(args.spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = provenance(None, raw)
    try:
        h = design_fir(spec)
    except InfeasibleSpecError as exc:
        _write_json(out / "fir.json", {"meta": meta, "infeasible": True,
                                       "achieved_db": exc.achieved_db, "requested_db": exc.requested_db})
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    amplitude = float(raw.get("amplitude", 1.0))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CollapsedPulseWarning)
        pt = approximate(zoh_interpolate(h), amplitude)
        pattern = quantize(pt, spec.clock_period)
    collapsed = [t for w in caught if isinstance(w.message, CollapsedPulseWarning) for t in w.message.taps]
    _write_json(out / "fir.json", {
        "meta": meta,
        "coeffs": h.coeffs.tolist(),
        "tap_interval_s": h.tap_interval,
        "a_min": pt.a_min,
        "collapsed_taps": collapsed,
    })
    write_pattern(out / "pattern.taf", pattern, meta)
    loss = loss_from_spec(spec, raw.get("loss"))
    freqs = loss.frequency_grid()
    ct_response_spectrum(pattern_to_ct(pattern), freqs).to_csv(out / "initial_spectrum.csv", header_lines(meta))
    fir_spectrum(h, freqs).to_csv(out / "target_spectrum.csv", header_lines(meta))
    print(f"{out / 'pattern.taf'}: {len(pattern)} slots, grid factor {pattern.grid_factor}")
    return EXIT_OK


def cmd_tune(args) -> int:
    spec, raw = load_filter_spec(args.spec)
    cfg = _project(args.config)
    pattern = read_pattern(args.pattern)
    loss = loss_from_spec(spec, args.loss or raw.get("loss"))
    tuner_opts = dict(cfg.get("tuner", {}))
    if args.seed is not None:
        tuner_opts["rng_seed"] = args.seed
    try:
        tcfg = TuneConfig.from_dict(tuner_opts, loss=loss)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"tuner: {exc}") from None
    freqs = loss.frequency_grid()
    if args.evaluator == "behavioral":
        evaluator = BehavioralEvaluator(freqs, _hw_from(cfg, pattern))
    else:
        evaluator = IdealEvaluator(freqs)
    target = fir_spectrum(design_fir(spec), freqs) if loss.kind == "full_band" else None
    tuned, report = fine_tune(pattern, tcfg, evaluator, target)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = provenance(tcfg.rng_seed, raw, tcfg.to_dict(), args.evaluator,
                      cfg.get("hardware") if args.evaluator == "behavioral" else None)
    write_pattern(out / "tuned.taf", tuned, meta)
    _write_json(out / "tune_report.json", {"meta": meta, "evaluator": args.evaluator,
                                           **json.loads(report.to_json())})
    write_trace_csv(out / "loss_trace.csv", report, header_lines(meta))
    evaluator(tuned).to_csv(out / "tuned_spectrum.csv", header_lines(meta))
    print(f"loss {report.initial_loss:.6g} -> {report.final_loss:.6g} "
          f"({report.accepted_moves} moves, {report.sweeps_run} sweeps)")
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _project(args.config)
    pattern = read_pattern(args.pattern)
    hw = _hw_from(cfg, pattern)
    stim_cfg = dict(cfg.get("stimulus", {"kind": "impulse", "num_samples": 1}))
    if args.seed is not None and stim_cfg.get("kind") == "qam":
        stim_cfg["seed"] = args.seed
    try:
        x = behave_sim.stimulus.from_config(stim_cfg, hw.input_period)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"stimulus: {exc}") from None
    trace = behave_sim.simulate_filter(x * pattern.amplitude, pattern, hw)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = provenance(stim_cfg.get("seed"), hw.to_dict(), stim_cfg, pattern.to_string())
    trace.to_csv(out / "trace.csv", header_lines(meta))
    behave_sim.trace_spectrum(trace).to_csv(out / "spectrum.csv", header_lines(meta))
    print(f"{len(trace)} samples at {trace.sample_period:.4g} s")
    return EXIT_OK


def _train_config(section: dict, seed, defaults: TrainConfig) -> TrainConfig:
    opts = dict(section)
    if "hidden" in opts:
        opts["hidden"] = tuple(opts["hidden"])
    if seed is not None:
        opts["seed"] = seed
    try:
        return replace(defaults, **opts)
    except TypeError as exc:
        raise ConfigError(f"surrogate: {exc}") from None


def cmd_surrogate(args) -> int:
    cfg = _project(args.config).get("surrogate", {})
    out = Path(args.out)
    layout = LAYOUTS[cfg.get("layout", "default")]()
    if args.action == "sample":
        seed = 0 if args.seed is None else args.seed
        data = sample_dataset(args.n, args.variant, seed, layout=layout)
        meta = provenance(seed, args.n, args.variant, cfg.get("layout", "default"))
        out.parent.mkdir(parents=True, exist_ok=True)
        data.to_csv(out, header_lines(meta))
        return EXIT_OK
    if args.action in ("train", "transfer"):
        if not args.data or (args.action == "transfer" and not args.model):
            raise ConfigError(f"surrogate {args.action} needs --data" + (" and --model" if args.action == "transfer" else ""))
        data = Dataset.from_csv(args.data)
        if args.action == "train":
            tcfg = _train_config(cfg.get("train", {}), args.seed, TrainConfig())
            model, report = train_mlp(data.params, data.metrics, tcfg)
        else:
            tcfg = _train_config(cfg.get("transfer", {}), args.seed, TRANSFER_DEFAULTS)
            model, report = transfer_train(load_model(args.model), data.params, data.metrics, tcfg)
        meta = provenance(tcfg.seed, tcfg.to_dict(), Path(args.data).read_text())
        out.parent.mkdir(parents=True, exist_ok=True)
        save_model(out, model, meta)
        _write_json(out.with_suffix(".report.json"), {"meta": meta, **report.to_dict()})
        print(f"test relative error {report.test_rel_error}")
        return EXIT_OK
    if not args.model:
        raise ConfigError("surrogate search needs --model")
    model = load_model(args.model)
    scfg = dict(cfg.get("search", {}))
    specs = scfg.pop("specs", [])
    if not specs:
        raise ConfigError("surrogate.search.specs must list at least one {power_max, sfdr_min} target")
    base_seed = scfg.pop("rng_seed", 0) if args.seed is None else args.seed
    scfg.pop("rng_seed", None)
    try:
        configs = [SearchConfig(power_max=float(s["power_max"]), sfdr_min=float(s["sfdr_min"]),
                                rng_seed=base_seed + i, **scfg) for i, s in enumerate(specs)]
    except (TypeError, KeyError, ValueError) as exc:
        raise ConfigError(f"surrogate.search: {exc}") from None
    start = time.perf_counter()
    results = search_many(model, configs, workers=int(cfg.get("workers", 1)))
    elapsed = time.perf_counter() - start
    keep = int(cfg.get("keep", 10))
    meta = provenance(base_seed, cfg.get("search"), Path(args.model).read_text())
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "candidates.json", {
        "meta": meta,
        "results": [
            {"target": {"power_max": c.power_max, "sfdr_min": c.sfdr_min},
             "infeasible": r.infeasible,
             "num_feasible": len(r.feasible),
             "candidates": [cand.to_dict() for cand in r.candidates[:keep]]}
            for c, r in zip(configs, results)
        ],
    })
    # Wall time lives in its own file so candidates.json stays reproducible.
    _write_json(out / "timing.json", {"wall_time_s": elapsed, "num_spec_sets": len(configs)})
    n_bad = sum(r.infeasible for r in results)
    print(f"{len(configs)} spec sets searched in {elapsed:.2f} s; {n_bad} infeasible")
    return EXIT_INFEASIBLE if n_bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tafa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="FIR prototype -> quantized TAF pattern")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("tune", help="coordinate-descent fine tuning of a pattern")
    p.add_argument("--spec", required=True)
    p.add_argument("--pattern", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--evaluator", choices=("ideal", "behavioral"), default="ideal")
    p.add_argument("--loss", choices=("full_band", "band_notch"))
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("simulate", help="behavioral simulation of the interleaved TAF")
    p.add_argument("--pattern", required=True)
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("surrogate", help="surrogate sampling, training, transfer and search")
    p.add_argument("action", choices=("sample", "train", "transfer", "search"))
    p.add_argument("--config")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--variant", choices=("schematic", "postlayout"), default="schematic")
    p.add_argument("--data")
    p.add_argument("--model")
    p.set_defaults(func=cmd_surrogate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
