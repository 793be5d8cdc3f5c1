"""Design, quantize and fine-tune the 8-tap lowpass and 4-tap notch examples.

Prints the loss before and after tuning and the tuned patterns.
Usage: python3 scripts/fine_tune_demo.py
"""

import warnings

from tafa.filter_core import FilterSpec, design_fir, zoh_interpolate
from tafa.spectral import LossSpec, fir_spectrum
from tafa.taf_pattern import approximate, quantize
from tafa.tuner import IdealEvaluator, TuneConfig, fine_tune


def initial(spec):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return quantize(approximate(zoh_interpolate(design_fir(spec)), 1.0), spec.clock_period)


def run(name, spec, loss, with_target):
    ev = IdealEvaluator(loss.frequency_grid())
    target = fir_spectrum(design_fir(spec), ev.freqs) if with_target else None
    p0 = initial(spec)
    tuned, rep = fine_tune(p0, TuneConfig(loss), ev, target)
    print(f"{name}: loss {rep.initial_loss:.5f} -> {rep.final_loss:.5f} "
          f"({rep.accepted_moves} moves, {rep.sweeps_run} sweeps)")
    print(f"  initial {p0.to_string()}")
    print(f"  tuned   {tuned.to_string()}")


if __name__ == "__main__":
    t_tap, t_clk = 1.0 / 300e6, 1.0 / 2.4e9
    lp = FilterSpec("lowpass", 8, t_tap, t_clk, (15e6, 75e6))
    run("8-tap lowpass, full-band loss", lp, LossSpec("full_band", B=lp.nyquist), True)
    bp = FilterSpec("bandpass-target", 4, t_tap, t_clk, (15e6, 105e6, 30e6))
    run("4-tap notch, band-notch loss", bp, LossSpec("band_notch", B1=15e6, f0=105e6, B2=30e6), False)
