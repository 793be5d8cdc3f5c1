"""Filter a 256-QAM stream through the interleaved hardware model.

Compares the output spectrum of the quantized and tuned lowpass patterns in
and out of band, with and without DAC non-idealities.
Usage: python3 scripts/qam_demo.py
"""

import warnings

import numpy as np

from tafa.behave_sim import HwConfig, simulate_filter, stimulus, trace_spectrum
from tafa.filter_core import FilterSpec, design_fir, zoh_interpolate
from tafa.spectral import LossSpec, fir_spectrum
from tafa.taf_pattern import approximate, quantize
from tafa.tuner import IdealEvaluator, TuneConfig, fine_tune


def band_power_db(spec, lo, hi):
    sel = (spec.freqs >= lo) & (spec.freqs < hi)
    return 10 * np.log10(np.sum(np.abs(spec.values[sel]) ** 2))


if __name__ == "__main__":
    t_tap, t_clk = 1.0 / 300e6, 1.0 / 2.4e9
    fs = FilterSpec("lowpass", 8, t_tap, t_clk, (15e6, 75e6))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p0 = quantize(approximate(zoh_interpolate(design_fir(fs)), 1.0), t_clk)
    loss = LossSpec("full_band", B=fs.nyquist)
    ev = IdealEvaluator(loss.frequency_grid())
    tuned, _ = fine_tune(p0, TuneConfig(loss), ev, fir_spectrum(design_fir(fs), ev.freqs))
    x = stimulus.qam(4096, t_tap, samples_per_symbol=8, seed=1)
    for label, hw in (("ideal", HwConfig(pattern_len=len(p0), clock_period=t_clk)),
                      ("settling+INL", HwConfig(pattern_len=len(p0), clock_period=t_clk,
                                                dac_settling_tau=0.1 * t_clk, dac_inl_coeffs=(0.01,)))):
        for name, p in (("quantized", p0), ("tuned", tuned)):
            s = trace_spectrum(simulate_filter(x, p, hw))
            rej = band_power_db(s, 0, 15e6) - band_power_db(s, 75e6, fs.nyquist)
            print(f"{label:13s} {name:9s} passband-to-stopband power {rej:6.2f} dB")
