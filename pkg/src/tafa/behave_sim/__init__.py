from dataclasses import replace

import numpy as np

from tafa.behave_sim.circuit import (
    METRIC_NAMES,
    PARAM_NAMES,
    PARAM_RANGES,
    LayoutModel,
    ParamRangeError,
    synth_eval,
)
from tafa.behave_sim.hardware import (
    HwConfig,
    TransientTrace,
    WaveformGenerator,
    chop,
    chop_wave,
    channel_outputs,
    ring_counter_phases,
    serialize_pattern,
    sfdr_from_trace,
    simulate_filter,
    simulate_full_rate,
    trace_spectrum,
)
from tafa.behave_sim import stimulus


class BehavioralEvaluator:
    """Tuner evaluator: spectrum of the simulated impulse response of a pattern.

    Pattern length and clock period come from the pattern; DAC non-idealities
    and mode come from ``hw``.
    """

    def __init__(self, freqs, hw: HwConfig):
        self.freqs = np.asarray(freqs, dtype=float)
        self.hw = hw

    def __call__(self, pattern):
        hw = self.hw
        if hw.pattern_len != len(pattern) or hw.clock_period != pattern.clock_period:
            hw = replace(hw, pattern_len=len(pattern), clock_period=pattern.clock_period,
                         num_channels=pattern.num_taps)
        trace = simulate_filter([pattern.amplitude], pattern, hw)
        return trace_spectrum(trace, self.freqs)
