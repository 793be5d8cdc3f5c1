import warnings

import numpy as np
import pytest
from hypothesis import settings

from tafa.filter_core import FilterSpec, design_fir, zoh_interpolate
from tafa.taf_pattern import approximate, quantize

settings.register_profile("tafa", max_examples=60, deadline=None)
settings.load_profile("tafa")


@pytest.fixture
def lowpass8():
    """8-tap lowpass on a G=8 grid, time in units of one tap interval."""
    return FilterSpec("lowpass", 8, 1.0, 0.125, (0.05, 0.25))


@pytest.fixture
def notch4():
    """4-tap bandpass-target fixture: signal band 0.05, notch [0.35, 0.45]."""
    return FilterSpec("bandpass-target", 4, 1.0, 0.125, (0.05, 0.35, 0.1))


def initial_pattern(spec):
    """Knowledge-based starting pattern: design, hold, approximate, quantize."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return quantize(approximate(zoh_interpolate(design_fir(spec)), 1.0), spec.clock_period)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def make_pattern():
    return initial_pattern


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = getattr(request.config, "_tafa_acceptance", None)
    if lines is None:
        lines = request.config._tafa_acceptance = {}
    return lines


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_tafa_acceptance", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
