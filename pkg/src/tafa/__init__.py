"""Time-approximation FIR filter synthesis: pattern design, tuning, simulation and sizing."""

__version__ = "0.1.0"
