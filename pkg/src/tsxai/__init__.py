"""Per-time-point input sensitivities of feedforward nets on lagged time series."""

__version__ = "0.1.0"
