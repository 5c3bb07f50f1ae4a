"""fsrm: fractional stochastic regularity model toolchain."""

__version__ = "0.1.0"
