"""Python bindings for the pwsml C++ library."""

from ._core import (
    Map,
    NonFiniteStateError,
    PwsmlError,
    chart_2p,
    classify,
    detect_bcb,
    detect_period,
    lyapunov_spectrum,
    parameter_names,
    read_csv,
    run_cli,
    simulate,
)

__all__ = [
    "Map",
    "NonFiniteStateError",
    "PwsmlError",
    "chart_2p",
    "classify",
    "detect_bcb",
    "detect_period",
    "lyapunov_spectrum",
    "parameter_names",
    "read_csv",
    "run_cli",
    "simulate",
]
