"""Implicit and semi-explicit Euler stepping for elliptic-parabolic systems."""

from ._porodec import (
    Config,
    ConfigError,
    CouplingConstants,
    DivergenceDetected,
    HistoryKind,
    NetworkSystem,
    Scheme,
    Trajectory,
    TwoFieldSystem,
    __version__,
    build_network,
    build_toy,
    build_two_field,
    compute_eoc,
    coupling_constants,
    coupling_sweep,
    delay_gap,
    integrate,
    method_of_steps,
    splicing_check,
    stability_test,
)
