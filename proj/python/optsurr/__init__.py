"""Optimal surrogate transformation: analysis, relative power and trial design."""

from ._optsurr import (
    InfeasibleError,
    InputError,
    NumericError,
    analyze,
    analyze_csv,
    calibrate_t,
    design,
    power,
    relative_power,
    render_text,
    simulate,
    solve_sample_size,
    truth,
)

__all__ = [
    "InfeasibleError",
    "InputError",
    "NumericError",
    "analyze",
    "analyze_csv",
    "calibrate_t",
    "design",
    "power",
    "relative_power",
    "render_text",
    "simulate",
    "solve_sample_size",
    "truth",
]
