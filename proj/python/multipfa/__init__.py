"""Dependence-aware multiple testing for a multi-category response."""

from ._core import (
    __version__,
    analyze,
    fit_marginal,
    load_dataset,
    pfa,
    simulate,
)

__all__ = ["__version__", "analyze", "fit_marginal", "load_dataset", "pfa", "simulate"]
