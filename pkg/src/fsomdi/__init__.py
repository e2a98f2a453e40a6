"""Turbulence-induced polarization noise and key rates for free-space MDI-QKD links."""

from .atmosphere import LinkGeometry, TurbulenceProfile, rytov_variance
from .channel import ChannelSetup, effective_eta, effective_polarization, resolve_channel
from .errors import InputDomainError, NumericalError
from .pipeline import LinkConfig, ResultRow, SweepSpec, emit, run_point, run_sweep, validate
from .polchannel import AoProfile, EffectivePolParams, PolState
from .presets import load_presets

__all__ = [
    "LinkGeometry", "TurbulenceProfile", "rytov_variance", "ChannelSetup", "effective_eta",
    "effective_polarization", "resolve_channel", "InputDomainError", "NumericalError", "LinkConfig",
    "ResultRow", "SweepSpec", "emit", "run_point", "run_sweep", "validate", "AoProfile",
    "EffectivePolParams", "PolState", "load_presets",
]
