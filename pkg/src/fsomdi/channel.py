"""Resolve a link configuration into the quantities every later stage consumes."""

from __future__ import annotations

from dataclasses import dataclass

from .atmosphere import (
    Cn2Source, LinkGeometry, Regime, TurbulenceProfile, atmospheric_loss, beam_radius,
    drift_variance, fried_parameter, path_avg_cn2, rytov_variance,
)
from .detection import ScintillationShape, eta_eff, gg_shape
from .polchannel import NO_AO, AoProfile, EffectivePolParams, PhaseInputs, apply_ao, drift_average


@dataclass(frozen=True)
class ChannelSetup:
    """Turbulence statistics for one link, with adaptive optics already applied.

    ``w_z`` and ``sigma_drift2`` are the compensated values used everywhere
    downstream; the raw ones are kept for reporting.
    """

    geom: LinkGeometry
    kappa: float
    sigma_R2: float
    regime: Regime
    cn2_avg: float
    r0: float
    w_z_raw: float
    sigma_drift2_raw: float
    w_z: float
    sigma_drift2: float
    phase: PhaseInputs
    shape: ScintillationShape
    L_atm: float

    @property
    def a(self) -> float:
        return self.geom.aperture_a


def resolve_channel(geom: LinkGeometry, profile: TurbulenceProfile, ao: AoProfile = NO_AO,
                    kappa: float = 1.0, cn2: Cn2Source | None = None) -> ChannelSetup:
    """Compute turbulence statistics and apply the AO scalings.

    ``cn2`` overrides the profile's HV law (e.g. ``lambda h: 0 * h`` for a
    turbulence-free path); ``profile`` still supplies scales and extinction.
    """
    source = profile if cn2 is None else cn2
    ry = rytov_variance(geom, source)
    cn2_avg = path_avg_cn2(geom, source)
    r0 = fried_parameter(geom, source)
    w_raw = float(beam_radius(geom, geom.z))
    sd2_raw = drift_variance(geom, cn2_avg, profile.L0)
    w_z, sd2, scale = apply_ao(w_raw, sd2_raw, 1.0, ao)
    phase = PhaseInputs(ry.regime, geom.k, geom.z, cn2_avg, ry.sigma_R2, r0, scale)
    return ChannelSetup(
        geom=geom, kappa=kappa, sigma_R2=ry.sigma_R2, regime=ry.regime, cn2_avg=cn2_avg, r0=r0,
        w_z_raw=w_raw, sigma_drift2_raw=sd2_raw, w_z=w_z, sigma_drift2=sd2, phase=phase,
        shape=gg_shape(ry.sigma_R2, geom.aperture_a, geom.z, geom.wavelength),
        L_atm=atmospheric_loss(geom.theta_el, profile.alpha_atm, geom.H_atm),
    )


def effective_polarization(setup: ChannelSetup) -> EffectivePolParams:
    return drift_average(setup.a, setup.sigma_drift2, setup.regime, setup.kappa, setup.phase, setup.w_z)


def effective_eta(setup: ChannelSetup, numeric_scintillation: bool = False) -> float:
    return eta_eff(setup.sigma_drift2, setup.a, setup.w_z, setup.shape, numeric_scintillation)
