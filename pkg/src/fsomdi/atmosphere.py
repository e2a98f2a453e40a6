"""Turbulence statistics and slant-path geometry.

Everything here is SI: metres, radians, m^-2/3 for C_n^2. The only exception
is ``alpha_atm``, which is carried in km^-1 (the unit weather tables quote)
and converted inside :func:`atmospheric_loss`.

The slant path is parameterised by the distance ``xi`` from the transmitter,
with altitude ``h(xi) = xi * sin(theta_el)``. Every path integral stops at
``min(z, H_atm / sin(theta_el))`` so the altitude never exceeds ``H_atm``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Literal, Union

import numpy as np
from scipy import integrate

from .errors import InputDomainError, NumericalError

Direction = Literal["uplink", "downlink"]
Regime = Literal["weak", "medium", "strong"]

QUAD_RTOL = 1e-8

# Altitudes (m) where the HV terms change character; used as quadrature breakpoints.
_HV_BREAKS = (50.0, 100.0, 300.0, 1000.0, 1500.0, 3000.0, 5000.0, 10000.0, 15000.0)


@dataclass(frozen=True)
class LinkGeometry:
    """Where and how the beam travels.

    Parameters
    ----------
    z : float
        Slant propagation distance (m).
    theta_el : float
        Elevation angle (rad), in ``(0, pi/2]``.
    direction : {"uplink", "downlink"}
        Selects the path-weighting kernels.
    w0 : float
        Transmitter beam waist (m).
    wavelength : float
        Optical wavelength (m).
    aperture_a : float
        Receiver aperture radius (m).
    H_atm : float
        Thickness of the turbulent layer (m).
    """

    z: float
    theta_el: float = math.radians(85.0)
    direction: Direction = "uplink"
    w0: float = 0.1
    wavelength: float = 850e-9
    aperture_a: float = 0.6
    H_atm: float = 20_000.0

    def __post_init__(self):
        for name in ("z", "w0", "wavelength", "aperture_a", "H_atm"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InputDomainError(f"{name} must be finite and > 0, got {value!r}")
        if not (0.0 < self.theta_el <= math.pi / 2 + 1e-15):
            raise InputDomainError(f"theta_el must lie in (0, pi/2], got {self.theta_el!r}")
        if self.direction not in ("uplink", "downlink"):
            raise InputDomainError(f"direction must be 'uplink' or 'downlink', got {self.direction!r}")

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def z_R(self) -> float:
        """Rayleigh range ``pi w0^2 / wavelength``."""
        return math.pi * self.w0**2 / self.wavelength

    @property
    def zenith(self) -> float:
        """Zenith angle ``beta = pi/2 - theta_el``."""
        return math.pi / 2 - self.theta_el

    @property
    def path_top(self) -> float:
        """Upper limit of every path integral (m along the slant path)."""
        return min(self.z, self.H_atm / math.sin(self.theta_el))


@dataclass(frozen=True)
class TurbulenceProfile:
    """Hufnagel-Valley parameters plus scales and extinction for one weather class."""

    A: float
    v: float
    L0: float = 25.0
    l0: float = 1e-3
    alpha_atm: float = 0.0
    label: str = "custom"

    def __post_init__(self):
        if not (self.A >= 0):
            raise InputDomainError(f"A must be >= 0, got {self.A!r}")
        if not (self.v > 0):
            raise InputDomainError(f"v must be > 0, got {self.v!r}")
        if not (self.L0 > self.l0 > 0):
            raise InputDomainError(f"need L0 > l0 > 0, got L0={self.L0!r}, l0={self.l0!r}")
        if not (self.alpha_atm >= 0):
            raise InputDomainError(f"alpha_atm must be >= 0, got {self.alpha_atm!r}")

    def cn2(self, h):
        return hv_cn2(h, self)


@dataclass(frozen=True)
class RytovResult:
    sigma_R2: float
    regime: Regime


# A C_n^2 source: either an HV profile or any callable h -> C_n^2(h).
Cn2Source = Union[TurbulenceProfile, Callable[[np.ndarray], np.ndarray]]


def _cn2_function(source: Cn2Source) -> Callable:
    if isinstance(source, TurbulenceProfile):
        return source.cn2
    if callable(source):
        return source
    raise InputDomainError(f"expected a TurbulenceProfile or callable, got {type(source).__name__}")


def beam_radius(geom: LinkGeometry, z) -> np.ndarray | float:
    """Gaussian beam radius ``w0 sqrt(1 + (z/z_R)^2)`` at range ``z``."""
    z_arr = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z_arr)):
        raise InputDomainError("beam_radius: z must be finite")
    if np.any(z_arr < 0):
        raise InputDomainError("beam_radius: z must be >= 0")
    w = geom.w0 * np.sqrt(1.0 + (z_arr / geom.z_R) ** 2)
    return float(w) if w.ndim == 0 else w


def hv_cn2(h, profile: TurbulenceProfile, h_max: float | None = None):
    """Hufnagel-Valley refractive-index structure constant at altitude ``h`` (m).

    If ``h_max`` is given the profile is forced to zero above it.
    """
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0) or not np.all(np.isfinite(h_arr)):
        raise InputDomainError("hv_cn2: altitude must be finite and >= 0")
    shear = 0.00594 * (profile.v / 27.0) ** 2 * (1e-5 * h_arr) ** 10 * np.exp(-h_arr / 1000.0)
    out = shear + 2.7e-16 * np.exp(-h_arr / 1500.0) + profile.A * np.exp(-h_arr / 100.0)
    if h_max is not None:
        out = np.where(h_arr > h_max, 0.0, out)
    return float(out) if out.ndim == 0 else out


def _path_integral(geom: LinkGeometry, integrand: Callable[[float], float]) -> float:
    """Integrate ``integrand(xi)`` over the truncated slant path."""
    top = geom.path_top
    s = math.sin(geom.theta_el)
    points = sorted({h / s for h in _HV_BREAKS if 0.0 < h / s < top})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, err, info = integrate.quad(
            integrand, 0.0, top, points=points or None, epsabs=0.0, epsrel=QUAD_RTOL,
            limit=400, full_output=True,
        )[:3]
    if not math.isfinite(value) or (value != 0 and err > 1e3 * QUAD_RTOL * abs(value)):
        raise NumericalError("slant-path quadrature did not converge", err / abs(value) if value else err)
    return value


def cn2_path_integral(geom: LinkGeometry, cn2: Cn2Source) -> float:
    """``int_0^top C_n^2(h(xi)) dxi`` along the truncated slant path (m^1/3)."""
    f = _cn2_function(cn2)
    s = math.sin(geom.theta_el)
    return _path_integral(geom, lambda xi: float(f(xi * s)))


def path_avg_cn2(geom: LinkGeometry, cn2: Cn2Source) -> float:
    """Path-averaged C_n^2, ``(1/z) int_0^top C_n^2 dxi``.

    The normalisation uses the full distance ``z``, so a path that leaves the
    turbulent layer dilutes the average.
    """
    return cn2_path_integral(geom, cn2) / geom.z


def von_karman_psd(kappa_s, cn2: float, L0: float = 25.0, l0: float = 1e-3):
    """von Karman spectrum of refractive-index fluctuations."""
    kappa_s = np.asarray(kappa_s, dtype=float)
    if np.any(kappa_s < 0):
        raise InputDomainError("von_karman_psd: wavenumber must be >= 0")
    if not (L0 > 0 and l0 > 0):
        raise InputDomainError("von_karman_psd: scales must be positive")
    kappa0 = 2.0 * math.pi / L0
    kappa_m = 5.92 / l0
    out = 0.033 * cn2 * (kappa_s**2 + kappa0**2) ** (-11.0 / 6.0) * np.exp(-(kappa_s**2) / kappa_m**2)
    return float(out) if out.ndim == 0 else out


def _beam_factor(geom: LinkGeometry, xi: float, power: float) -> float:
    ratio2 = geom.w0**2 / float(beam_radius(geom, xi)) ** 2
    return (1.0 + ratio2) ** (-power)


def classify_regime(sigma_R2: float) -> Regime:
    """Weak below 1, medium on ``[1, 5)``, strong from 5 upwards."""
    if not (sigma_R2 >= 0) or math.isnan(sigma_R2):
        raise InputDomainError(f"sigma_R2 must be >= 0, got {sigma_R2!r}")
    if sigma_R2 < 1.0:
        return "weak"
    if sigma_R2 < 5.0:
        return "medium"
    return "strong"


def rytov_variance(geom: LinkGeometry, cn2: Cn2Source) -> RytovResult:
    """Beam-size corrected spherical-wave Rytov variance with link-direction weighting."""
    f = _cn2_function(cn2)
    s = math.sin(geom.theta_el)
    z = geom.z

    if geom.direction == "uplink":
        def weight(xi):
            return max(1.0 - xi / z, 0.0) ** (5.0 / 6.0)
    else:
        def weight(xi):
            u = xi / z
            return u ** (5.0 / 6.0) * max(1.0 - u, 0.0) ** (5.0 / 6.0)

    integral = _path_integral(
        geom, lambda xi: float(f(xi * s)) * weight(xi) * _beam_factor(geom, xi, 7.0 / 6.0)
    )
    sec_beta = 1.0 / math.cos(geom.zenith)
    sigma_R2 = 2.25 * geom.k ** (7.0 / 6.0) * sec_beta ** (11.0 / 6.0) * integral
    return RytovResult(sigma_R2=sigma_R2, regime=classify_regime(sigma_R2))


def phase_structure_integral(geom: LinkGeometry, cn2: Cn2Source) -> float:
    """Kernel-weighted C_n^2 integral used for coherence metrics."""
    f = _cn2_function(cn2)
    s = math.sin(geom.theta_el)
    z = geom.z
    if geom.direction == "uplink":
        def weight(xi):
            return (xi / z) ** (5.0 / 3.0)
    else:
        def weight(xi):
            return max(1.0 - xi / z, 0.0) ** (5.0 / 3.0)
    return _path_integral(
        geom, lambda xi: float(f(xi * s)) * weight(xi) * _beam_factor(geom, xi, 1.0)
    )


def fried_parameter(geom: LinkGeometry, cn2: Cn2Source, weighted: bool = False) -> float:
    """Fried coherence length r0 (m).

    ``weighted=False`` uses the plain path integral of C_n^2; ``weighted=True``
    uses :func:`phase_structure_integral`. Returns ``inf`` for a turbulence-free path.
    """
    if weighted:
        integral = phase_structure_integral(geom, cn2)
    else:
        integral = cn2_path_integral(geom, cn2)
    if integral <= 0.0:
        return math.inf
    return (0.423 * geom.k**2 * integral) ** (-3.0 / 5.0)


def drift_variance(geom: LinkGeometry, cn2_avg: float, L0: float = 25.0) -> float:
    """Beam-wander variance (m^2) at the receiver.

    The outer-scale bracket ``1 - 0.97 (L0/w_z)^(1/3)`` only applies when the
    beam is wider than ``L0``; for narrower beams the bracket is 1.
    """
    if cn2_avg < 0:
        raise InputDomainError(f"cn2_avg must be >= 0, got {cn2_avg!r}")
    w_z = float(beam_radius(geom, geom.z))
    bracket = 1.0 - 0.97 * (L0 / w_z) ** (1.0 / 3.0) if w_z > L0 else 1.0
    sec_beta = 1.0 / math.cos(geom.zenith)
    return max(0.73 * cn2_avg * geom.z**3 * w_z ** (-1.0 / 3.0) * bracket * sec_beta**2, 0.0)


def atmospheric_loss(theta_el: float, alpha_atm: float, H_atm: float = 20_000.0) -> float:
    """Beer-Lambert transmission through the layer; ``alpha_atm`` in km^-1, ``H_atm`` in m."""
    if not (0.0 < theta_el <= math.pi / 2 + 1e-15):
        raise InputDomainError(f"theta_el must lie in (0, pi/2], got {theta_el!r}")
    if alpha_atm < 0:
        raise InputDomainError("alpha_atm must be >= 0")
    exponent = alpha_atm * (H_atm / 1000.0) / math.sin(theta_el)
    if exponent > 745.0:
        return 0.0
    return math.exp(-exponent)
