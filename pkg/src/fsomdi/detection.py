"""Detection probability: aperture capture, scintillation and the loss budget."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import integrate, special

from ._quad import integrate_rows
from .errors import InputDomainError, NumericalError
from .polchannel import PolState, radial_weight, rayleigh_average

ETA_DET = 0.75
L_OPT = 10 ** (-2.0 / 10.0)


@dataclass(frozen=True)
class ScintillationShape:
    """Gamma-Gamma shape parameters. ``alpha_gg = beta_gg = inf`` means no scintillation."""

    alpha_gg: float
    beta_gg: float
    d: float = 0.0

    def __post_init__(self):
        if not (self.alpha_gg > 0 and self.beta_gg > 0):
            raise InputDomainError("Gamma-Gamma shape parameters must be > 0")

    @property
    def deterministic(self) -> bool:
        return math.isinf(self.alpha_gg) or math.isinf(self.beta_gg)

    @property
    def second_moment(self) -> float:
        """``E[I0^2] = (1 + 1/alpha)(1 + 1/beta)`` for the unit-mean law."""
        return (1.0 + 1.0 / self.alpha_gg) * (1.0 + 1.0 / self.beta_gg)

    @property
    def scintillation_index(self) -> float:
        return self.second_moment - 1.0


NO_SCINTILLATION = ScintillationShape(math.inf, math.inf)


@dataclass(frozen=True)
class DetectionBudget:
    eta_eff: float
    L_atm: float
    eta_det: float
    L_opt: float
    eta_total: float
    eta_mean: float
    eta_second_moment: float


def gg_shape(sigma_R2: float, a: float, z: float, wavelength: float) -> ScintillationShape:
    """Aperture-averaged Gamma-Gamma shape parameters from the Rytov variance."""
    if sigma_R2 < 0:
        raise InputDomainError("sigma_R2 must be >= 0")
    if a <= 0 or z <= 0 or wavelength <= 0:
        raise InputDomainError("a, z and wavelength must be > 0")
    k = 2.0 * math.pi / wavelength
    d2 = k * a**2 / z
    if sigma_R2 == 0:
        return ScintillationShape(math.inf, math.inf, math.sqrt(d2))
    s125 = sigma_R2 ** (12.0 / 5.0)
    x_alpha = 0.49 * sigma_R2 / (1.0 + 0.18 * d2 + 0.56 * s125) ** (7.0 / 6.0)
    x_beta = 0.51 * sigma_R2 * (1.0 + 0.69 * s125) ** (-5.0 / 6.0) / (1.0 + 0.9 * d2 + 0.62 * d2 * s125)
    alpha = 1.0 / math.expm1(x_alpha) if x_alpha > 0 else math.inf
    beta = 1.0 / math.expm1(x_beta) if x_beta > 0 else math.inf
    return ScintillationShape(alpha, beta, math.sqrt(d2))


def _log_besselk(nu: float, x: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        out = np.log(special.kve(nu, x)) - x
    bad = ~np.isfinite(out)
    if np.any(bad):
        out = out.copy()
        out[bad] = [float(mpmath.log(mpmath.besselk(nu, xi))) for xi in x[bad]]
    return out


def gg_logpdf(I0, shape: ScintillationShape):
    I0 = np.asarray(I0, dtype=float)
    if shape.deterministic:
        raise InputDomainError("no density without scintillation (the law is a point mass at 1)")
    if np.any(I0 <= 0):
        raise InputDomainError("gg_pdf: I0 must be > 0")
    al, be = shape.alpha_gg, shape.beta_gg
    half = 0.5 * (al + be)
    x = 2.0 * np.sqrt(al * be * np.atleast_1d(I0))
    out = (
        math.log(2.0) + half * math.log(al * be) - special.gammaln(al) - special.gammaln(be)
        + (half - 1.0) * np.log(np.atleast_1d(I0)) + _log_besselk(al - be, x)
    )
    return float(out[0]) if I0.ndim == 0 else out


def gg_pdf(I0, shape: ScintillationShape):
    """Unit-mean Gamma-Gamma density, evaluated in log space."""
    return np.exp(gg_logpdf(I0, shape))


def _gg_upper(shape: ScintillationShape) -> float:
    # I0 = X Y with Gamma factors of rates alpha, beta; the tail past this is < 1e-10.
    m = min(shape.alpha_gg, shape.beta_gg)
    sd = math.sqrt(shape.scintillation_index)
    return max(10.0, (35.0 / m) ** 2, 1.0 + 40.0 * sd)


def gg_numeric_moment(shape: ScintillationShape, order: int) -> float:
    """``E[I0^order]`` by quadrature of the density (cross-check of the analytic moments)."""
    if shape.deterministic:
        return 1.0
    upper = _gg_upper(shape)
    points = [p for p in (0.05, 0.25, 0.5, 1.0, 2.0, 4.0, 10.0, 30.0) if p < upper]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(
            lambda i: i**order * float(gg_pdf(i, shape)), 0.0, upper, points=points,
            epsabs=1e-13, epsrel=1e-11, limit=500,
        )
    if err > 1e-8:
        raise NumericalError("Gamma-Gamma moment quadrature", err)
    return val


def eta_moments(shape: ScintillationShape, eta_mean: float) -> tuple[float, float]:
    """First two moments of ``eta_mean * I0``."""
    if not (0.0 <= eta_mean <= 1.0):
        raise InputDomainError("eta_mean must lie in [0, 1]")
    if shape.deterministic:
        return eta_mean, eta_mean**2
    return eta_mean, eta_mean**2 * shape.second_moment


def capture_fraction(r_drift, a: float, w_z: float):
    """Fraction of the drifted spot falling inside radius ``a``."""
    if a <= 0 or w_z <= 0:
        raise InputDomainError("a and w_z must be > 0")
    rd = np.atleast_1d(np.asarray(r_drift, dtype=float))
    cap = integrate_rows(lambda r: radial_weight(r[None, :], rd[:, None], w_z), 0.0, a, rtol=1e-10, atol=1e-15)
    cap = np.clip(cap, 0.0, 1.0)
    return float(cap[0]) if np.ndim(r_drift) == 0 else cap


def eta_eff(sigma_drift2: float, a: float, w_z: float, shape: ScintillationShape | None = None,
            numeric_scintillation: bool = False) -> float:
    """Mean collection efficiency: scintillation mean times drift-averaged capture.

    The scintillation mean is 1 analytically; ``numeric_scintillation=True``
    integrates the Gamma-Gamma density instead.
    """
    geometric = float(rayleigh_average(lambda rd: capture_fraction(rd, a, w_z), sigma_drift2))
    mean_i0 = 1.0
    if numeric_scintillation and shape is not None:
        mean_i0 = gg_numeric_moment(shape, 1)
    return float(np.clip(mean_i0 * geometric, 0.0, 1.0))


def eta_eff_small_drift(sigma_drift2: float, a: float, w_z: float) -> float:
    """Indicator-based small-drift approximation: centred capture times ``P(r_drift < a)``."""
    centred = -math.expm1(-2.0 * a**2 / w_z**2)
    if sigma_drift2 == 0:
        return centred
    return centred * -math.expm1(-(a**2) / (2.0 * sigma_drift2))


def eta_total(eta_eff: float, L_atm: float, eta_det: float = ETA_DET, L_opt: float = L_OPT) -> float:
    """End-to-end detection probability."""
    for name, v in (("eta_eff", eta_eff), ("L_atm", L_atm), ("eta_det", eta_det), ("L_opt", L_opt)):
        if not (0.0 <= v <= 1.0):
            raise InputDomainError(f"{name} must lie in [0, 1], got {v!r}")
    return L_atm * eta_eff * eta_det * L_opt


@dataclass(frozen=True)
class LossExtendedState:
    """``eta * rho (+) (1 - eta) |e><e|`` on the polarization-plus-vacuum space."""

    eta: float
    rho: np.ndarray

    @property
    def weights(self) -> tuple[float, float]:
        return self.eta, 1.0 - self.eta

    def matrix(self) -> np.ndarray:
        """3x3 block matrix, basis ordering (H, V, vacuum)."""
        out = np.zeros((3, 3), dtype=complex)
        out[:2, :2] = self.eta * self.rho
        out[2, 2] = 1.0 - self.eta
        return out


def embed_loss_state(rho_prime, eta: float) -> LossExtendedState:
    if not (0.0 <= eta <= 1.0):
        raise InputDomainError("eta must lie in [0, 1]")
    rho = rho_prime.rho if isinstance(rho_prime, PolState) else PolState(rho_prime).rho
    return LossExtendedState(float(eta), rho)
