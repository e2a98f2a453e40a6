"""Polarization part of the composite channel.

A local rotation at transverse radius ``r`` turns into a depolarizing-
dephasing map with parameters ``(lambda(r), rbar2(r))``. Those are averaged
over the Gaussian spot (radial weight ``W``) inside the aperture, then over a
Rayleigh-distributed beam drift, giving ``(lambda_eff, r2_eff)``.

Density matrices are 2x2 complex arrays in the {H, V} basis; a batch is an
array of shape ``(..., 2, 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import special

from ._quad import integrate_rows
from .atmosphere import Regime
from .errors import InputDomainError

PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
)
IDENTITY = np.eye(2, dtype=complex)

# Below this denominator the beam essentially misses the aperture.
NEGLIGIBLE_CAPTURE = 1e-12
# Rayleigh tail mass beyond 8 sigma is exp(-32) ~ 1.3e-14.
DRIFT_CUTOFF_SIGMAS = 8.0
MU_SERIES_BELOW = 0.05
QUAD_RTOL = 1e-8


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class PolState:
    """A validated single-qubit density matrix."""

    rho: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (2, 2):
            raise InputDomainError(f"density matrix must be 2x2, got shape {rho.shape}")
        if not np.allclose(rho, rho.conj().T, atol=1e-12):
            raise InputDomainError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-12:
            raise InputDomainError("density matrix does not have unit trace")
        if np.linalg.eigvalsh(rho).min() < -1e-12:
            raise InputDomainError("density matrix is not positive semidefinite")
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_bloch(cls, s) -> "PolState":
        s = np.asarray(s, dtype=float)
        return cls(0.5 * (IDENTITY + np.einsum("i,ijk->jk", s, PAULI)))

    @property
    def bloch(self) -> np.ndarray:
        return np.real(np.einsum("ijk,kj->i", PAULI, self.rho))


H_STATE = PolState(np.array([[1, 0], [0, 0]], dtype=complex))
V_STATE = PolState(np.array([[0, 0], [0, 1]], dtype=complex))
PLUS_STATE = PolState(np.full((2, 2), 0.5, dtype=complex))
PLUS_I_STATE = PolState(np.array([[0.5, -0.5j], [0.5j, 0.5]], dtype=complex))


@dataclass(frozen=True)
class AxisModel:
    kappa: float = 1.0

    def __post_init__(self):
        if not (self.kappa >= 0):
            raise InputDomainError(f"kappa must be >= 0, got {self.kappa!r}")


@dataclass(frozen=True)
class LocalPolParams:
    lambda_r: np.ndarray
    rbar2_r: np.ndarray


@dataclass(frozen=True)
class EffectivePolParams:
    lambda_eff: float
    r2_eff: float

    def __post_init__(self):
        for name in ("lambda_eff", "r2_eff"):
            v = getattr(self, name)
            if not (-1e-12 <= v <= 1 + 1e-12):
                raise InputDomainError(f"{name} must lie in [0, 1], got {v!r}")


@dataclass(frozen=True)
class AoProfile:
    """Adaptive-optics scalings: drift std, beam radius, phase-structure strength."""

    rho_trk: float = 1.0
    kappa_w: float = 1.0
    kappa_phi: float = 1.0
    name: str = "none"

    def __post_init__(self):
        for field_name in ("rho_trk", "kappa_w", "kappa_phi"):
            v = getattr(self, field_name)
            if not (0.0 < v <= 1.0):
                raise InputDomainError(f"{field_name} must lie in (0, 1], got {v!r}")


NO_AO = AoProfile()


@dataclass(frozen=True)
class PhaseInputs:
    """Everything the phase-structure function needs at one link configuration.

    ``scale`` multiplies the whole structure function (adaptive-optics
    compensation).
    """

    regime: Regime
    k: float
    z: float
    cn2_avg: float
    sigma_R2: float = 0.0
    r0: float = math.inf
    scale: float = 1.0

    @property
    def alpha_mix(self) -> float:
        """Weight of the Gaussian-angle component (1 in weak, 0 in strong)."""
        if self.regime == "weak":
            return 1.0
        if self.regime == "medium":
            return 1.0 - self.sigma_R2 / 5.0
        return 0.0

    def dphi(self, r):
        return self.scale * dphi(r, self.regime, self.k, self.z, self.cn2_avg, self.sigma_R2, self.r0)

    def with_scale(self, scale: float) -> "PhaseInputs":
        return replace(self, scale=scale)


# --------------------------------------------------------------------------
# local statistics


def mu_parallel(kappa):
    """Axial moment ``coth(k)/k - 1/k^2`` (series near 0, limit 1/3)."""
    kappa = np.asarray(kappa, dtype=float)
    if np.any(kappa < 0):
        raise InputDomainError("kappa must be >= 0")
    # the closed form loses ~eps/kappa^2 to cancellation, so use the series below 0.05
    small = kappa < MU_SERIES_BELOW
    safe = np.where(small, 1.0, kappa)
    exact = 1.0 / (safe * np.tanh(safe)) - 1.0 / safe**2
    k2 = kappa**2
    series = 1.0 / 3.0 + k2 * (-1.0 / 45.0 + k2 * (2.0 / 945.0 + k2 * (-1.0 / 4725.0 + k2 * 2.0 / 93555.0)))
    out = np.where(small, series, exact)
    return float(out) if out.ndim == 0 else out


def dphi(r, regime: Regime, k: float, z: float, cn2_avg: float, sigma_R2: float = 0.0, r0: float = math.inf):
    """Phase structure function (rad^2) at separation ``r``.

    Weak: Kolmogorov power law. Medium: a saturating Gaussian term blended
    with the power law by ``sigma_R2 / 5``. The strong regime has no
    structure function (the rotation angle is uniform).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise InputDomainError("dphi: r must be >= 0")
    power_law = 1.09 * k**2 * z * cn2_avg * r ** (5.0 / 3.0)
    if regime == "weak":
        out = power_law
    elif regime == "medium":
        if math.isinf(r0):
            saturating = np.zeros_like(r)
        else:
            saturating = -np.expm1(-(r**2) / r0**2)
        out = 2.22 * sigma_R2 * saturating * (1.0 - sigma_R2 / 5.0) + power_law * (sigma_R2 / 5.0)
    else:
        raise InputDomainError("dphi is undefined in the strong regime")
    return float(out) if out.ndim == 0 else out


def _weak_pair(d, mu):
    lam = -0.5 * np.expm1(-0.5 * d)
    rbar2 = np.clip(1.0 - lam * (3.0 * mu - 1.0) / 2.0, 0.0, 1.0)
    return lam, rbar2


def local_params(r, regime: Regime, kappa: float, phase: PhaseInputs) -> LocalPolParams:
    """Depolarization ``lambda(r)`` and decoherence ``rbar2(r)`` at radius ``r``."""
    r = np.asarray(r, dtype=float)
    if regime == "strong":
        return LocalPolParams(np.ones_like(r), np.zeros_like(r))
    mu = mu_parallel(kappa)
    d = phase.dphi(r)
    lam_w, rbar2_w = _weak_pair(d, mu)
    if regime == "weak":
        return LocalPolParams(lam_w, rbar2_w)
    alpha = 1.0 - phase.sigma_R2 / 5.0
    lam = 1.0 - alpha * (1.0 + np.exp(-0.5 * d)) / 2.0
    return LocalPolParams(lam, alpha * rbar2_w)


# --------------------------------------------------------------------------
# spatial averaging


def radial_weight(r, r_drift, w_z: float):
    """Radial density of the drifted Gaussian spot.

    Uses the exponentially scaled Bessel function, so large ``r * r_drift``
    never overflows.
    """
    r = np.asarray(r, dtype=float)
    r_drift = np.asarray(r_drift, dtype=float)
    if w_z <= 0:
        raise InputDomainError("w_z must be > 0")
    if np.any(r < 0) or np.any(r_drift < 0):
        raise InputDomainError("radii must be >= 0")
    w2 = w_z**2
    x = 4.0 * r * r_drift / w2
    out = (4.0 * r / w2) * np.exp(-2.0 * (r - r_drift) ** 2 / w2) * special.i0e(x)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ApertureAverage:
    lambda_a: np.ndarray
    r2_a: np.ndarray
    capture: np.ndarray
    negligible: np.ndarray


def aperture_average(r_drift, a: float, regime: Regime, kappa: float, phase: PhaseInputs, w_z: float) -> ApertureAverage:
    """W-weighted means of the local parameters over ``r in [0, a]``.

    Vectorised over ``r_drift``. Where the captured weight is below
    ``NEGLIGIBLE_CAPTURE`` the local values at ``r = a`` are returned and
    ``negligible`` is set.
    """
    if a <= 0:
        raise InputDomainError("aperture radius must be > 0")
    rd = np.atleast_1d(np.asarray(r_drift, dtype=float))
    scalar = np.ndim(r_drift) == 0

    if regime == "strong":
        cap = integrate_rows(lambda r: radial_weight(r[None, :], rd[:, None], w_z), 0.0, a, rtol=QUAD_RTOL, atol=1e-15)
        ones = np.ones_like(rd)
        res = ApertureAverage(ones, np.zeros_like(rd), cap, cap < NEGLIGIBLE_CAPTURE)
    else:
        def stacked(r):
            w = radial_weight(r[None, :], rd[:, None], w_z)
            loc = local_params(r, regime, kappa, phase)
            return np.stack([w, w * loc.lambda_r[None, :], w * loc.rbar2_r[None, :]])

        cap, num_l, num_r = integrate_rows(stacked, 0.0, a, rtol=QUAD_RTOL, atol=1e-15)
        negligible = cap < NEGLIGIBLE_CAPTURE
        edge = local_params(np.array(a), regime, kappa, phase)
        safe = np.where(negligible, 1.0, cap)
        lam = np.where(negligible, float(edge.lambda_r), num_l / safe)
        r2 = np.where(negligible, float(edge.rbar2_r), num_r / safe)
        res = ApertureAverage(np.clip(lam, 0.0, 1.0), np.clip(r2, 0.0, 1.0), cap, negligible)

    if scalar:
        return ApertureAverage(
            float(res.lambda_a[0]), float(res.r2_a[0]), float(res.capture[0]), bool(res.negligible[0])
        )
    return res


def rayleigh_average(values, sigma_drift2: float):
    """Average ``values(r_d) -> (..., n)`` over a Rayleigh law with per-axis variance ``sigma_drift2``."""
    if sigma_drift2 < 0:
        raise InputDomainError("sigma_drift2 must be >= 0")
    if sigma_drift2 == 0:
        return np.asarray(values(np.zeros(1)))[..., 0]
    sigma = math.sqrt(sigma_drift2)

    def integrand(rd):
        pdf = rd / sigma_drift2 * np.exp(-(rd**2) / (2.0 * sigma_drift2))
        return np.asarray(values(rd)) * pdf

    return integrate_rows(integrand, 0.0, DRIFT_CUTOFF_SIGMAS * sigma, rtol=QUAD_RTOL, atol=1e-15, panels=2)


def drift_average(a: float, sigma_drift2: float, regime: Regime, kappa: float, phase: PhaseInputs, w_z: float) -> EffectivePolParams:
    """Drift-averaged effective parameters ``(lambda_eff, r2_eff)``."""
    if regime == "strong":
        return EffectivePolParams(1.0, 0.0)

    def both(rd):
        av = aperture_average(rd, a, regime, kappa, phase, w_z)
        return np.stack([av.lambda_a, av.r2_a])

    lam, r2 = rayleigh_average(both, sigma_drift2)
    return EffectivePolParams(float(np.clip(lam, 0.0, 1.0)), float(np.clip(r2, 0.0, 1.0)))


# --------------------------------------------------------------------------
# acting on states


def apply_channel(rho, p: EffectivePolParams | tuple) -> np.ndarray:
    """Depolarizing-dephasing map; accepts a single matrix or a ``(..., 2, 2)`` batch."""
    if isinstance(p, EffectivePolParams):
        lam, r2 = p.lambda_eff, p.r2_eff
    else:
        lam, r2 = p
    rho = np.asarray(rho.rho if isinstance(rho, PolState) else rho, dtype=complex)
    out = (1.0 - lam) * rho.copy()
    out[..., 0, 1] *= r2
    out[..., 1, 0] *= r2
    out[..., 0, 0] += lam / 2.0
    out[..., 1, 1] += lam / 2.0
    return out


def su2_unitary(theta, axis) -> np.ndarray:
    """``cos(theta/2) I - i sin(theta/2) n.sigma`` for scalar or batched inputs."""
    theta = np.asarray(theta, dtype=float)
    axis = np.asarray(axis, dtype=float)
    norms = np.linalg.norm(axis, axis=-1)
    if np.any(np.abs(norms - 1.0) > 1e-12):
        raise InputDomainError("rotation axis must be a unit vector")
    n_sigma = np.einsum("...i,ijk->...jk", axis, PAULI)
    c = np.cos(theta / 2.0)[..., None, None]
    s = np.sin(theta / 2.0)[..., None, None]
    return c * IDENTITY - 1j * s * n_sigma


def su2_apply(rho, theta, axis) -> np.ndarray:
    """Conjugate ``rho`` by the SU(2) rotation of angle ``theta`` about ``axis``."""
    rho = np.asarray(rho.rho if isinstance(rho, PolState) else rho, dtype=complex)
    u = su2_unitary(theta, axis)
    return u @ rho @ np.conj(np.swapaxes(u, -1, -2))


def apply_ao(w_z: float, sigma_drift2: float, dphi_scale: float, ao: AoProfile):
    """Scale beam radius, drift variance and phase-structure strength by an AO profile.

    Returns ``(w_z, sigma_drift2, dphi_scale)``. The tracking factor scales the
    drift standard deviation, hence enters the variance squared.
    """
    return ao.kappa_w * w_z, ao.rho_trk**2 * sigma_drift2, ao.kappa_phi * dphi_scale
