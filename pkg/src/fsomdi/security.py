"""Closed-form MDI-QKD gains, error rates and secret key rate."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputDomainError

F_EC = 1.1
E_MAX = 0.15


def binary_entropy(x):
    """``H(x) = -x log2 x - (1-x) log2 (1-x)`` with ``H(0) = H(1) = 0``."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0) or np.any(x_arr > 1) or np.any(np.isnan(x_arr)):
        raise InputDomainError("binary_entropy: argument must lie in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -x_arr * np.log2(x_arr) - (1.0 - x_arr) * np.log2(1.0 - x_arr)
    h = np.where((x_arr == 0) | (x_arr == 1), 0.0, h)
    return float(h) if h.ndim == 0 else h


def hom_visibility(sigma_drift2_A: float, sigma_drift2_B: float, w_z: float) -> float:
    """Mean spatial-mode overlap of the two beams at the relay.

    The arms drift independently, so the relative displacement has variance
    ``sigma_A^2 + sigma_B^2``.
    """
    if sigma_drift2_A < 0 or sigma_drift2_B < 0:
        raise InputDomainError("drift variances must be >= 0")
    if w_z <= 0:
        raise InputDomainError("w_z must be > 0")
    return 1.0 / (1.0 + 2.0 * (sigma_drift2_A + sigma_drift2_B) / w_z**2)


@dataclass(frozen=True)
class SecurityInput:
    lambda_A: float
    lambda_B: float
    rbar2: float
    eta_total_A: float
    eta_total_B: float
    f: float = F_EC
    E_max: float = E_MAX
    M_spatial: float = 1.0

    def __post_init__(self):
        for name in ("lambda_A", "lambda_B", "rbar2", "eta_total_A", "eta_total_B", "M_spatial"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise InputDomainError(f"{name} must lie in [0, 1], got {v!r}")
        if not (self.f >= 1.0):
            raise InputDomainError(f"f must be >= 1, got {self.f!r}")
        if not (0.0 < self.E_max < 1.0):
            raise InputDomainError(f"E_max must lie in (0, 1), got {self.E_max!r}")


@dataclass(frozen=True)
class SecurityOutput:
    Q_Z: float
    Q_Z11: float
    E_Z: float
    e_X11: float
    R: float


def zx_statistics(inp: SecurityInput) -> tuple[float, float, float, float]:
    """``(Q_Z, Q_Z11, E_Z, e_X11)``; the X-basis error carries the HOM visibility."""
    la, lb = inp.lambda_A, inp.lambda_B
    eta2 = inp.eta_total_A * inp.eta_total_B
    q_z = 0.5 * eta2
    q_z11 = (2.0 - la - lb + la * lb) * eta2
    e_z = (la + lb - la * lb) / 2.0
    e_x11 = (1.0 - (1.0 - la) * (1.0 - lb) * (inp.M_spatial * inp.rbar2) ** 2) / 2.0
    return q_z, q_z11, e_z, e_x11


def skr(inp: SecurityInput) -> float:
    """Secret key rate (bits/pulse), zero above the QBER cutoff and never negative."""
    q_z, q_z11, e_z, e_x11 = zx_statistics(inp)
    if e_z > inp.E_max:
        return 0.0
    rate = q_z11 * (1.0 - binary_entropy(e_x11)) - q_z * inp.f * binary_entropy(e_z)
    return max(rate, 0.0)


def evaluate(inp: SecurityInput) -> SecurityOutput:
    q_z, q_z11, e_z, e_x11 = zx_statistics(inp)
    return SecurityOutput(q_z, q_z11, e_z, e_x11, skr(inp))


def symmetric_input(lambda_eff: float, r2_eff: float, eta_total: float, **kwargs) -> SecurityInput:
    """Both arms see the same channel (symmetric uplinks to a common relay)."""
    return SecurityInput(lambda_eff, lambda_eff, r2_eff, eta_total, eta_total, **kwargs)


def loss_only_rate(eta_total: float, f: float = F_EC) -> float:
    """Key rate of a turbulence-free channel with the same transmission."""
    return skr(SecurityInput(0.0, 0.0, 1.0, eta_total, eta_total, f=f))

