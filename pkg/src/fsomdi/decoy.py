"""Three-intensity decoy-state estimation for MDI-QKD.

The channel enters through four numbers: the mean and joint second moment of
the arm transmissions, the BSM coefficient ``F(lambda_eff)`` and the
single-photon-pair error rates. Observed gains are Poisson mixtures of
photon-number yields; the estimators then bound the single-photon-pair yield
from below and its X-basis error from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import stats

from .detection import ScintillationShape, eta_moments
from .errors import InputDomainError
from .security import E_MAX, F_EC, binary_entropy

Basis = Literal["Z", "X"]

POISSON_TAIL = 1e-12


@dataclass(frozen=True)
class DecoySettings:
    mu: float = 0.5
    nu: float = 0.1
    p_mu: float = 0.80
    p_nu: float = 0.15
    p_0: float = 0.05
    p_Z: float = 0.90
    p_X: float = 0.10
    Y0: float = 1000.0 * 1e-9
    f: float = F_EC

    def __post_init__(self):
        if not (self.mu > self.nu > 0):
            raise InputDomainError(f"need mu > nu > 0, got mu={self.mu!r}, nu={self.nu!r}")
        if abs(self.p_mu + self.p_nu + self.p_0 - 1.0) > 1e-12:
            raise InputDomainError("intensity probabilities must sum to 1")
        if abs(self.p_Z + self.p_X - 1.0) > 1e-12:
            raise InputDomainError("basis probabilities must sum to 1")
        if not (0.0 <= self.Y0 < 1.0):
            raise InputDomainError("Y0 must lie in [0, 1)")
        if self.f < 1.0:
            raise InputDomainError("f must be >= 1")

    @property
    def intensities(self) -> dict[str, float]:
        return {"mu": self.mu, "nu": self.nu, "0": 0.0}


def bsm_coefficient(lambda_eff: float) -> float:
    """Polarization-dependent BSM success coefficient; 1/2 without depolarization."""
    if not (0.0 <= lambda_eff <= 1.0):
        raise InputDomainError("lambda_eff must lie in [0, 1]")
    return (2.0 - 2.0 * lambda_eff + lambda_eff**2) / 4.0


def single_pair_errors(lambda_eff: float, r2_eff: float) -> tuple[float, float]:
    """Single-photon-pair error rates ``(e11_Z, e11_X)`` for symmetric arms."""
    e_z = (2.0 * lambda_eff - lambda_eff**2) / 2.0
    e_x = (1.0 - (1.0 - lambda_eff) ** 2 * r2_eff**2) / 2.0
    return e_z, e_x


@dataclass(frozen=True)
class YieldModel:
    """Photon-number yields and error probabilities for symmetric arms.

    Only vacuum and single-photon yields follow directly from the channel; the
    multiphoton yields use a threshold-detector surrogate
    ``F c g_n g_m + Y0 (g_n + g_m)`` with ``g_n = 1 - (1 - <eta>)^n`` and
    ``c = <eta_A eta_B> / <eta>^2``, and inherit the single-pair error rates.
    """

    Y0: float
    F: float
    eta_mean: float
    eta_joint: float
    e11_Z: float = 0.0
    e11_X: float = 0.0

    @property
    def Y00(self) -> float:
        return self.Y0**2

    @property
    def Y10(self) -> float:
        return self.Y0 * self.eta_mean

    @property
    def Y11(self) -> float:
        return self.F * self.eta_joint

    def matrices(self, n_max: int, basis: Basis) -> tuple[np.ndarray, np.ndarray]:
        """``(Y_nm, e_nm)`` for ``0 <= n, m <= n_max``."""
        n = np.arange(n_max + 1)
        g = 1.0 - (1.0 - self.eta_mean) ** n
        corr = self.eta_joint / self.eta_mean**2 if self.eta_mean > 0 else 1.0
        y = self.F * corr * np.outer(g, g) + self.Y0 * (g[:, None] + g[None, :])
        y[0, :] = self.Y0 * g
        y[:, 0] = self.Y0 * g
        y[0, 0] = self.Y00
        y[1, 1] = self.Y11
        e = np.full_like(y, self.e11_Z if basis == "Z" else self.e11_X)
        e[0, :] = 0.5
        e[:, 0] = 0.5
        return np.clip(y, 0.0, 1.0), e


def elementary_yields(Y0: float, moments: tuple[float, float], F: float, shared: bool = True,
                      e11_Z: float = 0.0, e11_X: float = 0.0) -> YieldModel:
    """Build the yield model from transmission moments ``(<eta>, <eta^2>)``.

    With ``shared=True`` both arms see the same scintillation, so
    ``<eta_A eta_B> = <eta^2>``; otherwise ``<eta>^2``.
    """
    mean, second = moments
    if second < mean**2 - 1e-15:
        raise InputDomainError("second moment below squared mean")
    joint = second if shared else mean**2
    return YieldModel(Y0=Y0, F=F, eta_mean=mean, eta_joint=joint, e11_Z=e11_Z, e11_X=e11_X)


def poisson_cutoff(intensity: float, tail: float = POISSON_TAIL) -> int:
    """Smallest ``N`` with ``P(n > N) < tail`` for a Poisson law of the given mean."""
    n = 1
    while stats.poisson.sf(n, intensity) >= tail:
        n += 1
    return n


def observed_gains(x: float, y: float, yields: YieldModel, basis: Basis = "Z",
                   n_max: int | None = None) -> tuple[float, float]:
    """Gain ``Q_xy`` and error gain ``E_xy Q_xy`` for intensities ``x, y``."""
    if x < 0 or y < 0:
        raise InputDomainError("intensities must be >= 0")
    if n_max is None:
        n_max = max(poisson_cutoff(x), poisson_cutoff(y))
    ymat, emat = yields.matrices(n_max, basis)
    n = np.arange(n_max + 1)
    px = stats.poisson.pmf(n, x)
    py = stats.poisson.pmf(n, y)
    q = float(px @ ymat @ py)
    eq = float(px @ (emat * ymat) @ py)
    return q, eq


def st_transform(q: float, eq: float, x: float, y: float) -> tuple[float, float]:
    """``S = e^(x+y) Q`` and ``T = e^(x+y) E Q``."""
    if q < 0 or eq < 0:
        raise InputDomainError("gains must be >= 0")
    scale = math.exp(x + y)
    return scale * q, scale * eq


def _second_difference(s: dict, a: str) -> float:
    return s[(a, a)] - s[(a, "0")] - s[("0", a)] + s[("0", "0")]


def y11_lower(s: dict, mu: float, nu: float) -> float:
    """Lower bound on the single-photon-pair yield, clipped at zero.

    ``s`` maps intensity-label pairs (``"mu"``, ``"nu"``, ``"0"``) to ``S``
    values. The cubic weights cancel the three-photon terms exactly and leave
    only non-positive four-or-more-photon contributions.
    """
    if not (mu > nu > 0):
        raise InputDomainError("need mu > nu > 0")
    raw = (mu**3 * _second_difference(s, "nu") - nu**3 * _second_difference(s, "mu")) / (
        mu**2 * nu**2 * (mu - nu)
    )
    return max(raw, 0.0)


def e11x_upper(t: dict, nu: float, y11_l: float) -> tuple[float, bool]:
    """Upper bound on the single-pair X error; ``(0.5, True)`` when ``y11_l`` is zero."""
    if y11_l <= 0:
        return 0.5, True
    raw = _second_difference(t, "nu") / (nu**2 * y11_l)
    return min(max(raw, 0.0), 0.5), False


def decoy_skr(settings: DecoySettings, q_mumu: float, e_mumu: float, y11_l: float, e11_xu: float,
              E_max: float | None = E_MAX) -> float:
    """Asymptotic decoy-state key rate (bits/pulse), clamped at zero."""
    if E_max is not None and e_mumu > E_max:
        return 0.0
    p1 = settings.mu * math.exp(-settings.mu)
    privacy = p1**2 * y11_l * (1.0 - binary_entropy(e11_xu))
    leak = settings.f * q_mumu * binary_entropy(e_mumu)
    return max(settings.p_Z**2 * settings.p_mu**2 * (privacy - leak), 0.0)


@dataclass(frozen=True)
class DecoyOutput:
    Q: dict = field(repr=False)
    E: dict = field(repr=False)
    Y11_L: float = 0.0
    e11_XU: float = 0.5
    e11_flag: bool = False
    R_decoy: float = 0.0
    Y11_true: float = 0.0
    e11_true: float = 0.0


def estimate(settings: DecoySettings, yields: YieldModel, E_max: float | None = E_MAX) -> DecoyOutput:
    """Generate all gains from ``yields`` and run the estimators on them."""
    labels = settings.intensities
    q, err, s, t = {}, {}, {}, {}
    for basis in ("Z", "X"):
        s[basis], t[basis] = {}, {}
        for la, x in labels.items():
            for lb, y in labels.items():
                qq, eq = observed_gains(x, y, yields, basis)
                q[(basis, la, lb)] = qq
                err[(basis, la, lb)] = eq / qq if qq > 0 else 0.5
                s[basis][(la, lb)], t[basis][(la, lb)] = st_transform(qq, eq, x, y)
    y11_z = y11_lower(s["Z"], settings.mu, settings.nu)
    y11_x = y11_lower(s["X"], settings.mu, settings.nu)
    e11_xu, flag = e11x_upper(t["X"], settings.nu, y11_x)
    rate = decoy_skr(settings, q[("Z", "mu", "mu")], err[("Z", "mu", "mu")], y11_z, e11_xu, E_max)
    return DecoyOutput(q, err, y11_z, e11_xu, flag, rate, yields.Y11, yields.e11_X)


def evaluate_decoy(settings: DecoySettings, lambda_eff: float, r2_eff: float, eta_mean: float,
                   shape: ScintillationShape, shared: bool = True, E_max: float | None = E_MAX) -> DecoyOutput:
    """Decoy-state key rate for symmetric arms with mean transmission ``eta_mean``."""
    e11_z, e11_x = single_pair_errors(lambda_eff, r2_eff)
    yields = elementary_yields(
        settings.Y0, eta_moments(shape, eta_mean), bsm_coefficient(lambda_eff), shared, e11_z, e11_x
    )
    return estimate(settings, yields, E_max)
