"""Brute-force Monte Carlo reference for the composite channel.

Each sample draws a beam drift, a landing point inside the Gaussian spot, a
scintillation weight, a rotation axis and a rotation angle, then conjugates
four probe states (|H>, |V>, |+>, |+i>) by the explicit SU(2) matrix. Only
samples landing inside the aperture are detected. The mean output states are
fitted to the depolarizing-dephasing family:

    z-shrink  = 1 - lambda          (from |H>, |V>)
    xy-shrink = (1 - lambda) r^2    (from |+>, |+i>)

Samples are generated in fixed-size chunks, each with its own child of one
``SeedSequence``; chunk sums are reduced in chunk order, so a run is
bit-reproducible no matter how many workers evaluate the chunks.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .channel import ChannelSetup, effective_eta, effective_polarization
from .polchannel import (
    H_STATE, PLUS_I_STATE, PLUS_STATE, V_STATE, mu_parallel, radial_weight, rayleigh_average, su2_apply,
)
from ._quad import integrate_rows
from .atmosphere import Regime
from .errors import InputDomainError

CHUNK = 1 << 16
SIGMA_LEVEL = 3.0
ABS_FLOOR = 5e-3

_PROBES = np.stack([H_STATE.rho, V_STATE.rho, PLUS_STATE.rho, PLUS_I_STATE.rho])


# --------------------------------------------------------------------------
# samplers


def sample_watson_axis(kappa: float, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Unit axes with polar density proportional to ``exp(kappa cos t) sin t`` about +z."""
    if kappa < 0:
        raise InputDomainError("kappa must be >= 0")
    n = 1 if size is None else size
    u = rng.random(n)
    phi = 2.0 * math.pi * rng.random(n)
    if kappa < 1e-12:
        cos_t = 2.0 * u - 1.0
    else:
        # inverse CDF: 1 + ln(u + (1-u) e^{-2k}) / k, written to stay accurate for small k
        cos_t = 1.0 + np.log1p((1.0 - u) * np.expm1(-2.0 * kappa)) / kappa
    cos_t = np.clip(cos_t, -1.0, 1.0)
    sin_t = np.sqrt(1.0 - cos_t**2)
    axes = np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=-1)
    return axes[0] if size is None else axes


def sample_angle(regime: Regime, D_phi, alpha_mix: float, rng: np.random.Generator, size: int | None = None):
    """Rotation angle: Gaussian with variance ``D_phi`` (weak), a mixture
    with a flat law on ``[0, 2pi)`` (medium, Gaussian weight ``alpha_mix``), or flat (strong)."""
    n = 1 if size is None else size
    d = np.broadcast_to(np.asarray(D_phi, dtype=float), (n,))
    if np.any(d < 0):
        raise InputDomainError("D_phi must be >= 0")
    gauss = np.sqrt(d) * rng.standard_normal(n)
    flat = 2.0 * math.pi * rng.random(n)
    if regime == "weak":
        out = gauss
    elif regime == "medium":
        out = np.where(rng.random(n) < alpha_mix, gauss, flat)
    else:
        out = flat
    return float(out[0]) if size is None else out


def sample_haar_rotation(rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """Angle and axis of a Haar-random SU(2) element.

    The axis is isotropic and the angle has density ``(1 - cos t) / (2 pi)``
    on ``[0, 2pi)``; averaging over it maps every state to I/2.
    """
    axes = sample_watson_axis(0.0, rng, size)
    # Haar SU(2) = uniform unit quaternion; the angle is 2 arccos(q0)
    q = rng.standard_normal((size, 4))
    q0 = np.abs(q[:, 0]) / np.linalg.norm(q, axis=1)
    theta = 2.0 * np.arccos(np.clip(q0, 0.0, 1.0))
    return theta, axes


def sample_gamma_gamma(alpha: float, beta: float, rng: np.random.Generator, size: int) -> np.ndarray:
    """Unit-mean Gamma-Gamma intensities as the product of two unit-mean Gamma variates."""
    if math.isinf(alpha) or math.isinf(beta):
        return np.ones(size)
    return rng.gamma(alpha, 1.0 / alpha, size) * rng.gamma(beta, 1.0 / beta, size)


# --------------------------------------------------------------------------
# the estimator


@dataclass(frozen=True)
class McConfig:
    n_samples: int
    seed: int
    setup: ChannelSetup
    scintillation: bool = False

    def __post_init__(self):
        if self.n_samples < 1:
            raise InputDomainError("n_samples must be >= 1")


@dataclass(frozen=True)
class McEstimate:
    lambda_hat: float
    r2_hat: float
    eta_hat: float
    lambda_stderr: float
    r2_stderr: float
    eta_stderr: float
    n_samples: int
    n_detected: int
    seed: int
    state_error: float
    undefined: bool = False


# sums collected per chunk, in this order
_FIELDS = ("n", "det", "w", "w2", "wa", "wb", "w2a", "w2b", "w2aa", "w2bb", "w2ab", "eta", "eta2")


def _chunk_sums(args) -> tuple[np.ndarray, float]:
    setup, m, seed_seq, scint = args
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    sigma = math.sqrt(setup.sigma_drift2)
    drift = sigma * rng.standard_normal((m, 2))
    # Landing point: per-axis std w_z/2 reproduces the radial weight W exactly.
    spot = drift + 0.5 * setup.w_z * rng.standard_normal((m, 2))
    r = np.hypot(spot[:, 0], spot[:, 1])
    hit = r <= setup.a
    i0 = sample_gamma_gamma(setup.shape.alpha_gg, setup.shape.beta_gg, rng, m) if scint else np.ones(m)

    r_det = r[hit]
    k = r_det.size
    theta = np.zeros(k)
    axes = np.zeros((k, 3))
    axes[:, 2] = 1.0
    if k:
        gaussian = np.ones(k, dtype=bool)
        if setup.regime != "weak":
            gaussian = rng.random(k) < setup.phase.alpha_mix
        ng = int(gaussian.sum())
        if ng:
            d = setup.phase.dphi(r_det[gaussian])
            theta[gaussian] = np.sqrt(d) * rng.standard_normal(ng)
            axes[gaussian] = sample_watson_axis(setup.kappa, rng, ng)
        if k - ng:
            theta[~gaussian], axes[~gaussian] = sample_haar_rotation(rng, k - ng)

    out = su2_apply(_PROBES[None, :, :, :], theta[:, None], axes[:, None, :])  # (k, 4, 2, 2)
    herm = np.abs(out - np.conj(np.swapaxes(out, -1, -2))).max(initial=0.0)
    tr = np.abs(np.trace(out, axis1=-2, axis2=-1) - 1.0).max(initial=0.0)
    mean_diag = 0.5 * (out[..., 0, 0].real + out[..., 1, 1].real)
    radius = np.sqrt((0.5 * (out[..., 0, 0].real - out[..., 1, 1].real)) ** 2 + np.abs(out[..., 0, 1]) ** 2)
    neg = np.maximum(-(mean_diag - radius), 0.0).max(initial=0.0)

    # Bloch components: z of H/V outputs, x of |+> output, y of |+i> output
    z_h = (out[:, 0, 0, 0] - out[:, 0, 1, 1]).real
    z_v = (out[:, 1, 0, 0] - out[:, 1, 1, 1]).real
    x_p = 2.0 * out[:, 2, 0, 1].real
    y_pi = -2.0 * out[:, 3, 0, 1].imag
    a_s = 0.5 * (z_h - z_v)
    b_s = 0.5 * (x_p + y_pi)

    w = i0[hit]
    w2 = w * w
    eta_s = np.where(hit, i0, 0.0)
    sums = np.array([
        m, k, w.sum(), w2.sum(), (w * a_s).sum(), (w * b_s).sum(), (w2 * a_s).sum(), (w2 * b_s).sum(),
        (w2 * a_s * a_s).sum(), (w2 * b_s * b_s).sum(), (w2 * a_s * b_s).sum(), eta_s.sum(), (eta_s**2).sum(),
    ])
    return sums, float(max(herm, tr, neg))


def mc_channel_estimate(mc: McConfig, workers: int = 1) -> McEstimate:
    """Monte Carlo estimate of ``(lambda, r^2, eta)`` with standard errors."""
    n_chunks = -(-mc.n_samples // CHUNK)
    children = np.random.SeedSequence(mc.seed).spawn(n_chunks)
    sizes = [CHUNK] * (n_chunks - 1) + [mc.n_samples - CHUNK * (n_chunks - 1)]
    jobs = [(mc.setup, m, child, mc.scintillation) for m, child in zip(sizes, children)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_chunk_sums, jobs))
    else:
        results = [_chunk_sums(j) for j in jobs]

    total = np.zeros(len(_FIELDS))
    state_error = 0.0
    for sums, err in results:  # fixed reduction order
        total += sums
        state_error = max(state_error, err)
    s = dict(zip(_FIELDS, total))

    n = s["n"]
    eta_hat = float(s["eta"] / n)
    eta_var = max(s["eta2"] / n - eta_hat**2, 0.0)
    eta_se = math.sqrt(eta_var / n) if n > 1 else 0.0
    if s["det"] == 0 or s["w"] <= 0:
        return McEstimate(math.nan, math.nan, eta_hat, math.nan, math.nan, eta_se, mc.n_samples, 0, mc.seed,
                          state_error, undefined=True)

    sw = s["w"]
    t_z = s["wa"] / sw
    t_xy = s["wb"] / sw
    var_a = (s["w2aa"] - 2 * t_z * s["w2a"] + t_z**2 * s["w2"]) / sw**2
    var_b = (s["w2bb"] - 2 * t_xy * s["w2b"] + t_xy**2 * s["w2"]) / sw**2
    cov = (s["w2ab"] - t_z * s["w2b"] - t_xy * s["w2a"] + t_z * t_xy * s["w2"]) / sw**2
    lam = 1.0 - t_z
    if t_z > 0:
        r2 = t_xy / t_z
        r2_var = (var_b + r2**2 * var_a - 2 * r2 * cov) / t_z**2
    else:
        r2, r2_var = 0.0, 0.0
    return McEstimate(
        lambda_hat=float(np.clip(lam, 0.0, 1.0)), r2_hat=float(np.clip(r2, 0.0, 1.0)), eta_hat=eta_hat,
        lambda_stderr=math.sqrt(max(var_a, 0.0)), r2_stderr=math.sqrt(max(r2_var, 0.0)), eta_stderr=eta_se,
        n_samples=mc.n_samples, n_detected=int(s["det"]), seed=mc.seed, state_error=state_error,
    )


# --------------------------------------------------------------------------
# exact-rotation quadrature (independent of sampling)


def watson_second_moments(kappa: float) -> tuple[float, float]:
    """``(<n_z^2>, <n_x^2>)`` for axes drawn by :func:`sample_watson_axis`."""
    m_xx = float(mu_parallel(kappa))
    return 1.0 - 2.0 * m_xx, m_xx


def rotation_exact_params(setup: ChannelSetup) -> tuple[float, float]:
    """Detection-conditioned ``(lambda, r^2)`` of the sampled rotation model by quadrature.

    A rotation by ``theta`` about ``n`` shrinks Bloch component ``i`` by
    ``1 - 2 sin^2(theta/2) (1 - <n_i^2>)`` on average (odd terms vanish because
    the angle law is symmetric). The Haar part maps to I/2.
    """
    m_zz, m_xx = watson_second_moments(setup.kappa)
    alpha = setup.phase.alpha_mix

    def shrinks(r):
        if alpha == 0.0:
            zero = np.zeros_like(r)
            return zero, zero
        s = -0.5 * np.expm1(-0.5 * setup.phase.dphi(r))
        return alpha * (1.0 - 2.0 * s * (1.0 - m_zz)), alpha * (1.0 - 2.0 * s * (1.0 - m_xx))

    def per_drift(rd):
        def stacked(r):
            w = radial_weight(r[None, :], rd[:, None], setup.w_z)
            tz, txy = shrinks(r)
            return np.stack([w, w * tz[None, :], w * txy[None, :]])
        return integrate_rows(stacked, 0.0, setup.a, rtol=1e-9, atol=1e-15)

    cap, num_z, num_xy = rayleigh_average(per_drift, setup.sigma_drift2)
    t_z = num_z / cap
    t_xy = num_xy / cap
    return float(1.0 - t_z), float(t_xy / t_z) if t_z > 0 else 0.0


# --------------------------------------------------------------------------
# comparison


@dataclass(frozen=True)
class CompareEntry:
    quantity: str
    closed: float
    mc: float
    stderr: float
    z: float
    tolerance: float
    passed: bool


def compare_report(closed: dict, mc: McEstimate, sigma_level: float = SIGMA_LEVEL,
                   floor: float = ABS_FLOOR) -> dict:
    """Per-quantity z-scores; pass when ``|diff| <= max(sigma_level * stderr, floor)``.

    ``closed`` maps any of ``lambda``, ``r2``, ``eta`` to closed-form values.
    """
    pairs = {"lambda": (mc.lambda_hat, mc.lambda_stderr), "r2": (mc.r2_hat, mc.r2_stderr),
             "eta": (mc.eta_hat, mc.eta_stderr)}
    entries = []
    for name, value in closed.items():
        est, se = pairs[name]
        diff = abs(value - est)
        if math.isnan(est):
            entries.append(CompareEntry(name, value, est, se, math.nan, floor, False))
            continue
        z = diff / se if se > 0 else (0.0 if diff == 0 else math.inf)
        tol = max(sigma_level * se, floor)
        entries.append(CompareEntry(name, value, est, se, z, tol, diff <= tol))
    return {
        "passed": all(e.passed for e in entries),
        "failures": [e.quantity for e in entries if not e.passed],
        "entries": [asdict(e) for e in entries],
        "n_samples": mc.n_samples,
        "seed": mc.seed,
    }


def validate_setup(setup: ChannelSetup, n_samples: int, seed: int, workers: int = 1,
                   closed_override: dict | None = None) -> tuple[dict, McEstimate]:
    """Closed forms versus Monte Carlo for one resolved channel."""
    pol = effective_polarization(setup)
    closed = {"lambda": pol.lambda_eff, "r2": pol.r2_eff, "eta": effective_eta(setup)}
    if closed_override:
        closed.update(closed_override)
    est = mc_channel_estimate(McConfig(n_samples, seed, setup), workers=workers)
    return compare_report(closed, est), est


__all__ = [
    "sample_watson_axis", "sample_angle", "sample_haar_rotation", "sample_gamma_gamma", "McConfig",
    "McEstimate", "mc_channel_estimate", "watson_second_moments", "rotation_exact_params",
    "compare_report", "validate_setup",
]
