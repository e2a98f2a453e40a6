import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from fsomdi.decoy import (
    DecoySettings, YieldModel, bsm_coefficient, decoy_skr, e11x_upper, elementary_yields, estimate,
    evaluate_decoy, observed_gains, poisson_cutoff, single_pair_errors, st_transform, y11_lower,
)
from fsomdi.detection import NO_SCINTILLATION, ScintillationShape
from fsomdi.errors import InputDomainError
from fsomdi.security import binary_entropy

LABELS = ("mu", "nu", "0")


def test_settings_validation():
    with pytest.raises(InputDomainError):
        DecoySettings(mu=0.1, nu=0.5)
    with pytest.raises(InputDomainError):
        DecoySettings(p_mu=0.9)
    with pytest.raises(InputDomainError):
        DecoySettings(p_Z=0.5)
    assert DecoySettings().Y0 == pytest.approx(1e-6)


def test_bsm_coefficient():
    assert bsm_coefficient(0.0) == 0.5
    assert bsm_coefficient(1.0) == 0.25
    assert bsm_coefficient(0.2) == pytest.approx(0.41)


def test_elementary_yields():
    y = elementary_yields(0.0, (0.0, 0.0), 0.5)
    assert y.Y00 == y.Y10 == y.Y11 == 0.0
    assert elementary_yields(1e-6, (0.1, 0.01), 0.5).Y00 == pytest.approx(1e-12)
    assert elementary_yields(0.0, (0.1, 0.01), 0.5).Y11 == pytest.approx(0.005)
    indep = elementary_yields(0.0, (0.1, 0.02), 0.5, shared=False)
    assert indep.Y11 == pytest.approx(0.005)
    with pytest.raises(InputDomainError):
        elementary_yields(0.0, (0.1, 0.001), 0.5)


def test_yield_matrix_low_orders_as_printed():
    y = YieldModel(Y0=1e-6, F=0.45, eta_mean=0.3, eta_joint=0.1, e11_Z=0.05, e11_X=0.07)
    ymat, emat = y.matrices(6, "X")
    assert ymat[0, 0] == y.Y00 and ymat[1, 1] == y.Y11
    assert ymat[1, 0] == pytest.approx(y.Y10, rel=1e-14) and ymat[0, 1] == pytest.approx(y.Y10, rel=1e-14)
    assert emat[0, 3] == 0.5 and emat[2, 0] == 0.5 and emat[1, 1] == 0.07
    assert np.all((ymat >= 0) & (ymat <= 1))


def test_observed_gains_trivial_cases():
    y = YieldModel(Y0=1e-6, F=0.5, eta_mean=0.3, eta_joint=0.09)
    q, eq = observed_gains(0.0, 0.0, y)
    assert q == pytest.approx(y.Y00) and eq == pytest.approx(0.5 * y.Y00)
    zero = YieldModel(Y0=0.0, F=0.5, eta_mean=0.0, eta_joint=0.0)
    assert observed_gains(0.5, 0.1, zero) == (0.0, 0.0)


def test_observed_gains_matches_explicit_poisson_sum():
    y = YieldModel(Y0=1e-6, F=0.45, eta_mean=0.3, eta_joint=0.1, e11_Z=0.05)
    ymat, emat = y.matrices(40, "Z")
    px, py = stats.poisson.pmf(np.arange(41), 0.5), stats.poisson.pmf(np.arange(41), 0.1)
    q, eq = observed_gains(0.5, 0.1, y)
    assert q == pytest.approx(px @ ymat @ py, rel=1e-11)
    assert eq == pytest.approx(px @ (emat * ymat) @ py, rel=1e-11)


def test_poisson_cutoff():
    n = poisson_cutoff(0.5)
    assert stats.poisson.sf(n, 0.5) < 1e-12 <= stats.poisson.sf(n - 1, 0.5)
    assert n <= 12


def test_st_transform():
    assert st_transform(3e-4, 1e-5, 0.0, 0.0) == (3e-4, 1e-5)
    assert st_transform(0.0, 0.0, 0.5, 0.1) == (0.0, 0.0)
    assert st_transform(1e-4, 0.0, 0.5, 0.1)[0] == pytest.approx(1.8221e-4, rel=1e-4)


def test_y11_lower_degenerate_and_clipped():
    flat = {(a, b): 0.3 for a in LABELS for b in LABELS}
    assert y11_lower(flat, 0.5, 0.1) == 0.0
    neg = dict(flat)
    neg[("nu", "nu")] = 0.0
    assert y11_lower(neg, 0.5, 0.1) == 0.0


def test_y11_lower_exact_on_bilinear_yields():
    # with no yields beyond one photon per side the bound is exact
    y11 = 0.07
    s = {}
    for a, x in zip(LABELS, (0.5, 0.1, 0.0)):
        for b, yv in zip(LABELS, (0.5, 0.1, 0.0)):
            s[(a, b)] = 1e-6 + 0.01 * (x + yv) + y11 * x * yv
    assert y11_lower(s, 0.5, 0.1) == pytest.approx(y11, rel=1e-10)


def test_e11x_upper():
    zero = {(a, b): 0.0 for a in LABELS for b in LABELS}
    assert e11x_upper(zero, 0.1, 0.05) == (0.0, False)
    assert e11x_upper(zero, 0.1, 0.0) == (0.5, True)


def test_decoy_skr_trivial_cases():
    s = DecoySettings()
    assert decoy_skr(s, 1e-3, 0.02, 0.0, 0.1) == 0.0
    assert decoy_skr(s, 1e-3, 0.02, 0.05, 0.5) == 0.0
    assert decoy_skr(s, 1e-3, 0.2, 0.05, 0.0) == 0.0  # above the QBER cutoff


def _true_rate(settings, out, lam, r2, eta):
    y11 = bsm_coefficient(lam) * eta**2
    e11x = single_pair_errors(lam, r2)[1]
    q, e = out.Q[("Z", "mu", "mu")], out.E[("Z", "mu", "mu")]
    p1 = settings.mu * math.exp(-settings.mu)
    return max(settings.p_Z**2 * settings.p_mu**2 * (p1**2 * y11 * (1 - binary_entropy(e11x))
                                                      - settings.f * q * binary_entropy(e)), 0.0)


def test_decoy_rate_close_to_true_parameter_rate():
    s = DecoySettings()
    eta = 0.437
    out = evaluate_decoy(s, 0.0, 1.0, eta, NO_SCINTILLATION)
    true = _true_rate(s, out, 0.0, 1.0, eta)
    assert out.R_decoy > 0
    assert out.R_decoy == pytest.approx(true, rel=0.10)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.0, 0.5), st.floats(0.0, 1.0), st.floats(1e-4, 0.9), st.floats(0.2, 1.0),
       st.floats(0.01, 0.15), st.floats(0.5, 50), st.booleans())
def test_rate_below_privacy_ceiling(lam, r2, eta, mu, nu_frac, shape_ab, shared):
    nu = mu * nu_frac
    s = DecoySettings(mu=mu, nu=nu)
    out = evaluate_decoy(s, lam, r2, eta, ScintillationShape(shape_ab, shape_ab), shared)
    p1 = mu * math.exp(-mu)
    assert 0 <= out.R_decoy <= s.p_Z**2 * s.p_mu**2 * p1**2 * out.Y11_L + 1e-18
    assert 0 <= out.e11_XU <= 0.5 and out.Y11_L >= 0
    for v in out.Q.values():
        assert 0 <= v <= 1
