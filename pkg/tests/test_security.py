import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fsomdi.errors import InputDomainError
from fsomdi.security import (
    SecurityInput, binary_entropy, evaluate, hom_visibility, loss_only_rate, skr, symmetric_input, zx_statistics,
)


def test_binary_entropy_values():
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.11) == pytest.approx(0.49992, abs=1e-5)
    with pytest.raises(InputDomainError):
        binary_entropy(1.1)


def test_binary_entropy_symmetric_concave():
    x = np.linspace(0, 1, 1001)
    h = binary_entropy(x)
    np.testing.assert_allclose(h, h[::-1], atol=1e-15)
    assert np.all(np.diff(h, 2) <= 1e-15)


def test_hom_visibility():
    assert hom_visibility(0.0, 0.0, 0.1) == 1.0
    assert hom_visibility(0.01 / 4, 0.01 / 4, 0.1) == pytest.approx(0.5)
    w = 0.2
    s2 = (0.1 * w) ** 2
    assert hom_visibility(s2 / 2, s2 / 2, w) >= 0.98


def test_zx_statistics_examples():
    q, q11, ez, ex = zx_statistics(SecurityInput(0, 0, 1, 0.3, 0.4))
    assert ez == 0 and ex == 0 and q11 == pytest.approx(2 * 0.12) and q == pytest.approx(0.06)
    assert zx_statistics(symmetric_input(0.1, 1.0, 0.5))[2] == pytest.approx(0.095)
    _, _, ez, ex = zx_statistics(symmetric_input(1.0, 0.3, 0.5))
    assert ez == 0.5 and ex == 0.5


def test_skr_examples():
    assert skr(symmetric_input(0.0, 1.0, 1.0, f=1.1)) == 2.0
    assert skr(symmetric_input(1.0, 0.0, 1.0)) == 0.0
    assert skr(SecurityInput(0.2, 0.2, 1.0, 1.0, 1.0, E_max=0.5)) > 0
    # lambda = 0.2 each gives E_Z = 0.18 > 0.15
    assert skr(symmetric_input(0.2, 1.0, 1.0)) == 0.0
    assert loss_only_rate(0.5) == pytest.approx(0.5)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_cutoff_is_exact(la, lb, r2, ea, eb):
    out = evaluate(SecurityInput(la, lb, r2, ea, eb))
    assert out.R >= 0
    if out.E_Z > 0.15:
        assert out.R == 0.0
    assert 0 <= out.E_Z <= 0.5 and 0 <= out.e_X11 <= 0.5 + 1e-15


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_rate_ratio_and_ex_identity(la, lb, eta):
    q, q11, _, ex = zx_statistics(SecurityInput(la, lb, 1.0, eta, eta))
    if q > 0:
        assert q11 / q == pytest.approx(2 * (2 - la - lb + la * lb), rel=1e-12)
    assert ex == pytest.approx((1 - (1 - la) * (1 - lb)) / 2, abs=1e-15)


def test_rate_non_increasing_in_lambda_a():
    rates = [skr(SecurityInput(la, 0.05, 0.9, 0.4, 0.4, E_max=0.49)) for la in np.linspace(0, 0.5, 51)]
    assert np.all(np.diff(rates) <= 1e-15)


def test_input_validation():
    with pytest.raises(InputDomainError):
        SecurityInput(-0.1, 0, 1, 1, 1)
    with pytest.raises(InputDomainError):
        SecurityInput(0, 0, 1, 1, 1, f=0.9)
    with pytest.raises(InputDomainError):
        SecurityInput(0, 0, 1, 1, 1, E_max=1.0)
    assert math.isclose(evaluate(symmetric_input(0, 1, 1)).Q_Z11, 2.0)
