import numpy as np
import pytest
from scipy.integrate import simpson

from nullrec import make_basis
from nullrec.basis import principal_f1


def test_principal_direction_values():
    assert principal_f1(0.0) == 0.0
    assert principal_f1(1.0) == pytest.approx(0.5)
    x = np.linspace(-50, 50, 1001)
    assert np.all(np.abs(principal_f1(x)) <= 0.5)


def test_sinc_basis_shape():
    b = make_basis("sinc")
    assert b.m == 1
    assert b.funcs[0](0.0) == pytest.approx(1.0)
    assert b.funcs[0](np.pi) == pytest.approx(0.0, abs=1e-15)


def test_sinc_limits_against_coarse_quadrature():
    # oracle: direct high-resolution quadrature out to S, remainder below 2/S
    b = make_basis("sinc")
    s_cut = 1e4
    x = np.linspace(1e-9, s_cut, 2_000_001)
    direct = simpson(np.sin(x) / x, x=x)
    assert abs(direct - b.f_limit_pos[0]) <= 2.0 / s_cut + 1e-6
    assert b.f_limit_pos[0] == pytest.approx(np.pi / 2, abs=1e-12)
    assert b.f_limit_neg[0] == pytest.approx(-np.pi / 2, abs=1e-12)


def test_fourier_basis_layout_and_parity():
    b = make_basis("fourier-2")
    assert b.m == 4
    x = np.linspace(-10, 10, 401)
    # even slots hold f1*cos(kx): odd functions
    for k, slot in ((1, 1), (2, 3)):
        np.testing.assert_allclose(b.funcs[slot](x), -b.funcs[slot](-x), atol=1e-15)
        np.testing.assert_allclose(b.funcs[slot](x), principal_f1(x) * np.cos(k * x),
                                   atol=1e-15)
    # odd slots hold f1*sin(kx): even functions
    for k, slot in ((1, 0), (2, 2)):
        np.testing.assert_allclose(b.funcs[slot](x), b.funcs[slot](-x), atol=1e-15)
        np.testing.assert_allclose(b.funcs[slot](x), principal_f1(x) * np.sin(k * x),
                                   atol=1e-15)


def test_fourier_sin_limits_match_closed_form():
    # int_0^inf x sin(kx)/(1+x^2) dx = (pi/2) exp(-k)
    b = make_basis("fourier-3")
    for k in (1, 2, 3):
        slot = 2 * (k - 1)
        assert b.f_limit_pos[slot] == pytest.approx(np.pi / 2 * np.exp(-k), abs=1e-7)
        assert b.f_limit_neg[slot] == pytest.approx(-b.f_limit_pos[slot])


def test_fourier_cos_limits_even():
    b = make_basis("fourier-2")
    for slot in (1, 3):
        assert b.f_limit_neg[slot] == b.f_limit_pos[slot]


def test_unknown_basis_rejected():
    with pytest.raises(ValueError):
        make_basis("chebyshev")
    with pytest.raises(ValueError):
        make_basis("fourier-0")


def test_none_basis_empty():
    b = make_basis("none")
    assert b.m == 0
