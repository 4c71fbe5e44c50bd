from fractions import Fraction
import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from blab.errors import ConfigError, DomainError, RegimeError
from blab.kernels import classify, n_zero, tau, tau_residual
from blab.params import ScalingParams, default_eps, parse_rational


def test_rational_parsing():
    assert parse_rational("7/12") == Fraction(7, 12)
    assert parse_rational("0.55") == Fraction(11, 20)
    assert parse_rational(0.5) == Fraction(1, 2)
    with pytest.raises(ConfigError):
        parse_rational("seven")


def test_params_thresholds():
    p = ScalingParams(1e4, "1/2", "1/100")
    assert p.t_s == pytest.approx(1e4 ** 0.24)
    assert p.t_l == pytest.approx(1e4 ** 0.26)
    assert p.t_h == pytest.approx(1e4 ** 0.49)
    assert p.scale == pytest.approx(100.0)


@pytest.mark.parametrize("kw, err", [
    (dict(N=1e3, kappa="0"), ConfigError),
    (dict(N=1e3, kappa="2/3"), ConfigError),
    (dict(N=1.0, kappa="0.5"), ConfigError),
    (dict(N=1e3, kappa="0.5", eps="-0.1"), ConfigError),
    (dict(N=1e3, kappa="0.6", eps="0.1"), RegimeError),
    (dict(N=1e3, kappa="0.5", ell=0.5), ConfigError),
])
def test_params_reject(kw, err):
    with pytest.raises(err):
        ScalingParams(**kw)


@given(st.fractions(Fraction(1, 100), Fraction(65, 100)))
def test_default_eps_is_admissible(k):
    e = default_eps(k)
    assert 0 < e and 3 * k - 2 + 4 * e < 0


def test_classify_edges():
    p = ScalingParams(1e4, "0.55", "0.01")
    assert classify(p.t_s, p) == "S"
    assert classify(p.t_l, p) == "S"
    assert classify(p.t_s * 0.99, p) == "low"
    assert classify(p.t_h * 1.01, p) == "high"
    assert classify(p.t_h, p) == "mid"
    assert classify([100.0, 0.0, 0.0], p) == "high"
    with pytest.raises(DomainError):
        classify(0.0, p)


@given(st.floats(1e-3, 1e4), st.floats(1e-3, 10.0))
def test_tau_satisfies_its_definition(pabs, a):
    p = ScalingParams(1e4, "0.55", "0.01")
    t = tau(np.array([pabs]), p, a)
    g = 8 * math.pi * a * p.N ** p.k
    assert tau_residual(np.array([pabs]), t, p, a)[0] <= 1e-12 * (pabs * pabs + g)
    assert t[0] < 0


@given(st.floats(-20.0, 20.0))
def test_sinh_cosh_unitarity(nu):
    s, c = math.sinh(nu), math.cosh(nu)
    assert abs(c * c - s * s - 1) <= 1e-15 * c * c + 1e-15


def test_kernel_table_identities(point_1e4):
    t = point_1e4.table
    assert np.max(np.abs(t.gamma ** 2 - t.sigma ** 2 - 1)) < 1e-12
    L = t.low
    g = 8 * math.pi * t.a * t.params.N ** t.params.k
    assert np.max(tau_residual(t.p[L], t.tau[L], t.params, t.a)) / g < 1e-12
    np.testing.assert_array_equal(t.nu[~L], t.eta[~L])
    assert 0 < n_zero(t.params, t) < t.params.N


def test_kernel_csv_has_one_row_per_shell(point_1e4):
    lines = point_1e4.table.to_csv().splitlines()
    assert lines[0] == "shell,mult,tag,eta,nu,sigma,gamma"
    assert len(lines) == point_1e4.table.norm2.size + 1
