from fractions import Fraction
import math

import numpy as np
import pytest

from blab.energy import (LHY_CONSTANT, c_gn_breakdown, exponent_budget, lhy_density, main_term)
from blab.errors import ConfigError, DomainError
from blab.params import ScalingParams
from blab.potential import fourier_hat, soft_sphere


def test_lhy_density_formula():
    rho, a = 1e-3, 0.5
    expect = 4 * math.pi * a * rho ** 2 * (1 + 128 / (15 * math.sqrt(math.pi)) * math.sqrt(rho * a ** 3))
    assert lhy_density(rho, a) == pytest.approx(expect, rel=1e-15)
    assert LHY_CONSTANT == pytest.approx(4.8144, abs=1e-4)
    with pytest.raises(DomainError):
        lhy_density(-1.0, a)
    with pytest.warns(RuntimeWarning):
        lhy_density(1.0, 1.0)


def test_main_term():
    p = ScalingParams(1e4, "1/2", "1/100")
    a = 0.3
    expect = 4 * math.pi * a * 1e6 * (1 + LHY_CONSTANT * math.sqrt(a ** 3 * 1e4 ** -0.5))
    assert main_term(p, a) == pytest.approx(expect, rel=1e-14)


def test_thresholds_are_exact():
    b = exponent_budget("1/2", "0")
    assert b.thresholds["9k-5+6e"] == Fraction(5, 9)
    assert b.thresholds["21k/4-3+3e"] == Fraction(4, 7)
    assert b.thresholds["12k-7+5e"] == Fraction(7, 12)


def test_boundary_is_flagged():
    b = exponent_budget("7/12", "0")
    assert b.exponents["12k-7+5e"] == 0
    assert "12k-7+5e" in b.boundary
    assert not b.new_admissible
    assert "12k-7+5e,0,7/12,7/12,true" in b.to_csv()


def test_admissibility():
    b = exponent_budget("1/2", "1/100")
    assert b.old_admissible and b.new_admissible
    b = exponent_budget("0.57", "1/100")
    assert not b.old_admissible and b.new_admissible
    b = exponent_budget("0.6", "1/100")
    assert not b.new_admissible


def test_budget_rejects_out_of_range():
    with pytest.raises(ConfigError):
        exponent_budget("2/3", "0")
    with pytest.raises(ConfigError):
        exponent_budget("1/2", "-1/100")


def test_breakdown_simple_terms(point_1e4, params_1e4):
    t = point_1e4.table
    rep = c_gn_breakdown(params_1e4, t, soft_sphere(), K=8)
    assert rep.terms["vhat0"] == pytest.approx(0.5 * 1e4 ** 1.55 * 4 * math.pi / 3, rel=1e-14)
    kin = math.fsum(t.mult * t.p ** 2 * t.sigma ** 2)
    assert rep.terms["kinetic"] == pytest.approx(kin, rel=1e-12)
    assert all(v >= 0 for v in rep.tails.values())
    assert rep.total == pytest.approx(math.fsum(rep.terms.values()), rel=1e-12)


def test_breakdown_fft_matches_direct():
    p = ScalingParams(1e3, "0.55", "0.01")
    from blab.pipeline import evaluate
    pt = evaluate(p, soft_sphere())
    rep = c_gn_breakdown(p, pt.table, soft_sphere(), K=10, cross_check=True)
    assert rep.meta["convolution_rel_gap"] < 1e-8
