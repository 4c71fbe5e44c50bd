import json
import math

from hypothesis import given, strategies as st
import pytest

from blab.errbounds import (ERROR_TERM_IDS, all_bounds, bound_tails, composite_bound, fit,
                            sweep_fit)
from blab.errors import ConfigError, DomainError
from blab.lattice import NormReport
from blab.params import ScalingParams


def test_ids_cover_every_displayed_bound():
    assert len(ERROR_TERM_IDS) == 18
    assert len(set(ERROR_TERM_IDS)) == 18
    fams = {i.split("_")[0] for i in ERROR_TERM_IDS}
    assert fams == {"EC", "EH", "ES", "EM1", "EM2", "EM3"}


def test_ec_recomputed_from_report_json(point_1e4, params_1e4):
    v = json.loads(json.dumps(point_1e4.norms.to_dict()))["values"]
    N, k = 1e4, 0.55
    expect = N ** (k - 1) * v["eta_H_2"] * (v["gamma_sigma_S_1"] + v["sigma_S_2"])
    assert composite_bound("EC", point_1e4.norms, params_1e4) == pytest.approx(expect, rel=1e-14)


def test_as_printed_changes_one_prefactor(point_1e4, params_1e4):
    a = all_bounds(point_1e4.norms, params_1e4)
    b = all_bounds(point_1e4.norms, params_1e4, as_printed=True)
    assert b["EM3_M1p"] == pytest.approx(a["EM3_M1p"] * 1e4, rel=1e-12)
    assert all(a[i] == b[i] for i in ERROR_TERM_IDS if i != "EM3_M1p")


def test_unknown_id():
    with pytest.raises(DomainError):
        composite_bound("EX", {}, None)


def test_bound_tails_nonnegative(point_1e4, params_1e4):
    assert all(t >= 0 for t in bound_tails(point_1e4.norms, params_1e4).values())


@given(st.floats(-3.0, 3.0), st.floats(-5.0, 5.0))
def test_fit_recovers_exact_power_law(slope, c):
    Ns = [1e3, 1e4, 1e5, 1e6]
    f = fit(Ns, [math.exp(c) * N ** slope for N in Ns])
    assert f.slope == pytest.approx(slope, abs=1e-9)
    if abs(slope) > 1e-3:
        # R^2 is only meaningful when the data vary
        assert f.r2 > 0.999999 and not f.flagged


def test_fit_flags_poor_lines():
    f = fit([1, 10, 100, 1000], [1.0, 100.0, 1.0, 100.0])
    assert f.flagged


def test_fit_rejects_bad_data():
    with pytest.raises(DomainError):
        fit([1, 2], [1, 2])
    with pytest.raises(DomainError):
        fit([1, 2, 3], [1, 0, 2])


def _report(scale):
    vals = dict(eta_H_2=1.0, eta_H_H1=1.0, eta_H_inf=1.0, sigma_S_2=scale, sigma_S_H1=scale,
                gamma_sigma_S_1=scale, gamma_S_inf2=1.0, sigma_S_inf2=scale, sigma_L_2=0.0)
    return NormReport(vals, {k: 0.0 for k in vals})


def test_sweep_excludes_vanishing_points():
    t = ScalingParams(1e3, "0.55", "0.01")
    Ns = [1e3, 1e4, 1e5, 1e6, 1e7]
    res = sweep_fit(["EC", "EH_A"], Ns, t, None, norms=[_report(0.0)] + [_report(1.0)] * 4)
    assert res.excluded["EC"] == [repr(1e3)]
    assert res.fits["EC"].slope == pytest.approx(-0.45, abs=1e-12)
    with pytest.raises(ConfigError):
        sweep_fit(["EC"], Ns, t, None, norms=[_report(0.0)] * 2 + [_report(1.0)] * 3)
    with pytest.raises(ConfigError):
        sweep_fit(["EC"], [], t, None)
