import math

from hypothesis import given, strategies as st
import numpy as np
import pytest

from blab.errors import GeometryError, InvalidPotentialError
from blab.params import ScalingParams
from blab.pipeline import parseval_check
from blab.potential import (PotentialSpec, bump, fourier_hat, load_csv, scattering_length,
                            soft_sphere, solve_neumann)

# high-precision Taylor integration of the zero-energy equation (mpmath odefun, 30 digits)
BUMP_A = {1.0: 0.024279846092440681253, 10.0: 0.17462211737481869057}
# finite-difference Neumann eigenvalue for the bump at (N, kappa) = (1e3, 0.55),
# Richardson-extrapolated over h = R_b/4000, /8000, /16000
BUMP_LAMBDA_1E3 = 4.1872740494761947e-04


def sphere_length(V0, R=1.0):
    s = math.sqrt(V0 / 2)
    return R - math.tanh(s * R) / s


@pytest.mark.parametrize("V0", [0.5, 1.0, 5.0, 50.0])
def test_soft_sphere_length_closed_form(V0):
    a = scattering_length(soft_sphere(V0))
    assert abs(a - sphere_length(V0)) / sphere_length(V0) < 1e-8


@pytest.mark.parametrize("V0", sorted(BUMP_A))
def test_bump_length_matches_high_precision_oracle(V0):
    assert scattering_length(bump(V0)) == pytest.approx(BUMP_A[V0], rel=1e-10)


def test_zero_potential_has_zero_length():
    assert scattering_length(soft_sphere(0.0)) == 0.0


def test_fourier_transform_of_sphere():
    k = np.array([0.0, 0.3, 2.0, 17.5])
    ref = np.where(k == 0, 4 * math.pi / 3,
                   4 * math.pi * (np.sin(k) - k * np.cos(k)) / np.where(k == 0, 1, k) ** 3)
    np.testing.assert_allclose(fourier_hat(soft_sphere(1.0), k), ref, rtol=1e-12, atol=1e-14)


@given(st.floats(0.01, 80.0), st.floats(0.01, 80.0))
def test_length_monotone_in_strength(v1, v2):
    lo, hi = sorted((v1, v2))
    assert scattering_length(soft_sphere(lo)) <= scattering_length(soft_sphere(hi)) + 1e-15


@given(st.floats(0.01, 50.0), st.sampled_from(["soft-sphere", "bump"]))
def test_born_inequality(V0, model):
    pot = PotentialSpec(model, V0, 1.0)
    born = fourier_hat(pot, 0.0) / (8 * math.pi)
    assert 0 < scattering_length(pot) <= born * (1 + 1e-12)


def test_neumann_eigenvalue_matches_finite_differences():
    sol = solve_neumann(bump(), ScalingParams(1e3, "0.55", "0.01"))
    assert sol.lam == pytest.approx(BUMP_LAMBDA_1E3, rel=1e-6)


def test_solution_profile_is_monotone_and_normalized(params_1e4):
    sol = solve_neumann(soft_sphere(), params_1e4)
    r, f = sol.grid(401)
    assert np.all(np.diff(f) >= -1e-14)
    assert f[-1] == pytest.approx(1.0, abs=1e-12)
    assert np.all((f >= 0) & (f <= 1 + 1e-12))


def test_parseval(params_1e4):
    pv = parseval_check(solve_neumann(soft_sphere(), params_1e4), params_1e4)
    assert pv.rel_gap < 1e-6
    assert pv.tail >= 0


def test_support_must_fit_in_ball():
    with pytest.raises(GeometryError):
        solve_neumann(soft_sphere(1.0, 50.0), ScalingParams(1e3, "0.55", "0.01"))


def test_invalid_potentials():
    with pytest.raises(InvalidPotentialError):
        PotentialSpec("soft-sphere", -1.0)
    with pytest.raises(InvalidPotentialError):
        PotentialSpec("square")
    with pytest.raises(InvalidPotentialError):
        PotentialSpec("tabulated", samples=([0.0, 0.5, 0.4], [1.0, 1.0, 0.0]))


def test_tabulated_constant_profile_matches_sphere(tmp_path):
    path = tmp_path / "v.csv"
    path.write_text("r,V\n0.0,2.0\n1.0,2.0\n")
    pot = load_csv(path)
    assert scattering_length(pot) == pytest.approx(sphere_length(2.0), rel=1e-10)
