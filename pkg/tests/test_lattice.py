import math

from hypothesis import given, strategies as st
import hypothesis.extra.numpy as hnp
import numpy as np
import pytest

from blab import _backend, _fallback, lattice
from blab.errors import ResourceError
from blab.lattice import (autocorr_conv_sum, build_shells, direct_conv_sum, naive_shell_counts,
                          radial_sum)
from blab.params import ScalingParams
from blab.pipeline import evaluate
from blab.potential import soft_sphere

BACKENDS = _backend.available()


def test_small_shell_multiplicities():
    # r3(0..9) = 1, 6, 12, 8, 6, 24, 24, 0, 12, 30
    assert build_shells(9).counts.tolist() == [1, 6, 12, 8, 6, 24, 24, 0, 12, 30]


def test_shell_counts_match_naive_enumeration():
    np.testing.assert_array_equal(build_shells(10_000).counts, naive_shell_counts(10_000))


@pytest.mark.parametrize("name", BACKENDS)
def test_each_backend_counts_shells(name):
    np.testing.assert_array_equal(_backend.get(name).shell_counts(2000), naive_shell_counts(2000))


def test_points_within_ball():
    K = 7
    assert build_shells(K * K).points_within(K * K) == int(np.sum(lattice.ball_grid(K) <= K * K))


@given(hnp.arrays(np.float64, st.integers(0, 700),
                  elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_pairwise_sum_identical_across_backends(x):
    vals = {_backend.get(n).pairwise_sum(x) for n in BACKENDS}
    assert len(vals) == 1
    assert abs(vals.pop() - math.fsum(x)) <= 1e-9 * max(1.0, float(np.sum(np.abs(x))))


@given(st.tuples(st.integers(-3, 3), st.integers(-3, 3), st.integers(-3, 3)),
       st.integers(0, 40))
def test_shifted_sum_identical_across_backends(shift, M):
    rng = np.random.default_rng(M)
    ta, tb = rng.random(4 * M + 64), rng.random(M + 1)
    vals = {_backend.get(n).shifted_table_sum(shift, -1, M, ta, tb) for n in BACKENDS}
    assert len(vals) == 1


def test_shifted_sum_against_brute_force():
    rng = np.random.default_rng(1)
    M, s = 30, (2, -1, 1)
    ta, tb = rng.random(200), rng.random(M + 1)
    K = math.isqrt(M)
    r = range(-K, K + 1)
    ref = math.fsum(ta[(x - s[0]) ** 2 + (y - s[1]) ** 2 + (z - s[2]) ** 2] * tb[x * x + y * y + z * z]
                    for x in r for y in r for z in r if 0 < x * x + y * y + z * z <= M)
    assert _fallback.shifted_table_sum(s, 0, M, ta, tb) == pytest.approx(ref, rel=1e-13)


@given(st.floats(0.05, 3.0))
def test_radial_sum_equals_sum_over_vectors(alpha):
    # radial symmetry: summing over shells is summing over every lattice vector
    M = 40
    m, mult, p = build_shells(M).nonzero()
    f = np.exp(-alpha * p / (2 * math.pi))
    g = lattice.ball_grid(math.isqrt(M))
    g = g[(g > 0) & (g <= M)]
    ref = math.fsum(np.exp(-alpha * np.sqrt(g)))
    got = radial_sum(lambda q: np.exp(-alpha * q / (2 * math.pi)), build_shells(M))
    assert got.value == pytest.approx(ref, rel=1e-12)
    assert float(np.sum(mult * f)) == pytest.approx(ref, rel=1e-12)


def test_cache_roundtrip_and_rejection(tmp_path):
    counts = naive_shell_counts(50)
    path = lattice._cache_path(tmp_path, 50)
    lattice._write_cache(path, counts)
    np.testing.assert_array_equal(lattice._read_cache(path, 50), counts)
    assert lattice._read_cache(path, 49) is None
    with open(path, "r+b") as fh:
        fh.write(b"XXXX")
    assert lattice._read_cache(path, 50) is None


def test_memory_budget_enforced():
    with pytest.raises(ResourceError):
        build_shells(10 ** 7, budget=1000)
    with pytest.raises(ResourceError):
        autocorr_conv_sum(np.ones(101), 10, np.ones(401), budget=1000)


@pytest.mark.parametrize("K", [3, 6])
def test_fft_double_sum_matches_direct(K):
    rng = np.random.default_rng(K)
    g, F = rng.random(K * K + 1), rng.random(4 * K * K + 1)
    g[0] = 0.0
    assert autocorr_conv_sum(g, K, F) == pytest.approx(direct_conv_sum(g, K, F), rel=1e-12)


def test_fft_double_sum_against_brute_force():
    K = 2
    rng = np.random.default_rng(5)
    g, F = rng.random(K * K + 1), rng.random(4 * K * K + 1)
    pts = [(x, y, z) for x in range(-K, K + 1) for y in range(-K, K + 1) for z in range(-K, K + 1)
           if x * x + y * y + z * z <= K * K]
    n2 = lambda v: v[0] ** 2 + v[1] ** 2 + v[2] ** 2
    ref = math.fsum(F[n2((a[0] - b[0], a[1] - b[1], a[2] - b[2]))] * g[n2(a)] * g[n2(b)]
                    for a in pts for b in pts if a != b)
    assert autocorr_conv_sum(g, K, F) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("N", [1e3, 1e4])
def test_tail_estimates_cover_cutoff_doubling(N):
    p = ScalingParams(N, "0.55", "0.01")
    a = evaluate(p, soft_sphere()).norms
    b = evaluate(p, soft_sphere(), 2 * lattice.default_cutoff(p)).norms
    for f in lattice.NORM_FIELDS:
        assert a.tails[f] >= 0
        assert abs(a.values[f] - b.values[f]) <= a.tails[f] + 1e-14 * abs(a.values[f])


def test_norm_report_csv_row_is_keyed(point_1e4):
    rep = point_1e4.norms
    row = rep.csv_row()
    assert len(row) == len(rep.csv_header())
    assert row[:3] == [repr(1e4), "11/20", "1/100"]


def test_sup_kernel_ratio_is_order_one():
    from blab.lattice import sup_kernel_bound
    res = sup_kernel_bound(ScalingParams(1e3, "0.55", "0.01"), soft_sphere())
    assert 0.05 < res.max_ratio < 5
    assert all(t >= 0 for t in res.tails)


def test_fallback_selected_by_environment():
    import os
    import subprocess
    import sys
    code = ("from blab import _backend; from blab.lattice import build_shells; "
            "print(_backend.NAME, int(build_shells(400).counts.sum()))")
    env = dict(os.environ, BLAB_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True).stdout.split()
    assert out == ["python", str(int(naive_shell_counts(400).sum()))]
