"""Sums over the momentum lattice 2 pi Z^3.

Radial sums go through shell multiplicities r3(m) = #{n : |n|^2 = m}.
Every reduction uses the fixed-tree compensated sum of :mod:`blab._backend`,
so results do not depend on scheduling.
"""
from dataclasses import dataclass, field
from typing import NamedTuple
import math
import os
import struct

import numpy as np
import scipy.fft

from . import _backend
from .errors import ConfigError, ResourceError

TWO_PI = 2 * math.pi
DEFAULT_BUDGET = 2 * 1024 ** 3
CACHE_MAGIC = b"BLABSHEL"
CACHE_VERSION = 1

_memo = {"counts": None}


def memory_budget():
    env = os.environ.get("BLAB_MEMORY_BUDGET")
    return int(float(env)) if env else DEFAULT_BUDGET


def default_cutoff(params):
    """Momentum cutoff for sums over the whole lattice: max(4 N^(1-kappa), 8 t_h)."""
    return max(4 * params.scale, 8 * params.t_h)


def cutoff_norm2(p_cut):
    return int(math.floor((p_cut / TWO_PI) ** 2))


class SumResult(NamedTuple):
    value: float
    tail: float


@dataclass(frozen=True, eq=False)
class ShellTable:
    """Shell multiplicities r3(m) for 0 <= m <= max_norm2."""

    counts: np.ndarray

    @property
    def max_norm2(self):
        return self.counts.size - 1

    @property
    def norm2(self):
        return np.nonzero(self.counts)[0]

    @property
    def mult(self):
        return self.counts[self.counts > 0]

    def nonzero(self):
        """(m, r3(m), |p|) for occupied shells with m > 0."""
        m = np.nonzero(self.counts)[0][1:]
        return m, self.counts[m], TWO_PI * np.sqrt(m.astype(float))

    def points_within(self, M):
        return int(self.counts[: M + 1].sum())


def _cache_path(cache_dir, M):
    return os.path.join(cache_dir, f"shells_{M}.bin")


def _read_cache(path, M):
    try:
        with open(path, "rb") as fh:
            head = fh.read(8 + 4 + 8)
            magic, version, size = struct.unpack("<8sIQ", head)
            if magic != CACHE_MAGIC or version != CACHE_VERSION or size != M:
                return None
            data = np.frombuffer(fh.read(), dtype="<i8")
    except (OSError, struct.error):
        return None
    if data.size != M + 1:
        return None
    return data.astype(np.int64)


def _write_cache(path, counts):
    tmp = path + f".{os.getpid()}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(struct.pack("<8sIQ", CACHE_MAGIC, CACHE_VERSION, counts.size - 1))
        fh.write(counts.astype("<i8").tobytes())
    os.replace(tmp, path)


def build_shells(max_norm2, budget=None, cache_dir=None):
    """Shell table up to ``max_norm2`` by symmetry-reduced enumeration.

    Only sorted triples 0 <= a <= b <= c are visited, each weighted by the
    size of its orbit under sign changes and permutations.  Tables are
    cached in memory and, when ``cache_dir`` or ``BLAB_CACHE_DIR`` is set,
    on disk.
    """
    M = int(max_norm2)
    if M < 1:
        raise ConfigError("max_norm2 must be >= 1")
    budget = memory_budget() if budget is None else budget
    per_entry = 16 if _backend.NAME == "compiled" else 64
    need = per_entry * (M + 1)
    if need > budget:
        raise ResourceError(f"shell table up to {M} needs ~{need / 2**20:.0f} MiB, "
                            f"budget is {budget / 2**20:.0f} MiB")
    memo = _memo["counts"]
    if memo is not None and memo.size > M:
        return ShellTable(memo[: M + 1].copy())
    cache_dir = cache_dir or os.environ.get("BLAB_CACHE_DIR")
    counts = None
    if cache_dir:
        counts = _read_cache(_cache_path(cache_dir, M), M)
    if counts is None:
        counts = _backend.shell_counts(M)
        if cache_dir:
            os.makedirs(cache_dir, exist_ok=True)
            _write_cache(_cache_path(cache_dir, M), counts)
    _memo["counts"] = counts
    return ShellTable(counts.copy())


def naive_shell_counts(max_norm2):
    """Direct count over the cube, for cross-checks."""
    K = math.isqrt(max_norm2)
    r = np.arange(-K, K + 1)
    m = (r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2).ravel()
    return np.bincount(m[m <= max_norm2], minlength=max_norm2 + 1).astype(np.int64)


def radial_sum(f, shells, lo=0.0, hi=math.inf, include_lo=False, include_hi=True, tail=0.0):
    """Sum of ``r3(m) f(|p|)`` over occupied shells with ``lo (<) |p| (<=) hi``.

    ``f`` is a callable of ``|p|`` or an array aligned with the nonzero shells
    of ``shells``.  ``tail`` is an externally estimated remainder beyond the
    table, reported alongside the value.
    """
    m, mult, p = shells.nonzero()
    vals = f(p) if callable(f) else np.asarray(f, dtype=float)
    sel = (p >= lo if include_lo else p > lo) & (p <= hi if include_hi else p < hi)
    if not np.any(sel):
        return SumResult(0.0, 0.0)
    return SumResult(_backend.pairwise_sum(mult[sel] * vals[sel]), float(tail))


@dataclass(frozen=True)
class TailModel:
    """Remainder bounds beyond the cutoff ``P`` from the envelope |eta| <= A / p^4.

    ``A`` is measured on the annulus ``P/2 <= |p| <= P``; ``c2`` is the
    measured constant in |eta| <= c2 N^kappa / p^2 over the whole table.
    """

    P: float
    A: float
    c2: float

    @classmethod
    def from_eta(cls, frag):
        P = TWO_PI * math.sqrt(frag.max_norm2)
        ring = frag.p >= P / 2
        A = float(np.max(np.abs(frag.eta[ring]) * frag.p[ring] ** 4)) if np.any(ring) else 0.0
        return cls(P, A, frag.c2)

    def bound(self, a, b, decay=0.0, coef=1.0):
        """Integral bound for the sum over |p| > P of coef |p|^(a - decay) |eta_p|^b."""
        d = 4 * b + decay - a - 3
        if d <= 0:
            raise ConfigError(f"tail of |p|^{a}|eta|^{b} does not converge under the envelope")
        return coef * self.A ** b / (2 * math.pi ** 2) * self.P ** (-d) / d


NORM_FIELDS = ("eta_H_2", "eta_H_H1", "eta_H_inf", "sigma_S_2", "sigma_S_H1",
               "gamma_sigma_S_1", "gamma_S_inf2", "sigma_S_inf2", "sigma_L_2")


@dataclass
class NormReport:
    """Named lattice norms with their tail estimates.

    ``eta_H_2 = sum_H eta^2``, ``eta_H_H1 = sum_H p^2 eta^2``,
    ``eta_H_inf = max_H |eta|``, the S-entries analogously for sigma and
    gamma sigma, the ``inf2`` entries are squared sup norms and
    ``sigma_L_2 = sum_L sigma^2``.
    """

    values: dict
    tails: dict
    meta: dict = field(default_factory=dict)

    def __getattr__(self, name):
        if name in NORM_FIELDS:
            return self.values[name]
        raise AttributeError(name)

    def to_dict(self):
        return {"meta": self.meta, "values": dict(self.values), "tails": dict(self.tails)}

    def csv_header(self):
        return ["N", "kappa", "eps", "potential"] + [x for f in NORM_FIELDS for x in (f, f + "_tail")]

    def csv_row(self):
        m = self.meta
        row = [repr(float(m.get("N", 0))), m.get("kappa", ""), m.get("eps", ""), m.get("potential", "")]
        for f in NORM_FIELDS:
            row += [repr(float(self.values[f])), repr(float(self.tails[f]))]
        return row


def norm_report(table, params=None):
    params = table.params if params is None else params
    tail = table.tail
    p, mult = table.p, table.mult
    H = table.mask("high")
    S_ = table.mask("S")
    L = table.low
    psum = _backend.pairwise_sum
    eta, sig, gam = table.eta, table.sigma, table.gamma
    v, t = {}, {}
    v["eta_H_2"] = psum(mult[H] * eta[H] ** 2) if np.any(H) else 0.0
    v["eta_H_H1"] = psum(mult[H] * p[H] ** 2 * eta[H] ** 2) if np.any(H) else 0.0
    v["eta_H_inf"] = float(np.max(np.abs(eta[H]))) if np.any(H) else 0.0
    t["eta_H_2"] = tail.bound(0, 2) if tail else 0.0
    t["eta_H_H1"] = tail.bound(2, 2) if tail else 0.0
    t["eta_H_inf"] = 0.0
    if np.any(S_):
        v["sigma_S_2"] = psum(mult[S_] * sig[S_] ** 2)
        v["sigma_S_H1"] = psum(mult[S_] * p[S_] ** 2 * sig[S_] ** 2)
        v["gamma_sigma_S_1"] = psum(mult[S_] * np.abs(gam[S_] * sig[S_]))
        v["gamma_S_inf2"] = float(np.max(gam[S_] ** 2))
        v["sigma_S_inf2"] = float(np.max(sig[S_] ** 2))
    else:
        v.update(sigma_S_2=0.0, sigma_S_H1=0.0, gamma_sigma_S_1=0.0, gamma_S_inf2=1.0,
                 sigma_S_inf2=0.0)
    v["sigma_L_2"] = psum(mult[L] * sig[L] ** 2) if np.any(L) else 0.0
    for f in NORM_FIELDS:
        t.setdefault(f, 0.0)
    meta = dict(params.as_dict(), potential=table.potential_id,
                S_shells=int(np.count_nonzero(S_)), H_shells=int(np.count_nonzero(H)))
    return NormReport(v, t, meta)


def ball_grid(K):
    """Integer coordinates -K..K and squared norms on the cube of side 2K+1."""
    r = np.arange(-K, K + 1)
    return (r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2)


def autocorr_conv_sum(gtab, K, Ftab, include_diagonal=False, budget=None):
    """Sum over p, q with |p|^2, |q|^2 <= K^2 of F(p - q) g(p) g(q).

    ``gtab[m]`` and ``Ftab[m]`` give the radial functions at squared integer
    norm ``m``; ``gtab`` needs entries up to ``K^2`` and ``Ftab`` up to
    ``4 K^2``.  The autocorrelation of g is computed by FFT on a zero padded
    cube of side >= 4K+1, then weighted by F.  The diagonal p = q is excluded
    unless ``include_diagonal``.
    """
    K = int(K)
    n = scipy.fft.next_fast_len(4 * K + 1, real=True)
    budget = memory_budget() if budget is None else budget
    need = 5 * 8 * n ** 3
    if need > budget:
        raise ResourceError(f"convolution grid {n}^3 needs ~{need / 2**20:.0f} MiB, budget "
                            f"{budget / 2**20:.0f} MiB; reduce the support radius K={K}")
    gtab = np.asarray(gtab, dtype=float)
    Ftab = np.asarray(Ftab, dtype=float)
    m = ball_grid(K)
    inside = m <= K * K
    cube = np.zeros((n, n, n))
    cube[: 2 * K + 1, : 2 * K + 1, : 2 * K + 1] = np.where(inside, gtab[np.minimum(m, K * K)], 0.0)
    spec = scipy.fft.rfftn(cube, workers=1)
    del cube
    spec = spec.real ** 2 + spec.imag ** 2
    corr = scipy.fft.irfftn(spec, s=(n, n, n), workers=1)
    del spec
    idx = np.arange(n)
    idx = np.where(idx <= n // 2, idx, idx - n)
    d1 = idx * idx
    d2 = d1[:, None, None] + d1[None, :, None] + d1[None, None, :]
    keep = d2 <= 4 * K * K
    if not include_diagonal:
        keep[0, 0, 0] = False
    vals = Ftab[d2[keep]] * corr[keep]
    if include_diagonal:
        # the FFT value at d = 0 carries rounding; use the exact sum of squares
        diag = _backend.pairwise_sum(np.where(inside, gtab[np.minimum(m, K * K)], 0.0).ravel() ** 2)
        vals[0] = Ftab[0] * diag
    return _backend.pairwise_sum(vals)


def fundamental_points(K):
    """Sorted nonnegative triples with a^2+b^2+c^2 <= K^2 and their orbit sizes."""
    pts, wts = [], []
    for a in range(K + 1):
        for b in range(a, K + 1):
            for c in range(b, K + 1):
                if a * a + b * b + c * c > K * K:
                    break
                nz = (a > 0) + (b > 0) + (c > 0)
                eq = (a == b) + (b == c)
                perms = 6 if eq == 0 else (3 if eq == 1 else 1)
                pts.append((a, b, c))
                wts.append((1 << nz) * perms)
    return np.array(pts, dtype=np.int64), np.array(wts, dtype=np.int64)


def direct_conv_sum(gtab, K, Ftab):
    """Direct double sum matching :func:`autocorr_conv_sum` with the diagonal excluded.

    The outer sum runs over one representative per cubic-symmetry orbit.
    """
    gtab = np.asarray(gtab, dtype=float).copy()
    Ftab = np.asarray(Ftab, dtype=float).copy()
    Ftab[0] = 0.0
    pts, wts = fundamental_points(K)
    M = K * K
    terms = []
    for (a, b, c), w in zip(pts, wts):
        inner = _backend.shifted_table_sum((a, b, c), -1, M, Ftab, gtab)
        terms.append(w * gtab[a * a + b * b + c * c] * inner)
    return _backend.pairwise_sum(np.array(terms))


@dataclass
class SupKernelResult:
    samples: list
    sums: list
    tails: list
    ratios: list
    N: float

    @property
    def max_ratio(self):
        return max(self.ratios) if self.ratios else 0.0

    def to_dict(self):
        return {"N": self.N, "samples": [list(map(int, s)) for s in self.samples],
                "sums": self.sums, "tails": self.tails, "ratios": self.ratios,
                "max_ratio": self.max_ratio}


def sup_kernel_bound(params, potential, samples=None, cutoff_factor=8.0, flag_above=None):
    """max over shifts s of sum_{u in H} N^kappa Vhat((u - s)/N^(1-kappa)) / |u|^2, over N.

    Shifts are integer vectors n (momentum 2 pi n).  The sum over u runs to
    ``cutoff_factor * N^(1-kappa) / R``; the remainder is estimated by the
    continuum integral with |u - s| ~ |u|.
    """
    from .potential import fourier_hat, gl_panels

    L = params.scale
    Nk = params.N ** params.k
    P = cutoff_factor * L / potential.R
    M = cutoff_norm2(P)
    if samples is None:
        reach = int(math.ceil(1.5 * L * potential.R / TWO_PI)) + 1
        samples = [(0, 0, 0)] + [(int(j), 0, 0) for j in np.unique(np.geomspace(1, reach, 8).astype(int))]
    smax = max(math.isqrt(int(np.dot(s, s))) + 1 for s in samples)
    dmax = (math.isqrt(M) + smax + 1) ** 2
    if 8 * (dmax + M) > memory_budget():
        raise ResourceError("sup-kernel tables exceed the memory budget")
    d = np.arange(dmax + 1, dtype=float)
    ta = Nk * fourier_hat(potential, TWO_PI * np.sqrt(d) / L)
    mm = np.arange(M + 1, dtype=float)
    with np.errstate(divide="ignore"):
        tb = np.where(TWO_PI * np.sqrt(mm) > params.t_h, 1.0 / (TWO_PI ** 2 * mm), 0.0)
    # continuum remainder: N^kappa L / (2 pi^2) * int_{P/L}^inf Vhat(x) dx
    X = P / L
    x, w = gl_panels(np.array([0.0, X]), math.pi / (4 * potential.R))
    r, wr = gl_panels(potential.breakpoints(), potential.R / 8)
    total = 2 * math.pi ** 2 * float(np.sum(wr * r * potential(r)))
    rest = total - float(np.sum(w * fourier_hat(potential, x)))
    tail = Nk * L / (2 * math.pi ** 2) * rest
    sums, tails, ratios = [], [], []
    counts = None
    for s in samples:
        s = tuple(int(v) for v in s)
        if s == (0, 0, 0):
            if counts is None:
                counts = build_shells(M).counts
            val = _backend.pairwise_sum(counts * ta[: M + 1] * tb)
        else:
            val = _backend.shifted_table_sum(s, 0, M, ta, tb)
        sums.append(val)
        tails.append(tail)
        ratios.append((val + tail) / params.N)
    res = SupKernelResult(list(samples), sums, tails, ratios, params.N)
    res.flagged = flag_above is not None and res.max_ratio > flag_above
    return res
