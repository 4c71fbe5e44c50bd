"""Composite error-bound expressions built from the lattice norms, and slope fits over N.

All unspecified constants are set to 1.  Symbols used below:

``eH2 = ||eta_H||^2``, ``eHinf = ||eta_H||_inf``, ``sS2 = ||sigma_S||^2``,
``gs1 = ||gamma_S sigma_S||_1``, ``sSinf = ||sigma_S||_inf``,
``gSinf = ||gamma_S||_inf``.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConfigError, DomainError

ERROR_TERM_IDS = (
    "EC",
    "EH_A", "EH_B", "EH_C", "EH_D",
    "ES_I_II", "ES_III", "ES_It_IIt", "ES_IIIt",
    "EM1_M1", "EM1_M2", "EM1_M3",
    "EM2_M1t", "EM2_M2t", "EM2_M3t",
    "EM3_M1p", "EM3_M2p", "EM3_M3p",
)


def _symbols(norms):
    v = norms.values if hasattr(norms, "values") and isinstance(norms.values, dict) else norms
    return dict(
        eH2=v["eta_H_2"], eHinf=v["eta_H_inf"], sS2=v["sigma_S_2"], gs1=v["gamma_sigma_S_1"],
        sSinf=math.sqrt(v["sigma_S_inf2"]), gSinf=math.sqrt(v["gamma_S_inf2"]))


def _bounds(N, k, e, eH2, eHinf, sS2, gs1, sSinf, gSinf, as_printed=False):
    m1p_prefactor = N ** (k - 1) if as_printed else N ** (k - 2)
    return {
        "EC": N ** (k - 1) * eH2 * (gs1 + sS2),
        "EH_A": N ** (k - 2) * sS2 * (N * eHinf ** 2 * eH2 + eHinf ** 2 * eH2 ** 2 + eH2 ** 2),
        "EH_B": N ** (k - 3) * sS2 ** 2 * eH2 ** 2 * eHinf ** 2,
        "EH_C": N ** (k - 2) * sS2 * eH2 ** 2,
        "EH_D": N ** (k - 3) * sS2 ** 2 * eH2 ** 2 * eHinf ** 2,
        "ES_I_II": N ** (k - 3 + 2 * e) * sS2 ** 2 * eH2 ** 2,
        "ES_III": N ** (k - 3) * eH2 * eHinf ** 2 * sSinf * (
            sS2 ** 3 * sSinf + gs1 ** 3 * gSinf + sS2 * gs1 ** 2 * sSinf),
        "ES_It_IIt": N ** (k - 3 + 2 * e) * sS2 ** 2 * eH2 ** 2,
        "ES_IIIt": N ** (k - 3) * eH2 * eHinf ** 2 * sSinf ** 2 * gs1 ** 2 * sS2,
        "EM1_M1": N ** (k - 2) * eH2 * (sS2 ** 2 * eHinf ** 2 + gs1 ** 2 + sS2 * gs1 * eHinf),
        "EM1_M2": N ** (k - 3) * eH2 ** 2 * sS2 ** 2 * (
            sSinf ** 2 * eHinf ** 2 + gSinf ** 2 + gSinf * sSinf * eHinf),
        "EM1_M3": N ** (k - 3) * eH2 * eHinf ** 2 * sS2 * (
            sS2 ** 2 * eHinf ** 2 + gs1 ** 2 + sS2 * gs1 * eHinf),
        "EM2_M1t": N ** (k - 2) * eH2 * (gs1 ** 2 * eHinf ** 2 + gs1 * sS2 * eHinf + sS2 ** 2),
        "EM2_M2t": N ** (k - 3) * eH2 ** 2 * sS2 ** 2 * (
            gSinf ** 2 * eHinf ** 2 + eHinf * sSinf * gSinf + sSinf ** 2),
        "EM2_M3t": N ** (k - 3) * eH2 * eHinf ** 2 * sS2 * (
            gs1 ** 2 * eHinf ** 2 + gs1 * sS2 * eHinf + sS2 ** 2),
        "EM3_M1p": m1p_prefactor * eH2 * (
            sS2 ** 2 * eHinf ** 2 + gs1 ** 2 + gs1 ** 2 * eHinf ** 2 + sS2 * gs1 * eHinf),
        "EM3_M2p": N ** (k - 3) * eH2 ** 2 * sS2 ** 2 * (
            sSinf ** 2 * eHinf ** 2 + gSinf ** 2 + gSinf ** 2 * eHinf ** 2 + gSinf * sSinf * eHinf),
        "EM3_M3p": N ** (k - 3) * sS2 * eH2 * eHinf ** 2 * (
            sS2 ** 2 * eHinf ** 2 + gs1 ** 2 + gs1 * sS2 * eHinf),
    }


def composite_bound(term_id, norms, params, as_printed=False):
    """Value of one composite bound with all constants set to 1.

    ``as_printed=True`` uses the prefactor N^(kappa-1) for ``EM3_M1p``
    instead of the default N^(kappa-2); see the project notes.
    """
    if term_id not in ERROR_TERM_IDS:
        raise DomainError(f"unknown error term id {term_id!r}")
    return all_bounds(norms, params, as_printed)[term_id]


def all_bounds(norms, params, as_printed=False):
    return _bounds(params.N, params.k, params.e, as_printed=as_printed, **_symbols(norms))


def bound_tails(norms, params, as_printed=False):
    """Change of every bound when each norm is raised by its tail estimate.

    The bounds are polynomials with nonnegative coefficients in the norms,
    so this is an upper estimate of the truncation error of each value.
    """
    up = {f: norms.values[f] + norms.tails[f] for f in norms.values}
    lo, hi = all_bounds(norms, params, as_printed), all_bounds(up, params, as_printed)
    return {i: hi[i] - lo[i] for i in ERROR_TERM_IDS}


def target_slope(params):
    """5 kappa / 2 - eps."""
    return 2.5 * params.k - params.e


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    r2: float
    xs: list
    ys: list

    @property
    def flagged(self):
        return self.r2 < 0.99

    def to_dict(self):
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "flagged": self.flagged, "N": list(self.xs), "values": list(self.ys)}


def fit(xs, ys):
    """Least-squares line through (log x, log y)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3 or xs.size != ys.size:
        raise DomainError("fit needs at least 3 points")
    if np.unique(xs).size < xs.size:
        raise DomainError("fit needs distinct x values")
    if np.any(xs <= 0) or np.any(ys <= 0):
        raise DomainError("log-log fit needs positive data")
    lx, ly = np.log(xs), np.log(ys)
    A = np.vstack([lx, np.ones_like(lx)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - (slope * lx + icpt)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ExponentFit(float(slope), float(icpt), r2, xs.tolist(), ys.tolist())


@dataclass
class SweepResult:
    params: object
    ids: tuple
    Ns: list
    values: dict
    fits: dict
    target: float
    tolerance: float
    errors: dict = field(default_factory=dict)
    excluded: dict = field(default_factory=dict)

    def passed(self, term_id):
        f = self.fits.get(term_id)
        return f is not None and f.slope <= self.target + self.tolerance

    def normalized(self, term_id):
        return [v / N ** self.target for N, v in zip(self.Ns, self.values[term_id])]

    def spread(self, term_id):
        """max/min of the nonzero values of value / N^(5 kappa/2 - eps) over the sweep."""
        vals = [v for v in self.normalized(term_id) if v > 0]
        return max(vals) / min(vals)

    @property
    def all_passed(self):
        return all(self.passed(i) for i in self.ids)

    def csv_rows(self):
        yield ["id", "N", "value", "normalized"]
        for i in self.ids:
            for N, v, nv in zip(self.Ns, self.values[i], self.normalized(i)):
                yield [i, repr(float(N)), repr(float(v)), repr(float(nv))]

    def summary(self):
        return {
            "params": {"kappa": str(self.params.kappa), "eps": str(self.params.eps),
                       "ell": self.params.ell},
            "target_slope": self.target, "tolerance": self.tolerance,
            "fits": {i: dict(self.fits[i].to_dict(), passed=self.passed(i),
                             normalized_spread=self.spread(i)) for i in self.ids},
            "errors": self.errors, "excluded_zero_points": self.excluded,
            "passed": self.all_passed,
        }


def sweep_fit(ids, Ns, template, potential, tolerance=0.1, threads=1, norms=None,
              as_printed=False):
    """Fit log(bound) against log N for every id.

    ``norms`` may carry precomputed NormReports aligned with ``Ns``;
    otherwise they are computed (in parallel when ``threads > 1``).
    Points that fail upstream are dropped; fewer than 4 survivors abort.
    """
    from .pipeline import norms_at, parallel_map

    ids = tuple(ids) if ids else ERROR_TERM_IDS
    for i in ids:
        if i not in ERROR_TERM_IDS:
            raise DomainError(f"unknown error term id {i!r}")
    if not Ns:
        raise ConfigError("the N grid is empty")
    if norms is None:
        results = parallel_map(norms_at, [(template.with_N(N), potential) for N in Ns], threads)
    else:
        results = [("ok", n) for n in norms]
    good, errors = [], {}
    for N, (status, res) in zip(Ns, results):
        if status == "ok":
            good.append((N, res))
        else:
            errors[repr(float(N))] = res
    if len(good) < 4:
        raise ConfigError(f"only {len(good)} sweep points succeeded: {errors}")
    Ng = [N for N, _ in good]
    values = {i: [] for i in ids}
    for N, rep in good:
        b = all_bounds(rep, template.with_N(N), as_printed)
        for i in ids:
            values[i].append(b[i])
    fits, excluded = {}, {}
    for i in ids:
        # an empty momentum region makes a bound vanish identically at that N
        keep = [j for j, v in enumerate(values[i]) if v > 0]
        if len(keep) < len(Ng):
            excluded[i] = [repr(float(Ng[j])) for j in range(len(Ng)) if j not in keep]
        if len(keep) < 4:
            raise ConfigError(f"{i}: only {len(keep)} sweep points with a nonzero value")
        fits[i] = fit([Ng[j] for j in keep], [values[i][j] for j in keep])
    res = SweepResult(template, ids, Ng, values, fits, target_slope(template), tolerance, errors)
    res.excluded = excluded
    return res
