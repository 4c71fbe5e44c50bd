"""End-to-end evaluation at one parameter point, and deterministic sweeps."""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from .errors import BlabError, ConfigError
from .kernels import build_kernels
from .lattice import TailModel, build_shells, cutoff_norm2, default_cutoff, norm_report
from .potential import eta_table, solve_neumann


@dataclass
class Point:
    params: object
    potential: object
    solution: object
    shells: object
    eta: object
    table: object
    norms: object


def evaluate(params, potential, cutoff=None):
    """Solve, tabulate and reduce at a single (N, kappa, eps, ell)."""
    cutoff = default_cutoff(params) if cutoff is None else cutoff
    shells = build_shells(cutoff_norm2(cutoff))
    sol = solve_neumann(potential, params)
    frag = eta_table(sol, params, shells)
    tail = TailModel.from_eta(frag)
    table = build_kernels(params, frag, sol.a, potential.ident, cutoff=cutoff, tail=tail)
    return Point(params, potential, sol, shells, frag, table, norm_report(table, params))


def log_grid(lo, hi, count):
    if count < 1:
        raise ConfigError("the N grid is empty")
    if count == 1:
        return [float(lo)]
    return [float(x) for x in np.logspace(math.log10(lo), math.log10(hi), count)]


def _run(job):
    fn, arg = job
    try:
        return ("ok", fn(arg))
    except BlabError as exc:
        return ("error", {"type": type(exc).__name__, "message": str(exc),
                          "exit_code": exc.exit_code})


def parallel_map(fn, args, threads=1):
    """Map in a process pool; results come back in input order whatever the schedule.

    Failures of the package's own error types are returned as
    ``("error", {"type", "message", "exit_code"})`` entries instead of
    aborting the sweep.
    """
    jobs = [(fn, a) for a in args]
    if threads <= 1 or len(jobs) <= 1:
        return [_run(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(_run, jobs))


def norms_at(job):
    """NormReport at one point; ``job = (params, potential)``.  Picklable for pools."""
    params, potential = job
    return evaluate(params, potential).norms


# expected log-log slopes of the lattice norms in N, as functions of (kappa, eps)
NORM_SLOPES = {
    "eta_H_2": lambda k, e: 3 * k - 1,
    "eta_H_H1": lambda k, e: 1 + k,
    "sigma_S_2": lambda k, e: 1.5 * k,
    "sigma_S_H1": lambda k, e: 2.5 * k,
    "gamma_sigma_S_1": lambda k, e: 1.5 * k,
}
# sup norms only need to grow no faster than N^(eps + margin)
NORM_SLOPE_CAPS = {"sigma_S_inf2": 0.05, "gamma_S_inf2": 0.05}


def fit_norm_slopes(Ns, reports, params, tolerance=0.15):
    """Slope fits of the lattice norms over a sweep, checked against their expected growth.

    Returns ``{name: dict}`` with the fit, the target and a PASS flag.
    Sweep points where a norm vanishes (an empty momentum region) are
    excluded from its fit and listed.
    """
    from .errbounds import fit

    out = {}
    for name in list(NORM_SLOPES) + list(NORM_SLOPE_CAPS):
        vals = [r.values[name] for r in reports]
        keep = [j for j, v in enumerate(vals) if v > 0]
        row = {"excluded": [repr(float(Ns[j])) for j in range(len(Ns)) if j not in keep]}
        if len(keep) < 3:
            row.update(slope=None, passed=False, N=[], values=[],
                       note="fewer than 3 sweep points with a nonzero value")
            out[name] = row
            continue
        f = fit([Ns[j] for j in keep], [vals[j] for j in keep])
        row.update(f.to_dict())
        if name in NORM_SLOPES:
            target = NORM_SLOPES[name](params.k, params.e)
            row.update(target=target, tolerance=tolerance,
                       passed=abs(f.slope - target) <= tolerance)
        else:
            cap = params.e + NORM_SLOPE_CAPS[name]
            row.update(cap=cap, passed=f.slope <= cap)
        out[name] = row
    return out


@dataclass
class ParsevalResult:
    lattice_sum: float
    integral: float
    tail: float
    max_norm2: int

    @property
    def rel_gap(self):
        return abs(self.lattice_sum - self.integral) / self.integral if self.integral else 0.0

    def passed(self, rtol=1e-6):
        return self.rel_gap < rtol


def parseval_check(solution, params, q_max=20.0):
    """Compare the sum of squared torus coefficients with the radial L2 integral.

    Shells are summed up to unscaled frequency ``q_max``.  Past the cutoff
    |w_hat| is bounded by B p^-4 with B measured on the outer half of the
    shells, which bounds the remainder by B^2 P^-5 / (10 pi^2).
    """
    from . import _backend

    n = max(8, math.ceil(q_max * params.scale / (2 * math.pi)))
    shells = build_shells(n * n)
    m = np.asarray(shells.norm2)
    p = 2 * math.pi * np.sqrt(m.astype(float))
    wh = solution.w_hat(p)
    total = _backend.pairwise_sum(np.asarray(shells.mult) * wh * wh)
    ring = p >= p[-1] / 2
    B = float(np.max(np.abs(wh[ring]) * p[ring] ** 4))
    tail = B * B * p[-1] ** -5 / (10 * math.pi ** 2)
    return ParsevalResult(total, solution.w_l2(), tail, n * n)
