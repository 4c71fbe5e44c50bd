"""Interaction potentials, radial Fourier transforms and the Neumann scattering problem.

Radial problems are solved for ``u(r) = r f(r)``.  With the convention
``-Laplacian + V/2`` the zero-energy equation is ``u'' = V u / 2`` and the
Neumann problem on the ball of radius ``R_b`` is ``u'' = (V/2 - lam) u``.
"""
from dataclasses import dataclass, field
import csv
import json
import math

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from . import _backend
from .errors import ConfigError, GeometryError, InvalidPotentialError, SolverError

GL_ORDER = 16
ODE_RTOL = 1e-13
ODE_ATOL = 1e-15

_GL_X, _GL_W = leggauss(GL_ORDER)

MODELS = ("soft-sphere", "bump", "tabulated")


@dataclass(frozen=True)
class PotentialSpec:
    """A radial, nonnegative potential supported in the ball of radius ``R``.

    Models
    ------
    soft-sphere
        ``V0`` for ``r <= R``.
    bump
        ``V0 (1 - (r/R)^2)^3``, twice continuously differentiable.
    tabulated
        Piecewise linear through ``samples = (r, V)``; ``R`` is the last
        radius and the profile is constant below the first sample.
    """

    model: str = "soft-sphere"
    V0: float = 1.0
    R: float = 1.0
    samples: tuple = None
    name: str = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise InvalidPotentialError(f"unknown potential model {self.model!r}")
        if self.model == "tabulated":
            if self.samples is None:
                raise InvalidPotentialError("tabulated potential needs samples")
            r = np.asarray(self.samples[0], dtype=float)
            v = np.asarray(self.samples[1], dtype=float)
            if r.ndim != 1 or r.shape != v.shape or r.size < 2:
                raise InvalidPotentialError("tabulated potential needs at least 2 samples")
            if not (np.all(np.isfinite(r)) and np.all(np.isfinite(v))):
                raise InvalidPotentialError("tabulated samples must be finite")
            if r[0] < 0 or np.any(np.diff(r) <= 0):
                raise InvalidPotentialError("sample radii must be nonnegative and increasing")
            if np.any(v < 0):
                raise InvalidPotentialError("potential must be nonnegative")
            object.__setattr__(self, "samples", (tuple(r.tolist()), tuple(v.tolist())))
            object.__setattr__(self, "R", float(r[-1]))
            object.__setattr__(self, "V0", float(v.max()))
        else:
            if not (math.isfinite(self.V0) and self.V0 >= 0):
                raise InvalidPotentialError(f"V0 must be finite and >= 0, got {self.V0}")
        if not (math.isfinite(self.R) and self.R > 0):
            raise InvalidPotentialError(f"R must be positive, got {self.R}")

    @property
    def ident(self):
        if self.name:
            return self.name
        if self.model == "tabulated":
            return f"tabulated(n={len(self.samples[0])},R={self.R:g})"
        return f"{self.model}(V0={self.V0:g},R={self.R:g})"

    @property
    def is_zero(self):
        if self.model == "tabulated":
            return max(self.samples[1]) == 0.0
        return self.V0 == 0.0

    def breakpoints(self):
        """Radii where the profile is not smooth, including 0 and R."""
        if self.model == "tabulated":
            r = [x for x in self.samples[0] if x > 0]
            return np.array([0.0] + r)
        return np.array([0.0, self.R])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self.model == "soft-sphere":
            out = np.where(r <= self.R, self.V0, 0.0)
        elif self.model == "bump":
            x = np.clip(r / self.R, 0.0, 1.0)
            out = np.where(r <= self.R, self.V0 * (1.0 - x * x) ** 3, 0.0)
        else:
            rs, vs = self.samples
            out = np.where(r <= self.R, np.interp(r, rs, vs), 0.0)
        return out if out.ndim else float(out)

    def to_dict(self):
        d = {"model": self.model, "V0": self.V0, "R": self.R, "id": self.ident}
        if self.samples is not None:
            d["samples"] = [list(self.samples[0]), list(self.samples[1])]
        return d


def soft_sphere(V0=1.0, R=1.0):
    return PotentialSpec("soft-sphere", V0, R)


def bump(V0=1.0, R=1.0):
    return PotentialSpec("bump", V0, R)


def load_csv(path, name=None):
    """Read a two-column ``r, V(r)`` profile; a non-numeric header row is skipped."""
    rs, vs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                r, v = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if rs:
                    raise InvalidPotentialError(f"bad row in {path}: {row}")
                continue
            rs.append(r)
            vs.append(v)
    return PotentialSpec("tabulated", samples=(rs, vs), name=name)


def gl_panels(breaks, max_width):
    """Gauss-Legendre nodes and weights on panels between ``breaks``.

    Each interval is split into equal panels no wider than ``max_width``.
    """
    nodes, weights = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        n = max(1, int(math.ceil((b - a) / max_width)))
        edges = np.linspace(a, b, n + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        nodes.append((mid[:, None] + half[:, None] * _GL_X[None, :]).ravel())
        weights.append((half[:, None] * _GL_W[None, :]).ravel())
    return np.concatenate(nodes), np.concatenate(weights)


def _panel_level(s, length):
    """Number of wavelength halvings needed so panels hold >= 16 nodes per wavelength."""
    waves = np.asarray(s, dtype=float) * length / (2 * math.pi)
    return np.ceil(np.log2(np.maximum(waves, 1.0))).astype(int)


def radial_transform(fun, breaks, s):
    """``4 pi int r^2 fun(r) sinc(s r) dr`` over ``[breaks[0], breaks[-1]]``.

    ``sinc(x) = sin(x)/x``.  Panels are refined per frequency band so every
    panel spans at most one wavelength of the oscillation.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    breaks = np.asarray(breaks, dtype=float)
    length = breaks[-1] - breaks[0]
    out = np.empty(s.size)
    levels = _panel_level(s, length)
    for lev in np.unique(levels):
        idx = np.nonzero(levels == lev)[0]
        x, w = gl_panels(breaks, length / 2 ** lev)
        g = w * x * x * fun(x)
        ss = s[idx]
        # sinc(s x) = sin(s x)/(s x); small s handled through the limit
        small = ss * breaks[-1] < 1e-4
        res = np.empty(ss.size)
        if np.any(~small):
            sb = ss[~small]
            res[~small] = _backend.sine_moments(sb, x, g / x) / sb
        if np.any(small):
            sb = ss[small]
            m0 = float(np.sum(g))
            m2 = float(np.sum(g * x * x))
            res[small] = m0 - sb * sb * m2 / 6.0
        out[idx] = 4 * math.pi * res
    return out


def _sphere_form(x):
    """(sin x - x cos x)/x^3 with its Taylor series near 0."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-2
    xs = x[small]
    x2 = xs * xs
    out[small] = 1 / 3 - x2 / 30 + x2 * x2 / 840 - x2 ** 3 / 45360
    xb = x[~small]
    out[~small] = (np.sin(xb) - xb * np.cos(xb)) / xb ** 3
    return out


def fourier_hat(potential, s):
    """Three-dimensional Fourier transform of the radial profile at ``|k| = s``.

    Returns a float for scalar input, an array otherwise.
    """
    scalar = np.isscalar(s)
    s = np.atleast_1d(np.asarray(s, dtype=float))
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ConfigError("fourier_hat needs finite s >= 0")
    if potential.is_zero:
        out = np.zeros(s.size)
    elif potential.model == "soft-sphere":
        R = potential.R
        out = 4 * math.pi * potential.V0 * R ** 3 * _sphere_form(s * R)
    else:
        out = radial_transform(potential, potential.breakpoints(), s)
    return float(out[0]) if scalar else out


def _integrate_inner(potential, lam, dense=False):
    """Integrate u'' = (V/2 - lam) u from u(0)=0, u'(0)=1 to r = R, piece by piece."""
    breaks = potential.breakpoints()
    y = np.array([0.0, 1.0])
    pieces = []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if potential.model == "soft-sphere":
            c = 0.5 * potential.V0 - lam

            def rhs(r, y, c=c):
                return [y[1], c * y[0]]
        else:
            def rhs(r, y):
                return [y[1], (0.5 * potential(r) - lam) * y[0]]

        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=ODE_RTOL, atol=ODE_ATOL,
                        dense_output=dense)
        if not sol.success:
            raise SolverError(f"radial ODE failed on [{a}, {b}]: {sol.message}")
        y = sol.y[:, -1]
        if not np.all(np.isfinite(y)):
            raise SolverError(f"radial ODE overflow on [{a}, {b}] (lam={lam})")
        pieces.append((a, b, sol.sol))
    return y, pieces


def scattering_length(potential):
    """Scattering length from the zero-energy radial solution.

    Outside the support ``u`` is linear, ``u(r) = u'(R)(r - a)``, so
    ``a = R - u(R)/u'(R)``.
    """
    if potential.is_zero:
        return 0.0
    (u, du), _ = _integrate_inner(potential, 0.0)
    return potential.R - u / du


def _outer(uR, duR, k, t):
    """u and u' at distance t beyond R for u'' = -k^2 u."""
    kt = k * t
    sinc = np.sinc(kt / math.pi)
    u = uR * np.cos(kt) + duR * t * sinc
    du = -uR * k * k * t * sinc + duR * np.cos(kt)
    return u, du


@dataclass
class ScatteringSolution:
    """Normalized solution of the Neumann problem on the ball of radius ``R_b``.

    Radii are in interaction units (the unscaled potential); the physical
    profile is ``f_N(x) = f(N^(1-kappa) x)``.  ``u`` values are normalized so
    that ``f(R_b) = 1``.
    """

    potential: PotentialSpec
    params: object
    lam: float
    a: float
    R_b: float
    uR: float = 0.0
    duR: float = 0.0
    _scale: float = 1.0
    _pieces: list = field(default_factory=list, repr=False)
    _inner_cache: dict = field(default_factory=dict, repr=False)

    @property
    def k(self):
        return math.sqrt(self.lam)

    @property
    def R(self):
        return self.potential.R

    @property
    def trivial(self):
        return self.potential.is_zero

    def _u_inner(self, r):
        r = np.asarray(r, dtype=float)
        out = np.empty(r.shape)
        for a, b, sol in self._pieces:
            sel = (r >= a) & (r <= b)
            if np.any(sel):
                out[sel] = sol(r[sel])[0] * self._scale
        return out

    def f(self, r):
        """Radial profile f(r) on [0, R_b]."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        if self.trivial:
            return np.ones(r.shape)
        out = np.empty(r.shape)
        inner = r <= self.R
        if np.any(inner):
            ri = r[inner]
            ui = self._u_inner(ri)
            with np.errstate(invalid="ignore", divide="ignore"):
                out[inner] = np.where(ri > 0, ui / np.where(ri > 0, ri, 1.0),
                                      self._scale * 1.0)
        if np.any(~inner):
            t = r[~inner] - self.R
            u, _ = _outer(self.uR, self.duR, self.k, t)
            out[~inner] = u / r[~inner]
        return out

    def w(self, r):
        return 1.0 - self.f(r)

    def _inner_nodes(self, level):
        if level not in self._inner_cache:
            breaks = self.potential.breakpoints()
            x, wts = gl_panels(breaks, self.R / 2 ** level)
            h = x - self._u_inner(x)
            self._inner_cache[level] = (x, wts, h)
        return self._inner_cache[level]

    def wl_hat(self, q):
        """Transform of w = 1 - f over the Neumann ball, at unscaled frequency q.

        Inside the potential support the integrand ``s w(s) sin(q s)`` is
        integrated by Gauss-Legendre panels.  Outside, ``u'' = -k^2 u`` gives
        the exact antiderivative ``(u' sin(qs) - q u cos(qs)) / (q^2 - k^2)``,
        and the Neumann condition makes the upper-end terms cancel up to a
        factor k^2.
        """
        q = np.atleast_1d(np.asarray(q, dtype=float))
        if self.trivial:
            return np.zeros(q.size)
        out = np.empty(q.size)
        R, Rb, k2 = self.R, self.R_b, self.lam
        zero = q == 0
        if np.any(zero):
            out[zero] = self._wl_hat_zero()
        qq = q[~zero]
        if qq.size:
            levels = _panel_level(qq, R)
            j_in = np.empty(qq.size)
            for lev in np.unique(levels):
                idx = np.nonzero(levels == lev)[0]
                x, wts, h = self._inner_nodes(int(lev))
                j_in[idx] = _backend.sine_moments(qq[idx], x, wts * h)
            q2 = qq * qq
            xb = np.sin(qq * Rb) - qq * Rb * np.cos(qq * Rb)
            xr = np.sin(qq * R) - qq * R * np.cos(qq * R)
            ur = self.duR * np.sin(qq * R) - qq * self.uR * np.cos(qq * R)
            j_out = -k2 * xb / (q2 * (q2 - k2)) - xr / q2 + ur / (q2 - k2)
            out[~zero] = 4 * math.pi * (j_in + j_out) / qq
        return out

    def _wl_hat_zero(self):
        x, wts, h = self._inner_nodes(0)
        j_in = float(np.sum(wts * h * x))
        R, Rb = self.R, self.R_b
        # int_R^Rb s u ds = (R u'(R) - u(R)) / k^2 because R_b u'(R_b) = u(R_b)
        su = (R * self.duR - self.uR) / self.lam
        j_out = (Rb ** 3 - R ** 3) / 3 - su
        return 4 * math.pi * (j_in + j_out)

    def w_hat(self, p_abs):
        """Torus Fourier coefficient of w(N^(1-kappa) x) at physical momentum |p|."""
        L = self.params.scale
        return L ** -3 * self.wl_hat(np.asarray(p_abs, dtype=float) / L)

    def w_l2(self):
        """Squared L2 norm of w(N^(1-kappa) x) over the torus, by radial quadrature."""
        if self.trivial:
            return 0.0
        R, Rb = self.R, self.R_b
        x, wts, h = self._inner_nodes(0)
        inner = float(np.sum(wts * h * h))
        # w ~ a/s outside: geometric panels resolve it uniformly
        edges = np.unique(np.concatenate([[R], R * np.geomspace(1, Rb / R, 64), [Rb]]))
        xo, wo = gl_panels(edges, np.inf)
        wv = 1.0 - self.f(xo)
        outer = float(np.sum(wo * xo * xo * wv * wv))
        return 4 * math.pi * (inner + outer) * self.params.scale ** -3

    def grid(self, n=201):
        r = np.linspace(0.0, self.R_b, n)
        return r, self.f(r)

    def to_dict(self, shells=None):
        r, f = self.grid()
        d = {
            "potential": self.potential.to_dict(),
            "params": self.params.as_dict(),
            "ball_radius": self.R_b,
            "lambda": self.lam,
            "scattering_length": self.a,
            "grid_r": r.tolist(),
            "grid_f": f.tolist(),
        }
        if shells is not None:
            m = np.asarray(shells.norm2)
            p = 2 * math.pi * np.sqrt(m)
            d["w_hat_shells"] = {"norm2": m.tolist(), "w_hat": self.w_hat(p).tolist()}
        return d


def solve_neumann(potential, params):
    """Lowest Neumann eigenfunction of -u'' + (V/2) u on the ball of radius N^(1-kappa) ell.

    The eigenvalue is bracketed in (0, (pi/R_b)^2) and located with Brent's
    method on the mismatch ``g(lam) = R_b u'(R_b) - u(R_b)``.
    """
    Rb = params.ball_radius
    R = potential.R
    if not R < Rb:
        raise GeometryError(
            f"potential support R={R} does not fit in the Neumann ball of radius {Rb:g}")
    if potential.is_zero:
        return ScatteringSolution(potential, params, 0.0, 0.0, Rb, uR=R, duR=1.0,
                                  _pieces=[])

    def mismatch(lam):
        (u, du), _ = _integrate_inner(potential, lam)
        ub, dub = _outer(u, du, math.sqrt(lam), Rb - R)
        return (Rb * dub - ub) / abs(du)

    hi = (math.pi / Rb) ** 2
    g_lo, g_hi = mismatch(0.0), mismatch(hi)
    if not (g_lo > 0 > g_hi):
        raise SolverError(
            f"Neumann eigenvalue not bracketed: g(0)={g_lo:.3e}, g({hi:.3e})={g_hi:.3e}")
    lam = brentq(mismatch, 0.0, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)
    (u, du), pieces = _integrate_inner(potential, lam, dense=True)
    ub, _ = _outer(u, du, math.sqrt(lam), Rb - R)
    c = ub / Rb
    sol = ScatteringSolution(potential, params, lam, scattering_length(potential), Rb,
                             uR=u / c, duR=du / c, _scale=1.0 / c, _pieces=pieces)
    return sol


@dataclass
class EtaFragment:
    """eta_p = -N w_hat(p) on the nonzero shells of a shell table."""

    norm2: np.ndarray
    mult: np.ndarray
    p: np.ndarray
    eta: np.ndarray
    c2: float
    max_norm2: int = 0

    def to_dict(self):
        return {"norm2": self.norm2.tolist(), "eta": self.eta.tolist(), "c2": self.c2}


def eta_table(solution, params, shells):
    """Tabulate eta on every occupied nonzero shell of ``shells``.

    Also returns ``c2 = max p^2 |eta_p| / N^kappa``.
    """
    m = np.asarray(shells.norm2, dtype=np.int64)
    mult = np.asarray(shells.mult, dtype=np.int64)
    keep = m > 0
    m, mult = m[keep], mult[keep]
    p = 2 * math.pi * np.sqrt(m.astype(float))
    if p.size == 0 or p[-1] <= params.t_h:
        raise ConfigError(
            f"shell cutoff |p|<={p[-1] if p.size else 0:.4g} does not reach the high-momentum "
            f"edge {params.t_h:.4g}")
    eta = -params.N * solution.w_hat(p)
    c2 = float(np.max(p * p * np.abs(eta))) / params.N ** params.k
    return EtaFragment(m, mult, p, eta, c2, int(shells.max_norm2))


def dump_json(solution, path, shells=None):
    with open(path, "w") as fh:
        json.dump(solution.to_dict(shells), fh, indent=1, sort_keys=True)
