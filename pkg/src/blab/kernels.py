"""Momentum regions and the Bogoliubov coefficient tables.

Tags partition the nonzero lattice momenta:

========  ================================
``low``   ``0 < |p| < t_s``
``S``     ``t_s <= |p| <= t_l``
``mid``   ``t_l < |p| <= t_h``
``high``  ``|p| > t_h``
========  ================================

with ``t_s = N^(kappa/2 - eps)``, ``t_l = N^(kappa/2 + eps)`` and
``t_h = N^(1 - kappa - eps)``.  The low-momentum set L is ``|p| <= t_l``.
"""
from dataclasses import dataclass, field
import csv
import io
import json
import math

import numpy as np

from . import _backend
from .errors import ConfigError, DomainError, RegimeError
from .params import ScalingParams, default_eps, parse_rational  # noqa: F401

LOW, S, MID, HIGH = 0, 1, 2, 3
TAGS = ("low", "S", "mid", "high")


def _abs_momentum(p):
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 1 and arr.size == 3:
        return float(np.sqrt(np.sum(arr * arr)))
    if arr.ndim == 0:
        return abs(float(arr))
    raise DomainError("classify expects |p| or a 3-vector")


def tag_codes(p_abs, params):
    """Vectorized region codes for momenta magnitudes ``p_abs > 0``."""
    p = np.asarray(p_abs, dtype=float)
    codes = np.full(p.shape, MID, dtype=np.int8)
    codes[p < params.t_s] = LOW
    codes[(p >= params.t_s) & (p <= params.t_l)] = S
    codes[p > params.t_h] = HIGH
    return codes


def classify(p, params):
    """Region tag of a nonzero momentum, given as ``|p|`` or as a 3-vector.

    Both edges of the S band belong to S; momenta above ``t_h`` are high.
    """
    p_abs = _abs_momentum(p)
    if p_abs == 0:
        raise DomainError("p = 0 is not in the set of nonzero momenta")
    return TAGS[int(tag_codes(np.array([p_abs]), params)[0])]


def in_low(p_abs, params):
    return np.asarray(p_abs) <= params.t_l


def tau(p_abs, params, a):
    """tau_p = artanh(-8 pi a N^kappa / (p^2 + 8 pi a N^kappa)) / 2."""
    p = np.asarray(p_abs, dtype=float)
    if np.any(p == 0):
        raise DomainError("tau is undefined at p = 0")
    g = 8 * math.pi * a * params.N ** params.k
    return 0.5 * np.arctanh(-g / (p * p + g))


def tau_residual(p_abs, t, params, a):
    """|tanh(2 tau)(p^2 + 8 pi a N^kappa) + 8 pi a N^kappa|."""
    p = np.asarray(p_abs, dtype=float)
    g = 8 * math.pi * a * params.N ** params.k
    return np.abs(np.tanh(2 * t) * (p * p + g) + g)


@dataclass
class KernelTable:
    """Per-shell coefficients; immutable by convention once built.

    Arrays are aligned with ``norm2`` (occupied nonzero shells, increasing).
    """

    params: ScalingParams
    a: float
    norm2: np.ndarray
    mult: np.ndarray
    p: np.ndarray
    tag: np.ndarray
    eta: np.ndarray
    tau: np.ndarray
    nu: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    potential_id: str = ""
    tail: object = None
    jump: dict = field(default_factory=dict)

    @property
    def low(self):
        return self.p <= self.params.t_l

    def mask(self, tag):
        if tag == "L":
            return self.low
        return self.tag == TAGS.index(tag)

    def rows(self):
        for i in range(self.norm2.size):
            yield (int(self.norm2[i]), int(self.mult[i]), TAGS[self.tag[i]], self.eta[i],
                   self.nu[i], self.sigma[i], self.gamma[i])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["shell", "mult", "tag", "eta", "nu", "sigma", "gamma"])
        for m, mu, t, *vals in self.rows():
            w.writerow([m, mu, t] + [repr(float(v)) for v in vals])
        return buf.getvalue()

    def to_dict(self):
        return {
            "params": self.params.as_dict(),
            "scattering_length": self.a,
            "potential": self.potential_id,
            "boundary_jump": self.jump,
            "shells": [
                {"shell": m, "mult": mu, "tag": t, "eta": float(e), "nu": float(n),
                 "sigma": float(s), "gamma": float(g)}
                for m, mu, t, e, n, s, g in self.rows()
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def build_kernels(params, eta, a, potential_id="", cutoff=None, tail=None):
    """Assemble the coefficient table from an eta fragment and the scattering length.

    ``nu = tau`` on L and ``nu = eta`` elsewhere; the jump at the boundary of
    L is recorded, not smoothed.  ``cutoff`` is the momentum up to which the
    fragment must reach (default: the lattice cutoff policy).
    """
    from .lattice import cutoff_norm2, default_cutoff

    need = default_cutoff(params) if cutoff is None else cutoff
    p = np.asarray(eta.p, dtype=float)
    if eta.max_norm2 < cutoff_norm2(need):
        raise ConfigError(
            f"eta covers |n|^2 <= {eta.max_norm2} but the cutoff needs {cutoff_norm2(need)}")
    t = tau(p, params, a) if a > 0 else np.zeros(p.size)
    low = p <= params.t_l
    nu = np.where(low, t, eta.eta)
    table = KernelTable(
        params=params, a=a, norm2=np.asarray(eta.norm2), mult=np.asarray(eta.mult), p=p,
        tag=tag_codes(p, params), eta=np.asarray(eta.eta), tau=t, nu=nu,
        sigma=np.sinh(nu), gamma=np.cosh(nu), potential_id=potential_id, tail=tail)
    if np.any(low) and np.any(~low):
        i, j = np.nonzero(low)[0][-1], np.nonzero(~low)[0][0]
        table.jump = {
            "p_inside": float(p[i]), "eta_minus_tau_inside": float(eta.eta[i] - t[i]),
            "p_outside": float(p[j]), "eta_minus_tau_outside": float(eta.eta[j] - t[j]),
        }
    return table


def n_zero(params, table):
    """N_0 = N - sum over L of sigma_p^2."""
    low = table.low
    s2 = _backend.pairwise_sum(table.mult[low] * table.sigma[low] ** 2)
    n0 = params.N - s2
    if not n0 > 0:
        raise RegimeError(f"N_0 = {n0:.4g} <= 0: the low-momentum depletion exceeds N")
    return n0
