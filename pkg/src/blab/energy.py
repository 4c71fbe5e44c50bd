"""Energy expressions: the LHY density, the main term, the constant C_GN and the exponent budget."""
from dataclasses import dataclass, field
from fractions import Fraction
import math
import warnings

import numpy as np

from . import _backend
from .errors import ConfigError, DomainError
from .lattice import SumResult, autocorr_conv_sum, direct_conv_sum, memory_budget
from .params import parse_rational
from .potential import fourier_hat

LHY_CONSTANT = 128 / (15 * math.sqrt(math.pi))


def lhy_density(rho, a):
    """4 pi a rho^2 (1 + 128/(15 sqrt(pi)) (rho a^3)^(1/2))."""
    if rho < 0 or a < 0:
        raise DomainError("density and scattering length must be nonnegative")
    gas = rho * a ** 3
    if gas > 1e-2:
        warnings.warn(f"rho a^3 = {gas:.3g} is not dilute", RuntimeWarning, stacklevel=2)
    return 4 * math.pi * a * rho ** 2 * (1 + LHY_CONSTANT * math.sqrt(gas))


def lhy_factor(params, a):
    """128/(15 sqrt(pi)) (a^3 N^(3 kappa - 2))^(1/2)."""
    return LHY_CONSTANT * math.sqrt(a ** 3 * params.N ** (3 * params.k - 2))


def main_term(params, a):
    """4 pi a N^(1+kappa) (1 + 128/(15 sqrt(pi)) (a^3 N^(3 kappa - 2))^(1/2))."""
    return 4 * math.pi * a * params.N ** (1 + params.k) * (1 + lhy_factor(params, a))


def second_order_term(params, a):
    """The part of :func:`main_term` beyond leading order; scales as N^(5 kappa/2)."""
    return 4 * math.pi * a * params.N ** (1 + params.k) * lhy_factor(params, a)


TERM_NAMES = ("vhat0", "kinetic", "pairing", "low_depletion", "convolution", "condensate_shift")


@dataclass
class EnergyReport:
    main: float
    lhy_factor: float
    terms: dict
    tails: dict
    meta: dict = field(default_factory=dict)

    @property
    def total(self):
        return _backend.pairwise_sum(np.array([self.terms[k] for k in TERM_NAMES]))

    def to_dict(self):
        return {"main_term": self.main, "lhy_factor": self.lhy_factor,
                "terms": dict(self.terms), "tails": dict(self.tails), "total": self.total,
                "meta": self.meta}


def _coupling(params, potential, p):
    return params.N ** params.k * fourier_hat(potential, np.asarray(p, dtype=float) / params.scale)


def max_conv_radius(budget=None):
    """Largest support radius K the FFT convolution fits in the memory budget."""
    budget = memory_budget() if budget is None else budget
    n = int((budget / 40) ** (1 / 3))
    return max(0, (n - 1) // 4 - 1)


def conv_tables(params, potential, table, K):
    """g = sigma gamma on |n|^2 <= K^2 (zero at n = 0) and F on |n|^2 <= 4 K^2."""
    M = K * K
    gtab = np.zeros(M + 1)
    sel = table.norm2 <= M
    gtab[table.norm2[sel]] = table.sigma[sel] * table.gamma[sel]
    d = np.arange(4 * M + 1, dtype=float)
    Ftab = _coupling(params, potential, 2 * math.pi * np.sqrt(d))
    return gtab, Ftab


def c_gn_breakdown(params, table, potential, K=None, cross_check=False, budget=None):
    """The six terms of C_GN with tail estimates.

    Terms, with F(p) = N^kappa Vhat(p / N^(1-kappa)) and sums over nonzero p:

    1. N^(1+kappa) Vhat(0) / 2
    2. sum p^2 sigma_p^2
    3. sum F(p) sigma_p gamma_p
    4. sum over L of F(p) sigma_p^2
    5. (1/2N) sum over p != q of F(p - q) sigma_p gamma_p sigma_q gamma_q
    6. -(1/N) (sum over L of sigma^2) (sum outside L of F(p) eta_p)

    Term 5 uses the FFT autocorrelation with the g-support radius ``K``
    (default: the whole table, capped by the memory budget); the truncated
    part is estimated from the mass of g beyond ``K``.
    """
    N, p, mult = params.N, table.p, table.mult
    sig, gam, eta = table.sigma, table.gamma, table.eta
    tail = table.tail
    psum = _backend.pairwise_sum
    F = _coupling(params, potential, p)
    L = table.low
    P = tail.P if tail else p[-1]
    ring = p >= P / 2
    B2 = float(np.max(np.abs(F[ring]) * p[ring] ** 2)) if np.any(ring) else 0.0
    terms, tails = {}, {}
    terms["vhat0"] = 0.5 * N ** (1 + params.k) * fourier_hat(potential, 0.0)
    tails["vhat0"] = 0.0
    terms["kinetic"] = psum(mult * p * p * sig * sig)
    tails["kinetic"] = tail.bound(2, 2) * math.cosh(tail.A / P ** 4) ** 2 if tail else 0.0
    terms["pairing"] = psum(mult * F * sig * gam)
    tails["pairing"] = tail.bound(0, 1, decay=2, coef=B2) * 1.01 if tail else 0.0
    terms["low_depletion"] = psum(mult[L] * F[L] * sig[L] ** 2) if np.any(L) else 0.0
    tails["low_depletion"] = 0.0
    sigma_L2 = psum(mult[L] * sig[L] ** 2) if np.any(L) else 0.0
    out = ~L
    terms["condensate_shift"] = -sigma_L2 / N * psum(mult[out] * F[out] * eta[out])
    tails["condensate_shift"] = sigma_L2 / N * tail.bound(0, 1, decay=2, coef=B2) if tail else 0.0

    Kfull = math.isqrt(int(table.norm2[-1]))
    if K is None:
        K = min(Kfull, max_conv_radius(budget))
    K = int(K)
    gtab, Ftab = conv_tables(params, potential, table, K)
    terms["convolution"] = autocorr_conv_sum(gtab, K, Ftab, budget=budget) / (2 * N)
    # Omitted pairs have p or q beyond K.  For radially decreasing |F| and |g|
    # the inner sum over q is largest at the truncation edge, where it is
    # evaluated exactly.
    g = np.abs(sig * gam)
    edge = _backend.shifted_table_sum((K, 0, 0), 0, K * K, np.abs(Ftab), np.abs(gtab))
    beyond = table.norm2 > K * K
    T1 = psum(mult[beyond] * g[beyond]) if np.any(beyond) else 0.0
    T1 += tail.bound(0, 1) * 1.01 if tail else 0.0
    tails["convolution"] = T1 * edge / N
    meta = dict(params.as_dict(), potential=table.potential_id, conv_radius=K)
    if cross_check:
        direct = direct_conv_sum(gtab, K, Ftab) / (2 * N)
        meta["convolution_direct"] = direct
        meta["convolution_rel_gap"] = abs(direct - terms["convolution"]) / abs(direct)
    return EnergyReport(main=main_term(params, table.a), lhy_factor=lhy_factor(params, table.a),
                        terms=terms, tails=tails, meta=meta)


@dataclass
class ExponentBudget:
    kappa: Fraction
    eps: Fraction
    exponents: dict
    old_admissible: bool
    new_admissible: bool
    thresholds: dict
    thresholds_at_eps: dict
    boundary: list

    def rows(self):
        for name, value in self.exponents.items():
            yield name, value, self.thresholds.get(name), self.thresholds_at_eps.get(name)

    def to_csv(self):
        lines = ["exponent,value,threshold_eps0,threshold_at_eps,at_boundary"]
        for name, value, th0, th in self.rows():
            lines.append(f"{name},{value},{'' if th0 is None else th0},"
                         f"{'' if th is None else th},{str(value == 0).lower()}")
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {
            "kappa": str(self.kappa), "eps": str(self.eps),
            "exponents": {k: str(v) for k, v in self.exponents.items()},
            "old_admissible": self.old_admissible, "new_admissible": self.new_admissible,
            "thresholds": {k: str(v) for k, v in self.thresholds.items()},
            "thresholds_at_eps": {k: str(v) for k, v in self.thresholds_at_eps.items()},
            "boundary": self.boundary,
        }


# exponent = slope * kappa + offset + eps_coef * eps, relative to N^(5 kappa / 2)
_FAMILIES = {
    "9k-5+6e": (Fraction(9), Fraction(-5), Fraction(6)),
    "21k/4-3+3e": (Fraction(21, 4), Fraction(-3), Fraction(3)),
    "12k-7+5e": (Fraction(12), Fraction(-7), Fraction(5)),
    "-e": (Fraction(0), Fraction(0), Fraction(-1)),
}
OLD_FAMILY = ("9k-5+6e", "21k/4-3+3e", "-e")
NEW_FAMILY = ("12k-7+5e",)


def exponent_budget(kappa, eps):
    """Exact exponent bookkeeping for the error budgets.

    The old bound is admissible when every exponent of the first family is
    negative, the new one when 12 kappa - 7 + 5 eps < 0.  Thresholds are the
    kappa values where each exponent vanishes, at eps = 0 and at the given eps.
    ``eps = 0`` is accepted to evaluate the limiting thresholds.
    """
    k, e = parse_rational(kappa), parse_rational(eps)
    if not (0 < k < Fraction(2, 3)):
        raise ConfigError(f"kappa must satisfy 0 < kappa < 2/3, got {k}")
    if e < 0:
        raise ConfigError(f"eps must be >= 0, got {e}")
    ex = {name: s * k + c + ee * e for name, (s, c, ee) in _FAMILIES.items()}
    th0 = {name: -c / s for name, (s, c, ee) in _FAMILIES.items() if s}
    th = {name: -(c + ee * e) / s for name, (s, c, ee) in _FAMILIES.items() if s}
    old = all(ex[n] < 0 for n in ("9k-5+6e", "21k/4-3+3e")) and (e > 0)
    new = ex["12k-7+5e"] < 0 and e > 0
    boundary = [n for n, v in ex.items() if v == 0]
    return ExponentBudget(k, e, ex, old, new, th0, th, boundary)
