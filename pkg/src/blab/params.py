"""Scaling parameters (N, kappa, eps, ell) and the momentum thresholds they induce."""
from dataclasses import dataclass, field
from fractions import Fraction
import math

from .errors import ConfigError, RegimeError


def parse_rational(text):
    """Parse ``"p/q"``, a decimal string or a number into a Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        return Fraction(repr(text))
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse {text!r} as a rational number") from exc


def default_eps(kappa):
    """min(0.01, (2 - 3 kappa)/8): keeps 3 kappa - 2 + 4 eps < 0 with margin."""
    k = parse_rational(kappa)
    return min(Fraction(1, 100), (2 - 3 * k) / 8)


@dataclass(frozen=True)
class ScalingParams:
    """Particle number scale and exponents.

    ``kappa`` and ``eps`` are stored as exact fractions; float views are
    exposed for numerics.  N is a real number (sweeps use non-integer N).
    """

    N: float
    kappa: Fraction
    eps: Fraction = None
    ell: float = 0.25
    _k: float = field(init=False, repr=False, compare=False)
    _e: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        kappa = parse_rational(self.kappa)
        eps = default_eps(kappa) if self.eps is None else parse_rational(self.eps)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "eps", eps)
        object.__setattr__(self, "N", float(self.N))
        object.__setattr__(self, "ell", float(self.ell))
        object.__setattr__(self, "_k", float(kappa))
        object.__setattr__(self, "_e", float(eps))
        self.validate()

    def validate(self):
        if not (self.N > 1 and math.isfinite(self.N)):
            raise ConfigError(f"N must be a finite number > 1, got {self.N}")
        if not (0 < self.kappa < Fraction(2, 3)):
            raise ConfigError(f"kappa must satisfy 0 < kappa < 2/3, got {self.kappa}")
        if not self.eps > 0:
            raise ConfigError(f"eps must be > 0, got {self.eps}")
        if not 3 * self.kappa - 2 + 4 * self.eps < 0:
            raise RegimeError(
                f"3*kappa - 2 + 4*eps < 0 violated: kappa={self.kappa}, eps={self.eps}")
        if not (0 < self.ell < 0.5):
            raise ConfigError(f"ell must satisfy 0 < ell < 1/2, got {self.ell}")

    @property
    def k(self):
        return self._k

    @property
    def e(self):
        return self._e

    @property
    def scale(self):
        """N^(1-kappa): ratio between box and interaction length."""
        return self.N ** (1.0 - self._k)

    @property
    def ball_radius(self):
        """Radius of the Neumann ball in interaction units, N^(1-kappa) * ell."""
        return self.scale * self.ell

    @property
    def t_s(self):
        return self.N ** (self._k / 2 - self._e)

    @property
    def t_l(self):
        return self.N ** (self._k / 2 + self._e)

    @property
    def t_h(self):
        return self.N ** (1.0 - self._k - self._e)

    def with_N(self, N):
        return ScalingParams(N, self.kappa, self.eps, self.ell)

    def as_dict(self):
        return {"N": self.N, "kappa": str(self.kappa), "eps": str(self.eps), "ell": self.ell}
