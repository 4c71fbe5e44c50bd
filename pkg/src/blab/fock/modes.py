"""Finite sets of integer momentum modes tagged high (H) or small (S)."""
from dataclasses import dataclass, field
import json
import math

import numpy as np

from ..errors import ConfigError

TAGS = ("H", "S")


def _vec(v):
    return tuple(int(x) for x in v)


def _neg(v):
    return tuple(-x for x in v)


def _add(u, v):
    return tuple(a + b for a, b in zip(u, v))


def _sub(u, v):
    return tuple(a - b for a, b in zip(u, v))


@dataclass
class ModeSet:
    """Tagged momenta with kernel coefficients.

    Parameters
    ----------
    vectors : list of 3-tuples of int
    tags : list of "H" or "S"
    eta : dict
        eta_p on H modes, keyed by mode index.
    sigma, gamma : dict
        sigma_p and gamma_p on every mode.  On H modes they default to
        sinh(eta_p) and cosh(eta_p).
    N, N0 : float
        Particle number in the N^(-1/2) prefactors and the condensate size.
    coupling : dict
        Radial weight F(r) standing in for N^kappa Vhat(r / N^(1-kappa)):
        ``{"kind": "gaussian", "amplitude": A, "width": w}`` gives
        ``A exp(-|r|^2 / w^2)``.
    """

    vectors: list
    tags: list
    eta: dict
    sigma: dict
    gamma: dict
    N: float = 10.0
    N0: float = 10.0
    coupling: dict = field(default_factory=lambda: {"kind": "gaussian", "amplitude": 1.0,
                                                    "width": 20.0})
    name: str = "modes"
    toy: bool = True

    def __post_init__(self):
        self.vectors = [_vec(v) for v in self.vectors]
        self.tags = [str(t) for t in self.tags]
        if len(self.vectors) != len(self.tags):
            raise ConfigError("vectors and tags differ in length")
        if len(set(self.vectors)) != len(self.vectors):
            raise ConfigError("duplicate momentum vectors in the mode set")
        if any(t not in TAGS for t in self.tags):
            raise ConfigError(f"tags must be one of {TAGS}")
        if (0, 0, 0) in self.vectors:
            raise ConfigError("the zero momentum cannot be a mode")
        if not self.N > 0 or not self.N0 >= 0:
            raise ConfigError("N must be positive and N0 nonnegative")
        self.index = {v: i for i, v in enumerate(self.vectors)}
        self.neg = []
        for i, v in enumerate(self.vectors):
            j = self.index.get(_neg(v))
            if j is None:
                raise ConfigError(f"mode {v} present without its negative")
            if self.tags[j] != self.tags[i]:
                raise ConfigError(f"modes {v} and {_neg(v)} carry different tags")
            self.neg.append(j)
        self.eta = {int(k): float(x) for k, x in self.eta.items()}
        self.sigma = {int(k): float(x) for k, x in self.sigma.items()}
        self.gamma = {int(k): float(x) for k, x in self.gamma.items()}
        for i in self.high:
            if i not in self.eta:
                raise ConfigError(f"missing eta on high mode {self.vectors[i]}")
            self.sigma.setdefault(i, math.sinh(self.eta[i]))
            self.gamma.setdefault(i, math.cosh(self.eta[i]))
        for i in self.small:
            if i not in self.sigma or i not in self.gamma:
                raise ConfigError(f"missing sigma/gamma on small mode {self.vectors[i]}")
        self.pairs = self._admissible()
        self._check_closure()

    @property
    def size(self):
        return len(self.vectors)

    @property
    def high(self):
        return [i for i, t in enumerate(self.tags) if t == "H"]

    @property
    def small(self):
        return [i for i, t in enumerate(self.tags) if t == "S"]

    def lookup(self, v):
        """Mode index of vector ``v``, or None."""
        return self.index.get(_vec(v))

    def tagged(self, v, tag):
        i = self.index.get(_vec(v))
        return i if i is not None and self.tags[i] == tag else None

    def _admissible(self):
        out = []
        for r in self.high:
            for v in self.small:
                rv = self.tagged(_add(self.vectors[r], self.vectors[v]), "H")
                if rv is not None:
                    out.append((r, v, rv))
        return out

    def _check_closure(self):
        for r, v, rv in self.pairs:
            if self.neg[rv] is None:
                raise ConfigError("closure violated")

    def created(self, pair):
        """Mode indices created by one (r, v): r + v, -r, -v."""
        r, v, rv = pair
        return (rv, self.neg[r], self.neg[v])

    def F(self, r):
        """Radial coupling weight at an arbitrary lattice vector."""
        c = self.coupling
        r2 = float(sum(x * x for x in r))
        if c["kind"] == "gaussian":
            return float(c["amplitude"]) * math.exp(-r2 / float(c["width"]) ** 2)
        if c["kind"] == "table":
            return float(c["values"].get(str(int(r2)), 0.0))
        raise ConfigError(f"unknown coupling kind {c['kind']!r}")

    def unitarity_defect(self):
        """max |gamma^2 - sigma^2 - 1| over the small modes."""
        return max((abs(self.gamma[i] ** 2 - self.sigma[i] ** 2 - 1) for i in self.small),
                   default=0.0)

    def to_dict(self):
        return {
            "name": self.name, "N": self.N, "N0": self.N0, "toy": self.toy,
            "coupling": self.coupling,
            "modes": [
                {"vector": list(v), "tag": t,
                 **({"eta": self.eta[i]} if t == "H" else
                    {"sigma": self.sigma[i], "gamma": self.gamma[i]})}
                for i, (v, t) in enumerate(zip(self.vectors, self.tags))
            ],
        }

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        try:
            modes = d["modes"]
            vectors = [m["vector"] for m in modes]
            tags = [m["tag"] for m in modes]
            eta = {i: m["eta"] for i, m in enumerate(modes) if m["tag"] == "H"}
            sigma = {i: m["sigma"] for i, m in enumerate(modes) if "sigma" in m}
            gamma = {i: m["gamma"] for i, m in enumerate(modes) if "gamma" in m}
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed mode-set definition: {exc}") from None
        kw = {k: d[k] for k in ("N", "N0", "coupling", "name", "toy") if k in d}
        return cls(vectors, tags, eta, sigma, gamma, **kw)

    @classmethod
    def from_json(cls, path):
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read mode set {path}: {exc}") from None


def _build(vectors, tags, rng, N, name, unitary=True):
    eta, sigma, gamma = {}, {}, {}
    done = {}
    for i, (v, t) in enumerate(zip(vectors, tags)):
        # p and -p share coefficients since the kernels are radial
        key = min(v, _neg(v))
        if key not in done:
            if t == "H":
                done[key] = {"eta": float(rng.uniform(-0.9, -0.2))}
            else:
                s = float(rng.uniform(0.3, 1.2))
                g = math.sqrt(1 + s * s) if unitary else float(rng.uniform(1.0, 2.0))
                done[key] = {"sigma": -s, "gamma": g}
        c = done[key]
        if t == "H":
            eta[i] = c["eta"]
        else:
            sigma[i], gamma[i] = c["sigma"], c["gamma"]
    return ModeSet(vectors, tags, eta, sigma, gamma, N=N, N0=N - 1.0, name=name,
                   coupling={"kind": "gaussian", "amplitude": 1.0, "width": 60.0})


def _close(chains, smalls):
    vectors, tags = [], []

    def put(v, t):
        for w in (v, _neg(v)):
            if w not in vectors:
                vectors.append(w)
                tags.append(t)
    for v in smalls:
        put(v, "S")
    for r, v in chains:
        put(r, "H")
        put(_add(r, v), "H")
    return vectors, tags


def generic_mode_set(seed=0, n_small=2, n_chains=2, N=10.0):
    """Random mode set with no accidental momentum relations.

    ``n_small`` small momenta (with negatives) and ``n_chains`` high momenta
    r, each joined to r + v for one small v.  High components are drawn large
    so that momentum coincidences beyond the chains themselves do not occur;
    the set is redrawn if any two constructed modes collide.
    """
    rng = np.random.default_rng(seed)
    for _ in range(1000):
        smalls = [_vec(rng.integers(-3, 4, 3)) for _ in range(n_small)]
        if any(v == (0, 0, 0) for v in smalls) or len({min(v, _neg(v)) for v in smalls}) < n_small:
            continue
        if any(_add(a, b) in smalls or _add(a, _neg(b)) in smalls
               for a in smalls for b in smalls if a != b):
            continue
        chains = [(_vec(rng.integers(-60, 61, 3)), smalls[j % n_small]) for j in range(n_chains)]
        vectors, tags = _close(chains, smalls)
        if len(vectors) == 2 * n_small + 4 * n_chains:
            return _build(vectors, tags, rng, N, f"generic-{seed}")
    raise ConfigError("could not draw a generic mode set")


def single_pair_mode_set(eta=(-0.5, -0.3), sigma=-0.8, N=10.0):
    """Smallest closed set: one chain r, r + v and one small v (six modes)."""
    r, v = (20, 3, -7), (1, 0, 1)
    vectors, tags = _close([(r, v)], [v])
    rng = np.random.default_rng(0)
    ms = _build(vectors, tags, rng, N, "single-pair")
    for i, w in enumerate(ms.vectors):
        if ms.tags[i] == "H":
            ms.eta[i] = eta[0] if w in (r, _neg(r)) else eta[1]
            ms.sigma[i], ms.gamma[i] = math.sinh(ms.eta[i]), math.cosh(ms.eta[i])
        else:
            ms.sigma[i], ms.gamma[i] = sigma, math.sqrt(1 + sigma * sigma)
    return ms


def degenerate_mode_set(kind="double", seed=0, N=10.0):
    """Mode sets with deliberate momentum coincidences.

    ``"double"``: two small momenta with w = 2 v.
    ``"shared"``: two chains sharing a high endpoint, r2 = r1 + v.
    """
    rng = np.random.default_rng(seed)
    v = (1, 0, 1)
    if kind == "double":
        w = (2, 0, 2)
        r1 = (23, -5, 11)
        vectors, tags = _close([(r1, v), (r1, w)], [v, w])
    elif kind == "shared":
        w = (0, 1, -1)
        r1 = (23, -5, 11)
        vectors, tags = _close([(r1, v), (_add(r1, v), v), (r1, w)], [v, w])
    else:
        raise ConfigError(f"unknown degenerate kind {kind!r}")
    return _build(vectors, tags, rng, N, f"degenerate-{kind}")
