"""Sparse bosonic Fock vectors over a finite mode set.

A basis state is a sorted tuple of ``(mode, count)`` pairs with positive
counts; the vacuum is the empty tuple.
"""
import math

from ..errors import TruncationError

VACUUM = ()


def occupation(state, i):
    for j, n in state:
        if j == i:
            return n
    return 0


def occupied(state):
    return {j for j, _ in state}


def particles(state):
    return sum(n for _, n in state)


def _with(state, i, n):
    out = [(j, c) for j, c in state if j != i]
    if n:
        out.append((i, n))
    out.sort()
    return tuple(out)


class FockVector:
    """Real amplitudes on occupation-number basis states.

    Parameters
    ----------
    amps : dict, optional
        Map from basis state to amplitude.
    n_max : int, optional
        Per-mode occupation cap; exceeding it raises TruncationError
        instead of silently dropping the component.
    """

    __slots__ = ("amps", "n_max")

    def __init__(self, amps=None, n_max=None):
        self.amps = dict(amps) if amps else {}
        self.n_max = n_max

    def copy(self):
        return FockVector(self.amps, self.n_max)

    def __len__(self):
        return len(self.amps)

    def items(self):
        """Basis states in sorted order, so every reduction sees a fixed sequence."""
        return sorted(self.amps.items())

    def add(self, state, amp):
        if amp:
            self.amps[state] = self.amps.get(state, 0.0) + amp

    def iadd(self, other, scale=1.0):
        for s, a in other.amps.items():
            self.add(s, scale * a)
        return self

    def scaled(self, c):
        return FockVector({s: c * a for s, a in self.amps.items()}, self.n_max)

    def create(self, i):
        """a*_i applied to the vector."""
        out = FockVector(n_max=self.n_max)
        for s, a in self.items():
            n = occupation(s, i)
            if self.n_max is not None and n + 1 > self.n_max:
                raise TruncationError(f"occupation of mode {i} would exceed n_max={self.n_max}")
            out.add(_with(s, i, n + 1), a * math.sqrt(n + 1))
        return out

    def annihilate(self, i):
        """a_i applied to the vector."""
        out = FockVector(n_max=self.n_max)
        for s, a in self.items():
            n = occupation(s, i)
            if n:
                out.add(_with(s, i, n - 1), a * math.sqrt(n))
        return out

    def inner(self, other):
        """<self, other> summed over common basis states in sorted order."""
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        keys = sorted(k for k in small.amps if k in big.amps)
        total = math.fsum(small.amps[k] * big.amps[k] for k in keys)
        return total

    def norm2(self):
        return math.fsum(a * a for a in self.amps.values())

    def particle_numbers(self):
        return sorted({particles(s) for s, a in self.amps.items() if a})

    def pruned(self):
        return FockVector({s: a for s, a in self.amps.items() if a}, self.n_max)

    def __repr__(self):
        return f"FockVector({len(self)} states)"


def vacuum(n_max=None):
    return FockVector({VACUUM: 1.0}, n_max)
