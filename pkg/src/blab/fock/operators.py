"""The cubic operator A, the restriction projector Theta, and the error operators.

Operators act on :class:`FockVector` through exact bosonic algebra.  The
error operators are stored as lists of normal-ordered monomials with their
coefficient already evaluated on the mode set.
"""
from dataclasses import dataclass, field
import math

from ..errors import DomainError, ResourceError
from .modes import _add, _neg, _sub
from .space import FockVector, occupied, vacuum


# ---------------------------------------------------------------- restrictions

def theta(tuples, allow_same_index=True):
    """Combinatorial restriction on a list of (r, v) momentum pairs.

    Returns 0 when some -p_i + v_j = p_k with j != k, where p_i runs over
    {-r_i, r_i + v_i}; otherwise 1.  ``allow_same_index`` decides whether
    i = j is part of the product.
    """
    ps = [((_neg(r)), _add(r, v)) for r, v in tuples]
    vs = [v for _, v in tuples]
    m = len(tuples)
    for j in range(m):
        for k in range(m):
            if j == k:
                continue
            targets = set(ps[k])
            for i in range(m):
                if i == j and not allow_same_index:
                    continue
                for p in ps[i]:
                    if _add(_neg(p), vs[j]) in targets:
                        return 0
    return 1


def theta_allows(modes, pair, occ):
    """Theta_{r,v} evaluated on a set of occupied mode indices (True keeps the state)."""
    r, v, rv = pair
    vec = modes.vectors
    for s in occ:
        if modes.tags[s] == "H":
            t = modes.lookup(_add(_neg(vec[s]), vec[v]))
            if t is not None and t in occ:
                return False
        else:
            for u in (_sub(vec[r], vec[s]), _sub(_sub(_neg(vec[r]), vec[v]), vec[s])):
                t = modes.lookup(u)
                if t is not None and t in occ:
                    return False
    return True


def theta_op_apply(modes, pair, vec):
    """Theta_{r,v} applied to a vector: a diagonal 0/1 projector on basis states."""
    out = FockVector(n_max=vec.n_max)
    for s, a in vec.items():
        if theta_allows(modes, pair, occupied(s)):
            out.add(s, a)
    return out


def theta_sequence(modes, seq):
    """Product of Theta factors met while creating the pairs of ``seq`` in order.

    ``seq`` lists mode-index triples (r, v, r+v); the first entry acts first
    on the vacuum.
    """
    occ = set()
    for pair in seq:
        if not theta_allows(modes, pair, occ):
            return 0
        occ.update(modes.created(pair))
    return 1


# ------------------------------------------------------------------- cubic A

def apply_A(modes, vec, restrict=True):
    """A = N^(-1/2) sum eta_r sigma_v a*_{r+v} a*_{-r} a*_{-v} Theta_{r,v}.

    ``restrict=False`` drops Theta, for regression checks that it matters.
    """
    out = FockVector(n_max=vec.n_max)
    c = 1.0 / math.sqrt(modes.N)
    for pair in modes.pairs:
        r, v, _ = pair
        w = c * modes.eta[r] * modes.sigma[v]
        kept = theta_op_apply(modes, pair, vec) if restrict else vec
        if not kept.amps:
            continue
        for i in modes.created(pair)[::-1]:
            kept = kept.create(i)
        out.iadd(kept, w)
    return out.pruned()


@dataclass
class Xi:
    """Truncated exponential: ``components[m] = A^m Omega / m!``."""

    components: list
    n_max: int

    @property
    def m_max(self):
        return len(self.components) - 1

    def total(self):
        out = FockVector(n_max=self.n_max)
        for c in self.components:
            out.iadd(c)
        return out

    def norm2_by_order(self):
        return [c.norm2() for c in self.components]

    def norm2(self):
        # components live in different particle-number sectors
        return math.fsum(self.norm2_by_order())


def xi(modes, m_max, max_states=2_000_000, restrict=True):
    """sum_{m <= m_max} A^m Omega / m!, keeping the components apart."""
    if m_max < 0:
        raise DomainError("m_max must be nonnegative")
    n_max = 3 * m_max + 4
    comps = [vacuum(n_max)]
    for m in range(1, m_max + 1):
        nxt = apply_A(modes, comps[-1], restrict).scaled(1.0 / m)
        if len(nxt) > max_states:
            raise ResourceError(f"basis exceeds {max_states} states at order {m}")
        comps.append(nxt)
    return Xi(comps, n_max)


# ---------------------------------------------------------- error operators

OPERATOR_NAMES = ("EC", "EH1", "EH2", "ES1", "ES2", "EM1", "EM2", "EM3")


@dataclass
class OperatorSpec:
    """A normal-ordered operator as a list of ``(coef, creators, annihilators)``.

    For the cubic ``EC`` the list holds the creation part only; its
    hermitian conjugate is added when taking expectations.
    """

    name: str
    kind: str
    terms: list = field(default_factory=list)
    note: str = ""

    @property
    def empty(self):
        return not self.terms


def _coef_fns(modes):
    g, s, F = modes.gamma, modes.sigma, modes.F

    def alpha(p, r, pr, rvec, pvec):
        return (F(rvec) + F(pvec)) * (g[r] * g[p] * s[pr] + s[r] * s[p] * g[pr])

    def beta1(p, q, pr, qr, rvec):
        return F(rvec) * ((g[p] * g[q] * g[pr] * g[qr] - 1) + s[p] * s[pr] * s[q] * s[qr]
                          + g[p] * g[pr] * s[q] * s[qr])

    def beta2(p, q, pr, qr, rvec):
        return F(rvec) * g[pr] * g[qr] * s[p] * s[q]

    def zeta1(p, q, pr, qr, rvec):
        return F(rvec) * (s[p] * s[pr] * s[q] * s[qr] + g[p] * g[q] * g[pr] * g[qr]
                          + g[p] * g[pr] * s[q] * s[qr])

    def phi1(p, q, pr, qr, rvec):
        return F(rvec) * (s[p] * s[q] * s[pr] * s[qr] + g[p] * g[q] * g[pr] * g[qr]
                          + 2 * g[p] * g[pr] * s[q] * s[qr])

    def phi2(p, q, pr, qr, rvec):
        return F(rvec) * (g[pr] * g[qr] * s[p] * s[q] + g[p] * g[qr] * s[pr] * s[q]
                          + g[pr] * g[q] * s[p] * s[qr] + g[p] * g[q] * s[pr] * s[qr])

    def phi3(p, q, pr, qr, rvec):
        return F(rvec) * (s[p] * s[pr] * s[q] * s[qr] + g[p] * g[q] * g[pr] * g[qr]
                          + g[p] * g[pr] * s[q] * s[qr] + s[q] * s[pr] * g[p] * g[qr])

    return dict(alpha=alpha, beta1=beta1, beta2=beta2, zeta1=zeta1, zeta2=beta2,
                phi1=phi1, phi2=phi2, phi3=phi3)


# name -> (coefficient, prefactor in units of 1/N, p class, q class, p+r class,
#          q+r class, allow r = 0, monomial shape)
_QUARTIC = {
    "EH1": ("beta1", 0.5, "H", "H", "H", "H", True, "direct"),
    "EH2": ("beta2", 1.0, "H", "H", "H", "H", False, "pair"),
    "ES1": ("zeta1", 0.5, "S", "S", "S", "S", True, "direct"),
    "ES2": ("zeta2", 1.0, "S", "S", "S", "S", False, "pair"),
    "EM1": ("phi1", 1.0, "H", "H", "S", "S", True, "direct"),
    "EM2": ("phi2", 1.0, "H", "H", "S", "S", False, "pair"),
    "EM3": ("phi3", 1.0, "S", "H", "S", "H", True, "direct"),
}


def operator(name, modes):
    """Build one error operator on the mode set.

    Momentum constraints are resolved over the modes: every momentum label
    of a monomial must be a mode of the required class.  ``direct`` monomials
    are a*_p a*_{q+r} a_q a_{p+r}; ``pair`` monomials are
    a*_{p+r} a*_{-p} a_{q+r} a_{-q}.
    """
    if name not in OPERATOR_NAMES:
        raise DomainError(f"unknown operator {name!r}")
    fns = _coef_fns(modes)
    vec = modes.vectors
    terms = []
    if name == "EC":
        pref = math.sqrt(modes.N0) / modes.N
        for p in modes.high:
            for r in modes.small:
                pr = modes.tagged(_add(vec[p], vec[r]), "H")
                if pr is None:
                    continue
                c = pref * fns["alpha"](p, r, pr, vec[r], vec[p])
                terms.append((c, (pr, modes.neg[p], modes.neg[r]), ()))
        spec = OperatorSpec(name, "cubic", terms)
    else:
        cname, pref, cp, cq, cpr, cqr, zero_ok, shape = _QUARTIC[name]
        fn = fns[cname]
        pref = pref / modes.N
        cls = {"H": modes.high, "S": modes.small}
        for p in cls[cp]:
            for pr in cls[cpr]:
                rvec = _sub(vec[pr], vec[p])
                if rvec == (0, 0, 0) and not zero_ok:
                    continue
                for q in cls[cq]:
                    qr = modes.tagged(_add(vec[q], rvec), cqr)
                    if qr is None:
                        continue
                    c = pref * fn(p, q, pr, qr, rvec)
                    if shape == "direct":
                        terms.append((c, (p, qr), (q, pr)))
                    else:
                        terms.append((c, (pr, modes.neg[p]), (qr, modes.neg[q])))
        spec = OperatorSpec(name, "quartic", terms)
    if spec.empty:
        spec.note = "no momentum configuration satisfies the constraints; expectation is exactly 0"
    return spec


# --------------------------------------------------------------- expectations

def _lower(vec, idx):
    out = vec
    for i in idx:
        out = out.annihilate(i)
    return out


def expectation_by_order(op, x):
    """Order-resolved <xi, op xi>.

    Quartic: entry m is <xi_m, op xi_m>.  Cubic: entry m (m >= 1) is
    <xi_m, C xi_{m-1}> + <xi_{m-1}, C* xi_m>, the two halves computed
    independently (annihilating on the left, creating on the right).
    Entry 0 of the cubic list is 0.
    """
    comps = x.components
    out = []
    if op.kind == "quartic":
        for comp in comps:
            cache = {}

            def low(idx, comp=comp, cache=cache):
                key = tuple(sorted(idx))
                if key not in cache:
                    cache[key] = _lower(comp, key)
                return cache[key]
            vals = []
            for c, cre, ann in op.terms:
                # <xi, a*_1 a*_2 a_3 a_4 xi> = <a_2 a_1 xi, a_3 a_4 xi>
                vals.append(c * low(cre).inner(low(ann)))
            out.append(math.fsum(vals))
        return out
    out.append(0.0)
    for m in range(1, len(comps)):
        hi, lo = comps[m], comps[m - 1]
        left = math.fsum(c * _lower(hi, cre).inner(lo) for c, cre, _ in op.terms)
        right = []
        for c, cre, _ in op.terms:
            up = lo
            for i in cre[::-1]:
                up = up.create(i)
            right.append(c * hi.inner(up))
        out.append(left + math.fsum(right))
    return out


def expectation(op, x):
    """<xi, op xi> over the truncated state (sum of the order-resolved values)."""
    return math.fsum(expectation_by_order(op, x))
