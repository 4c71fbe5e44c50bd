"""Combinatorial series for the norm of xi and for the error-operator expectations.

The expectation side is expanded with Wick's theorem: every vacuum
expectation of annihilators, a normal-ordered monomial and creators is a sum
over complete pairings of equal momenta.  Each pairing is assigned to one of
the named contraction patterns of its operator family; pairings that fit no
pattern are collected in a separate ``other`` bucket, which vanishes on
generic mode sets.
"""
from collections import Counter, defaultdict
import itertools
import math

from ..errors import DomainError
from .operators import OPERATOR_NAMES, expectation_by_order, operator, theta, xi

FAMILY_PIECES = {
    "EC": ("EC",),
    "EH1": ("A", "B"),
    "EH2": ("C", "D"),
    "ES1": ("I", "II", "III"),
    "ES2": ("It", "IIt", "IIIt"),
    "EM1": ("M1", "M2", "M3"),
    "EM2": ("M1t", "M2t", "M3t"),
    "EM3": ("M1p", "M2p", "M3p"),
}

_KINDS = ("x", "y", "s")     # r + v, -r, -v
THETA_SAME_INDEX = True       # the i = j convention that reproduces Theta


def _tuples(modes, seq):
    return [(modes.vectors[r], modes.vectors[v]) for r, v, _ in seq]


def sequences(modes, m, restrict=True):
    """Pair multisets of size m with theta = 1.

    Returns ``(seq, weight, count)`` with one sorted representative per
    multiset and ``count`` the number of orderings.  theta, the eta sigma
    weight and every pairing pattern are symmetric under reordering, so the
    sum over ordered sequences equals the count-weighted sum here.
    """
    out = []
    for seq in itertools.combinations_with_replacement(modes.pairs, m):
        if not restrict or theta(_tuples(modes, seq), THETA_SAME_INDEX):
            w = math.prod(modes.eta[r] * modes.sigma[v] for r, v, _ in seq)
            count = math.factorial(m) // math.prod(math.factorial(c)
                                                   for c in Counter(seq).values())
            out.append((seq, w, count))
    return out


def norm_series(modes, m_max, by_order=False, restrict=True):
    """sum_m (2^m m!)^-1 N^-m sum theta prod (eta_r + eta_{r+v})^2 sigma_v^2.

    ``restrict=False`` replaces theta by 1.
    """
    terms = []
    for m in range(m_max + 1):
        vals = []
        for seq in itertools.product(modes.pairs, repeat=m):
            if not restrict or theta(_tuples(modes, seq), THETA_SAME_INDEX):
                vals.append(math.prod((modes.eta[r] + modes.eta[rv]) ** 2 * modes.sigma[v] ** 2
                                      for r, v, rv in seq))
        terms.append(math.fsum(vals) / (2 ** m * math.factorial(m) * modes.N ** m))
    return terms if by_order else math.fsum(terms)


# ------------------------------------------------------------------ pairings

def _slots(modes, seq):
    """[(mode, (tuple index, kind))] for the three momenta each pair creates."""
    out = []
    for j, pair in enumerate(seq):
        for kind, mode in zip(_KINDS, modes.created(pair)):
            out.append((mode, (j, kind)))
    return out


def _matchings(left, right):
    """All bijections between two slot lists that pair equal modes.

    ``left`` and ``right`` are lists of (mode, label); yields dicts
    label_left -> label_right.
    """
    gl, gr = defaultdict(list), defaultdict(list)
    for mode, lab in left:
        gl[mode].append(lab)
    for mode, lab in right:
        gr[mode].append(lab)
    if {k: len(v) for k, v in gl.items()} != {k: len(v) for k, v in gr.items()}:
        return
    modes = sorted(gl)
    choices = [list(itertools.permutations(gr[k])) for k in modes]
    for pick in itertools.product(*choices):
        out = {}
        for k, perm in zip(modes, pick):
            out.update(zip(gl[k], perm))
        yield out


def _pairings(bra_slots, ket_slots, creators, annihilators):
    """Complete Wick pairings of <bra| a*..a* a..a |ket>.

    Yields ``(bra_map, ann_map)``: bra_map sends every bra label to a ket
    label or to ("op", i) for creator i; ann_map sends annihilator i to a
    ket label.
    """
    by_mode = defaultdict(list)
    for mode, lab in ket_slots:
        by_mode[mode].append(lab)
    options = [by_mode.get(d, []) for d in annihilators]
    for pick in itertools.product(*options):
        if len(set(pick)) < len(pick):
            continue
        used = set(pick)
        rest = [(m, lab) for m, lab in ket_slots if lab not in used]
        rest += [(c, ("op", i)) for i, c in enumerate(creators)]
        for bra_map in _matchings(bra_slots, rest):
            yield bra_map, dict(enumerate(pick))


# ------------------------------------------------------------ classification

class _Pattern:
    """Tuple-level view of one pairing."""

    def __init__(self, bra_map, ann_map, mb, mk):
        self.bra_map = bra_map
        self.ann_map = ann_map
        self.full = {}
        for j in range(mb):
            partners = [bra_map[(j, k)] for k in _KINDS]
            if all(p[0] != "op" for p in partners) and len({p[0] for p in partners}) == 1:
                self.full[j] = partners[0][0]
        self.bra_rest = set(range(mb)) - set(self.full)
        self.ket_rest = set(range(mk)) - set(self.full.values())
        self.creator_at = {p[1]: lab for lab, p in bra_map.items() if p[0] == "op"}

    def bra_of(self, ci):
        return self.creator_at[ci][0]

    def ket_of(self, di):
        return self.ann_map[di][0]

    def h_partners(self, j):
        """Partners of the two high slots of bra tuple j."""
        return [self.bra_map[(j, "x")], self.bra_map[(j, "y")]]

    def s_partner(self, j):
        return self.bra_map[(j, "s")]


def _classify_cubic(pat, hc):
    if hc:
        if not pat.bra_rest and len(pat.ket_rest) == 1:
            k, = pat.ket_rest
            if {pat.ket_of(i) for i in range(3)} == {k}:
                return "EC"
        return None
    if not pat.ket_rest and len(pat.bra_rest) == 1:
        b, = pat.bra_rest
        if {pat.bra_of(i) for i in range(3)} == {b}:
            return "EC"
    return None


def _classify_high(pat, names):
    first, second = names
    b0, b1 = pat.bra_of(0), pat.bra_of(1)
    k0, k1 = pat.ket_of(0), pat.ket_of(1)
    if len(pat.bra_rest) == 1 and len(pat.ket_rest) == 1:
        if b0 == b1 and k0 == k1 and pat.s_partner(b0)[:1] == (k0,):
            return first
        return None
    if len(pat.bra_rest) == 2 and len(pat.ket_rest) == 2:
        if b0 != b1 and k0 != k1 and pat.bra_rest == {b0, b1} and pat.ket_rest == {k0, k1}:
            return second
    return None


def _classify_small(pat, names, key_c, key_d):
    b1, b2 = pat.bra_of(key_c), pat.bra_of(1 - key_c)
    k1, k2 = pat.ket_of(key_d), pat.ket_of(1 - key_d)
    if pat.bra_rest != {b1, b2} or pat.ket_rest != {k1, k2} or b1 == b2 or k1 == k2:
        return None
    h1 = {p[0] for p in pat.h_partners(b1)}
    h2 = {p[0] for p in pat.h_partners(b2)}
    if h1 == {k1} and h2 == {k2}:
        return names[0]
    if h1 == {k2} and h2 == {k1}:
        return names[1]
    if h1 == {k1, k2} and h2 == {k1, k2}:
        return names[2]
    return None


def _classify_mixed(pat, names, cre_tags, ann_tags):
    cH, cS = cre_tags.index("H"), cre_tags.index("S")
    dH, dS = ann_tags.index("H"), ann_tags.index("S")
    bH, bS = pat.bra_of(cH), pat.bra_of(cS)
    kH, kS = pat.ket_of(dH), pat.ket_of(dS)
    if bH == bS and kH == kS:
        if pat.bra_rest == {bS} and pat.ket_rest == {kS}:
            return names[0]
        return None
    if bH == bS or kH == kS:
        return None
    if pat.bra_rest != {bH, bS} or pat.ket_rest != {kH, kS}:
        return None
    if pat.s_partner(bH)[0] != kH:
        return None
    other = [p for p in pat.h_partners(bH) if p[0] != "op"]
    if len(other) != 1:
        return None
    if other[0][0] == kH:
        return names[1]
    if other[0][0] == kS:
        return names[2]
    return None


def _classifier(name, modes):
    names = FAMILY_PIECES[name]
    tags = modes.tags
    if name in ("EH1", "EH2"):
        return lambda pat, cre, ann, hc: _classify_high(pat, names)
    if name == "ES1":
        return lambda pat, cre, ann, hc: _classify_small(pat, names, 0, 0)
    if name == "ES2":
        return lambda pat, cre, ann, hc: _classify_small(pat, names, 1, 1)
    if name in ("EM1", "EM2", "EM3"):
        return lambda pat, cre, ann, hc: _classify_mixed(
            pat, names, [tags[c] for c in cre], [tags[d] for d in ann])
    return lambda pat, cre, ann, hc: _classify_cubic(pat, hc)


# --------------------------------------------------------------- the series

def _index_by_content(modes, seqs):
    table = defaultdict(list)
    for seq, w, n in seqs:
        key = tuple(sorted(_content(modes, seq).items()))
        table[key].append((seq, w * n))
    return table


def _content(modes, seq):
    return Counter(c for pair in seq for c in modes.created(pair))


def _side_sum(modes, op_terms, bra_seqs, ket_seqs, mb, mk, classify, hc, pieces):
    """Accumulate sum over (bra, ket, term, pairing) into ``pieces``."""
    bra_index = _index_by_content(modes, bra_seqs)
    norm = 1.0 / (math.factorial(mb) * math.factorial(mk) * modes.N ** ((mb + mk) / 2))
    acc = defaultdict(list)
    for kseq, wk, nk in ket_seqs:
        wk *= nk
        kc = _content(modes, kseq)
        kslots = _slots(modes, kseq)
        for c, cre, ann in op_terms:
            need = Counter(ann)
            if any(kc[d] < n for d, n in need.items()):
                continue
            bc = kc - need + Counter(cre)
            key = tuple(sorted(bc.items()))
            for bseq, wb in bra_index.get(key, ()):
                bslots = _slots(modes, bseq)
                for bra_map, ann_map in _pairings(bslots, kslots, cre, ann):
                    pat = _Pattern(bra_map, ann_map, mb, mk)
                    label = classify(pat, cre, ann, hc) or "other"
                    acc[label].append(c * wb * wk)
    for label, vals in acc.items():
        pieces[label] = pieces.get(label, 0.0) + norm * math.fsum(vals)


def contraction_series(name, modes, m_max, by_order=False, restrict=True):
    """Wick expansion of <xi, E xi> sorted into the named contraction pieces.

    Returns a dict piece -> value (or piece -> list over orders when
    ``by_order``), always including the ``other`` bucket.  Quartic order m
    pairs xi_m with xi_m; cubic order m collects (m, m-1) and (m-1, m).
    """
    if name not in OPERATOR_NAMES:
        raise DomainError(f"unknown operator family {name!r}")
    op = operator(name, modes)
    classify = _classifier(name, modes)
    labels = FAMILY_PIECES[name] + ("other",)
    seqs = [sequences(modes, m, restrict) for m in range(m_max + 1)]
    orders = []
    for m in range(m_max + 1):
        pieces = {}
        if op.kind == "quartic":
            _side_sum(modes, op.terms, seqs[m], seqs[m], m, m, classify, False, pieces)
        elif m >= 1:
            _side_sum(modes, op.terms, seqs[m], seqs[m - 1], m, m - 1, classify, False, pieces)
            hc_terms = [(c, (), cre[::-1]) for c, cre, _ in op.terms]
            _side_sum(modes, hc_terms, seqs[m - 1], seqs[m], m - 1, m, classify, True, pieces)
        orders.append({k: pieces.get(k, 0.0) for k in labels})
    if by_order:
        return {k: [o[k] for o in orders] for k in labels}
    return {k: math.fsum(o[k] for o in orders) for k in labels}


def _gap(a, b):
    absgap = abs(a - b)
    scale = max(abs(a), abs(b))
    return absgap, (absgap / scale if scale else 0.0)


def verify(modes, m_max, families=OPERATOR_NAMES, rtol=1e-9, norm_rtol=1e-10, restrict=True):
    """Compare the matrix side with the series side for the norm and every family.

    Returns a JSON-ready report with both sides per order, absolute and
    relative gaps, the per-piece values and a PASS flag per identity.
    """
    x = xi(modes, m_max, restrict=restrict)
    report = {"restricted": restrict, "modes": modes.name, "size": modes.size, "pairs": len(modes.pairs),
              "m_max": m_max, "N": modes.N, "theta_same_index": THETA_SAME_INDEX,
              "unitarity_defect": modes.unitarity_defect(), "identities": {}}
    mat = x.norm2_by_order()
    ser = norm_series(modes, m_max, by_order=True, restrict=restrict)
    rows = [dict(zip(("abs_gap", "rel_gap"), _gap(a, b)), order=m, matrix=a, series=b)
            for m, (a, b) in enumerate(zip(mat, ser))]
    tot = _gap(math.fsum(mat), math.fsum(ser))
    report["identities"]["norm"] = {
        "matrix": math.fsum(mat), "series": math.fsum(ser), "abs_gap": tot[0],
        "rel_gap": tot[1], "orders": rows,
        "passed": all(r["rel_gap"] <= norm_rtol or r["abs_gap"] <= norm_rtol for r in rows)}
    for name in families:
        op = operator(name, modes)
        mat = expectation_by_order(op, x)
        pieces = contraction_series(name, modes, m_max, by_order=True, restrict=restrict)
        named = FAMILY_PIECES[name]
        ser = [math.fsum(pieces[k][m] for k in named) for m in range(m_max + 1)]
        scale = max([abs(v) for v in mat] + [1e-300])
        rows = []
        for m, (a, b) in enumerate(zip(mat, ser)):
            ag, rg = _gap(a, b)
            rows.append({"order": m, "matrix": a, "series": b, "abs_gap": ag, "rel_gap": rg,
                         "other": pieces["other"][m]})
        tot = _gap(math.fsum(mat), math.fsum(ser))
        report["identities"][name] = {
            "matrix": math.fsum(mat), "series": math.fsum(ser), "abs_gap": tot[0],
            "rel_gap": tot[1], "orders": rows, "note": op.note,
            "pieces": {k: math.fsum(v) for k, v in pieces.items()},
            "passed": all(r["abs_gap"] <= rtol * scale for r in rows)}
    report["passed"] = all(v["passed"] for v in report["identities"].values())
    return report
