"""Pure numpy implementations of the numerical kernels.

These mirror :mod:`blab._accel` function by function.  Integer results and
``pairwise_sum`` are bit-identical between the two; floating point kernels
agree to rounding.
"""
import math

import numpy as np

LEAF = 64


def _leaf_sums(x):
    """Neumaier-compensated sums of consecutive blocks of ``LEAF`` values."""
    x = np.asarray(x, dtype=np.float64)
    nleaf = -(-x.size // LEAF)
    if nleaf == 0:
        return np.zeros(0)
    pad = np.zeros(nleaf * LEAF)
    pad[:x.size] = x
    blocks = pad.reshape(nleaf, LEAF)
    s = np.zeros(nleaf)
    c = np.zeros(nleaf)
    for k in range(LEAF):
        v = blocks[:, k]
        t = s + v
        big = np.abs(s) >= np.abs(v)
        c += np.where(big, (s - t) + v, (v - t) + s)
        s = t
    return s + c


def _tree(leaves):
    level = list(leaves)
    if not level:
        return 0.0
    while len(level) > 1:
        nxt = [level[i] + level[i + 1] for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return float(level[0])


def _tree_np(leaves):
    level = np.asarray(leaves, dtype=np.float64)
    if level.size == 0:
        return 0.0
    while level.size > 1:
        even = level[: level.size - level.size % 2]
        nxt = even[0::2] + even[1::2]
        if level.size % 2:
            nxt = np.append(nxt, level[-1])
        level = nxt
    return float(level[0])


def pairwise_sum(x):
    """Fixed-tree sum: compensated leaves of 64, then a balanced binary tree."""
    return _tree_np(_leaf_sums(x))


def shell_counts(max_norm2):
    """r3(m) for 0 <= m <= max_norm2 by enumerating 0 <= a <= b <= c."""
    M = int(max_norm2)
    counts = np.zeros(M + 1, dtype=np.int64)
    amax = math.isqrt(M // 3)
    for a in range(amax + 1):
        rem = M - a * a
        bmax = math.isqrt(rem // 2)
        if bmax < a:
            break
        b = np.arange(a, bmax + 1, dtype=np.int64)
        cmax = np.array([math.isqrt(int(rem - bb * bb)) for bb in b], dtype=np.int64)
        lens = cmax - b + 1
        keep = lens > 0
        b, cmax, lens = b[keep], cmax[keep], lens[keep]
        if b.size == 0:
            continue
        bb = np.repeat(b, lens)
        start = np.repeat(np.cumsum(lens) - lens, lens)
        cc = np.arange(bb.size, dtype=np.int64) - start + np.repeat(b, lens)
        m = a * a + bb * bb + cc * cc
        nz = (a > 0) + (bb > 0).astype(np.int64) + (cc > 0)
        signs = np.left_shift(1, nz)
        eq = (a == bb).astype(np.int64) + (bb == cc)
        perms = np.where(eq == 0, 6, np.where(eq == 1, 3, 1))
        counts += np.bincount(m, weights=signs * perms, minlength=M + 1).astype(np.int64)
    return counts


def sine_moments(q, nodes, weights):
    """out[i] = sum_j weights[j] * sin(q[i] * nodes[j])."""
    q = np.ascontiguousarray(q, dtype=np.float64)
    out = np.zeros(q.size)
    for s, w in zip(np.asarray(nodes, dtype=np.float64), np.asarray(weights, dtype=np.float64)):
        out += w * np.sin(q * s)
    return out


def shifted_table_sum(shift, m_lo, m_hi, ta, tb):
    """Sum over n in Z^3 with m_lo < |n|^2 <= m_hi of ta[|n-shift|^2] * tb[|n|^2].

    Terms are generated in lexicographic (x, y, z) order and reduced with the
    same fixed tree as :func:`pairwise_sum`.
    """
    sx, sy, sz = (int(v) for v in shift)
    ta = np.asarray(ta, dtype=np.float64)
    tb = np.asarray(tb, dtype=np.float64)
    K = math.isqrt(int(m_hi))
    leaves = []
    carry = np.zeros(0)
    for x in range(-K, K + 1):
        rx = m_hi - x * x
        ky = math.isqrt(rx)
        ys = np.arange(-ky, ky + 1, dtype=np.int64)
        kz = np.array([math.isqrt(int(rx - y * y)) for y in ys], dtype=np.int64)
        lens = 2 * kz + 1
        yy = np.repeat(ys, lens)
        start = np.repeat(np.cumsum(lens) - lens, lens)
        zz = np.arange(yy.size, dtype=np.int64) - start - np.repeat(kz, lens)
        m = x * x + yy * yy + zz * zz
        sel = m > m_lo
        yy, zz, m = yy[sel], zz[sel], m[sel]
        d = (x - sx) ** 2 + (yy - sy) ** 2 + (zz - sz) ** 2
        vals = np.concatenate([carry, ta[d] * tb[m]])
        nfull = (vals.size // LEAF) * LEAF
        if nfull:
            leaves.append(_leaf_sums(vals[:nfull]))
        carry = vals[nfull:]
    if carry.size:
        leaves.append(_leaf_sums(carry))
    if not leaves:
        return 0.0
    return _tree_np(np.concatenate(leaves))
