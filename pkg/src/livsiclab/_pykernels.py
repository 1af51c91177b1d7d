"""Pure-Python versions of the compiled kernels (same arithmetic, same order)."""
import math

import numpy as np

DOUBLING, TENT, QUADRATIC, MP = 0, 1, 2, 3


def forward(kind, p, x):
    if kind == DOUBLING:
        return 2.0 * x if x < 0.5 else 2.0 * x - 1.0
    if kind == TENT:
        return p * x if x < 0.5 else p * (1.0 - x)
    if kind == QUADRATIC:
        return 1.0 - p * x * x
    if x < 0.5:
        return x + math.pow(2.0, p) * math.pow(x, 1.0 + p)
    return 2.0 * x - 1.0


def _logdf(kind, p, x):
    if kind == DOUBLING:
        return math.log(2.0)
    if kind == TENT:
        return math.log(p)
    if kind == QUADRATIC:
        return math.log(abs(2.0 * p * x))
    if x < 0.5:
        return math.log(1.0 + (1.0 + p) * math.pow(2.0, p) * math.pow(x, p))
    return math.log(2.0)


def birkhoff_log_derivative(kind, p, x0, burn_in, n):
    x = x0
    for _ in range(burn_in):
        x = forward(kind, p, x)
    s = 0.0
    for _ in range(n):
        s += _logdf(kind, p, x)
        x = forward(kind, p, x)
    return s, x


def orbit_histogram(kind, p, x0, burn_in, n, lo, hi, bins):
    counts = [0] * bins
    x = x0
    scale = bins / (hi - lo)
    for _ in range(burn_in):
        x = forward(kind, p, x)
    for _ in range(n):
        k = int((x - lo) * scale)
        k = 0 if k < 0 else (bins - 1 if k >= bins else k)
        counts[k] += 1
        x = forward(kind, p, x)
    return np.array(counts, dtype=np.int64)


def mp_left_inverse(y, p):
    if y <= 0.0:
        return 0.0
    c = math.pow(2.0, p)
    lo, hi = 0.0, (y if y < 0.5 else 0.5)
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break  # adjacent doubles; the tolerance underflows for subnormal y
        if mid + c * math.pow(mid, 1.0 + p) < y:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(2):
        g = x + c * math.pow(x, 1.0 + p) - y
        dg = 1.0 + (1.0 + p) * c * math.pow(x, p)
        x = x - g / dg
    return x


def mp_left_preimages(p, y0, n):
    out = np.empty(n)
    y = y0
    for k in range(n):
        y = mp_left_inverse(y, p)
        out[k] = y
    return out


def hofbauer_occupation(kind, p, trans, breaks, level0, x0, n):
    trans = np.asarray(trans)
    table = trans.tolist()
    breaks = list(np.asarray(breaks, dtype=float))
    counts = [0] * trans.shape[0]
    overflow = 0
    level = level0
    x = x0
    for _ in range(n):
        counts[level] += 1
        cell = 0
        for j, b in enumerate(breaks):
            if x >= b:
                cell = j + 1
        nxt = table[level][cell]
        if nxt < 0:
            overflow += 1
            nxt = 0
        level = nxt
        x = forward(kind, p, x)
    return np.array(counts, dtype=np.int64), overflow


def mp_left_inverse_array(y, p):
    return np.array([mp_left_inverse(float(v), p) for v in np.asarray(y, dtype=float)])
