"""Pure-Python (numpy) implementations of the compiled kernels in ``_core``."""

import math

import numpy as np

FBM, BIFBM, TRIFBM, NFBM = 0, 1, 2, 3

# rows per block when filling large matrices; bounds temporaries to ~64 MiB
_BLOCK_ELEMENTS = 1 << 23


def kernel_values(family, hurst, k, scale, binom, s, t):
    """Evaluate one of the four kernels elementwise on broadcast ``s``, ``t``."""
    s = np.asarray(s, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    two_h = 2.0 * hurst
    if family == FBM:
        return 0.5 * ((s**two_h + t**two_h) - np.abs(t - s) ** two_h)
    # powers 2HK are taken as (x^{2H})^K so that C(0, t) cancels exactly
    if family == BIFBM:
        return scale * ((s**two_h + t**two_h) ** k - (np.abs(t - s) ** two_h) ** k)
    if family == TRIFBM:
        ps, pt = s**two_h, t**two_h
        return (ps**k + pt**k) - (ps + pt) ** k
    acc = np.zeros(np.broadcast(s, t).shape)
    sign = 1.0
    for j, b in enumerate(binom):
        acc = acc + sign * b * (t**j * s ** (two_h - j) + s**j * t ** (two_h - j))
        sign = -sign
    return scale * (np.abs(t - s) ** two_h - acc)


def covariance_matrix(family, hurst, k, scale, binom, points):
    points = np.ascontiguousarray(points, dtype=np.float64)
    n = points.shape[0]
    out = np.empty((n, n))
    rows = max(1, _BLOCK_ELEMENTS // max(n, 1))
    for i0 in range(0, n, rows):
        i1 = min(n, i0 + rows)
        block = kernel_values(
            family, hurst, k, scale, binom, points[i0:i1, None], points[None, i0:]
        )
        # keep only the upper triangle of the block, then mirror it
        for r in range(i1 - i0):
            i = i0 + r
            out[i, i:] = block[r, r:]
            out[i:, i] = block[r, r:]
    return out


def compensated_sum(x):
    return math.fsum(np.asarray(x, dtype=np.float64))


def power_increment_sum(values, p):
    d = np.diff(np.asarray(values, dtype=np.float64))
    terms = d * d if p == 2.0 else np.abs(d) ** p
    return math.fsum(terms)


def weighted_sq_increment_sum(values, times, weight_exponent):
    d = np.diff(np.asarray(values, dtype=np.float64))
    terms = d * d
    if weight_exponent != 0.0:
        terms = terms / np.diff(np.asarray(times, dtype=np.float64)) ** weight_exponent
    return math.fsum(terms)


def stencil_sq_sum(values, coeffs, start, step, stride, count):
    values = np.asarray(values, dtype=np.float64)
    base = start + stride * np.arange(count)
    d = np.zeros(count)
    for i, c in enumerate(coeffs):
        d = d + c * values[base + i * step]
    return math.fsum(d * d)
