"""Covariance kernels of the four fractional families and kernel-level theory.

The families are

* ``fbm``     fractional Brownian motion, ``0 < H < 1``;
* ``bifbm``   bifractional Brownian motion, ``0 < K <= 1`` or ``1 < K < 2`` with ``HK < 1``;
* ``trifbm``  trifractional Brownian motion, ``0 < H, K < 1``;
* ``nfbm``    n-th order fractional Brownian motion, ``n - 1 < H < n``.

All kernels vanish when either time is zero, so every process starts at 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _backend, _fallback
from .errors import DivergentJump, DomainError, ParameterOutOfRange

__all__ = [
    "Family",
    "ProcessSpec",
    "JumpEstimate",
    "validate",
    "covariance",
    "raw_covariance",
    "covariance_matrix",
    "increment_variance",
    "nfbm_constant",
    "gamma_exponent",
    "baxter_jump",
    "baxter_integral",
    "DEFAULT_H_SCHEDULE",
]

DEFAULT_H_SCHEDULE = tuple(10.0**-e for e in range(2, 11))


class Family(str, enum.Enum):
    FBM = "fbm"
    BIFBM = "bifbm"
    TRIFBM = "trifbm"
    NFBM = "nfbm"


_CODES = {Family.FBM: 0, Family.BIFBM: 1, Family.TRIFBM: 2, Family.NFBM: 3}


@dataclass(frozen=True)
class ProcessSpec:
    """One process family together with its parameters.

    Construction does not validate; use :func:`validate` (every public
    operation does so on entry).
    """

    family: Family
    hurst: float
    k: Optional[float] = None
    order: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))

    @classmethod
    def fbm(cls, hurst):
        return cls(Family.FBM, float(hurst))

    @classmethod
    def bifbm(cls, hurst, k):
        return cls(Family.BIFBM, float(hurst), float(k))

    @classmethod
    def trifbm(cls, hurst, k):
        return cls(Family.TRIFBM, float(hurst), float(k))

    @classmethod
    def nfbm(cls, order, hurst):
        return cls(Family.NFBM, float(hurst), None, int(order))

    @property
    def hk(self) -> float:
        """Self-similarity index (``H`` for fbm/nfbm, ``H*K`` otherwise)."""
        if self.family in (Family.BIFBM, Family.TRIFBM):
            return self.hurst * self.k
        return self.hurst

    def label(self) -> str:
        if self.family is Family.FBM:
            return f"fbm(H={self.hurst!r})"
        if self.family is Family.NFBM:
            return f"nfbm(n={self.order},H={self.hurst!r})"
        return f"{self.family.value}(H={self.hurst!r},K={self.k!r})"


def validate(spec: ProcessSpec) -> None:
    """Raise :class:`ParameterOutOfRange` naming the violated constraint."""
    H, K = spec.hurst, spec.k
    fam = spec.family
    if not math.isfinite(H):
        raise ParameterOutOfRange(f"H must be finite, got {H!r}")
    if fam is Family.NFBM:
        n = spec.order
        if n is None or n < 1:
            raise ParameterOutOfRange(f"order n must be an integer >= 1, got {n!r}")
        if not (n - 1 < H < n):
            raise ParameterOutOfRange(f"nfbm requires n-1 < H < n, got n={n}, H={H}")
        return
    if not (0.0 < H < 1.0):
        raise ParameterOutOfRange(f"{fam.value} requires 0 < H < 1, got H={H}")
    if fam is Family.FBM:
        return
    if K is None or not math.isfinite(K):
        raise ParameterOutOfRange(f"{fam.value} requires a finite K, got {K!r}")
    if fam is Family.BIFBM:
        if 0.0 < K <= 1.0:
            return
        if 1.0 < K < 2.0:
            if H * K < 1.0:
                return
            raise ParameterOutOfRange(
                f"bifbm with 1 < K < 2 requires HK < 1, got HK={H * K}"
            )
        raise ParameterOutOfRange(f"bifbm requires 0 < K < 2, got K={K}")
    if not (0.0 < K < 1.0):
        # K = 1 cancels the kernel identically
        raise ParameterOutOfRange(f"trifbm requires 0 < K < 1 strictly, got K={K}")


def nfbm_constant(hurst: float) -> float:
    """``1 / (Gamma(2H + 1) |sin(pi H)|)``."""
    return 1.0 / (math.gamma(2.0 * hurst + 1.0) * abs(math.sin(math.pi * hurst)))


def _generalized_binomials(x: float, count: int) -> np.ndarray:
    """``[C(x, 0), ..., C(x, count - 1)]`` via ``prod_{i=1..j} (x - j + i) / i``."""
    out = np.empty(count)
    for j in range(count):
        c = 1.0
        for i in range(1, j + 1):
            c *= (x - j + i) / i
        out[j] = c
    return out


def _kernel_args(spec: ProcessSpec):
    """(family code, H, K, scale, binomials) as consumed by the backends."""
    code = _CODES[spec.family]
    H = spec.hurst
    if spec.family is Family.FBM:
        return code, H, 1.0, 1.0, np.zeros(0)
    if spec.family is Family.BIFBM:
        return code, H, spec.k, 2.0 ** (-spec.k), np.zeros(0)
    if spec.family is Family.TRIFBM:
        return code, H, spec.k, 1.0, np.zeros(0)
    n = spec.order
    scale = (-1.0) ** n * nfbm_constant(H) / 2.0
    return code, H, 1.0, scale, _generalized_binomials(2.0 * H, n)


def raw_covariance(spec: ProcessSpec, s, t):
    """Kernel formula without parameter validation (used to probe degenerate cases)."""
    out = _fallback.kernel_values(*_kernel_args(spec), s, t)
    return float(out) if out.ndim == 0 else out


def _check_times(*xs):
    for x in xs:
        if np.any(np.asarray(x) < 0):
            raise DomainError("times must be nonnegative")


def covariance(spec: ProcessSpec, s, t):
    """Kernel value ``C(s, t)``; scalars or broadcastable arrays."""
    validate(spec)
    _check_times(s, t)
    return raw_covariance(spec, s, t)


def covariance_matrix(spec: ProcessSpec, points) -> np.ndarray:
    """Symmetric kernel matrix over strictly positive, increasing ``points``.

    ``points`` may be an array or anything with a ``points`` attribute.
    """
    validate(spec)
    points = np.ascontiguousarray(getattr(points, "points", points), dtype=np.float64)
    if points.ndim != 1 or points.size == 0:
        raise DomainError("points must be a non-empty 1-d sequence")
    if np.any(points <= 0):
        raise DomainError("covariance_matrix needs strictly positive points; t=0 is handled by the sampler")
    if np.any(np.diff(points) <= 0):
        raise DomainError("points must be strictly increasing")
    code, H, K, scale, binom = _kernel_args(spec)
    return _backend.covariance_matrix(code, H, K, scale, binom, points)


def _jensen_gap(d, K):
    """``2 - (1 + d)**K - (1 - d)**K`` without cancellation for small ``|d|``."""
    d = np.asarray(d, dtype=np.float64)
    out = np.empty_like(d)
    small = np.abs(d) < 0.1
    if np.any(small):
        ds = d[small]
        d2 = ds * ds
        term_pow = d2.copy()
        binom = K * (K - 1.0) / 2.0
        acc = np.zeros_like(ds)
        j = 2
        while True:
            acc += binom * term_pow
            if abs(binom) * 0.01 ** (j // 2) < 1e-18:
                break
            binom *= (K - j) * (K - j - 1.0) / ((j + 1.0) * (j + 2.0))
            term_pow = term_pow * d2
            j += 2
        out[small] = -2.0 * acc
    big = ~small
    if np.any(big):
        db = d[big]
        with np.errstate(divide="ignore"):
            out[big] = -(np.expm1(K * np.log1p(db)) + np.expm1(K * np.log1p(-db)))
    return out


def increment_variance(spec: ProcessSpec, s, t):
    """``E (X_t - X_s)^2`` evaluated in a cancellation-free form where one exists.

    The direct ``C(t,t) + C(s,s) - 2 C(s,t)`` loses all precision once
    ``|t - s|`` is tiny relative to ``t``; the fbm, bifbm and trifbm
    branches rewrite it around the midpoint of ``t^{2H}`` and ``s^{2H}``.
    """
    validate(spec)
    _check_times(s, t)
    s, t = np.broadcast_arrays(np.asarray(s, dtype=np.float64), np.asarray(t, dtype=np.float64))
    lo, hi = np.minimum(s, t), np.maximum(s, t)
    H = spec.hurst
    h = hi - lo
    if spec.family is Family.FBM:
        out = h ** (2.0 * H)
    elif spec.family is Family.NFBM:
        out = (
            raw_covariance(spec, hi, hi)
            + raw_covariance(spec, lo, lo)
            - 2.0 * raw_covariance(spec, lo, hi)
        )
    else:
        K = spec.k
        two_h = 2.0 * H
        b = lo**two_h
        with np.errstate(divide="ignore", invalid="ignore"):
            diff = np.where(lo > 0, b * np.expm1(two_h * np.log1p(h / np.where(lo > 0, lo, 1.0))), hi**two_h)
        mid = b + 0.5 * diff
        with np.errstate(invalid="ignore"):
            d = np.where(mid > 0, 0.5 * diff / np.where(mid > 0, mid, 1.0), 0.0)
        gap = _jensen_gap(d, K)
        if spec.family is Family.BIFBM:
            out = 2.0 ** (1.0 - K) * h ** (two_h * K) - mid**K * gap
        else:
            out = 2.0**K * mid**K * gap
    return float(out) if np.ndim(out) == 0 else out


def gamma_exponent(hurst: float, k: float) -> float:
    """Exponent in the partition-norm condition ``|pi_n| = o((log n)^-gamma)``.

    ``K = 1`` is treated with the ``K < 1`` branch.
    """
    validate(ProcessSpec.bifbm(hurst, k))
    hk = hurst * k
    if k <= 1.0:
        return max(1.0 / (2.0 - 2.0 * hk), 1.0)
    return 1.0 / (min(1.0, 2.0 * hurst) + 1.0 - 2.0 * hk)


@dataclass(frozen=True)
class JumpEstimate:
    value: float
    converged: bool
    estimates: tuple
    d_minus: float
    d_plus: float


def baxter_jump(
    spec: ProcessSpec,
    t: float,
    h_schedule: Optional[Sequence[float]] = None,
    horizon: Optional[float] = None,
) -> JumpEstimate:
    """Difference of the left and right derivatives of ``s -> C(s, t)`` at ``s = t``.

    Each step of ``h_schedule`` gives one-sided quotients
    ``[C(t,t) - C(t -/+ h, t)] / (+/- h)``. The estimate is declared
    divergent when every successive ``|f|`` grows by more than a factor 2.
    """
    validate(spec)
    hs = np.asarray(DEFAULT_H_SCHEDULE if h_schedule is None else h_schedule, dtype=np.float64)
    if hs.size == 0 or np.any(hs <= 0) or np.any(np.diff(hs) >= 0):
        raise DomainError("h_schedule must be positive and strictly decreasing")
    if t - hs[0] <= 0 or (horizon is not None and t + hs[0] >= horizon):
        raise DomainError(f"t={t} +/- h leaves the open interval")
    r_tt = raw_covariance(spec, t, t)
    d_minus = (r_tt - raw_covariance(spec, t - hs, t)) / hs
    d_plus = (r_tt - raw_covariance(spec, t + hs, t)) / (-hs)
    f = d_minus - d_plus
    mag = np.abs(f)
    diverged = f.size >= 2 and bool(np.all(mag[1:] > 2.0 * mag[:-1]))
    return JumpEstimate(
        value=float(f[-1]),
        converged=not diverged,
        estimates=tuple(float(x) for x in f),
        d_minus=float(d_minus[-1]),
        d_plus=float(d_plus[-1]),
    )


def baxter_integral(
    spec: ProcessSpec,
    a: float,
    b: float,
    panels: int = 256,
    h_schedule: Optional[Sequence[float]] = None,
) -> float:
    """Midpoint-rule integral of the derivative jump over ``[a, b]``."""
    if not (0 < a < b):
        raise DomainError(f"need 0 < a < b, got a={a}, b={b}")
    if panels < 256:
        raise DomainError("at least 256 panels are required")
    width = (b - a) / panels
    total = []
    for i in range(panels):
        t = a + (i + 0.5) * width
        est = baxter_jump(spec, t, h_schedule)
        if not est.converged:
            raise DivergentJump(f"derivative jump diverges at t={t} for {spec.label()}")
        total.append(est.value)
    return width * _backend.compensated_sum(np.asarray(total))
