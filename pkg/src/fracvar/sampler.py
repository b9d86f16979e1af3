"""Partitions of [0, T] and exact Gaussian path sampling.

Paths are drawn as ``L z`` where ``L`` is the (jittered) Cholesky factor of
the kernel matrix on the nonzero grid points and ``z`` comes from a
counter-based Philox stream keyed by the seed, pushed through the normal
inverse CDF. fBm on a dyadic grid additionally has an FFT route through
circulant embedding of fractional Gaussian noise.
"""

from __future__ import annotations

import logging
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import lapack
from scipy.special import ndtri

from .errors import DomainError, EmbeddingNotNonnegative, NotPositiveDefinite
from .kernels import Family, ProcessSpec, covariance_matrix, validate

__all__ = [
    "Grid",
    "PathSample",
    "uniform_grid",
    "dyadic_grid",
    "half_integer_grid",
    "standard_normals",
    "factor_covariance",
    "sample_path",
    "sample_paths",
    "sample_fbm_circulant",
    "simulate",
    "coarsen",
    "check_partition_schedule",
    "JITTER_LADDER",
    "DENSE_LEVEL_CAP",
    "FFT_LEVEL_CAP",
]

log = logging.getLogger(__name__)

JITTER_LADDER = (0.0, 1e-12, 1e-10, 1e-8)
DENSE_LEVEL_CAP = 16
FFT_LEVEL_CAP = 22
_SEED_MOD = 1 << 64


@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing time points ``0 = t_0 < ... < t_n = T``."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 1 or pts.size < 2:
            raise DomainError("a grid needs at least two points")
        if pts[0] != 0.0:
            raise DomainError("grids start at t=0")
        if np.any(np.diff(pts) <= 0) or not np.all(np.isfinite(pts)):
            raise DomainError("grid points must be finite and strictly increasing")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def horizon(self) -> float:
        return float(self.points[-1])

    T = horizon

    @property
    def norm(self) -> float:
        """Mesh ``max_i (t_i - t_{i-1})``."""
        return float(np.max(np.diff(self.points)))

    @property
    def intervals(self) -> int:
        return self.points.size - 1

    @property
    def dyadic_level(self) -> Optional[int]:
        """Level ``n`` when the grid is ``{k T / 2^n}``, else ``None``."""
        m = self.intervals
        if m & (m - 1):
            return None
        expected = _uniform_points(self.horizon, m)
        if not np.allclose(self.points, expected, rtol=0, atol=1e-12 * self.horizon):
            return None
        return m.bit_length() - 1

    def key(self) -> bytes:
        return self.points.tobytes()

    def __len__(self):
        return self.points.size


@dataclass(frozen=True, eq=False)
class PathSample:
    grid: Grid
    values: np.ndarray
    spec: Optional[ProcessSpec]
    seed: Optional[int]

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != self.grid.points.shape:
            raise DomainError("values and grid must have the same length")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)


def _uniform_points(T, n):
    pts = np.arange(n + 1, dtype=np.float64) * T / n
    pts[-1] = T
    return pts


def uniform_grid(T: float, n: int) -> Grid:
    if not (T > 0) or not math.isfinite(T):
        raise DomainError(f"horizon must be positive, got T={T}")
    if int(n) != n or n < 1:
        raise DomainError(f"number of intervals must be a positive integer, got {n}")
    return Grid(_uniform_points(float(T), int(n)))


def dyadic_grid(T: float, level: int, cap: int = DENSE_LEVEL_CAP) -> Grid:
    if int(level) != level or level < 1 or level > cap:
        raise DomainError(f"dyadic level must be in 1..{cap}, got {level}")
    return uniform_grid(T, 1 << int(level))


def half_integer_grid(n: int) -> Grid:
    """``{0, 1/2, 1, ..., n}``, the evaluation points of the second-difference statistic."""
    return uniform_grid(float(n), 2 * int(n))


def _check_seed(seed) -> int:
    if int(seed) != seed or not (0 <= seed < _SEED_MOD):
        raise DomainError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    return int(seed)


def standard_normals(seed: int, count: int) -> np.ndarray:
    """``count`` N(0,1) variates: Philox keyed by ``seed``, then the inverse CDF."""
    bitgen = np.random.Philox(key=_check_seed(seed))
    raw = bitgen.random_raw(count)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


class _FactorCache:
    """LRU store of Cholesky factors bounded by total bytes."""

    def __init__(self, budget_bytes):
        self.budget = budget_bytes
        self._items = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key):
        with self._lock:
            item = self._items.get(key)
            if item is not None:
                self._items.move_to_end(key)
            return item

    def put(self, key, item):
        if item[0].nbytes > self.budget:
            return
        with self._lock:
            self._items[key] = item
            self._items.move_to_end(key)
            total = sum(v[0].nbytes for v in self._items.values())
            while total > self.budget and len(self._items) > 1:
                _, old = self._items.popitem(last=False)
                total -= old[0].nbytes

    def clear(self):
        with self._lock:
            self._items.clear()


_factors = _FactorCache(1_300_000_000)


def factor_covariance(spec: ProcessSpec, grid: Grid):
    """Lower Cholesky factor of the kernel matrix on ``grid.points[1:]``.

    Returns ``(L, jitter)`` with ``jitter`` the ladder rung that succeeded.
    """
    validate(spec)
    key = (spec, grid.key())
    hit = _factors.get(key)
    if hit is not None:
        return hit
    pts = grid.points[1:]
    for eps in JITTER_LADDER:
        # dpotrf overwrites its input, so every rung starts from a fresh matrix
        a = covariance_matrix(spec, pts)
        if eps:
            a[np.diag_indices_from(a)] += eps * float(np.max(np.diag(a)))
        # symmetric C-ordered matrix == its Fortran-ordered transpose
        chol, info = lapack.dpotrf(a.T, lower=1, clean=1, overwrite_a=1)
        if info == 0:
            if eps:
                log.debug("cholesky needed jitter %g for %s on %d points", eps, spec.label(), pts.size)
            item = (chol, eps)
            _factors.put(key, item)
            return item
        del a, chol
    raise NotPositiveDefinite(
        f"kernel matrix of {spec.label()} on {pts.size} points is not positive "
        f"definite even with jitter {JITTER_LADDER[-1]:g} * max diagonal"
    )


def sample_path(spec: ProcessSpec, grid: Grid, seed: int) -> PathSample:
    """Exact draw of the process on ``grid``; ``values[0] = 0``."""
    return sample_paths(spec, grid, seed, 1)[0]


def sample_paths(spec: ProcessSpec, grid: Grid, seed: int, count: int) -> list:
    """``count`` independent draws with per-path seeds ``seed + i`` (mod 2^64)."""
    seed = _check_seed(seed)
    if count < 1:
        raise DomainError("count must be positive")
    chol, _ = factor_covariance(spec, grid)
    m = grid.intervals
    seeds = [(seed + i) % _SEED_MOD for i in range(count)]
    out = []
    for s in seeds:
        # one matvec per path: a batched GEMM rounds differently, and a path
        # must not depend on which batch it was drawn in
        values = np.empty(m + 1)
        values[0] = 0.0
        values[1:] = chol @ standard_normals(s, m)
        out.append(PathSample(grid, values, spec, s))
    return out


def _fgn_eigenvalues(hurst, n):
    k = np.arange(n + 1, dtype=np.float64)
    two_h = 2.0 * hurst
    acov = 0.5 * (np.abs(k + 1) ** two_h - 2.0 * k**two_h + np.abs(k - 1) ** two_h)
    row = np.concatenate([acov, acov[-2:0:-1]])
    return np.fft.fft(row).real


def sample_fbm_circulant(hurst: float, level: int, T: float, seed: int) -> PathSample:
    """fBm on ``dyadic_grid(T, level)`` via circulant embedding of unit-step fGn.

    The unit-step noise is cumulated and rescaled by ``(T / 2^level)^H``.
    """
    spec = ProcessSpec.fbm(hurst)
    validate(spec)
    grid = dyadic_grid(T, level, cap=FFT_LEVEL_CAP)
    seed = _check_seed(seed)
    n = 1 << level
    lam = _fgn_eigenvalues(hurst, n)
    if lam.min() < -1e-9 * lam.max():
        raise EmbeddingNotNonnegative(f"circulant eigenvalue {lam.min():g} for H={hurst}, n={n}")
    lam = np.clip(lam, 0.0, None)
    m = 2 * n
    z = standard_normals(seed, 2 * m)
    w = np.sqrt(lam / m) * (z[:m] + 1j * z[m:])
    fgn = np.fft.fft(w).real[:n]
    values = np.empty(n + 1)
    values[0] = 0.0
    np.cumsum(fgn, out=values[1:])
    values *= (T / n) ** hurst
    return PathSample(grid, values, spec, seed)


def simulate(spec: ProcessSpec, grid: Grid, seed: int, method: str = "auto") -> PathSample:
    """Draw one path choosing the generator.

    ``auto`` takes the FFT route for fBm on dyadic grids within the FFT cap
    and the dense Cholesky route otherwise.
    """
    if method not in ("auto", "cholesky", "circulant"):
        raise DomainError(f"unknown method {method!r}")
    validate(spec)
    level = grid.dyadic_level
    fft_ok = spec.family is Family.FBM and level is not None and level <= FFT_LEVEL_CAP
    if method == "circulant" and not fft_ok:
        raise DomainError("the circulant route needs fbm on a dyadic grid")
    if method == "cholesky" or not fft_ok:
        if grid.intervals > (1 << DENSE_LEVEL_CAP):
            raise DomainError(f"dense sampling capped at 2^{DENSE_LEVEL_CAP} intervals")
        return sample_path(spec, grid, seed)
    try:
        return sample_fbm_circulant(spec.hurst, level, grid.horizon, seed)
    except EmbeddingNotNonnegative:
        log.warning("circulant embedding failed for %s; using Cholesky", spec.label())
        return sample_path(spec, grid, seed)


def coarsen(path: PathSample, level: int) -> PathSample:
    """Restrict a dyadic path to the coarser dyadic level ``level``."""
    fine = path.grid.dyadic_level
    if fine is None:
        raise DomainError("coarsen needs a dyadic grid")
    if not (0 < level <= fine):
        raise DomainError(f"level must be in 1..{fine}, got {level}")
    stride = 1 << (fine - level)
    return PathSample(
        Grid(path.grid.points[::stride]), path.values[::stride], path.spec, path.seed
    )


def check_partition_schedule(norms: Sequence[float], gamma: float, start: int = 2) -> bool:
    """Finite-range proxy for ``|pi_n| = o((log n)^-gamma)``; advisory only.

    ``norms[i]`` is the mesh of the partition with index ``n = start + i``.
    The products ``|pi_n| (log n)^gamma`` must be non-increasing over the
    second half of the range and end strictly below where that half
    starts. The early part is skipped because ``(log n)^gamma / n`` rises
    until ``n = e^gamma`` even for the fastest admissible schedules.
    """
    norms = np.asarray(norms, dtype=np.float64)
    if norms.size < 2 or np.any(~np.isfinite(norms)) or np.any(norms <= 0):
        raise DomainError("norms must be a sequence of at least two positive reals")
    if not (math.isfinite(gamma) and gamma >= 1):
        raise DomainError(f"gamma must be finite and >= 1, got {gamma}")
    if start < 2:
        raise DomainError("partition indices start at n >= 2 so that log n > 0")
    n = start + np.arange(norms.size)
    q = norms * np.log(n) ** gamma
    tail = q[norms.size // 2:]
    return bool(np.all(np.diff(tail) <= 0) and tail[-1] < tail[0])
