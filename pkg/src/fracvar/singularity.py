"""Plug-in discrimination between two Hurst-index hypotheses from one path.

Each hypothesis predicts an almost-sure limit for a variation statistic
computed with its own exponents. The hypothesis whose prediction the path
matches best on a log scale is selected. No error probabilities are
claimed.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, HypothesesIndistinguishable, ParameterOutOfRange
from .kernels import Family, ProcessSpec, gamma_exponent, validate
from .sampler import Grid, PathSample, check_partition_schedule, sample_paths, simulate
from .variation import (
    StatisticResult,
    estimate_hurst_v2,
    kurchenko_statistic,
    scaled_dyadic_sum,
    trifbm_calibration,
    v_k_constant,
    weighted_qv,
)

__all__ = [
    "Hypothesis",
    "DiscriminationResult",
    "PowerStudy",
    "PartitionScheduleWarning",
    "discriminate_bifbm",
    "discriminate_trifbm",
    "discriminate_fbm",
    "power_study",
    "select",
]

log = logging.getLogger(__name__)

# relative gap under which two discrepancies are treated as tied
TIE_RTOL = 1e-12
MIN_TRIFBM_LEVEL = 8


class PartitionScheduleWarning(UserWarning):
    """The partition or exponent preconditions of the limit theorem look shaky."""


@dataclass(frozen=True)
class Hypothesis:
    spec: ProcessSpec
    label: str

    def __post_init__(self):
        validate(self.spec)


@dataclass(frozen=True)
class DiscriminationResult:
    labels: tuple
    discrepancies: tuple
    selected: str
    margin: float
    statistics: tuple
    rules_agree: Optional[bool] = None


def select(labels, discrepancies):
    """Argmin with ties (relative gap <= ``TIE_RTOL``) broken by the smaller label."""
    (l1, l2), (d1, d2) = labels, discrepancies
    top = max(d1, d2)
    if top == 0 or abs(d1 - d2) <= TIE_RTOL * top:
        return min(l1, l2), 0.0
    winner = l1 if d1 < d2 else l2
    return winner, abs(d1 - d2) / top


def _log_gap(value, reference):
    if value <= 0:
        return math.inf
    return abs(math.log(value) - math.log(reference))


def _build(labels, discrepancies, stats, rules_agree=None):
    selected, margin = select(labels, discrepancies)
    return DiscriminationResult(
        tuple(labels), tuple(float(d) for d in discrepancies), selected, margin, tuple(stats), rules_agree
    )


def _uniform_schedule(grid: Grid):
    """Meshes of the uniform partitions with 2..N intervals ending at ``grid``."""
    m = grid.intervals
    norms = grid.horizon / np.arange(2, m + 1, dtype=np.float64)
    norms[-1] = grid.norm
    return norms


def discriminate_bifbm(path: PathSample, h1: Hypothesis, h2: Hypothesis) -> DiscriminationResult:
    """Compare weighted quadratic variations against ``2^{1-K_i} T``."""
    for h in (h1, h2):
        if h.spec.family is not Family.BIFBM:
            raise DomainError(f"hypothesis {h.label} is not a bifbm")
    k1, k2 = h1.spec.k, h2.spec.k
    if k1 == k2:
        raise HypothesesIndistinguishable(f"K_1 = K_2 = {k1}: the weighted QV limits coincide")
    g1 = gamma_exponent(h1.spec.hurst, k1)
    g2 = gamma_exponent(h2.spec.hurst, k2)
    if g1 != g2:
        warnings.warn(
            f"gamma exponents differ ({g1:.6g} vs {g2:.6g}); using the larger for the partition check",
            PartitionScheduleWarning,
            stacklevel=2,
        )
    if path.grid.intervals >= 4 and not check_partition_schedule(_uniform_schedule(path.grid), max(g1, g2)):
        warnings.warn("partition norm fails the finite-range schedule check", PartitionScheduleWarning, stacklevel=2)
    T = path.grid.horizon
    stats, gaps = [], []
    for h in (h1, h2):
        exponent = 2.0 * h.spec.hk - 1.0
        res = weighted_qv(PathSample(path.grid, path.values, h.spec, path.seed), exponent)
        stats.append(res)
        gaps.append(_log_gap(res.value, 2.0 ** (1.0 - h.spec.k) * T))
    return _build((h1.label, h2.label), gaps, stats)


def discriminate_trifbm(path: PathSample, h1: Hypothesis, h2: Hypothesis) -> DiscriminationResult:
    """Compare calibrated scaled dyadic sums against their calibrated limits."""
    for h in (h1, h2):
        if h.spec.family is not Family.TRIFBM:
            raise DomainError(f"hypothesis {h.label} is not a trifbm")
        if h.spec.hk > 0.5:
            raise ParameterOutOfRange(f"hypothesis {h.label} has HK = {h.spec.hk} > 1/2")
    if h1.spec.hk == h2.spec.hk:
        raise HypothesesIndistinguishable(f"H_1 K_1 = H_2 K_2 = {h1.spec.hk}")
    level = path.grid.dyadic_level
    if level is None or level < MIN_TRIFBM_LEVEL:
        raise DomainError(f"need a dyadic grid of level >= {MIN_TRIFBM_LEVEL}")
    stats, gaps = [], []
    for h in (h1, h2):
        cal = trifbm_calibration(h.spec.hurst, h.spec.k)
        res = scaled_dyadic_sum(PathSample(path.grid, path.values, h.spec, path.seed), cal.alpha)
        stats.append(res)
        ref = cal.limit * path.grid.horizon ** (2.0 * h.spec.hk)
        gaps.append(_log_gap(res.value, ref))
    return _build((h1.label, h2.label), gaps, stats)


def discriminate_fbm(
    path: PathSample,
    H1: float,
    H2: float,
    labels: Optional[tuple] = None,
    n: Optional[int] = None,
) -> DiscriminationResult:
    """Compare the second-difference statistic with ``V_2(0, H_i)``.

    The estimator-space rule (closer of ``H_1``, ``H_2`` to the inverted
    statistic) is evaluated too; a disagreement is logged and the
    statistic-space decision kept.
    """
    if H1 == H2:
        raise HypothesesIndistinguishable(f"H_1 = H_2 = {H1}")
    labels = tuple(labels) if labels is not None else (f"H={H1!r}", f"H={H2!r}")
    stat = kurchenko_statistic(path, n)
    gaps = [_log_gap(stat.value, v_k_constant(2, 0.0, h)) for h in (H1, H2)]
    result = _build(labels, gaps, [stat])
    try:
        h_hat = estimate_hurst_v2(stat.value)
    except ValueError:
        agree = None
    else:
        alt, _ = select(labels, (abs(h_hat - H1), abs(h_hat - H2)))
        agree = alt == result.selected
        if not agree and result.margin > 0:
            log.warning(
                "fbm decision rules disagree on seed %s: statistic-space %s, estimator-space %s",
                path.seed, result.selected, alt,
            )
    return DiscriminationResult(
        result.labels, result.discrepancies, result.selected, result.margin, result.statistics, agree
    )


def discriminate(path: PathSample, h1: Hypothesis, h2: Hypothesis, **kwargs) -> DiscriminationResult:
    """Dispatch on the family shared by both hypotheses."""
    fam = h1.spec.family
    if h2.spec.family is not fam:
        raise DomainError("hypotheses must belong to the same family")
    if fam is Family.BIFBM:
        return discriminate_bifbm(path, h1, h2)
    if fam is Family.TRIFBM:
        return discriminate_trifbm(path, h1, h2)
    if fam is Family.FBM:
        return discriminate_fbm(path, h1.spec.hurst, h2.spec.hurst, (h1.label, h2.label), **kwargs)
    raise DomainError("no discriminator for nfbm")


@dataclass(frozen=True)
class PowerStudy:
    rate: float
    records: tuple
    truth: str

    @property
    def paths(self):
        return len(self.records)

    @property
    def standard_error(self):
        n = len(self.records)
        return math.sqrt(max(self.rate * (1 - self.rate), 0.0) / n)


def power_study(
    truth: ProcessSpec,
    h1: Hypothesis,
    h2: Hypothesis,
    paths: int,
    base_seed: int,
    grid: Grid,
    method: str = "auto",
) -> PowerStudy:
    """Fraction of ``paths`` simulated paths (seeds ``base_seed + i``) that pick the truth."""
    if int(paths) != paths or paths < 1:
        raise DomainError(f"paths must be a positive integer, got {paths}")
    if truth == h1.spec:
        truth_label = h1.label
    elif truth == h2.spec:
        truth_label = h2.label
    else:
        raise DomainError("truth must equal one of the hypotheses")
    if truth.family is Family.FBM and method != "cholesky":
        samples = [simulate(truth, grid, (base_seed + i) % (1 << 64), method) for i in range(paths)]
    else:
        samples = sample_paths(truth, grid, base_seed, paths)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PartitionScheduleWarning)
        records = tuple(discriminate(p, h1, h2) for p in samples)
    hits = sum(r.selected == truth_label for r in records)
    return PowerStudy(hits / paths, records, truth_label)
