import math

import numpy as np
import pytest
from scipy import stats

from fracvar import sampler
from fracvar.errors import DomainError, NotPositiveDefinite, ParameterOutOfRange
from fracvar.kernels import ProcessSpec, covariance
from fracvar.sampler import (
    Grid,
    check_partition_schedule,
    coarsen,
    dyadic_grid,
    factor_covariance,
    half_integer_grid,
    sample_fbm_circulant,
    sample_path,
    sample_paths,
    simulate,
    standard_normals,
    uniform_grid,
)
from fracvar.variation import p_variation_sum

# ---- grids ---------------------------------------------------------------


def test_uniform_grid_examples():
    g = uniform_grid(1.0, 2)
    np.testing.assert_array_equal(g.points, [0.0, 0.5, 1.0])
    assert g.norm == 0.5
    np.testing.assert_array_equal(uniform_grid(2.0, 4).points, [0, 0.5, 1.0, 1.5, 2.0])
    big = uniform_grid(1.0, 2**10)
    assert len(big) == 1025 and big.norm == pytest.approx(2.0**-10, rel=1e-12)
    assert big.horizon == 1.0 and big.points[-1] == 1.0


@pytest.mark.parametrize("T, n", [(0.0, 4), (-1.0, 4), (1.0, 0), (1.0, 2.5)])
def test_uniform_grid_errors(T, n):
    with pytest.raises(DomainError):
        uniform_grid(T, n)


def test_dyadic_grid_examples():
    np.testing.assert_array_equal(dyadic_grid(1.0, 1).points, [0, 0.5, 1.0])
    g = dyadic_grid(1.0, 3)
    np.testing.assert_array_equal(g.points, np.arange(9) / 8)
    assert g.dyadic_level == 3
    with pytest.raises(DomainError):
        dyadic_grid(1.0, 17)


def test_dyadic_level_detection():
    assert uniform_grid(3.0, 6).dyadic_level is None
    assert Grid([0.0, 0.1, 1.0]).dyadic_level is None
    assert half_integer_grid(8).dyadic_level == 4


@pytest.mark.parametrize("pts", [[0.0], [0.1, 0.5], [0.0, 0.5, 0.5], [0.0, 0.7, 0.3]])
def test_grid_invariants(pts):
    with pytest.raises(DomainError):
        Grid(pts)


def test_half_integer_grid_exact():
    g = half_integer_grid(5)
    np.testing.assert_array_equal(g.points, np.arange(11) / 2)


# ---- normal stream -------------------------------------------------------


def test_normals_deterministic_and_prefix_stable():
    a = standard_normals(123, 1000)
    b = standard_normals(123, 1000)
    assert np.array_equal(a, b)
    assert np.array_equal(standard_normals(123, 10), a[:10])
    assert not np.array_equal(standard_normals(124, 10), a[:10])


def test_normals_distribution():
    z = standard_normals(7, 200_000)
    assert stats.kstest(z, "norm").pvalue > 0.01
    assert np.all(np.isfinite(z))


@pytest.mark.parametrize("seed", [-1, 2**64, 1.5])
def test_seed_range(seed):
    with pytest.raises(DomainError):
        standard_normals(seed, 3)


# ---- dense sampling ------------------------------------------------------


def test_sample_path_deterministic(probe_spec):
    g = uniform_grid(1.0, 16)
    a = sample_path(probe_spec, g, 99)
    b = sample_path(probe_spec, g, 99)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.values[0] == 0.0 and len(a.values) == len(g)
    assert a.seed == 99 and a.spec == probe_spec


def test_sample_paths_seed_derivation():
    g = uniform_grid(1.0, 8)
    spec = ProcessSpec.bifbm(0.6, 0.5)
    batch = sample_paths(spec, g, 2**64 - 2, 3)
    assert [p.seed for p in batch] == [2**64 - 2, 2**64 - 1, 0]
    single = sample_path(spec, g, 2**64 - 1)
    np.testing.assert_array_equal(batch[1].values, single.values)


def test_marginal_variance_all_families(probe_spec):
    g = Grid([0.0, 0.5, 1.0])
    paths = sample_paths(probe_spec, g, 0, 10_000)
    v = np.var([p.values[-1] for p in paths])
    assert v == pytest.approx(covariance(probe_spec, 1.0, 1.0), rel=0.05)


def test_brownian_unit_variance():
    g = Grid([0.0, 1.0])
    v = np.var([p.values[1] for p in sample_paths(ProcessSpec.fbm(0.5), g, 0, 10_000)])
    assert 0.95 <= v <= 1.05


def test_trifbm_endpoint_variance():
    g = Grid([0.0, 1.0])
    v = np.var([p.values[1] for p in sample_paths(ProcessSpec.trifbm(0.5, 0.5), g, 0, 10_000)])
    assert v == pytest.approx(2 - math.sqrt(2), rel=0.05)


def test_sample_path_validates():
    with pytest.raises(ParameterOutOfRange):
        sample_path(ProcessSpec.trifbm(0.5, 1.0), uniform_grid(1.0, 4), 0)


def test_jitter_ladder_exhaustion(monkeypatch):
    monkeypatch.setattr(sampler, "JITTER_LADDER", (0.0,))
    sampler._factors.clear()
    # a smooth kernel on a fine grid is numerically singular without jitter
    with pytest.raises(NotPositiveDefinite):
        factor_covariance(ProcessSpec.nfbm(3, 2.95), uniform_grid(1.0, 256))
    sampler._factors.clear()


def test_jitter_ladder_recovers():
    sampler._factors.clear()
    chol, eps = factor_covariance(ProcessSpec.nfbm(3, 2.95), uniform_grid(1.0, 256))
    assert eps in sampler.JITTER_LADDER and eps > 0
    assert np.all(np.isfinite(chol))


# ---- circulant route -----------------------------------------------------


def test_circulant_brownian_qv():
    path = sample_fbm_circulant(0.5, 10, 1.0, 3)
    assert path.values[0] == 0.0
    assert p_variation_sum(path, 2).value == pytest.approx(1.0, rel=0.05)


def test_circulant_cross_covariance():
    H = 0.7
    i, j = 256, 768  # t = 0.25, 0.75 at level 10
    prods = np.empty(20_000)
    for s in range(prods.size):
        v = sample_fbm_circulant(H, 10, 1.0, s).values
        prods[s] = v[i] * v[j]
    target = 0.5 * (0.25**1.4 + 0.75**1.4 - 0.5**1.4)
    se = prods.std(ddof=1) / math.sqrt(prods.size)
    assert abs(prods.mean() - target) <= 3 * se


def test_circulant_matches_dense_in_law():
    # one increment per path so the samples are i.i.d.; scale matched by construction
    H, level = 0.3, 4
    g = dyadic_grid(1.0, level)
    dense = np.array([p.values[9] - p.values[8] for p in sample_paths(ProcessSpec.fbm(H), g, 0, 10_000)])
    fft = np.array([np.diff(sample_fbm_circulant(H, level, 1.0, 10_000 + s).values)[8] for s in range(10_000)])
    assert stats.ks_2samp(dense, fft).pvalue > 0.01


def test_circulant_need_not_match_dense():
    a = sample_fbm_circulant(0.5, 3, 1.0, 5).values
    b = sample_path(ProcessSpec.fbm(0.5), dyadic_grid(1.0, 3), 5).values
    assert a.shape == b.shape


def test_circulant_caps():
    with pytest.raises(DomainError):
        sample_fbm_circulant(0.5, 23, 1.0, 0)
    with pytest.raises(ParameterOutOfRange):
        sample_fbm_circulant(1.2, 5, 1.0, 0)


def test_circulant_eigenvalues_nonnegative_for_fgn():
    for H in (0.05, 0.3, 0.5, 0.7, 0.95):
        lam = sampler._fgn_eigenvalues(H, 1024)
        assert lam.min() >= -1e-9 * lam.max()


def test_simulate_dispatch():
    g = dyadic_grid(2.0, 6)
    spec = ProcessSpec.fbm(0.4)
    auto = simulate(spec, g, 1)
    np.testing.assert_array_equal(auto.values, sample_fbm_circulant(0.4, 6, 2.0, 1).values)
    dense = simulate(spec, g, 1, "cholesky")
    np.testing.assert_array_equal(dense.values, sample_path(spec, g, 1).values)
    with pytest.raises(DomainError):
        simulate(ProcessSpec.bifbm(0.5, 0.5), g, 1, "circulant")
    with pytest.raises(DomainError):
        simulate(spec, g, 1, "spectral")


def test_coarsen_is_subsampling():
    path = sample_fbm_circulant(0.6, 8, 1.0, 0)
    c = coarsen(path, 5)
    assert c.grid.dyadic_level == 5
    np.testing.assert_array_equal(c.values, path.values[::8])
    with pytest.raises(DomainError):
        coarsen(path, 9)


# ---- partition schedule --------------------------------------------------


def test_schedule_examples():
    n = np.arange(2, 65)
    assert check_partition_schedule(1.0 / n, 1.0)
    assert not check_partition_schedule(1.0 / np.log(n + 1), 1.0)
    assert check_partition_schedule(1.0 / n, 2.6316)


def test_schedule_errors():
    with pytest.raises(DomainError):
        check_partition_schedule([], 1.0)
    with pytest.raises(DomainError):
        check_partition_schedule([0.1, -0.1], 1.0)
    with pytest.raises(DomainError):
        check_partition_schedule([0.1, 0.05], 0.5)
