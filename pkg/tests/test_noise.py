"""Samplers: determinism, substream independence, and law checks."""

import numpy as np
import pytest
from scipy import stats

from jumpem import measure as M
from jumpem import noise as N
from jumpem.scheme import SchemeConfig


@pytest.fixture(scope="module")
def stable_kernel():
    return M.truncated_stable(alpha=0.5, b=1.0)


class TestSeedStream:
    def test_tag_required(self):
        with pytest.raises(N.NoiseError):
            N.SeedStream(1, 0).generator()

    def test_substreams_differ(self):
        s = N.SeedStream(1, 0)
        a = s.stream("brownian").generator().standard_normal(8)
        b = s.stream("substitute").generator().standard_normal(8)
        assert not np.allclose(a, b)

    def test_paths_do_not_perturb_each_other(self):
        draws_before = N.SeedStream(9, 3).stream("brownian").generator().standard_normal(16)
        _ = N.SeedStream(9, 4).stream("brownian").generator().standard_normal(1000)
        draws_after = N.SeedStream(9, 3).stream("brownian").generator().standard_normal(16)
        assert np.array_equal(draws_before, draws_after)

    def test_bit_exact_replay(self):
        a = N.SeedStream(7, 2).stream("jump_sizes").generator().random(32)
        b = N.SeedStream(7, 2).stream("jump_sizes").generator().random(32)
        assert a.tobytes() == b.tobytes()


class TestTimeChangeSampler:
    def test_homogeneous_mean_count(self, stable_kernel):
        # Poisson mean = lambda T, checked within 3 standard errors
        eps, horizon = 0.2, 1.0
        lam = M.tail_intensity(stable_kernel, 0.0, eps)
        counts = np.array([
            N.sample_jump_times_timechange(stable_kernel, eps, horizon,
                                           N.SeedStream(100, i)).size
            for i in range(100_000)])
        se = counts.std(ddof=1) / np.sqrt(counts.size)
        assert abs(counts.mean() - lam * horizon) < 3 * se

    def test_singular_modulation_concentrates_near_zero(self):
        k = M.time_modulated_stable(alpha=0.5, b=10.0, rho=-0.75)
        eps = 1.0
        total = M.cumulative_intensity(k, eps, 0.0, 1.0)
        early, late, counts = 0, 0, []
        for i in range(20_000):
            t = N.sample_jump_times_timechange(k, eps, 1.0, N.SeedStream(4, i))
            counts.append(t.size)
            early += int(np.sum(t <= 0.5))
            late += int(np.sum(t > 0.5))
        counts = np.array(counts)
        se = counts.std(ddof=1) / np.sqrt(counts.size)
        assert abs(counts.mean() - total) < 3 * se
        # time integral of s^-3/4 puts 84% of the mass before t = 1/2
        assert early > 3 * late

    def test_zero_intensity_empty(self, stable_kernel):
        t = N.sample_jump_times_timechange(stable_kernel, 1.0, 1.0, N.SeedStream(0, 0))
        assert t.size == 0

    def test_strictly_increasing(self, stable_kernel):
        for i in range(50):
            t = N.sample_jump_times_timechange(stable_kernel, 0.05, 1.0,
                                               N.SeedStream(11, i))
            if t.size > 1:
                assert np.all(np.diff(t) > 0)

    def test_poisson_count_law_chisquare(self, stable_kernel):
        # N(T) ~ Poisson(Lambda): chi-square GoF at 10^4 seeds, p > 0.01
        eps = 0.3
        lam = M.cumulative_intensity(stable_kernel, eps, 0.0, 1.0)
        counts = np.array([
            N.sample_jump_times_timechange(stable_kernel, eps, 1.0,
                                           N.SeedStream(200, i)).size
            for i in range(10_000)])
        kmax = int(stats.poisson.ppf(0.999, lam)) + 1
        observed = np.bincount(np.minimum(counts, kmax), minlength=kmax + 1)
        expected = stats.poisson.pmf(np.arange(kmax + 1), lam) * counts.size
        expected[kmax] = counts.size - expected[:kmax].sum()
        keep = expected > 5
        chi2 = float(np.sum((observed[keep] - expected[keep]) ** 2 / expected[keep]))
        p = 1.0 - stats.chi2.cdf(chi2, keep.sum() - 1)
        assert p > 0.01


class TestThinningSampler:
    def test_bound_violation_rejected(self, stable_kernel):
        lam = M.tail_intensity(stable_kernel, 0.0, 0.2)
        with pytest.raises(N.NoiseError):
            N.sample_jump_times_thinning(stable_kernel, 0.2, 1.0, 0.5 * lam,
                                         N.SeedStream(1, 0))

    def test_tight_bound_accepts_everything(self, stable_kernel):
        # constant intensity equal to the bound: thinning keeps each proposal
        eps = 0.2
        lam = M.tail_intensity(stable_kernel, 0.0, eps)
        counts = np.array([
            N.sample_jump_times_thinning(stable_kernel, eps, 1.0, lam,
                                         N.SeedStream(31, i)).size
            for i in range(100_000)])
        se = counts.std(ddof=1) / np.sqrt(counts.size)
        assert abs(counts.mean() - lam) < 3 * se

    def test_law_matches_timechange(self, stable_kernel):
        # KS on counts and on first arrivals, 10^4 seeds each, p > 0.01
        eps = 0.25
        lam = M.tail_intensity(stable_kernel, 0.0, eps)
        c_tc, c_th, first_tc, first_th = [], [], [], []
        for i in range(10_000):
            t1 = N.sample_jump_times_timechange(stable_kernel, eps, 1.0,
                                                N.SeedStream(51, i))
            t2 = N.sample_jump_times_thinning(stable_kernel, eps, 1.0, 2.0 * lam,
                                              N.SeedStream(52, i))
            c_tc.append(t1.size)
            c_th.append(t2.size)
            if t1.size:
                first_tc.append(t1[0])
            if t2.size:
                first_th.append(t2[0])
        assert stats.ks_2samp(c_tc, c_th).pvalue > 0.01
        assert stats.ks_2samp(first_tc, first_th).pvalue > 0.01

    def test_time_modulated_law_matches_timechange(self):
        k = M.time_modulated_stable(alpha=0.5, b=1.0, rho=1.0)
        lam_max = M.tail_intensity(k, 1.0, 0.3)
        c1 = [N.sample_jump_times_timechange(k, 0.3, 1.0, N.SeedStream(61, i)).size
              for i in range(10_000)]
        c2 = [N.sample_jump_times_thinning(k, 0.3, 1.0, lam_max, N.SeedStream(62, i)).size
              for i in range(10_000)]
        assert stats.ks_2samp(c1, c2).pvalue > 0.01


class TestJumpSizes:
    def test_forced_uniform_matches_quantile(self, stable_kernel):
        k1 = M.truncated_stable(alpha=1.0, b=1.0)
        out = N.sample_jump_sizes(k1, 0.5, np.array([0.3]), None,
                                  uniforms=np.array([0.75]))
        assert out[0] == pytest.approx(2.0 / 3.0, rel=1e-14)

    def test_symmetric_mean_zero(self, stable_kernel):
        times = np.linspace(0.001, 1.0, 1_000_000)
        sizes = N.sample_jump_sizes(stable_kernel, 0.1, times, N.SeedStream(77, 0))
        se = sizes.std(ddof=1) / np.sqrt(sizes.size)
        assert abs(sizes.mean()) < 3 * se

    def test_all_magnitudes_exceed_cutoff(self, stable_kernel):
        times = np.linspace(0.01, 1.0, 5000)
        sizes = N.sample_jump_sizes(stable_kernel, 0.2, times, N.SeedStream(78, 1))
        assert np.all(np.abs(sizes) > 0.2)

    def test_time_dependent_law_reevaluated(self):
        # non-factorising kernel: sizes must follow the local conditional law
        dens = lambda t, z: np.where(
            np.asarray(z) > 0,
            1.0 + 0.0 * np.asarray(z),
            np.full_like(np.asarray(z, dtype=float), 1.0 + 4.0 * min(t, 1.0)))
        k = M.CompensatorKernel(density_tz=dens, support=(-1.0, 1.0), bg_index=0.0)
        sizes_early = N.sample_jump_sizes(k, 0.01, np.full(4000, 0.01), N.SeedStream(80, 0))
        sizes_late = N.sample_jump_sizes(k, 0.01, np.full(4000, 0.99), N.SeedStream(80, 0))
        # late times put 5x the density on the negative side
        assert (sizes_late < 0).mean() > (sizes_early < 0).mean() + 0.2


class TestGenerateNoise:
    def test_shapes_and_no_jump_case(self, stable_kernel):
        cfg = SchemeConfig(n=4, eps=1.0, horizon=1.0)
        nz = N.generate_noise(stable_kernel, cfg, N.SeedStream(3, 0))
        assert nz.brownian_increments.shape == (4,)
        assert nz.substitute_gaussians.shape == (4,)
        assert nz.jump_times.size == 0 and nz.jump_sizes.size == 0

    def test_bit_exact_determinism(self, stable_kernel):
        cfg = SchemeConfig(n=16, eps=0.05, horizon=1.0)
        a = N.generate_noise(stable_kernel, cfg, N.SeedStream(5, 9))
        b = N.generate_noise(stable_kernel, cfg, N.SeedStream(5, 9))
        for field in ("brownian_increments", "substitute_gaussians",
                      "jump_times", "jump_sizes"):
            assert getattr(a, field).tobytes() == getattr(b, field).tobytes()

    def test_brownian_variance(self, stable_kernel):
        # empirical variance of increments = T/n within 3 standard errors
        cfg = SchemeConfig(n=4, eps=1.0, horizon=1.0)
        incs = np.concatenate([
            N.generate_noise(stable_kernel, cfg, N.SeedStream(42, i)).brownian_increments
            for i in range(25_000)])
        var = incs.var(ddof=1)
        se = np.sqrt(2.0 / (incs.size - 1)) * var  # chi-square se of a variance
        assert abs(var - 0.25) < 3 * se

    def test_thinning_path(self, stable_kernel):
        cfg = SchemeConfig(n=8, eps=0.3, horizon=1.0)
        lam = M.tail_intensity(stable_kernel, 0.0, 0.3)
        nz = N.generate_noise(stable_kernel, cfg, N.SeedStream(6, 0),
                              sampler="thinning", lambda_star=1.2 * lam)
        assert np.all(np.abs(nz.jump_sizes) > 0.3)

    def test_eps_zero_requires_finite_activity(self, stable_kernel):
        cfg = SchemeConfig(n=8, eps=0.0, horizon=1.0)
        with pytest.raises(N.NoiseError):
            N.generate_noise(stable_kernel, cfg, N.SeedStream(0, 0))
        bounded = M.CompensatorKernel(
            base_density=lambda z: np.ones_like(np.asarray(z, dtype=float)),
            support=(-1.0, 1.0), bg_index=0.0)
        nz = N.generate_noise(bounded, cfg, N.SeedStream(0, 0))
        assert nz.jump_times.size >= 0


class TestAggregation:
    def _noise(self, n=16, weights=None):
        rng = np.random.default_rng(1)
        return N.NoiseRealization(
            brownian_increments=rng.standard_normal(n) * np.sqrt(1.0 / n),
            substitute_gaussians=rng.standard_normal(n),
            jump_times=np.array([0.3, 0.7]), jump_sizes=np.array([0.5, -0.4]),
            eps=0.1, seed=0, path_index=0, grid_n=n, horizon=1.0,
            substitute_weights=weights)

    def test_identity_factor(self):
        nz = self._noise()
        assert N.aggregate_to_coarser_grid(nz, 1) is nz

    def test_full_aggregation_gives_terminal_brownian(self):
        nz = self._noise()
        agg = N.aggregate_to_coarser_grid(nz, 16)
        assert agg.grid_n == 1
        assert agg.brownian_increments[0] == pytest.approx(nz.brownian_increments.sum())

    def test_invalid_factor(self):
        with pytest.raises(N.NoiseError):
            N.aggregate_to_coarser_grid(self._noise(), 5)

    def test_jumps_pass_through(self):
        agg = N.aggregate_to_coarser_grid(self._noise(), 4)
        assert np.array_equal(agg.jump_times, np.array([0.3, 0.7]))

    def test_block_sums_have_scaled_variance(self):
        # variance of aggregated Brownian increments is m T / n, 3 se check
        n, m, paths = 8, 4, 100_000
        rng = np.random.default_rng(123)
        fine = rng.standard_normal((paths, n)) * np.sqrt(1.0 / n)
        blocks = fine.reshape(paths, n // m, m).sum(axis=2)
        var = blocks.var(ddof=1)
        se = np.sqrt(2.0 / (blocks.size - 1)) * var
        assert abs(var - m / n) < 3 * se

    def test_substitute_normals_stay_standard(self):
        # weighted recombination keeps unit variance for modulated kernels
        k = M.time_modulated_stable(alpha=0.5, b=1.0, rho=-0.5)
        cfg = SchemeConfig(n=16, eps=0.2, horizon=1.0)
        pool = []
        for i in range(4000):
            nz = N.generate_noise(k, cfg, N.SeedStream(9, i))
            pool.append(N.aggregate_to_coarser_grid(nz, 4).substitute_gaussians)
        pool = np.concatenate(pool)
        assert abs(pool.mean()) < 3 / np.sqrt(pool.size)
        var = pool.var(ddof=1)
        assert abs(var - 1.0) < 3 * np.sqrt(2.0 / (pool.size - 1))
