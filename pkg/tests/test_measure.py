"""Closed-form kernel integrals against independent numeric oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jumpem import measure as M

# test-local oracles, deliberately independent of the library's quadrature:
# log-spaced trapezoid sums for tail integrals, plain bisection for quantiles


def tail_oracle(alpha, z_minus, z_plus, eps, power=0.0, n=400_000):
    total = 0.0
    for bound in (z_minus, z_plus):
        if bound > eps:
            u = np.linspace(np.log(eps), np.log(bound), n)
            z = np.exp(u)
            total += np.trapezoid(z ** power * z ** (-1.0 - alpha) * z, u)
    return total


def inside_oracle(alpha, z_minus, z_plus, eps, power, n=400_000):
    total = 0.0
    for bound in (z_minus, z_plus):
        hi = min(eps, bound)
        if hi > 0:
            u = np.linspace(np.log(hi) - 40.0, np.log(hi), n)
            z = np.exp(u)
            total += np.trapezoid(z ** power * z ** (-1.0 - alpha) * z, u)
    return total


def conditional_law_oracle(family, eps, n=400_000):
    """Tabulated conditional CDF on a log grid, with interpolating inverse."""
    xs, masses = [], []
    if family.z_minus > eps:
        u = np.linspace(np.log(family.z_minus), np.log(eps), n)
        z = np.exp(u)
        dens = z ** (-1.0 - family.alpha) * z
        cum = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2.0
                                                * -np.diff(u))])
        xs.append(-z)
        masses.append(cum)
    base = masses[-1][-1] if masses else 0.0
    if family.z_plus > eps:
        u = np.linspace(np.log(eps), np.log(family.z_plus), n)
        z = np.exp(u)
        dens = z ** (-1.0 - family.alpha) * z
        cum = base + np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2.0
                                                      * np.diff(u))])
        xs.append(z)
        masses.append(cum)
    x = np.concatenate(xs)
    g = np.concatenate(masses) / np.concatenate(masses)[-1]
    order = np.argsort(x)
    return x[order], g[order]


def quantile_oracle(xs, gs, y):
    idx = np.searchsorted(gs, y, side="left")
    idx = min(max(idx, 1), len(gs) - 1)
    g0, g1 = gs[idx - 1], gs[idx]
    if g1 == g0:
        return xs[idx]
    w = (y - g0) / (g1 - g0)
    return xs[idx - 1] * (1 - w) + xs[idx] * w


class TestTailIntensity:
    def test_closed_form_value(self):
        # alpha=1, b=1, eps=1/2: 2 (eps^-a - b^-a)/a = 2
        k = M.truncated_stable(alpha=1.0, b=1.0)
        assert M.tail_intensity(k, 0.0, 0.5) == pytest.approx(2.0, abs=1e-14)

    def test_empty_region(self):
        k = M.truncated_stable(alpha=1.0, b=1.0)
        assert M.tail_intensity(k, 0.3, 1.0) == 0.0

    def test_rho_zero_matches_homogeneous(self):
        k0 = M.truncated_stable(alpha=0.7, b=2.0)
        k1 = M.time_modulated_stable(alpha=0.7, b=2.0, rho=0.0)
        for t in (0.1, 0.5, 0.9):
            assert M.tail_intensity(k1, t, 0.3) == pytest.approx(
                M.tail_intensity(k0, 0.0, 0.3), rel=1e-14)

    def test_eps_must_be_positive(self):
        k = M.truncated_stable(alpha=1.0, b=1.0)
        with pytest.raises(M.MeasureError):
            M.tail_intensity(k, 0.0, 0.0)

    @pytest.mark.parametrize("alpha,zm,zp", [(0.5, 1.0, 1.0), (1.5, 10.0, 10.0),
                                             (0.0, 1.0, 1.0), (0.5, 0.0, 1.0),
                                             (1.2, 3.0, 7.0)])
    def test_against_oracle(self, alpha, zm, zp):
        k = M.truncated_stable(alpha=alpha, b=max(zm, zp), z_minus=zm, z_plus=zp)
        for eps in np.geomspace(1e-3, 0.8 * max(zm, zp), 10):
            got = M.tail_intensity(k, 0.0, eps)
            want = tail_oracle(alpha, zm, zp, eps)
            assert got == pytest.approx(want, rel=1e-8)

    def test_monotone_in_eps(self):
        k = M.truncated_stable(alpha=0.8, b=2.0)
        eps = np.geomspace(1e-4, 2.0, 60)
        vals = [M.tail_intensity(k, 0.2, e) for e in eps]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


class TestCumulativeIntensity:
    def test_degenerate_interval(self):
        k = M.time_modulated_stable(0.5, 10.0, rho=-0.75)
        assert M.cumulative_intensity(k, 1.0, 0.4, 0.4) == 0.0

    def test_constant_rate(self):
        k = M.truncated_stable(0.5, 10.0)
        lam = M.tail_intensity(k, 0.0, 1.0)
        assert M.cumulative_intensity(k, 1.0, 0.2, 0.9) == pytest.approx(0.7 * lam)

    def test_power_factor_value(self):
        # rho=-0.75 on [0,1]: time integral 4, so Lambda = 4 * tail mass
        k = M.time_modulated_stable(0.5, 10.0, rho=-0.75)
        tail = M.truncated_stable(0.5, 10.0)
        lam = M.tail_intensity(tail, 0.0, 1.0)
        assert M.cumulative_intensity(k, 1.0, 0.0, 1.0) == pytest.approx(4.0 * lam, rel=1e-12)

    def test_2d_quadrature_oracle(self):
        # oracle: exact time integral of s^-0.75 times the trapezoid tail mass
        k = M.time_modulated_stable(0.5, 10.0, rho=-0.75)
        want = 4.0 * tail_oracle(0.5, 10.0, 10.0, 1.0)
        got = M.cumulative_intensity(k, 1.0, 0.0, 1.0)
        assert got == pytest.approx(want, rel=1e-8)

    def test_additivity(self):
        k = M.time_modulated_stable(0.7, 5.0, rho=-0.5)
        lhs = (M.cumulative_intensity(k, 0.3, 0.1, 0.4)
               + M.cumulative_intensity(k, 0.3, 0.4, 0.9))
        assert lhs == pytest.approx(M.cumulative_intensity(k, 0.3, 0.1, 0.9), rel=1e-10)

    def test_singular_endpoint_rejected(self):
        k = M.time_modulated_stable(0.5, 10.0, rho=-1.25)
        with pytest.raises(M.MeasureError):
            M.cumulative_intensity(k, 1.0, 0.0, 1.0)


class TestQuantile:
    def test_y_one_hits_upper_truncation(self):
        for alpha in (0.3, 1.0, 1.7):
            k = M.truncated_stable(alpha=alpha, b=2.5)
            assert M.jump_size_quantile(k, 0.0, 0.4, 1.0) == pytest.approx(2.5, rel=1e-12)

    def test_half_is_negative_cutoff(self):
        k = M.truncated_stable(alpha=0.9, b=3.0)
        assert M.jump_size_quantile(k, 0.0, 0.25, 0.5) == pytest.approx(-0.25, rel=1e-12)

    def test_hand_value(self):
        # alpha=1, eps=1/2, b=1, y=3/4: ((1-1.5)(2-1)+2)^-1 = 2/3
        k = M.truncated_stable(alpha=1.0, b=1.0)
        assert M.jump_size_quantile(k, 0.0, 0.5, 0.75) == pytest.approx(2.0 / 3.0, rel=1e-14)

    def test_level_domain(self):
        k = M.truncated_stable(alpha=1.0, b=1.0)
        with pytest.raises(M.MeasureError):
            M.jump_size_quantile(k, 0.0, 0.5, 0.0)
        with pytest.raises(M.MeasureError):
            M.jump_size_quantile(k, 0.0, 0.5, 1.2)

    def test_eps_beyond_truncation(self):
        k = M.truncated_stable(alpha=1.0, b=1.0)
        with pytest.raises(M.MeasureError):
            M.jump_size_quantile(k, 0.0, 1.0, 0.5)

    @pytest.mark.parametrize("alpha,zm,zp", [(0.5, 1.0, 1.0), (1.5, 10.0, 10.0),
                                             (0.0, 1.0, 1.0), (0.7, 2.0, 6.0)])
    def test_agrees_with_inverse_cdf_oracle(self, alpha, zm, zp):
        # x-space agreement to 1e-8, transported through the local inverse
        # slope where the conditional density is small (far-tail quantiles are
        # ill conditioned in x for a fixed CDF tolerance)
        k = M.truncated_stable(alpha=alpha, b=max(zm, zp), z_minus=zm, z_plus=zp)
        fam = k.closed_forms
        rng = np.random.default_rng(3)
        count = 0
        for eps in np.geomspace(5e-3, 0.5 * min(b for b in (zm, zp) if b > 0), 10):
            xs, gs = conditional_law_oracle(fam, eps)
            total = fam.tail_mass(eps)
            for y in rng.uniform(0.01, 1.0, 10):
                got = float(M.jump_size_quantile(k, 0.0, eps, y))
                want = quantile_oracle(xs, gs, y)
                cond = total / (abs(got) ** (-1.0 - alpha))
                assert got == pytest.approx(want, abs=1e-8 * (1.0 + abs(got) + cond))
                count += 1
        assert count == 100

    @pytest.mark.parametrize("alpha,zm,zp", [(0.5, 1.0, 1.0), (1.5, 10.0, 10.0),
                                             (0.0, 1.0, 1.0), (0.7, 2.0, 6.0)])
    def test_cdf_agrees_with_oracle(self, alpha, zm, zp):
        k = M.truncated_stable(alpha=alpha, b=max(zm, zp), z_minus=zm, z_plus=zp)
        fam = k.closed_forms
        for eps in (0.01, 0.2):
            xs, gs = conditional_law_oracle(fam, eps)
            probe = xs[:: len(xs) // 50]
            got = fam.cdf(eps, probe)
            want = np.interp(probe, xs, gs)
            assert np.max(np.abs(got - want)) < 1e-8

    def test_roundtrip_quantile_cdf(self):
        for alpha in (0.0, 0.5, 1.0, 1.5):
            k = M.truncated_stable(alpha=alpha, b=2.0)
            y = np.linspace(1e-3, 1.0, 101)
            q = M.jump_size_quantile(k, 0.0, 0.3, y)
            g = M.jump_size_cdf(k, 0.0, 0.3, q)
            assert np.max(np.abs(g - y)) < 1e-10

    @given(y=st.floats(0.001, 1.0), eps=st.floats(0.01, 0.9))
    @settings(max_examples=60, deadline=None)
    def test_support_and_magnitude(self, y, eps):
        k = M.truncated_stable(alpha=0.8, b=1.0)
        q = float(M.jump_size_quantile(k, 0.0, eps, y))
        assert -1.0 <= q <= 1.0
        assert abs(q) >= eps - 1e-12

    def test_numeric_fallback_matches_closed_form(self):
        alpha, b = 0.6, 2.0
        closed = M.truncated_stable(alpha=alpha, b=b)
        numeric = M.CompensatorKernel(
            base_density=closed.base_density, support=(-b, b), bg_index=alpha)
        for y in (0.1, 0.5, 0.77, 1.0):
            got = float(M.jump_size_quantile(numeric, 0.0, 0.25, y))
            want = float(M.jump_size_quantile(closed, 0.0, 0.25, y))
            assert got == pytest.approx(want, abs=1e-9)


class TestTruncatedMoment:
    def test_closed_value(self):
        # alpha=1/2, eps=0.1, p=2 inside: 2 eps^1.5 / 1.5
        k = M.truncated_stable(alpha=0.5, b=1.0)
        want = 2.0 * 0.1 ** 1.5 / 1.5
        assert M.truncated_moment(k, 0.0, 0.1, 2.0) == pytest.approx(want, rel=1e-14)

    def test_vanishing_region(self):
        k = M.truncated_stable(alpha=0.5, b=1.0)
        assert M.truncated_moment(k, 0.0, 0.0, 2.0, "inside") == 0.0

    def test_small_ball_bound_via_bg_index(self):
        # |z|^3 mass inside the ball is dominated by eps^(3-beta') times the
        # beta'-moment for any beta' above the BG index
        k = M.truncated_stable(alpha=0.5, b=1.0)
        eps, beta_p = 0.2, 0.75
        lhs = M.truncated_moment(k, 0.0, eps, 3.0)
        rhs = eps ** (3.0 - beta_p) * M.truncated_moment(k, 0.0, eps, beta_p)
        assert lhs <= rhs + 1e-15

    @pytest.mark.parametrize("p,region", [(2.0, "inside"), (3.0, "inside"),
                                          (1.0, "outside"), (2.0, "outside")])
    def test_against_oracle(self, p, region):
        k = M.truncated_stable(alpha=1.2, b=4.0, z_minus=2.0, z_plus=4.0)
        for eps in (0.05, 0.4, 1.5):
            got = M.truncated_moment(k, 0.0, eps, p, region)
            if region == "inside":
                want = inside_oracle(1.2, 2.0, 4.0, eps, p)
            else:
                want = tail_oracle(1.2, 2.0, 4.0, eps, p)
            assert got == pytest.approx(want, rel=1e-7)

    def test_divergent_inside_moment_flagged(self):
        k = M.truncated_stable(alpha=1.5, b=1.0)
        with pytest.raises(M.DivergentIntegralError):
            M.truncated_moment(k, 0.0, 0.5, 1.0, "inside")

    def test_monotone_in_eps(self):
        k = M.truncated_stable(alpha=1.1, b=2.0)
        vals = [M.truncated_moment(k, 0.0, e, 2.0) for e in np.linspace(0.01, 2.0, 40)]
        assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))


class TestSignedTail:
    def test_symmetric_vanishes(self):
        k = M.truncated_stable(alpha=0.8, b=2.0)
        assert M.tail_signed_moment(k, 0.0, 0.3) == pytest.approx(0.0, abs=1e-14)

    def test_one_sided_value(self):
        # int_eps^1 z z^-1.5 dz = 2(1 - sqrt(eps))
        k = M.truncated_stable(alpha=0.5, b=1.0, z_minus=0.0, z_plus=1.0)
        got = M.tail_signed_moment(k, 0.0, 0.04)
        assert got == pytest.approx(2.0 * (1.0 - 0.2), rel=1e-14)


class TestTimeChangeInversion:
    def test_power_factor_inverse(self):
        k = M.time_modulated_stable(0.5, 10.0, rho=-0.75)
        areas = np.array([0.3, 1.0, 2.5]) * M.cumulative_intensity(k, 1.0, 0.0, 1.0) / 4.0
        ts = M.inverse_cumulative_intensity(k, 1.0, 0.0, 1.0, areas)
        back = np.array([M.cumulative_intensity(k, 1.0, 0.0, t) for t in ts])
        assert np.allclose(back, areas, rtol=1e-12)

    def test_fiber_factor_inverse_spans_knee(self):
        k = M.fiber_kernel(1.5, 8.0, 8.0, t_star=0.2, q=1.5)
        total = M.cumulative_intensity(k, 1.0, 0.0, 1.0)
        areas = np.linspace(0.05, 0.999, 17) * total
        ts = M.inverse_cumulative_intensity(k, 1.0, 0.0, 1.0, areas)
        back = np.array([M.cumulative_intensity(k, 1.0, 0.0, t) for t in ts])
        assert np.allclose(back, areas, rtol=1e-10)


class TestKernelStructure:
    def test_density_zero_outside_support(self):
        k = M.truncated_stable(alpha=0.5, b=1.0, z_minus=0.5, z_plus=1.0)
        z = np.array([-0.8, -0.4, 0.2, 1.3])
        d = k.density(0.0, z)
        assert d[0] == 0.0 and d[3] == 0.0 and d[1] > 0 and d[2] > 0

    def test_truncate_support(self):
        k = M.truncated_stable(alpha=0.5, b=2.0).truncate_support(0.7)
        assert k.support == (-0.7, 0.7)
        assert M.tail_intensity(k, 0.0, 0.7) == 0.0
        assert M.tail_intensity(k, 0.0, 0.1) == pytest.approx(
            tail_oracle(0.5, 0.7, 0.7, 0.1), rel=1e-8)

    def test_finite_activity_detection(self):
        bounded = M.CompensatorKernel(
            base_density=lambda z: np.ones_like(np.asarray(z, dtype=float)),
            support=(-1.0, 1.0), bg_index=0.0)
        assert bounded.has_finite_activity()
        assert not M.truncated_stable(0.5, 1.0).has_finite_activity()

    def test_bad_support_rejected(self):
        with pytest.raises(M.MeasureError):
            M.CompensatorKernel(base_density=lambda z: z, support=(0.5, 1.0))
