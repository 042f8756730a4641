"""Fibre-angle application: model construction, variance curve, PDFs."""

import numpy as np
import pytest
from scipy import integrate

from jumpem import appfiber as F


class TestFiberParams:
    def test_negative_polynomial_rejected(self):
        with pytest.raises(F.FiberError):
            F.FiberParams(gammas=(0.1, 1.0, 0.0, 0.0, 0.0))

    def test_constant_diffusion_case(self):
        p = F.FiberParams(sigma=0.0, gammas=(2.25, 0, 0, 0, 0))
        theta = np.linspace(-3, 3, 7)
        assert np.allclose(p.b(theta), 1.5)
        assert np.allclose(p.b_squared_dd(theta), 0.0)
        assert np.allclose(p.shear_drift(theta), 0.0)

    def test_zero_angle_drift_vanishes_for_any_shear(self):
        for sigma in (0.0, 1.3, 2.8):
            p = F.FiberParams(sigma=sigma)
            assert p.shear_drift(0.0) == pytest.approx(0.0, abs=1e-15)

    def test_second_derivative_matches_finite_differences(self):
        # sigma = 2.8 style coefficients (any admissible vector works: the
        # check compares analytics against central differences)
        p = F.FiberParams(sigma=2.8, gammas=(0.5, 0.1, 0.05, -0.2, 0.02),
                          alpha=0.5, z_minus=0.0, z_plus=7.0, t_star=0.034,
                          q=9.0 / 8.0)
        h = 1e-4
        for theta in np.linspace(-3.0, 3.0, 11):
            fd = (p._b_squared(theta + h) - 2 * p._b_squared(theta)
                  + p._b_squared(theta - h)) / h ** 2
            assert p.b_squared_dd(theta) == pytest.approx(fd, abs=1e-6)


class TestFiberModel:
    def test_ito_corrected_drift(self):
        p = F.FiberParams(sigma=1.1, gammas=(1.0, 0.2, 0.0, 0.1, 0.0))
        m = F.build_fiber_model(p)
        theta = 0.7
        want = p.shear_drift(theta) + 0.25 * p.b_squared_dd(theta)
        assert float(m.drift(0.0, theta)) == pytest.approx(want, rel=1e-13)

    def test_multiplicative_structure(self):
        m = F.build_fiber_model(F.FiberParams())
        m.check_multiplicative()

    def test_one_sided_kernel_supported(self):
        p = F.FiberParams(sigma=2.8, gammas=(1.0, 0, 0, 0, 0), alpha=0.5,
                          z_minus=0.0, z_plus=7.0, t_star=0.034, q=9.0 / 8.0)
        m = F.build_fiber_model(p)
        assert m.kernel.support == (0.0, 7.0)
        assert not m.compensator_vanishes


class TestVarianceCurve:
    def test_zero_at_origin(self):
        out = F.noise_variance_curve(F.FiberParams(), [0.0, 0.5])
        assert out[0] == 0.0 and out[1] > 0.0

    def test_hand_value_below_t_star(self):
        # q=2, T*=1, t=1/2: time integral 0.125; z^2 moment (zm^{2-a}+zp^{2-a})/(2-a)
        p = F.FiberParams(alpha=1.5, z_minus=8.0, z_plus=8.0, t_star=1.0, q=2.0)
        moment = (8.0 ** 0.5 + 8.0 ** 0.5) / 0.5
        got = F.noise_variance_curve(p, [0.5])[0]
        assert got == pytest.approx(0.125 * moment, rel=1e-10)

    def test_linear_regime_constant_slope(self):
        p = F.FiberParams()
        ts = np.array([0.5, 0.6, 0.7, 0.8])
        v = F.noise_variance_curve(p, ts)
        slopes = np.diff(v) / np.diff(ts)
        assert np.allclose(slopes, slopes[0], rtol=1e-9)

    def test_continuous_nondecreasing(self):
        p = F.FiberParams()
        ts = np.linspace(0.0, 1.0, 101)
        v = F.noise_variance_curve(p, ts)
        assert np.all(np.diff(v) >= 0)
        assert np.max(np.abs(np.diff(v))) < 0.2 * v[-1]

    def test_quadrature_equals_direct_integral_not_misderivation(self):
        # a tempting closed form (prefactor 1/(q-1) instead of 1/q on the
        # superdiffusive part) is measurably wrong; the curve must equal the
        # direct integral of kappa
        p = F.FiberParams(alpha=1.5, z_minus=8.0, z_plus=8.0, t_star=0.2, q=1.5)
        t = 0.1
        direct = integrate.quad(lambda s: min(s, 0.2) ** 0.5, 0, t)[0]
        moment = 2 * 8.0 ** 0.5 / 0.5
        got = F.noise_variance_curve(p, [t])[0]
        assert got == pytest.approx(direct * moment, rel=1e-10)
        misderived = (1.0 / (p.q - 1.0)) * t ** p.q * moment
        assert got != pytest.approx(misderived, rel=0.05)


class TestFiberPdf:
    def test_histogram_layout_and_snapshots(self):
        rep = F.run_fiber_pdf(F.FiberParams(), n=64, mc_paths=4000,
                              snapshot_times=(0.25, 1.0), master_seed=1)
        assert len(rep.snapshots) == 2
        for snap in rep.snapshots:
            assert snap.bin_centers.shape == (401,)
            assert snap.density.shape == (401,)
            # renormalised density integrates to at most one over [-10, 10]
            mass = np.sum(snap.density) * (20.0 / 401)
            assert 0.8 < mass <= 1.0 + 1e-9

    def test_off_grid_snapshot_rejected(self):
        with pytest.raises(F.FiberError):
            F.run_fiber_pdf(F.FiberParams(), n=64, mc_paths=100,
                            snapshot_times=(1.0 / 3.0,))

    def test_gaussian_control_kurtosis_near_zero(self):
        rep = F.run_fiber_pdf(F.FiberParams(), n=64, mc_paths=100_000,
                              snapshot_times=(0.5, 1.0), master_seed=2,
                              gaussian_control=True)
        for snap in rep.snapshots:
            assert abs(snap.excess_kurtosis) < 0.1

    def test_symmetric_kernel_symmetric_pdf(self):
        rep = F.run_fiber_pdf(F.FiberParams(sigma=0.0), n=64, mc_paths=50_000,
                              snapshot_times=(1.0,), master_seed=3)
        snap = rep.snapshots[0]
        assert abs(snap.skewness) < 10.0 / np.sqrt(50_000) * 3

    def test_empirical_variance_matches_quadrature(self):
        p = F.FiberParams()
        ts = (0.25, 0.5, 1.0)
        model_var = F.noise_variance_curve(p, ts)
        sim = F.empirical_l_variance(p, ts, n=64, mc_paths=40_000, master_seed=5)
        for want, (got, hw) in zip(model_var, sim):
            assert abs(got - want) <= 3 * hw
