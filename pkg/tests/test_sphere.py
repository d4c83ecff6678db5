import math

import numpy as np
import pytest
from scipy import integrate, stats

from conemark import (
    ParameterError,
    angle_pdf,
    cap_area_log,
    derive_geometry,
    exact_fp_probability_log,
    generate_watermark,
)
from conemark.sphere import cap_area


class TestCapArea:
    @pytest.mark.parametrize("theta", [0.1, 0.5, 1.0, math.pi / 2, 2.2, math.pi])
    def test_circle_reduction(self, theta):
        # oracle: in the plane the cap is an arc, A_2(theta) = 2 theta
        assert cap_area_log(2, theta) == pytest.approx(math.log(2 * theta), abs=1e-10)

    @pytest.mark.parametrize("theta", [0.1, 0.5, 1.234, math.pi / 2, 2.7, math.pi])
    def test_sphere_reduction(self, theta):
        # oracle: integral of sin is 1 - cos, so A_3(theta) = 2 pi (1 - cos theta)
        expected = math.log(2 * math.pi * (1 - math.cos(theta)))
        assert cap_area_log(3, theta) == pytest.approx(expected, abs=1e-10)

    def test_zero_angle_sentinel(self):
        assert cap_area_log(17, 0.0) == -math.inf

    @pytest.mark.parametrize("n", [2, 3, 5, 10, 50, 137, 500, 1000, 2000])
    def test_hemisphere_is_half_sphere(self, n):
        gap = cap_area_log(n, math.pi / 2) - (cap_area_log(n, math.pi) - math.log(2))
        assert abs(gap) < 1e-9

    def test_monotone_in_theta(self):
        logs = [cap_area_log(40, t) for t in np.linspace(0.05, math.pi, 60)]
        assert all(b >= a for a, b in zip(logs, logs[1:]))

    def test_large_n_stays_finite(self):
        value = cap_area_log(100_000, 0.9)
        assert math.isfinite(value)

    @pytest.mark.parametrize("theta", [-0.1, math.pi + 0.1, math.nan])
    def test_bad_theta(self, theta):
        with pytest.raises(ParameterError):
            cap_area_log(10, theta)

    def test_bad_dimension(self):
        with pytest.raises(ParameterError):
            cap_area_log(1, 1.0)

    def test_result_record(self):
        res = cap_area(4, 1.0)
        assert res.n == 4 and res.theta == 1.0
        assert res.log_area == cap_area_log(4, 1.0)


class TestExactFalsePositive:
    def test_two_dimensional_arc_fraction(self):
        # oracle: P_fp = 2 beta / pi in the plane
        g = derive_geometry(0.37)
        expected = 2 * g.beta / math.pi
        assert math.exp(exact_fp_probability_log(2, g)) == pytest.approx(expected, rel=1e-10)

    def test_everything_region_as_lambda_vanishes(self):
        g = derive_geometry(1e-12)
        assert exact_fp_probability_log(64, g) == pytest.approx(0.0, abs=1e-5)

    def test_never_positive(self):
        for lam in (1e-9, 0.1, 1.0, 5.0):
            g = derive_geometry(lam)
            assert exact_fp_probability_log(100, g) <= 0.0

    def test_exponent_gap_at_n_1000(self):
        for lam in (0.1, 0.6, 1.0):
            g = derive_geometry(lam)
            gap = -exact_fp_probability_log(1000, g) / 1000 - lam
            assert abs(gap) < 0.02

    def test_non_increasing_in_lambda(self):
        values = [
            exact_fp_probability_log(200, derive_geometry(lam))
            for lam in np.linspace(0.05, 2.0, 40)
        ]
        assert all(b <= a for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("lam", [0.1, 0.6, 1.0])
    def test_rate_converges_to_lambda(self, lam):
        # the absolute gap at n must be smaller than at n/2
        g = derive_geometry(lam)
        gaps = [
            abs(-exact_fp_probability_log(n, g) / n - lam)
            for n in (100, 200, 400, 800, 1600, 3200)
        ]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))


class TestAnglePdf:
    @pytest.mark.parametrize("n", [3, 10, 100])
    def test_normalization(self, n):
        total, _ = integrate.quad(
            lambda a: angle_pdf(n, a), -math.pi / 2, math.pi / 2, epsabs=1e-12
        )
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_even_symmetry(self):
        for alpha in (0.05, 0.3, 1.1, 1.5):
            assert angle_pdf(7, alpha) == angle_pdf(7, -alpha)

    def test_non_negative_and_edge(self):
        # float pi/2 is not exactly the boundary; the density is just dust there
        assert 0.0 <= angle_pdf(5, math.pi / 2) < 1e-40
        assert angle_pdf(5, 0.0) > 0.0

    def test_bad_arguments(self):
        with pytest.raises(ParameterError):
            angle_pdf(2, 0.0)
        with pytest.raises(ParameterError):
            angle_pdf(5, 2.0)

    def test_matches_host_angle_histogram(self):
        # Monte Carlo oracle: empirical angles of isotropic hosts vs the
        # density, chi-square goodness of fit at a fixed seed.
        n, draws = 1000, 100_000
        rng = np.random.default_rng(424242)
        u = generate_watermark(n, 7).values
        x = rng.standard_normal((draws, n))
        angles = np.arcsin((x @ u) / (np.linalg.norm(x, axis=1) * math.sqrt(n)))
        lo, hi = angles.min(), angles.max()
        edges = np.linspace(lo - 1e-9, hi + 1e-9, 31)
        observed, _ = np.histogram(angles, bins=edges)
        expected = np.array(
            [
                integrate.quad(lambda a: angle_pdf(n, a), a0, a1, epsabs=1e-12)[0]
                for a0, a1 in zip(edges[:-1], edges[1:])
            ]
        )
        expected *= draws / expected.sum()
        keep = expected > 5
        stat = float(((observed[keep] - expected[keep]) ** 2 / expected[keep]).sum())
        p_value = 1.0 - stats.chi2.cdf(stat, df=int(keep.sum()) - 1)
        assert p_value > 0.01
