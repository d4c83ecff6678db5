import math

import numpy as np
import pytest

from conemark import (
    HostSignal,
    ParameterError,
    PlaneCoordinates,
    derive_geometry,
    detect,
    embed_optimal,
    embed_sign,
    embedding_margin,
    generate_watermark,
    to_plane_coordinates,
)


def _orthogonal_host(n, r):
    """Host with <x, u> = 0 bit-exactly (alpha = 0) and |x|^2 / n = r.

    Uses an alternating watermark and a constant host so the correlation
    cancels in integer arithmetic, keeping the alpha = 0 tie unambiguous.
    """
    from conemark import WatermarkSequence

    assert n % 2 == 0
    u = WatermarkSequence(n, np.tile([1.0, -1.0], n // 2), seed=0)
    x = np.full(n, math.sqrt(r))
    return HostSignal(n, x), u


def grid_max_margin(r, distortion, geometry, points=201):
    """Brute-force oracle: maximize the margin at alpha = 0 over the budget
    disc (v3 = 0), on a points x points grid.  Returns (value, resolution)
    where resolution bounds how far the grid max can sit below the true max.
    """
    side = math.sqrt(distortion)
    v1 = np.linspace(-side, side, points)[:, None]
    v2 = np.linspace(-side, side, points)[None, :]
    inside = v1 * v1 + v2 * v2 <= distortion
    tan2 = 1.0 / geometry.cos2_beta - 1.0
    sqrt_r = math.sqrt(r)
    t1 = v1 * v1 * tan2 - (sqrt_r + v2) ** 2
    best = float(np.max(np.where(inside, t1, -np.inf)))
    h = 2 * side / (points - 1)
    lipschitz = 2 * side * (1 + tan2) + 2 * (sqrt_r + side)
    return best, lipschitz * h * math.sqrt(2.0)


class TestOptimalEmbedder:
    def test_worked_coefficients_alpha_zero(self):
        # frozen from a 30-digit evaluation of the alpha = 0 rule at
        # lambda = 0.6, r = 1, D = 2
        n = 256
        host, u = _orthogonal_host(n, r=1.0)
        geometry = derive_geometry(0.6)
        result = embed_optimal(host, u, 2.0, geometry)
        assert result.a == pytest.approx(0.30119421191220210, abs=1e-12)
        assert result.b == pytest.approx(1.22950008968482458, abs=1e-12)
        assert result.branch == "optimal"

    def test_boundary_budget_lands_on_cone(self):
        # at alpha = 0 and D = r cos^2(beta) the output correlation is
        # exactly the threshold cos(beta)
        n = 128
        geometry = derive_geometry(0.6)
        host, u = _orthogonal_host(n, r=1.7)
        distortion = 1.7 * geometry.cos2_beta
        result = embed_optimal(host, u, distortion, geometry)
        report = detect(result.y, u, geometry)
        assert report.rho_abs == pytest.approx(geometry.corr_threshold, abs=1e-9)

    def test_zero_host_spends_budget_on_watermark(self):
        n = 16
        u = generate_watermark(n, 5)
        host = HostSignal(n, np.zeros(n))
        result = embed_optimal(host, u, 1.0, derive_geometry(0.6))
        assert np.allclose(result.y, u.values)
        assert result.distortion_used == pytest.approx(1.0, abs=1e-12)
        assert result.branch == "optimal"

    def test_full_budget_spent_on_optimal_branch(self):
        rng = np.random.default_rng(123)
        for n in (16, 64, 256):
            u = generate_watermark(n, n)
            for _ in range(40):
                host = HostSignal(n, rng.standard_normal(n))
                result = embed_optimal(host, u, 2.0, derive_geometry(0.6))
                assert result.branch == "optimal"
                assert abs(result.distortion_used - 2.0) < 1e-9

    def test_displacement_stays_in_host_watermark_plane(self):
        rng = np.random.default_rng(99)
        n = 64
        u = generate_watermark(n, 4)
        geometry = derive_geometry(0.3)
        for _ in range(40):
            host = HostSignal(n, rng.standard_normal(n))
            result = embed_optimal(host, u, 1.5, geometry)
            w = result.y - host.samples
            basis = np.linalg.qr(np.stack([u.values, host.samples], axis=1))[0]
            residual = w - basis @ (basis.T @ w)
            assert np.linalg.norm(residual) < 1e-9 * np.linalg.norm(w)
            assert result.coords.v3 < 1e-9

    def test_sign_conventions(self):
        rng = np.random.default_rng(7)
        n = 32
        u = generate_watermark(n, 8)
        geometry = derive_geometry(0.5)
        for _ in range(60):
            host = HostSignal(n, rng.standard_normal(n))
            result = embed_optimal(host, u, 3.0, geometry)
            c = result.coords
            assert c.v1 * math.sin(c.alpha) >= -1e-12
            assert c.v2 * math.cos(c.alpha) <= 1e-12

    def test_degenerate_branch_shrinks_host(self):
        n = 64
        geometry = derive_geometry(1.0)  # cos^4(beta) ~ 0.748
        rng = np.random.default_rng(21)
        x = rng.standard_normal(n) * 2.0
        host = HostSignal(n, x)
        r = float(x @ x) / n
        distortion = 0.25 * r * geometry.cos2_beta**2  # force D < r cos^4
        result = embed_optimal(host, u := generate_watermark(n, 1), distortion, geometry)
        assert result.branch == "degenerate-shrink"
        shrink = 1.0 - math.sqrt(distortion / r)
        assert np.allclose(result.y, shrink * x)
        assert result.distortion_used == pytest.approx(distortion, rel=1e-12)
        assert result.b == 0.0

    def test_noiseless_acceptance_when_budget_suffices(self):
        rng = np.random.default_rng(2024)
        fails = 0
        for n in (64, 256):
            for lam in (0.1, 0.6):
                geometry = derive_geometry(lam)
                u = generate_watermark(n, n + int(lam * 10))
                for _ in range(50):
                    host = HostSignal(n, rng.standard_normal(n))
                    r = float(host.samples @ host.samples) / n
                    distortion = r * geometry.cos2_beta * float(rng.uniform(1.0, 3.0))
                    result = embed_optimal(host, u, distortion, geometry)
                    if not detect(result.y, u, geometry).decision:
                        fails += 1
        assert fails == 0

    def test_length_and_distortion_validation(self):
        u = generate_watermark(8, 1)
        host = HostSignal(9, np.ones(9))
        with pytest.raises(ParameterError):
            embed_optimal(host, u, 1.0, derive_geometry(0.5))
        host = HostSignal(8, np.ones(8))
        with pytest.raises(ParameterError):
            embed_optimal(host, u, 0.0, derive_geometry(0.5))


class TestSignEmbedder:
    def test_positive_correlation_adds(self):
        u = generate_watermark(8, 1)
        host = HostSignal(8, 0.5 * u.values)
        result = embed_sign(host, u, 4.0)
        assert np.allclose(result.y, host.samples + 2.0 * u.values)

    def test_negative_correlation_subtracts(self):
        u = generate_watermark(8, 1)
        host = HostSignal(8, -0.5 * u.values)
        result = embed_sign(host, u, 4.0)
        assert np.allclose(result.y, host.samples - 2.0 * u.values)

    def test_two_dimensional_worked_example(self):
        from conemark import WatermarkSequence

        u = WatermarkSequence(2, np.array([1.0, 1.0]), seed=0)
        host = HostSignal(2, np.array([3.0, -1.0]))
        result = embed_sign(host, u, 4.0)
        assert np.allclose(result.y, [5.0, 1.0])
        assert result.distortion_used == pytest.approx(4.0, abs=0.0)

    def test_zero_correlation_takes_plus(self):
        from conemark import WatermarkSequence

        u = WatermarkSequence(2, np.array([1.0, 1.0]), seed=0)
        host = HostSignal(2, np.array([1.0, -1.0]))
        result = embed_sign(host, u, 1.0)
        assert np.allclose(result.y, host.samples + u.values)

    def test_budget_exact(self):
        rng = np.random.default_rng(5)
        u = generate_watermark(100, 2)
        host = HostSignal(100, rng.standard_normal(100))
        assert embed_sign(host, u, 0.37).distortion_used == 0.37


class TestEmbeddingMargin:
    def test_optimal_point_value(self):
        # the stationary displacement achieves D tan^2(beta) - r sin^2(beta)
        geometry = derive_geometry(0.6)
        r, distortion = 1.3, 2.0
        cos2 = geometry.cos2_beta
        coords = PlaneCoordinates(
            r=r,
            alpha=0.0,
            v1=math.sqrt(distortion - r * cos2 * cos2),
            v2=-math.sqrt(r) * cos2,
            v3=0.0,
        )
        tan2 = (1 - cos2) / cos2
        expected = distortion * tan2 - r * (1 - cos2)
        assert embedding_margin(coords, geometry) == pytest.approx(expected, rel=1e-12)

    def test_zero_displacement_reduces_to_minus_r(self):
        geometry = derive_geometry(0.8)
        coords = PlaneCoordinates(r=2.7, alpha=0.0, v1=0.0, v2=0.0, v3=0.0)
        assert embedding_margin(coords, geometry) == pytest.approx(-2.7, rel=1e-12)

    def test_v3_only_subtracts_its_square(self):
        geometry = derive_geometry(0.4)
        base = PlaneCoordinates(r=1.1, alpha=0.2, v1=0.5, v2=-0.3, v3=0.0)
        for t in (0.1, 0.9, 2.0):
            bumped = PlaneCoordinates(r=1.1, alpha=0.2, v1=0.5, v2=-0.3, v3=t)
            assert embedding_margin(bumped, geometry) == pytest.approx(
                embedding_margin(base, geometry) - t * t, rel=1e-12
            )

    def test_grid_oracle_never_beats_stationary_point(self):
        # brute-force maximization over the budget disc at alpha = 0, where
        # the stationary-point optimization is posed
        rng = np.random.default_rng(31)
        geometry = derive_geometry(0.6)
        for _ in range(30):
            r = float(rng.uniform(0.1, 3.0))
            distortion = float(rng.uniform(0.2, 3.0))
            if distortion < r * geometry.cos2_beta**2:
                continue
            cos2 = geometry.cos2_beta
            coords = PlaneCoordinates(
                r=r,
                alpha=0.0,
                v1=math.sqrt(distortion - r * cos2 * cos2),
                v2=-math.sqrt(r) * cos2,
                v3=0.0,
            )
            value = embedding_margin(coords, geometry)
            best, resolution = grid_max_margin(r, distortion, geometry)
            assert value >= best - resolution

    def test_embed_optimal_matches_margin_formula(self):
        # the embedder's measured coordinates reproduce the boundary margin
        rng = np.random.default_rng(3)
        n = 128
        geometry = derive_geometry(0.6)
        u = generate_watermark(n, 17)
        host = HostSignal(n, rng.standard_normal(n))
        result = embed_optimal(host, u, 2.0, geometry)
        direct = embedding_margin(result.coords, geometry)
        recomputed = embedding_margin(
            to_plane_coordinates(host, u, result.y - host.samples), geometry
        )
        assert direct == pytest.approx(recomputed, rel=1e-12)
