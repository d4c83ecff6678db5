import math

import numpy as np
import pytest

from conemark import (
    DetectionGeometry,
    ParameterError,
    WatermarkSequence,
    derive_geometry,
    detect,
    empirical_mutual_information,
    generate_watermark,
)


def test_aligned_signal_always_present():
    u = generate_watermark(32, 1)
    for lam in (0.05, 0.6, 3.0):
        report = detect(2.5 * u.values, u, derive_geometry(lam))
        assert report.rho_abs == pytest.approx(1.0, abs=1e-12)
        assert report.decision


def test_orthogonal_signal_always_absent():
    u = WatermarkSequence(4, np.array([1.0, 1.0, 1.0, 1.0]), seed=0)
    s = np.array([1.0, -1.0, 1.0, -1.0])  # orthogonal to u
    for lam in (0.05, 0.6, 3.0):
        report = detect(s, u, derive_geometry(lam))
        assert report.rho_abs == 0.0
        assert not report.decision


def test_four_dimensional_worked_example():
    # direct arithmetic: rho = (2/4) / sqrt(4/4) = 0.5, threshold(0.1) ~ 0.4258
    u = WatermarkSequence(4, np.array([1.0, 1.0, 1.0, 1.0]), seed=0)
    s = np.array([2.0, 0.0, 0.0, 0.0])
    report = detect(s, u, derive_geometry(0.1))
    assert report.rho_abs == pytest.approx(0.5, abs=1e-15)
    assert report.threshold == pytest.approx(0.42575726291164798, abs=1e-12)
    assert report.decision
    assert report.empirical_mi == pytest.approx(0.14384103622589046, abs=1e-12)


def test_mutual_information_identities():
    u = WatermarkSequence(4, np.array([1.0, 1.0, 1.0, 1.0]), seed=0)
    assert empirical_mutual_information(np.array([1.0, -1.0, 1.0, -1.0]), u) == 0.0
    assert empirical_mutual_information(3.0 * u.values, u) == math.inf
    # threshold equivalence: rho^2 = 1 - e^-2 lam gives MI = lam exactly
    lam = 0.73
    rho = math.sqrt(-math.expm1(-2 * lam))
    assert -0.5 * math.log1p(-rho * rho) == pytest.approx(lam, abs=1e-12)


def test_report_mi_matches_rho():
    rng = np.random.default_rng(7)
    u = generate_watermark(64, 3)
    g = derive_geometry(0.4)
    for _ in range(50):
        s = rng.standard_normal(64)
        report = detect(s, u, g)
        assert report.empirical_mi == pytest.approx(
            -0.5 * math.log(1 - report.rho_abs**2), abs=1e-9
        )
        assert report.decision == (report.rho_abs >= report.threshold)


def test_scale_invariance():
    rng = np.random.default_rng(11)
    u = generate_watermark(128, 5)
    g = derive_geometry(0.3)
    for _ in range(25):
        s = rng.standard_normal(128)
        base = detect(s, u, g)
        for c in (1e-6, -3.0, 1e6):
            assert detect(c * s, u, g).decision == base.decision


def test_watermark_sign_invariance():
    rng = np.random.default_rng(13)
    u = generate_watermark(128, 5)
    neg = WatermarkSequence(128, -u.values, seed=5)
    g = derive_geometry(0.3)
    for _ in range(25):
        s = rng.standard_normal(128)
        assert detect(s, u, g).rho_abs == detect(s, neg, g).rho_abs


def test_threshold_equivalence_of_decisions():
    rng = np.random.default_rng(17)
    u = generate_watermark(64, 9)
    for lam in (0.1, 0.5, 1.5):
        g = derive_geometry(lam)
        for _ in range(50):
            s = rng.standard_normal(64) + rng.uniform(-1, 1) * u.values
            report = detect(s, u, g)
            assert report.decision == (report.empirical_mi >= lam) or math.isclose(
                report.empirical_mi, lam, rel_tol=1e-12
            )


def test_zero_signal_is_absent():
    u = generate_watermark(16, 2)
    report = detect(np.zeros(16), u, derive_geometry(0.5))
    assert report.rho_abs == 0.0
    assert report.empirical_mi == 0.0
    assert not report.decision


def test_tie_decides_present():
    u = generate_watermark(16, 2)
    s = np.ones(16) + 0.3 * u.values
    probe = detect(s, u, derive_geometry(0.5))
    rho = probe.rho_abs
    geometry = DetectionGeometry(
        beta=math.acos(rho), cos2_beta=rho * rho, corr_threshold=rho
    )
    assert detect(s, u, geometry).decision


def test_length_mismatch():
    u = generate_watermark(8, 2)
    with pytest.raises(ParameterError):
        detect(np.zeros(9), u, derive_geometry(0.5))
    with pytest.raises(ParameterError):
        empirical_mutual_information(np.zeros(9), u)
