"""Hypersphere geometry and exact finite-n false-positive statistics.

Everything here is computed in the log domain: the spherical-cap surface
area involves Gamma((n+1)/2) and an integral of sin^(n-2), both of which
overflow or underflow in linear arithmetic long before n reaches 10^5.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate
from scipy.special import gammaln

from .errors import ParameterError
from .model import DetectionGeometry

__all__ = ["CapAreaResult", "cap_area", "cap_area_log", "exact_fp_probability_log", "angle_pdf"]

_HALF_PI = math.pi / 2


@dataclass(frozen=True)
class CapAreaResult:
    """Log surface area of the spherical cap of half-angle ``theta`` in R^n."""

    log_area: float
    theta: float
    n: int


def _log_sin_power_integral(p: int, theta: float) -> float:
    """ln of integral_0^theta sin^p(phi) dphi for p >= 0, theta in [0, pi].

    The integrand is rescaled by its maximum, exp(p * ln sin(phi_peak)),
    before adaptive quadrature so the numeric integral stays in [0, 1]
    regardless of p.  Relative tolerance 1e-11.
    """
    if theta <= 0.0:
        return -math.inf
    if p == 0:
        return math.log(theta)
    if theta > _HALF_PI:
        # sin is symmetric about pi/2:
        # I(theta) = 2*I(pi/2) - I(pi - theta)
        log_half = _log_sin_power_integral(p, _HALF_PI)
        log_tail = _log_sin_power_integral(p, math.pi - theta)
        return log_half + math.log(2.0 - math.exp(log_tail - log_half))

    peak = theta  # sin increases on [0, pi/2]
    log_sin_peak = math.log(math.sin(peak))

    def rescaled(phi: float) -> float:
        if phi <= 0.0:
            return 0.0
        return math.exp(p * (math.log(math.sin(phi)) - log_sin_peak))

    # Give the quadrature the decay scale of the peak at the right endpoint,
    # otherwise it can miss an O(1/p)-wide spike entirely for large p.
    if peak < _HALF_PI:
        scale = 1.0 / (p * math.cos(peak) / math.sin(peak) + 1.0 / peak)
    else:
        scale = 1.0 / math.sqrt(p)
    interior = sorted({max(0.0, peak - k * scale) for k in (1, 3, 10, 30, 100, 300, 1000)})
    points = [pt for pt in interior if 0.0 < pt < theta]
    total, _ = integrate.quad(
        rescaled,
        0.0,
        theta,
        points=points if (p > 50 and points) else None,
        limit=200,
        epsabs=0.0,
        epsrel=1e-11,
    )
    return p * log_sin_peak + math.log(total)


def cap_area_log(n: int, theta: float) -> float:
    """ln A_n(theta): log surface area of the spherical cap of half-angle theta.

    A_n(theta) = (n-1) pi^((n-1)/2) / Gamma((n+1)/2) * integral_0^theta sin^(n-2).
    Returns -inf for theta = 0.
    """
    n = int(n)
    if n < 2:
        raise ParameterError(f"cap area needs dimension n >= 2, got {n}")
    if not (0.0 <= theta <= math.pi) or not math.isfinite(theta):
        raise ParameterError(f"theta must lie in [0, pi], got {theta}")
    if theta == 0.0:
        return -math.inf
    prefactor = (
        math.log(n - 1) + 0.5 * (n - 1) * math.log(math.pi) - gammaln((n + 1) / 2.0)
    )
    return prefactor + _log_sin_power_integral(n - 2, theta)


def cap_area(n: int, theta: float) -> CapAreaResult:
    return CapAreaResult(log_area=cap_area_log(n, theta), theta=float(theta), n=int(n))


def exact_fp_probability_log(n: int, geometry: DetectionGeometry) -> float:
    """ln P_fp for dimension n: the two-cap fraction 2 A_n(beta) / A_n(pi).

    A non-watermarked Gaussian observation is uniform on the unit sphere
    after normalization, so the false-positive probability is exactly the
    fractional area of the two acceptance cones.
    """
    value = math.log(2.0) + cap_area_log(n, geometry.beta) - cap_area_log(n, math.pi)
    return min(0.0, value)


def angle_pdf(n: int, alpha: float) -> float:
    """Density of the host/watermark angle for an isotropic host in R^n.

    f(alpha) = Gamma(n/2) / (sqrt(pi) Gamma((n-1)/2)) * cos^(n-2)(alpha)
    on [-pi/2, pi/2]; this is the normalized density (it integrates to 1).
    """
    n = int(n)
    if n < 3:
        raise ParameterError(f"angle density needs dimension n >= 3, got {n}")
    if abs(alpha) > _HALF_PI or not math.isfinite(alpha):
        raise ParameterError(f"alpha must lie in [-pi/2, pi/2], got {alpha}")
    cos_alpha = math.cos(alpha)
    if cos_alpha <= 0.0:
        return 0.0
    log_norm = gammaln(n / 2.0) - gammaln((n - 1) / 2.0) - 0.5 * math.log(math.pi)
    return math.exp(log_norm + (n - 2) * math.log(cos_alpha))
