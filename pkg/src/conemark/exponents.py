"""False-negative error exponents: closed forms and a brute-force oracle.

The exponent is the value of a convex minimization over the host energy r
and the attack-noise energy q, constrained by the embedding margin.  When
the unconstrained minimizer (host variance, attack variance) is feasible
the exponent vanishes; otherwise the minimum sits on the margin boundary
q = D tan^2(beta) - r sin^2(beta), a one-dimensional convex problem.

The closed forms are evaluated in cancellation-free arrangements so they
stay accurate down to attack variances of 1e-8 and below; the numeric
oracle solves the same boundary problem by golden-section search and is
the package's independent correctness check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np

from .errors import OracleError, ParameterError
from .model import DetectionGeometry, SystemParams

__all__ = [
    "ExponentReport",
    "fn_exponent_closed_form",
    "fn_exponent_attack_free",
    "fn_exponent_oracle",
    "fn_exponent_grid_2d",
    "fn_exponent_grid_3d",
    "positivity_thresholds",
]

Method = Literal["closed-form", "attack-free", "numeric-oracle"]
ZeroReason = Literal["global-min-feasible", "insufficient-distortion"]

_GOLDEN_INV = (math.sqrt(5.0) - 1.0) / 2.0  # 1/phi
_SINGULAR_RTOL = 1e-8


@dataclass(frozen=True)
class ExponentReport:
    """False-negative exponent with its minimizers and provenance tag."""

    e_fn: float
    r_star: float
    q_star: float
    method: Method
    zero_reason: Optional[ZeroReason] = None

    def __post_init__(self):
        if self.e_fn < 0:
            raise ParameterError(f"exponent must be >= 0, got {self.e_fn}")
        if self.zero_reason is not None and self.e_fn != 0.0:
            raise ParameterError("zero_reason set on a non-zero exponent")


def _phi(x: float) -> float:
    """0.5 (x - ln x - 1): the per-coordinate convex rate term, phi(1) = 0."""
    if x <= 0:
        return math.inf
    d = x - 1.0
    if abs(d) < 0.5:
        return 0.5 * (d - math.log1p(d))
    return 0.5 * (x - math.log(x) - 1.0)


def _margin_at(r: float, distortion: float, geometry: DetectionGeometry) -> float:
    """Boundary margin D tan^2(beta) - r sin^2(beta) of the optimal embedder."""
    sin2 = 1.0 - geometry.cos2_beta
    tan2 = sin2 / geometry.cos2_beta
    return distortion * tan2 - r * sin2


def _zero_report(params: SystemParams, method: Method) -> ExponentReport:
    # The unconstrained minimizer is feasible; report it as the argmin.
    return ExponentReport(
        e_fn=0.0,
        r_star=params.host_variance,
        q_star=params.attack_variance,
        method=method,
        zero_reason="global-min-feasible",
    )


def fn_exponent_closed_form(params: SystemParams) -> ExponentReport:
    """Closed-form exponent for a Gaussian attack.

    Returns 0 (global-min-feasible) when the margin at r = host variance
    does not exceed the attack variance.  Near the removable singularity of
    the printed minimizer formula (attack variance ~ host variance *
    sin^2 beta, within relative 1e-8) the value falls back to the numeric
    one-dimensional minimization, which is well-posed there.
    """
    if params.attack_variance == 0.0:
        return fn_exponent_attack_free(
            params.distortion, params.host_variance, params.fp_exponent
        )
    geometry = params.geometry()
    sx2 = params.host_variance
    sz2 = params.attack_variance
    distortion = params.distortion
    sin2 = 1.0 - geometry.cos2_beta
    cos2 = geometry.cos2_beta
    tan2 = sin2 / cos2

    if _margin_at(sx2, distortion, geometry) <= sz2:
        return _zero_report(params, "closed-form")

    delta = sz2 - sx2 * sin2
    if abs(delta) <= _SINGULAR_RTOL * max(sz2, sx2 * sin2):
        return fn_exponent_oracle(params)

    # S = sqrt(D^2 delta^2 + (2 sz2 sx2 cos^2 beta)^2); both closed-form
    # minimizers are rearranged so no difference of nearly-equal O(1) terms
    # appears on either sign of delta.
    d_delta = distortion * delta
    c2 = 2.0 * sz2 * sx2 * cos2
    big_s = math.hypot(d_delta, c2)
    if delta > 0:
        r_star = distortion * c2 / ((d_delta + c2 + big_s) * cos2)
        q_star = 0.5 * tan2 * distortion * (1.0 + d_delta / (big_s + c2))
    else:
        abs_dd = -d_delta
        tail = d_delta * d_delta / (big_s + c2)  # S - c2, computed stably
        r_star = (abs_dd + tail) / (2.0 * cos2 * (-delta))
        q_star = tan2 * c2 * (abs_dd + tail) / ((big_s + abs_dd) * 2.0 * (-delta))
    e_fn = _phi(q_star / sz2) + _phi(r_star / sx2)
    return ExponentReport(
        e_fn=e_fn, r_star=r_star, q_star=q_star, method="closed-form"
    )


def fn_exponent_attack_free(
    distortion: float, host_variance: float, fp_exponent: float
) -> ExponentReport:
    """Exponent with no attack: 0 unless D / (1 - e^-2 lambda) > host variance."""
    for name, value in (
        ("distortion", distortion),
        ("host_variance", host_variance),
        ("fp_exponent", fp_exponent),
    ):
        if not (value > 0) or not math.isfinite(value):
            raise ParameterError(f"{name} must be > 0 and finite, got {value}")
    cos2 = -math.expm1(-2.0 * fp_exponent)
    r_star = distortion / cos2
    ratio = r_star / host_variance
    if ratio <= 1.0:
        return ExponentReport(
            e_fn=0.0,
            r_star=r_star,
            q_star=0.0,
            method="attack-free",
            zero_reason="insufficient-distortion",
        )
    return ExponentReport(
        e_fn=_phi(ratio), r_star=r_star, q_star=0.0, method="attack-free"
    )


def positivity_thresholds(
    distortion: float, host_variance: float
) -> tuple[float, float]:
    """Largest attack-free exponent-positive lambda for each embedder.

    Returns (lam1, lam2): the optimal embedder keeps a positive exponent
    for lambda < lam1 = -0.5 ln(1 - D / sx2) (infinite once D >= sx2),
    the sign embedder only for lambda < lam2 = 0.5 ln(1 + D / sx2).
    lam1 > lam2 whenever lam1 is finite.
    """
    for name, value in (("distortion", distortion), ("host_variance", host_variance)):
        if not (value > 0) or not math.isfinite(value):
            raise ParameterError(f"{name} must be > 0 and finite, got {value}")
    ratio = distortion / host_variance
    lam1 = -0.5 * math.log1p(-ratio) if ratio < 1.0 else math.inf
    lam2 = 0.5 * math.log1p(ratio)
    return lam1, lam2


def _golden_section(f, lo: float, hi: float, tol: float, max_iter: int = 200):
    """Minimize a unimodal f on [lo, hi] to interval width tol.

    Raises OracleError if the bracket has not shrunk to tol within
    max_iter iterations; never silently truncates.
    """
    a, b = lo, hi
    h = b - a
    c = b - _GOLDEN_INV * h
    d = a + _GOLDEN_INV * h
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN_INV * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN_INV * (b - a)
            fd = f(d)
    else:
        raise OracleError(
            f"golden-section did not reach width {tol} within {max_iter} iterations "
            f"(current width {b - a})"
        )
    x = c if fc < fd else d
    return x, min(fc, fd)


def fn_exponent_oracle(params: SystemParams, tol: float = 1e-10) -> ExponentReport:
    """Brute-force exponent: golden-section over the boundary problem.

    Minimizes phi(margin(r)/sz2) + phi(r/sx2) over r in (0, D/cos^2 beta)
    with the margin substituted for q, after checking whether the
    unconstrained minimizer is feasible (in which case the exponent is 0).
    Independent of the closed forms except for sharing the rate term.
    """
    if params.attack_variance <= 0.0:
        raise ParameterError("the oracle needs attack_variance > 0; use the attack-free form")
    if not (0.0 < tol <= 1e-3):
        raise ParameterError(f"tol must lie in (0, 1e-3], got {tol}")
    geometry = params.geometry()
    sx2 = params.host_variance
    sz2 = params.attack_variance
    distortion = params.distortion

    if _margin_at(sx2, distortion, geometry) <= sz2:
        return _zero_report(params, "numeric-oracle")

    r_max = distortion / geometry.cos2_beta

    def objective(r: float) -> float:
        return _phi(_margin_at(r, distortion, geometry) / sz2) + _phi(r / sx2)

    r_star, e_fn = _golden_section(
        objective, r_max * 1e-12, r_max * (1.0 - 1e-12), tol
    )
    return ExponentReport(
        e_fn=max(0.0, e_fn),
        r_star=r_star,
        q_star=max(0.0, _margin_at(r_star, distortion, geometry)),
        method="numeric-oracle",
    )


def _phi_array(x: np.ndarray) -> np.ndarray:
    out = np.full_like(x, np.inf)
    pos = x > 0
    out[pos] = 0.5 * (x[pos] - np.log(x[pos]) - 1.0)
    return out


def fn_exponent_grid_2d(
    params: SystemParams, r_points: int = 600, q_points: int = 600
) -> tuple[float, float, float]:
    """Dense-grid minimum of the full (r, q) problem; validation only.

    Scans the rectangle covering both the unconstrained minimizer and the
    boundary interval, keeping only grid nodes with q >= max(0, margin(r)).
    Returns (e_fn, r, q) at the best node.
    """
    if params.attack_variance <= 0.0:
        raise ParameterError("grid mode needs attack_variance > 0")
    geometry = params.geometry()
    sx2, sz2, distortion = params.host_variance, params.attack_variance, params.distortion
    sin2 = 1.0 - geometry.cos2_beta
    tan2 = sin2 / geometry.cos2_beta
    r_hi = max(distortion / geometry.cos2_beta, 2.0 * sx2)
    q_hi = max(distortion * tan2, 2.0 * sz2)
    r = np.linspace(r_hi / r_points, r_hi, r_points)[:, None]
    q = np.linspace(q_hi / q_points, q_hi, q_points)[None, :]
    margin = distortion * tan2 - r * sin2
    objective = _phi_array(q / sz2) + _phi_array(r / sx2)
    objective = np.where(q >= np.maximum(margin, 0.0), objective, np.inf)
    flat = int(np.argmin(objective))
    i, j = np.unravel_index(flat, objective.shape)
    return float(objective[i, j]), float(r[i, 0]), float(q[0, j])


def fn_exponent_grid_3d(
    params: SystemParams, r_points: int = 300, alpha_points: int = 301
) -> tuple[float, float, float]:
    """Grid minimum including the host angle; validates that argmin alpha = 0.

    For each (r, alpha) node the displacement is the optimal embedder's
    (shrink rule where its stationary point is infeasible), the noise
    energy takes the inner minimizer max(attack variance, margin), and the
    angle contributes its -ln cos(alpha) rate.  Returns (e_fn, r, alpha).
    """
    if params.attack_variance <= 0.0:
        raise ParameterError("grid mode needs attack_variance > 0")
    geometry = params.geometry()
    sx2, sz2, distortion = params.host_variance, params.attack_variance, params.distortion
    cos2 = geometry.cos2_beta
    tan2 = (1.0 - cos2) / cos2
    r_hi = max(distortion / cos2, 2.0 * sx2)
    r = np.linspace(r_hi / r_points, r_hi, r_points)[:, None]
    alpha = np.linspace(-math.pi / 2 + 1e-9, math.pi / 2 - 1e-9, alpha_points)[None, :]
    sqrt_r = np.sqrt(r)
    sin_a, cos_a = np.sin(alpha), np.cos(alpha)

    feasible = distortion >= r * cos2 * cos2
    sign_a = np.where(sin_a >= 0.0, 1.0, -1.0)  # + at the alpha = 0 tie
    v1 = np.where(
        feasible,
        sign_a * np.sqrt(np.maximum(distortion - r * cos2 * cos2, 0.0)),
        -math.sqrt(distortion) * sin_a,
    )
    v2 = np.where(feasible, -sqrt_r * cos2, -math.sqrt(distortion) * cos_a)
    along = sqrt_r * sin_a + v1
    across = sqrt_r * cos_a + v2
    margin = along * along * tan2 - across * across
    q_inner = np.maximum(margin, sz2)
    objective = _phi_array(q_inner / sz2) + _phi_array(r / sx2) - np.log(cos_a)
    flat = int(np.argmin(objective))
    i, j = np.unravel_index(flat, objective.shape)
    return float(objective[i, j]), float(r[i, 0]), float(alpha[0, j])
