"""Embedding rules: the exponent-optimal embedder and the sign baseline.

The optimal rule is universal: it needs only the host, the watermark, the
distortion budget and the detection geometry, never the host or attack
variances.  Geometrically it spends part of the budget shrinking the host
(reducing its interference) and injects the rest along the watermark, which
keeps the watermarked vector in the plane spanned by host and watermark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ParameterError
from .model import (
    DetectionGeometry,
    HostSignal,
    PlaneCoordinates,
    WatermarkSequence,
    to_plane_coordinates,
)

__all__ = ["EmbedResult", "embed_optimal", "embed_sign", "embedding_margin"]

# Treated as "host aligned with the watermark": below this, cos(alpha) is
# numerically zero and the scaling coefficient of the general rule blows up.
_ALIGNED_COS_TOL = 1e-12

Branch = Literal["optimal", "degenerate-shrink"]


@dataclass(frozen=True)
class EmbedResult:
    """Watermarked vector plus the plane-geometry bookkeeping.

    ``y = a * x + b * u`` whenever the displacement lies in the host /
    watermark plane (always, for both rules here).  ``distortion_used`` is
    the measured per-dimension distortion |y - x|^2 / n.
    """

    y: np.ndarray
    coords: PlaneCoordinates
    a: float
    b: float
    distortion_used: float
    branch: Branch


def _check_embed_args(host: HostSignal, watermark: WatermarkSequence, distortion: float):
    if host.n != watermark.n:
        raise ParameterError(
            f"length mismatch: host n={host.n}, watermark n={watermark.n}"
        )
    if not (distortion > 0) or not math.isfinite(distortion):
        raise ParameterError(f"distortion must be > 0, got {distortion}")


def _optimal_y(
    x: np.ndarray,
    u: np.ndarray,
    n: int,
    distortion: float,
    cos2_beta: float,
) -> tuple[np.ndarray, float, float, Branch]:
    """Core of the optimal rule; returns (y, a, b, branch)."""
    energy = float(np.dot(x, x))
    r = energy / n
    if r == 0.0:
        # Zero host: the whole budget goes along the watermark.
        b = math.sqrt(distortion)
        return b * u, 1.0 - cos2_beta, b, "optimal"
    sin_alpha = float(np.dot(x, u)) / math.sqrt(energy * n)
    sin_alpha = min(1.0, max(-1.0, sin_alpha))
    cos_alpha = math.sqrt(max(0.0, 1.0 - sin_alpha * sin_alpha))
    sign = 1.0 if sin_alpha >= 0.0 else -1.0
    if cos_alpha < _ALIGNED_COS_TOL:
        # Host parallel to the watermark: limit of the general rule.
        b = sign * math.sqrt(distortion)
        return x + b * u, 1.0, b, "optimal"
    cos4_beta = cos2_beta * cos2_beta
    radicand = distortion - r * cos4_beta
    if radicand >= 0.0:
        a = 1.0 - cos2_beta / cos_alpha
        b = math.sqrt(r) * (sin_alpha / cos_alpha) * cos2_beta + sign * math.sqrt(radicand)
        return a * x + b * u, a, b, "optimal"
    # Budget too small for the stationary point: shrink the host toward the
    # origin with the full budget, which is where the boundary maximum of
    # the margin sits once the interior point is infeasible.
    a = 1.0 - math.sqrt(distortion / r)
    return a * x, a, 0.0, "degenerate-shrink"


def embed_optimal(
    host: HostSignal,
    watermark: WatermarkSequence,
    distortion: float,
    geometry: DetectionGeometry,
) -> EmbedResult:
    """Embed with the exponent-optimal rule y = a x + b u.

    On the feasible branch (distortion >= r cos^4 beta) the full budget is
    spent and the sign of the watermark component follows the sign of the
    host/watermark correlation (+ at the tie).  Otherwise the host is
    shrunk toward the origin with the full budget.
    """
    _check_embed_args(host, watermark, distortion)
    x = host.samples
    u = watermark.values
    y, a, b, branch = _optimal_y(x, u, host.n, float(distortion), geometry.cos2_beta)
    displacement = y - x
    distortion_used = float(np.dot(displacement, displacement)) / host.n
    coords = to_plane_coordinates(host, watermark, displacement)
    return EmbedResult(
        y=y, coords=coords, a=a, b=b, distortion_used=distortion_used, branch=branch
    )


def embed_sign(
    host: HostSignal, watermark: WatermarkSequence, distortion: float
) -> EmbedResult:
    """Baseline rule y = x + sign(<x, u>) sqrt(D) u, with sign(0) = +1.

    Spends the full budget along the watermark regardless of the host, so
    the result carries the full-budget ("optimal") branch tag.
    """
    _check_embed_args(host, watermark, distortion)
    x = host.samples
    u = watermark.values
    sign = 1.0 if float(np.dot(x, u)) >= 0.0 else -1.0
    b = sign * math.sqrt(distortion)
    y = x + b * u
    coords = to_plane_coordinates(host, watermark, y - x)
    # |y - x|^2 / n = D |u|^2 / n = D identically; report it exactly rather
    # than re-squaring the root.
    return EmbedResult(
        y=y,
        coords=coords,
        a=1.0,
        b=b,
        distortion_used=float(distortion),
        branch="optimal",
    )


def embedding_margin(coords: PlaneCoordinates, geometry: DetectionGeometry) -> float:
    """Per-dimension noise-energy level above which the detector misses.

    (sqrt(r) sin(alpha) + v1)^2 (1/cos^2 beta - 1)
        - (sqrt(r) cos(alpha) + v2)^2 - v3^2

    Larger is better: the false-negative exponent is non-decreasing in this
    margin, and the optimal displacement maximizes it under the budget.
    """
    sqrt_r = math.sqrt(coords.r)
    tan2_beta = 1.0 / geometry.cos2_beta - 1.0
    along = sqrt_r * math.sin(coords.alpha) + coords.v1
    across = sqrt_r * math.cos(coords.alpha) + coords.v2
    return along * along * tan2_beta - across * across - coords.v3 * coords.v3
