"""Core domain types, parameter validation, and derived detection geometry.

The detector accepts when the absolute normalized correlation between the
received vector and the watermark exceeds a threshold; geometrically the
acceptance region is a pair of hypercones around +u and -u whose half-angle
is fixed by the guaranteed false-positive exponent.  This module holds the
shared value types and the coordinate transform onto the plane spanned by
the host signal and the watermark, in which all embedding geometry lives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

__all__ = [
    "SystemParams",
    "DetectionGeometry",
    "WatermarkSequence",
    "HostSignal",
    "PlaneCoordinates",
    "derive_geometry",
    "generate_watermark",
    "to_plane_coordinates",
    "gram_schmidt_frame",
    "displacement_from_plane",
]

# Relative tolerance below which a vector component is treated as absent
# when building the orthonormal frame.
_COLLINEAR_RTOL = 1e-12


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ParameterError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class SystemParams:
    """Channel and embedding parameters.

    Attributes:
        host_variance: per-component variance of the Gaussian host (> 0).
        attack_variance: per-component variance of the additive Gaussian
            attack noise (>= 0; 0 means attack-free).
        distortion: allowed embedding distortion per dimension (> 0).
        fp_exponent: guaranteed false-positive error exponent, in nats per
            dimension (> 0).
    """

    host_variance: float
    attack_variance: float
    distortion: float
    fp_exponent: float

    def __post_init__(self):
        for name in ("host_variance", "attack_variance", "distortion", "fp_exponent"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name)))
        if self.host_variance <= 0:
            raise ParameterError(f"host_variance must be > 0, got {self.host_variance}")
        if self.attack_variance < 0:
            raise ParameterError(f"attack_variance must be >= 0, got {self.attack_variance}")
        if self.distortion <= 0:
            raise ParameterError(f"distortion must be > 0, got {self.distortion}")
        if self.fp_exponent <= 0:
            raise ParameterError(f"fp_exponent must be > 0, got {self.fp_exponent}")

    def geometry(self) -> "DetectionGeometry":
        """Detection geometry implied by the false-positive exponent."""
        return derive_geometry(self.fp_exponent)


@dataclass(frozen=True)
class DetectionGeometry:
    """Hypercone geometry derived from the false-positive exponent.

    ``beta`` is the cone half-angle, ``cos2_beta`` its squared cosine and
    ``corr_threshold`` the acceptance threshold on the absolute normalized
    correlation (equal to cos(beta)).
    """

    beta: float
    cos2_beta: float
    corr_threshold: float

    def __post_init__(self):
        if not (0.0 < self.beta < math.pi / 2):
            raise ParameterError(f"beta must lie in (0, pi/2), got {self.beta}")
        if not (0.0 < self.cos2_beta < 1.0):
            raise ParameterError(f"cos2_beta must lie in (0, 1), got {self.cos2_beta}")
        # corr_threshold rounds to exactly 1.0 in double precision once the
        # exponent is large (~> 36 nats); allow the closed endpoint.
        if not (0.0 < self.corr_threshold <= 1.0):
            raise ParameterError(
                f"corr_threshold must lie in (0, 1], got {self.corr_threshold}"
            )
        if abs(math.cos(self.beta) ** 2 - self.cos2_beta) > 1e-12:
            raise ParameterError("inconsistent geometry: cos^2(beta) != cos2_beta")
        if abs(self.corr_threshold**2 - self.cos2_beta) > 1e-12:
            raise ParameterError("inconsistent geometry: corr_threshold^2 != cos2_beta")


def derive_geometry(fp_exponent: float) -> DetectionGeometry:
    """Build the detection geometry for a guaranteed false-positive exponent.

    The cone half-angle is ``beta = arcsin(e^-lambda)`` and the correlation
    threshold is ``sqrt(1 - e^-2*lambda)``.
    """
    lam = _require_finite("fp_exponent", fp_exponent)
    if lam <= 0:
        raise ParameterError(f"fp_exponent must be > 0, got {lam}")
    sin_beta = math.exp(-lam)
    cos2_beta = -math.expm1(-2.0 * lam)  # 1 - e^{-2 lambda}, accurate near 0
    return DetectionGeometry(
        beta=math.asin(sin_beta),
        cos2_beta=cos2_beta,
        corr_threshold=math.sqrt(cos2_beta),
    )


@dataclass(frozen=True)
class WatermarkSequence:
    """A +-1 watermark of dimension ``n``, reproducible from ``seed``."""

    n: int
    values: np.ndarray
    seed: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.shape[0] != self.n or self.n < 1:
            raise ParameterError("watermark values must be a length-n vector, n >= 1")
        if not np.all(np.abs(values) == 1.0):
            raise ParameterError("watermark components must be +1 or -1")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)


def generate_watermark(n: int, seed: int) -> WatermarkSequence:
    """Derive a deterministic +-1 sequence of length ``n`` from a 64-bit seed.

    Fixed, documented algorithm (stable across platforms for a given numpy
    version): a PCG64 bit generator is keyed with ``SeedSequence(seed)`` and
    produces consecutive 64-bit words; component ``i`` is +1 when bit ``i``
    of the little-endian bit stream of those words is set, -1 otherwise.
    """
    if int(n) < 1:
        raise ParameterError(f"watermark dimension must be >= 1, got {n}")
    n = int(n)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))
    values = _bits_to_signs(rng, n)
    return WatermarkSequence(n=n, values=values, seed=int(seed))


def _bits_to_signs(rng: np.random.Generator, n: int) -> np.ndarray:
    # Explicit little-endian serialization keeps the bit stream identical on
    # big-endian hosts.
    words = rng.integers(0, 2**64, size=(n + 63) // 64, dtype=np.uint64)
    raw = np.frombuffer(words.astype("<u8", copy=False).tobytes(), dtype=np.uint8)
    bits = np.unpackbits(raw, bitorder="little")[:n]
    return np.where(bits == 1, 1.0, -1.0)


@dataclass(frozen=True)
class HostSignal:
    """A real-valued host vector of dimension ``n``."""

    n: int
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.shape[0] != self.n or self.n < 1:
            raise ParameterError("host samples must be a length-n vector, n >= 1")
        if not np.all(np.isfinite(samples)):
            raise ParameterError("host samples must be finite")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)


@dataclass(frozen=True)
class PlaneCoordinates:
    """Displacement coordinates in the frame spanned by watermark and host.

    ``r`` is the per-dimension host energy ``|x|^2 / n`` and ``alpha`` the
    angle whose sine is the normalized host/watermark correlation.  The
    displacement, scaled by 1/sqrt(n), has coordinates ``(v1, v2, v3)``
    along the watermark direction, the host component orthogonal to it, and
    the residual direction; ``v3 >= 0`` by convention.
    """

    r: float
    alpha: float
    v1: float
    v2: float
    v3: float

    def __post_init__(self):
        if self.r < 0:
            raise ParameterError(f"r must be >= 0, got {self.r}")
        if abs(self.alpha) > math.pi / 2 + 1e-12:
            raise ParameterError(f"alpha must lie in [-pi/2, pi/2], got {self.alpha}")
        if self.v3 < 0:
            raise ParameterError(f"v3 must be >= 0 by convention, got {self.v3}")


def _unit_residual(vec: np.ndarray, basis: list[np.ndarray], scale: float):
    """Orthonormalize ``vec`` against ``basis``; None when numerically inside."""
    residual = vec.astype(np.float64, copy=True)
    for e in basis:
        residual -= np.dot(residual, e) * e
    norm = math.sqrt(float(np.dot(residual, residual)))
    if norm <= _COLLINEAR_RTOL * scale or norm == 0.0:
        return None
    return residual / norm


def _fallback_direction(n: int, basis: list[np.ndarray]) -> np.ndarray | None:
    # First standard basis vector with a substantial component outside
    # span(basis); deterministic so repeated runs agree exactly.
    for k in range(min(n, len(basis) + 2)):
        cand = np.zeros(n)
        cand[k] = 1.0
        unit = _unit_residual(cand, basis, 1.0)
        if unit is not None:
            return unit
    return None


def gram_schmidt_frame(
    x: np.ndarray, u: np.ndarray, w: np.ndarray
) -> tuple[np.ndarray, np.ndarray | None, np.ndarray | None]:
    """Orthonormal frame (e1, e2, e3) adapted to watermark, host, displacement.

    e1 points along the watermark.  e2 spans the host component orthogonal
    to it and e3 the displacement component outside span(e1, e2); either is
    replaced by a deterministic fallback direction (or None when the
    dimension is exhausted) if the corresponding vector adds nothing new.
    """
    n = u.shape[0]
    e1 = u / math.sqrt(float(np.dot(u, u)))
    x_scale = math.sqrt(float(np.dot(x, x)))
    e2 = _unit_residual(x, [e1], x_scale if x_scale > 0 else 1.0)
    if e2 is None and n >= 2:
        e2 = _fallback_direction(n, [e1])
    if e2 is None:
        return e1, None, None
    w_scale = math.sqrt(float(np.dot(w, w)))
    e3 = _unit_residual(w, [e1, e2], w_scale if w_scale > 0 else 1.0)
    if e3 is None and n >= 3:
        e3 = _fallback_direction(n, [e1, e2])
    return e1, e2, e3


def to_plane_coordinates(
    x: HostSignal, u: WatermarkSequence, w: np.ndarray
) -> PlaneCoordinates:
    """Express a displacement vector ``w`` in the watermark/host frame.

    Raises ParameterError when the three vectors do not share a length.
    The degenerate host x = 0 gets alpha = 0 (any angle is equivalent by
    symmetry), and v3 is non-negative because the third frame direction is
    chosen along the residual of w itself.
    """
    w = np.asarray(w, dtype=np.float64)
    if not (x.n == u.n == w.shape[0]) or w.ndim != 1:
        raise ParameterError(
            f"length mismatch: host {x.n}, watermark {u.n}, displacement {w.shape}"
        )
    n = u.n
    xs = x.samples
    norm_x = math.sqrt(float(np.dot(xs, xs)))
    r = norm_x**2 / n
    if norm_x > 0:
        sin_alpha = float(np.dot(xs, u.values)) / (norm_x * math.sqrt(n))
        alpha = math.asin(min(1.0, max(-1.0, sin_alpha)))
    else:
        alpha = 0.0
    e1, e2, e3 = gram_schmidt_frame(xs, u.values, w)
    sqrt_n = math.sqrt(n)
    v1 = float(np.dot(w, e1)) / sqrt_n
    v2 = float(np.dot(w, e2)) / sqrt_n if e2 is not None else 0.0
    v3 = float(np.dot(w, e3)) / sqrt_n if e3 is not None else 0.0
    # The residual projection is non-negative up to rounding; clamp the dust.
    if v3 < 0:
        v3 = 0.0 if v3 > -1e-12 * max(1.0, abs(v1), abs(v2)) else v3
    return PlaneCoordinates(r=r, alpha=alpha, v1=v1, v2=v2, v3=v3)


def displacement_from_plane(
    coords: PlaneCoordinates,
    frame: tuple[np.ndarray, np.ndarray | None, np.ndarray | None],
) -> np.ndarray:
    """Rebuild the displacement vector from its plane coordinates."""
    e1, e2, e3 = frame
    sqrt_n = math.sqrt(e1.shape[0])
    w = coords.v1 * e1
    if e2 is not None:
        w = w + coords.v2 * e2
    if e3 is not None:
        w = w + coords.v3 * e3
    return sqrt_n * w
