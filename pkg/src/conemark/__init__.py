"""Optimum one-bit watermarking for Gaussian hosts under Gaussian attacks.

Embedding, hypercone detection, closed-form false-negative error exponents
with an independent numeric oracle, and a seeded Monte Carlo harness.
"""

from .errors import OracleError, ParameterError, SignalFileError
from .model import (
    DetectionGeometry,
    HostSignal,
    PlaneCoordinates,
    SystemParams,
    WatermarkSequence,
    derive_geometry,
    generate_watermark,
    to_plane_coordinates,
)
from .sphere import CapAreaResult, angle_pdf, cap_area_log, exact_fp_probability_log
from .detector import DetectionReport, detect, empirical_mutual_information
from .embedder import EmbedResult, embed_optimal, embed_sign, embedding_margin
from .exponents import (
    ExponentReport,
    fn_exponent_attack_free,
    fn_exponent_closed_form,
    fn_exponent_grid_2d,
    fn_exponent_grid_3d,
    fn_exponent_oracle,
    positivity_thresholds,
)
from .simulate import (
    TrialBatchResult,
    TrialConfig,
    clopper_pearson,
    exponent_convergence_sweep,
    simulate_fn,
    simulate_fp,
)

__version__ = "0.1.0"

__all__ = [
    "OracleError",
    "ParameterError",
    "SignalFileError",
    "DetectionGeometry",
    "HostSignal",
    "PlaneCoordinates",
    "SystemParams",
    "WatermarkSequence",
    "derive_geometry",
    "generate_watermark",
    "to_plane_coordinates",
    "CapAreaResult",
    "angle_pdf",
    "cap_area_log",
    "exact_fp_probability_log",
    "DetectionReport",
    "detect",
    "empirical_mutual_information",
    "EmbedResult",
    "embed_optimal",
    "embed_sign",
    "embedding_margin",
    "ExponentReport",
    "fn_exponent_attack_free",
    "fn_exponent_closed_form",
    "fn_exponent_grid_2d",
    "fn_exponent_grid_3d",
    "fn_exponent_oracle",
    "positivity_thresholds",
    "TrialBatchResult",
    "TrialConfig",
    "clopper_pearson",
    "exponent_convergence_sweep",
    "simulate_fn",
    "simulate_fp",
    "__version__",
]
