"""Seeded Monte Carlo estimation of finite-n error probabilities.

Reproducibility contract (fixed and documented; stable across platforms for
a given numpy version):

* Trial ``i`` owns the generator ``PCG64(SeedSequence(entropy=master_seed,
  spawn_key=(i,)))``; nothing about scheduling or batching enters the
  stream, so any degree of parallelism gives bit-identical results.
* Draw order within a trial is fixed: watermark bits (unless a pinned
  watermark is configured), then the host samples, then the attack noise
  (skipped entirely when the attack variance is zero).  Gaussian variates
  come from numpy's ziggurat ``standard_normal`` on that stream; watermark
  components take bit ``i`` of the stream's little-endian 64-bit words.
* Per-dimension sweeps derive one master seed per n as the first 64-bit
  word of ``SeedSequence(entropy=master_seed, spawn_key=(n,))``.

Estimates are plain Monte Carlo with Clopper-Pearson 95% intervals; batches
with zero failures report ``p_hat = 0`` with the one-sided interval and an
infinite empirical exponent sentinel.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Literal, Optional

import numpy as np
from scipy.stats import beta as _beta_dist

from .errors import ParameterError
from .detector import _rho_abs
from .embedder import _optimal_y
from .model import SystemParams, _bits_to_signs, derive_geometry

__all__ = [
    "TrialConfig",
    "TrialBatchResult",
    "clopper_pearson",
    "simulate_fn",
    "simulate_fp",
    "exponent_convergence_sweep",
]

Embedder = Literal["optimal", "sign", "none"]

# Guard against configurations whose total sample count cannot finish.
_MAX_TOTAL_SAMPLES = 2**34


@dataclass(frozen=True)
class TrialConfig:
    """One Monte Carlo batch: dimension, trial count, channel, seeding.

    ``embedder = "none"`` draws non-watermarked observations and is only
    valid for false-positive batches.  ``pinned_watermark_seed`` fixes the
    watermark across trials instead of redrawing it per trial.
    """

    n: int
    trials: int
    params: SystemParams
    embedder: Embedder
    master_seed: int
    pinned_watermark_seed: Optional[int] = None

    def __post_init__(self):
        if int(self.n) < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if int(self.trials) < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if self.embedder not in ("optimal", "sign", "none"):
            raise ParameterError(f"unknown embedder {self.embedder!r}")
        if not (0 <= int(self.master_seed) < 2**64):
            raise ParameterError("master_seed must be an unsigned 64-bit integer")
        if int(self.n) * int(self.trials) > _MAX_TOTAL_SAMPLES:
            raise ParameterError(
                f"trials * n = {int(self.n) * int(self.trials)} exceeds the "
                f"resource guard ({_MAX_TOTAL_SAMPLES})"
            )


@dataclass(frozen=True)
class TrialBatchResult:
    """Failure count with exact binomial interval and exponent estimate."""

    failures: int
    trials: int
    p_hat: float
    ci_low: float
    ci_high: float
    empirical_exponent: float
    master_seed: int


def clopper_pearson(failures: int, trials: int, confidence: float = 0.95):
    """Exact binomial confidence interval, valid at zero and full counts."""
    if not (0 <= failures <= trials) or trials < 1:
        raise ParameterError("need 0 <= failures <= trials, trials >= 1")
    tail = (1.0 - confidence) / 2.0
    low = 0.0 if failures == 0 else float(_beta_dist.ppf(tail, failures, trials - failures + 1))
    high = (
        1.0
        if failures == trials
        else float(_beta_dist.ppf(1.0 - tail, failures + 1, trials - failures))
    )
    return low, high


def _trial_rng(master_seed: int, index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.PCG64(ss))


def _pinned_values(config: TrialConfig) -> Optional[np.ndarray]:
    if config.pinned_watermark_seed is None:
        return None
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(config.pinned_watermark_seed)))
    )
    return _bits_to_signs(rng, config.n)


def _count_fn_failures(config: TrialConfig, start: int, stop: int) -> int:
    n = config.n
    p = config.params
    geometry = derive_geometry(p.fp_exponent)
    threshold = geometry.corr_threshold
    sigma_x = math.sqrt(p.host_variance)
    sigma_z = math.sqrt(p.attack_variance)
    sqrt_d = math.sqrt(p.distortion)
    pinned = _pinned_values(config)
    failures = 0
    for i in range(start, stop):
        rng = _trial_rng(config.master_seed, i)
        u = pinned if pinned is not None else _bits_to_signs(rng, n)
        x = rng.standard_normal(n) * sigma_x
        if config.embedder == "optimal":
            y, _, _, _ = _optimal_y(x, u, n, p.distortion, geometry.cos2_beta)
        else:
            sign = 1.0 if float(np.dot(x, u)) >= 0.0 else -1.0
            y = x + sign * sqrt_d * u
        s = y + rng.standard_normal(n) * sigma_z if sigma_z > 0.0 else y
        if _rho_abs(s, u, n) < threshold:
            failures += 1
    return failures


def _count_fp_failures(config: TrialConfig, start: int, stop: int) -> int:
    n = config.n
    p = config.params
    threshold = derive_geometry(p.fp_exponent).corr_threshold
    sigma_s = math.sqrt(p.host_variance + p.attack_variance)
    pinned = _pinned_values(config)
    failures = 0
    for i in range(start, stop):
        rng = _trial_rng(config.master_seed, i)
        u = pinned if pinned is not None else _bits_to_signs(rng, n)
        s = rng.standard_normal(n) * sigma_s
        if _rho_abs(s, u, n) >= threshold:
            failures += 1
    return failures


def _run_batch(config: TrialConfig, counter, workers: int) -> TrialBatchResult:
    trials = config.trials
    if workers <= 1 or trials < 2 * workers:
        failures = counter(config, 0, trials)
    else:
        # Counts are pure functions of (master_seed, trial index); summing
        # chunk counts is associative, so chunking cannot change the result.
        bounds = np.linspace(0, trials, workers + 1, dtype=int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(counter, config, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
            ]
            failures = sum(f.result() for f in futures)
    p_hat = failures / trials
    ci_low, ci_high = clopper_pearson(failures, trials)
    exponent = -math.log(p_hat) / config.n if failures > 0 else math.inf
    return TrialBatchResult(
        failures=failures,
        trials=trials,
        p_hat=p_hat,
        ci_low=ci_low,
        ci_high=ci_high,
        empirical_exponent=exponent,
        master_seed=config.master_seed,
    )


def simulate_fn(config: TrialConfig, workers: int = 1) -> TrialBatchResult:
    """Estimate the false-negative probability of an (embedder, detector) pair.

    Each trial draws a fresh watermark and host, embeds, adds attack noise,
    and counts a failure when the detector misses.
    """
    if config.embedder == "none":
        raise ParameterError("false-negative batches need an embedder")
    return _run_batch(config, _count_fn_failures, workers)


def simulate_fp(config: TrialConfig, workers: int = 1) -> TrialBatchResult:
    """Estimate the false-positive probability on non-watermarked Gaussians.

    Observations are i.i.d. Gaussian with the summed host and attack
    variance; a failure is a trial the detector accepts.
    """
    if config.embedder != "none":
        raise ParameterError('false-positive batches require embedder = "none"')
    return _run_batch(config, _count_fp_failures, workers)


def derived_master_seed(master_seed: int, n: int) -> int:
    """Per-dimension master seed for sweeps (first word of a spawned stream)."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(n),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def exponent_convergence_sweep(
    base: TrialConfig, n_list: list[int], workers: int = 1
) -> list[tuple[int, TrialBatchResult]]:
    """One false-negative batch per dimension, with derived master seeds."""
    for n in n_list:
        if int(n) < 4:
            raise ParameterError(f"sweep dimensions must be >= 4, got {n}")
    out = []
    for n in n_list:
        config = replace(
            base, n=int(n), master_seed=derived_master_seed(base.master_seed, int(n))
        )
        out.append((int(n), simulate_fn(config, workers=workers)))
    return out
