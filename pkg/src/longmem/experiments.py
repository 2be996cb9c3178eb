"""Monte Carlo harnesses: bandwidth bias study, test calibration, total-memory validation.

Every trial draws from its own ``SeedSequence([seed, trial])`` so results do
not depend on how trials are scheduled. ``LONGMEM_THREADS`` caps the worker
pool (unset or 0 runs sequentially).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateCovarianceError, ValidationError
from .gse import estimate
from .inference import normalized_total_memory, total_memory, total_memory_test, wald_test
from .simulate import (
    ArfimaSpec,
    MultiFdSpec,
    arfima,
    multivariate_fd,
    preset_memory,
    trial_seed,
)
from .spectral import periodogram

__all__ = [
    "map_trials",
    "estimate_trials",
    "BiasRow",
    "bias_study",
    "CalibrationRow",
    "calibrate",
    "TotalMemorySummary",
    "validate_total_memory",
]


def _threads() -> int:
    raw = os.environ.get("LONGMEM_THREADS", "0").strip() or "0"
    try:
        return max(int(raw), 0)
    except ValueError:
        raise ValidationError(f"LONGMEM_THREADS must be an integer, got {raw!r}") from None


def map_trials(fn: Callable[[int], object], n: int) -> list:
    """``[fn(0), ..., fn(n - 1)]``, possibly evaluated concurrently."""
    workers = _threads()
    if workers <= 1 or n <= 1:
        return [fn(i) for i in range(n)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n)))


def estimate_trials(generate: Callable[[np.random.SeedSequence], np.ndarray], n: int, seed: int,
                    bandwidth: int | None = None) -> np.ndarray:
    """Memory estimates for ``n`` seeded draws of ``generate``, shape ``(n, p)``."""

    def one(i):
        x = generate(trial_seed(seed, i))
        pg = periodogram(x)
        return estimate(pg, bandwidth=bandwidth) if bandwidth else estimate(pg)

    return np.array([fit.d_hat for fit in map_trials(one, n)])


@dataclass(frozen=True)
class BiasRow:
    N: int
    m: int
    cutoff: float  # lambda_m = 2 pi m / N
    d_hat: float  # mean over trials
    d_sd: float
    n: int


def bias_study(ar: Sequence[float], ma: Sequence[float], d: float, sizes: Sequence[int],
               n: int = 1, seed: int = 0) -> list[BiasRow]:
    """Estimate on growing prefixes of one ARFIMA path with ``m = floor(sqrt(N))``.

    Each trial simulates ``max(sizes)`` samples once and fits every prefix, so
    the rows for different ``N`` are paired.
    """
    sizes = sorted(set(int(s) for s in sizes))
    if not sizes:
        raise ValidationError("bias study needs at least one window size")
    if n < 1:
        raise ValidationError("trial count must be >= 1")
    if sizes[0] < 3:
        raise ValidationError("window sizes must be >= 3")
    T = sizes[-1]

    def one(i):
        x = arfima(ArfimaSpec(ar=tuple(ar), ma=tuple(ma), d=d, length=T, seed=trial_seed(seed, i)))
        return [estimate(periodogram(x[:N])).d_hat[0] for N in sizes]

    est = np.array(map_trials(one, n))
    rows = []
    for k, N in enumerate(sizes):
        m = math.isqrt(N)
        rows.append(BiasRow(N, m, 2 * math.pi * m / N, float(est[:, k].mean()),
                            float(est[:, k].std(ddof=1)) if n > 1 else 0.0, n))
    return rows


@dataclass(frozen=True)
class CalibrationRow:
    m: int
    wald_type1: float
    tm_type1: float
    n: int
    degenerate: bool = False


def calibrate(p: int, T: int, bandwidths: Sequence[int], n: int, alpha: float = 0.05,
              seed: int = 0) -> list[CalibrationRow]:
    """Empirical type-I error of the Wald and total-memory tests on Gaussian white noise.

    The same ``n`` white-noise draws are reused for every bandwidth.
    """
    if n < 1:
        raise ValidationError("trial count must be >= 1")
    if p < 1 or T < 3:
        raise ValidationError("need p >= 1 and T >= 3")
    ms = sorted(set(int(m) for m in bandwidths))
    if not ms:
        raise ValidationError("calibration needs at least one bandwidth")

    def one(i):
        x = np.random.default_rng(trial_seed(seed, i)).standard_normal((T, p))
        pg = periodogram(x)
        out = []
        for m in ms:
            if m < p:
                out.append(None)
                continue
            fit = estimate(pg, bandwidth=m)
            out.append((wald_test(fit, alpha=alpha).reject,
                        total_memory_test(fit, alternative="greater", alpha=alpha).reject))
        return out

    trials = map_trials(one, n)
    rows = []
    for k, m in enumerate(ms):
        if m < p:
            rows.append(CalibrationRow(m, float("nan"), float("nan"), n, degenerate=True))
            continue
        res = np.array([t[k] for t in trials], dtype=float)
        rows.append(CalibrationRow(m, float(res[:, 0].mean()), float(res[:, 1].mean()), n))
    return rows


@dataclass(frozen=True)
class TotalMemorySummary:
    setting: str
    p: int
    T: int
    m: int
    n: int
    true_normalized: float
    mean_normalized: float
    var_normalized: float
    var_total: float
    reference_var_total: float  # p / (4m)
    reference_var_normalized: float  # 1 / (4mp)
    rejection_rate: float  # one-sided total memory test of zero at alpha = 0.05
    d: np.ndarray


def validate_total_memory(setting: str, p: int, T: int, n: int, seed: int = 0,
                          bandwidth: int | None = None) -> TotalMemorySummary:
    """Sample mean and variance of the total memory over ``n`` draws of a preset."""
    if n < 1:
        raise ValidationError("trial count must be >= 1")
    d = preset_memory(setting, p, np.random.default_rng(np.random.SeedSequence([int(seed), 2**31 - 1])))
    m = bandwidth or math.isqrt(T)
    if m < p:
        raise DegenerateCovarianceError(f"bandwidth below dimension: m = {m} < p = {p}")

    def one(i):
        x = multivariate_fd(MultiFdSpec(d=d, length=T, seed=trial_seed(seed, i)))
        fit = estimate(periodogram(x), bandwidth=m)
        return total_memory(fit.d_hat), total_memory_test(fit).reject

    res = np.array(map_trials(one, n), dtype=float)
    totals = res[:, 0]
    ddof = 1 if n > 1 else 0
    return TotalMemorySummary(
        setting=setting, p=p, T=T, m=m, n=n,
        true_normalized=normalized_total_memory(d),
        mean_normalized=float(totals.mean() / p),
        var_normalized=float(totals.var(ddof=ddof) / p**2),
        var_total=float(totals.var(ddof=ddof)),
        reference_var_total=p / (4.0 * m),
        reference_var_normalized=1.0 / (4.0 * m * p),
        rejection_rate=float(res[:, 1].mean()),
        d=d,
    )
