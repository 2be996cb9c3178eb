"""Asymptotic precision of the memory estimate, total-memory test, Wald test."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg, special

from .errors import DegenerateCovarianceError, ValidationError
from .gse import GseFit

__all__ = [
    "TestResult",
    "omega",
    "total_memory",
    "normalized_total_memory",
    "total_memory_variance",
    "total_memory_test",
    "wald_test",
    "normal_sf",
    "normal_cdf",
    "chi2_sf",
]

ALTERNATIVES = ("greater", "less", "two_sided")


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    alpha: float
    reject: bool
    alternative: str  # "greater" | "less" | "two_sided" | "chi2_upper"
    df_or_variance: float

    __test__ = False  # not a pytest class


def normal_cdf(z: float) -> float:
    return float(special.ndtr(z))


def normal_sf(z: float) -> float:
    return float(special.ndtr(-z))


def chi2_sf(x: float, df: float) -> float:
    """Upper tail of chi-square, via the regularized upper incomplete gamma."""
    if x <= 0:
        return 1.0
    return float(special.gammaincc(0.5 * df, 0.5 * x))


def omega(G) -> np.ndarray:
    """``2 [I + G*G^-1 + (pi^2/4)(G*G^-1 - I)]`` with ``*`` the elementwise product."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if G.shape[0] != G.shape[1]:
        raise ValidationError(f"G must be square, got {G.shape}")
    try:
        Ginv = linalg.inv(G, check_finite=True)
    except (linalg.LinAlgError, ValueError):
        raise DegenerateCovarianceError("G is singular") from None
    had = G * Ginv
    had = 0.5 * (had + had.T)
    eye = np.eye(G.shape[0])
    return 2.0 * (eye + had + (np.pi**2 / 4.0) * (had - eye))


def total_memory(d) -> float:
    return float(np.sum(np.asarray(d, dtype=float)))


def normalized_total_memory(d) -> float:
    d = np.atleast_1d(np.asarray(d, dtype=float))
    return total_memory(d) / d.size


def total_memory_variance(G, m: int) -> float:
    """Asymptotic variance of the total memory, ``1' Omega(G)^-1 1 / m``."""
    if m < 1:
        raise ValidationError("m must be >= 1")
    om = omega(G)
    ones = np.ones(om.shape[0])
    try:
        v = linalg.solve(om, ones, assume_a="sym")
    except linalg.LinAlgError:
        raise DegenerateCovarianceError("Omega is singular") from None
    return float(ones @ v) / m


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"alpha must lie in (0, 1], got {alpha}")


def _decide(p_value: float, alpha: float) -> bool:
    # alpha = 1 rejects unconditionally, including the p = 1 edge.
    return bool(p_value < alpha or alpha >= 1.0)


def total_memory_test(
    fit: GseFit, null_value: float = 0.0, alternative: str = "greater", alpha: float = 0.05
) -> TestResult:
    """Normal test of the total memory with the plug-in variance at ``G(d_hat)``."""
    if alternative not in ALTERNATIVES:
        raise ValidationError(f"alternative must be one of {ALTERNATIVES}, got {alternative!r}")
    _check_alpha(alpha)
    var = total_memory_variance(fit.g_hat, fit.bandwidth)
    if not var > 0:
        raise DegenerateCovarianceError(f"non-positive total memory variance {var}")
    z = (total_memory(fit.d_hat) - null_value) / np.sqrt(var)
    if alternative == "greater":
        p = normal_sf(z)
    elif alternative == "less":
        p = normal_cdf(z)
    else:
        p = min(1.0, 2.0 * normal_sf(abs(z)))
    return TestResult(float(z), p, alpha, _decide(p, alpha), alternative, var)


def wald_test(fit: GseFit, d0=None, alpha: float = 0.05) -> TestResult:
    """Chi-square(p) test of ``d = d0`` using ``m (d_hat - d0)' Omega (d_hat - d0)``."""
    _check_alpha(alpha)
    p = fit.dim
    d0 = np.zeros(p) if d0 is None else np.atleast_1d(np.asarray(d0, dtype=float))
    if d0.shape != (p,):
        raise ValidationError(f"d0 has shape {d0.shape}, expected ({p},)")
    diff = fit.d_hat - d0
    stat = float(fit.bandwidth * diff @ omega(fit.g_hat) @ diff)
    stat = max(stat, 0.0)
    pv = chi2_sf(stat, p)
    return TestResult(stat, pv, alpha, _decide(pv, alpha), "chi2_upper", float(p))
