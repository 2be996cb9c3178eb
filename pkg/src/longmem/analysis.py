"""Time-domain summaries: sample autocovariance, trace partial sums, R^2 curves."""

from __future__ import annotations

import numpy as np
from scipy import special

from .errors import ValidationError
from .spectral import as_series

__all__ = [
    "autocovariance",
    "acov_trace_partial_sums",
    "fd_theoretical_acf",
    "r_squared_horizon",
]


def autocovariance(x, max_lag: int) -> np.ndarray:
    """Biased sample autocovariance matrices, shape ``(max_lag + 1, p, p)``.

    ``gamma[k] = (1/T) sum_{t=1}^{T-k} (x_t - xbar)(x_{t+k} - xbar)'``.
    """
    x = as_series(x)
    T, p = x.shape
    if not 0 <= max_lag < T:
        raise ValidationError(f"max_lag must lie in 0..{T - 1}, got {max_lag}")
    xc = x - x.mean(axis=0)
    # Cross-correlation through a zero-padded FFT: O(p^2 T log T).
    n = 1 << int(np.ceil(np.log2(2 * T - 1)))
    f = np.fft.rfft(xc, n=n, axis=0)
    out = np.empty((max_lag + 1, p, p))
    for a in range(p):
        out[:, a, :] = np.fft.irfft(f[:, a, None].conj() * f, n=n, axis=0)[: max_lag + 1]
    return out / T


def acov_trace_partial_sums(acv) -> np.ndarray:
    """Cumulative sums of ``Tr|gamma(k)|`` (elementwise absolute value)."""
    acv = np.asarray(acv, dtype=float)
    if acv.ndim == 1:
        acv = acv[:, None, None]
    return np.cumsum(np.abs(np.diagonal(acv, axis1=1, axis2=2)).sum(axis=1))


def fd_theoretical_acf(d: float, max_lag: int) -> np.ndarray:
    """Autocorrelations of fractionally integrated white noise, lags ``0..max_lag``."""
    if not abs(d) < 0.5:
        raise ValidationError(f"d must lie in (-1/2, 1/2), got {d}")
    k = np.arange(1, max_lag + 1)
    return np.concatenate([[1.0], np.cumprod((k - 1 + d) / (k - d))])


def _wold_coefficients(model: str, param: float, n: int) -> np.ndarray:
    if model == "ar1":
        return param ** np.arange(n)
    k = np.arange(1, n)
    return np.concatenate([[1.0], np.cumprod((k - 1 + param) / k)])


def r_squared_horizon(model: str, param: float, horizons) -> np.ndarray:
    """Share of variance explained by the optimal ``h``-step predictor.

    ``model`` is ``"ar1"`` (``param`` = phi) or ``"fd"`` (``param`` = d).
    ``R^2(h) = 1 - sum_{j<h} a_j^2 / sum_j a_j^2`` with the total in closed
    form (``1/(1 - phi^2)`` and ``Gamma(1 - 2d)/Gamma(1 - d)^2``), so no tail
    truncation enters.
    """
    if model == "ar1":
        if not abs(param) < 1:
            raise ValidationError(f"AR(1) needs |phi| < 1, got {param}")
        total = 1.0 / (1.0 - param**2)
    elif model == "fd":
        if not abs(param) < 0.5:
            raise ValidationError(f"FD needs |d| < 1/2, got {param}")
        total = float(np.exp(special.gammaln(1 - 2 * param) - 2 * special.gammaln(1 - param)))
    else:
        raise ValidationError(f"model must be 'ar1' or 'fd', got {model!r}")
    h = np.atleast_1d(np.asarray(horizons, dtype=int))
    if np.any(h < 0):
        raise ValidationError("horizons must be >= 0")
    a2 = _wold_coefficients(model, param, int(h.max(initial=0))) ** 2
    head = np.concatenate([[0.0], np.cumsum(a2)])
    return np.clip(1.0 - head[h] / total, 0.0, 1.0)
