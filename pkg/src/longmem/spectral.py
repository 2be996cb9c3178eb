"""Discrete Fourier transform and periodogram of multivariate series.

Conventions
-----------
For an observed series ``x`` with ``T`` rows (time, ``t = 1..T``) and ``p``
columns, the transform at Fourier frequency ``lam_j = 2*pi*j/T`` is

    y_j = (2*pi*T)**-0.5 * sum_t x_t * exp(-1j * lam_j * t)

and the periodogram is the rank-one Hermitian matrix ``I_j = y_j y_j^*``.
Only ``j = 1..(T-1)//2`` is kept: the zero frequency is annihilated by
demeaning and frequencies at or above pi are redundant for real data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "as_series",
    "demean",
    "fourier_frequencies",
    "FourierCoefficients",
    "Periodogram",
    "dft",
    "periodogram",
    "log_periodogram_points",
    "smoothed_periodogram",
]


def as_series(x) -> np.ndarray:
    """Coerce ``x`` to a finite float matrix of shape ``(T, p)``.

    One-dimensional input is treated as a single column.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValidationError(f"time series must be 1-D or 2-D, got shape {arr.shape}")
    T, p = arr.shape
    if T < 2 or p < 1:
        raise ValidationError(f"time series needs T >= 2 and p >= 1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("time series contains NaN or Inf")
    return arr


def demean(x) -> np.ndarray:
    """Subtract the column means."""
    x = as_series(x)
    return x - x.mean(axis=0, keepdims=True)


def fourier_frequencies(T: int) -> np.ndarray:
    """Positive Fourier frequencies strictly below pi, ``2*pi*j/T`` for ``j = 1..(T-1)//2``."""
    n = (T - 1) // 2
    return 2.0 * np.pi * np.arange(1, n + 1) / T


@dataclass(frozen=True)
class FourierCoefficients:
    freqs: np.ndarray  # (n,)
    coeffs: np.ndarray  # (n, p) complex

    def __len__(self) -> int:
        return len(self.freqs)


@dataclass(frozen=True)
class Periodogram:
    """Periodogram ordinates at the positive Fourier frequencies.

    Built from data the matrices are rank one, so only the Fourier
    coefficients are stored and ``y_j y_j^*`` is formed on demand (the full
    ``(n, p, p)`` stack is large for long, wide series). Arbitrary Hermitian
    ordinates can be supplied through :meth:`from_matrices`, which is what
    the synthetic test fixtures use.
    """

    freqs: np.ndarray
    coeffs: np.ndarray | None = None
    _matrices: np.ndarray | None = field(default=None, repr=False)
    T: int | None = None

    @classmethod
    def from_coefficients(cls, fc: FourierCoefficients, T: int | None = None) -> "Periodogram":
        return cls(freqs=fc.freqs, coeffs=fc.coeffs, T=T)

    @classmethod
    def from_matrices(cls, freqs, matrices) -> "Periodogram":
        freqs = np.asarray(freqs, dtype=float)
        mats = np.asarray(matrices, dtype=complex)
        if mats.ndim == 1:
            mats = mats[:, None, None]
        if mats.ndim != 3 or mats.shape[1] != mats.shape[2] or mats.shape[0] != freqs.shape[0]:
            raise ValidationError(
                f"expected matrices of shape (n, p, p) with n = {freqs.shape[0]}, got {mats.shape}"
            )
        return cls(freqs=freqs, _matrices=mats)

    @classmethod
    def from_diagonal(cls, freqs, ordinates) -> "Periodogram":
        """Scalar or diagonal periodogram from real ordinates of shape (n,) or (n, p)."""
        ords = np.asarray(ordinates, dtype=float)
        if ords.ndim == 1:
            ords = ords[:, None]
        n, p = ords.shape
        mats = np.zeros((n, p, p), dtype=complex)
        idx = np.arange(p)
        mats[:, idx, idx] = ords
        return cls.from_matrices(freqs, mats)

    def __len__(self) -> int:
        return len(self.freqs)

    @property
    def dim(self) -> int:
        if self.coeffs is not None:
            return self.coeffs.shape[1]
        return self._matrices.shape[1]

    @property
    def is_rank_one(self) -> bool:
        return self.coeffs is not None

    def matrices(self, m: int | None = None) -> np.ndarray:
        """The first ``m`` (default: all) periodogram matrices, shape ``(m, p, p)``."""
        m = len(self) if m is None else m
        if self.coeffs is not None:
            y = self.coeffs[:m]
            return y[:, :, None] * y[:, None, :].conj()
        return self._matrices[:m]

    def diagonal(self, m: int | None = None) -> np.ndarray:
        """Real diagonal ordinates ``I_kk(lam_j)``, shape ``(m, p)``."""
        m = len(self) if m is None else m
        if self.coeffs is not None:
            return np.abs(self.coeffs[:m]) ** 2
        return np.real(np.diagonal(self._matrices[:m], axis1=1, axis2=2)).copy()

    def select(self, coords) -> "Periodogram":
        """Restrict to a subset of coordinates (the sub-block of every matrix)."""
        coords = np.atleast_1d(np.asarray(coords, dtype=int))
        if coords.size == 0 or coords.min() < 0 or coords.max() >= self.dim:
            raise ValidationError(f"coordinates {coords.tolist()} out of range for p = {self.dim}")
        if self.coeffs is not None:
            return Periodogram(freqs=self.freqs, coeffs=self.coeffs[:, coords], T=self.T)
        return Periodogram(freqs=self.freqs, _matrices=self._matrices[:, coords][:, :, coords], T=self.T)


def dft(x) -> FourierCoefficients:
    """Normalized DFT at ``lam_j``, ``j = 1..(T-1)//2``, phase origin at ``t = 1``.

    The input is used as given; call :func:`demean` first if needed.
    """
    x = as_series(x)
    T = x.shape[0]
    n = (T - 1) // 2
    if n < 1:
        raise ValidationError(f"T = {T} has no Fourier frequency in (0, pi); need T >= 3")
    freqs = fourier_frequencies(T)
    # rfft indexes time from 0; shifting to t = 1 multiplies by exp(-i lam_j).
    f = np.fft.rfft(x, axis=0)[1 : n + 1]
    coeffs = f * np.exp(-1j * freqs)[:, None] / np.sqrt(2.0 * np.pi * T)
    return FourierCoefficients(freqs=freqs, coeffs=coeffs)


def periodogram(x) -> Periodogram:
    """Demean ``x`` and return its periodogram."""
    x = demean(x)
    return Periodogram.from_coefficients(dft(x), T=x.shape[0])


def log_periodogram_points(pg: Periodogram, coord: int, m: int) -> np.ndarray:
    """Points ``(-2 log lam_j, log I_cc(lam_j))`` for ``j = 1..m``, shape ``(m, 2)``."""
    if not 1 <= m <= len(pg):
        raise ValidationError(f"m = {m} outside 1..{len(pg)}")
    ords = pg.diagonal(m)[:, coord]
    bad = np.flatnonzero(ords <= 0)
    if bad.size:
        raise ValidationError(f"periodogram ordinate is zero at j = {bad[0] + 1} (coordinate {coord})")
    return np.column_stack([-2.0 * np.log(pg.freqs[:m]), np.log(ords)])


def smoothed_periodogram(pg: Periodogram, coord: int, halfwidth: int) -> np.ndarray:
    """Flat moving average of ``I_cc`` over ``2*halfwidth + 1`` ordinates.

    The window is truncated at both ends, so edge values average fewer
    points. Returns rows ``(freq, value)``.
    """
    if halfwidth < 0:
        raise ValidationError("halfwidth must be >= 0")
    ords = pg.diagonal()[:, coord]
    n = len(ords)
    csum = np.concatenate([[0.0], np.cumsum(ords)])
    j = np.arange(n)
    lo = np.maximum(j - halfwidth, 0)
    hi = np.minimum(j + halfwidth + 1, n)
    return np.column_stack([pg.freqs, (csum[hi] - csum[lo]) / (hi - lo)])
