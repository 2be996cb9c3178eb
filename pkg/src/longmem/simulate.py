"""Seeded generators for long-memory processes and short-memory controls.

Fractional integration is the truncated MA(inf) filter
``X_t = sum_{k < t} psi_k Z_{t-k}`` applied to a zero-initialized innovation
stream; the first ``burn_in`` samples are dropped (default ``burn_in = T``).
All generators draw from ``numpy.random.default_rng(seed)`` and are
deterministic given their spec.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import signal

from .errors import ValidationError

__all__ = [
    "FracDiffSpec",
    "ArfimaSpec",
    "MultiFdSpec",
    "MarkovSpec",
    "MtdSpec",
    "ArmaSpec",
    "NonlinearArSpec",
    "PRESETS",
    "NONLINEAR_MAPS",
    "trial_seed",
    "frac_diff_coeffs",
    "frac_integrate",
    "frac_difference",
    "preset_memory",
    "fracdiff_noise",
    "arfima",
    "arma_series",
    "multivariate_fd",
    "stationary_distribution",
    "markov_series",
    "mtd_series",
    "nonlinear_ar_series",
]

PRESETS = ("zero", "constant", "subset", "range")


def trial_seed(seed: int, trial: int) -> np.random.SeedSequence:
    """Independent sub-stream for one Monte Carlo trial."""
    return np.random.SeedSequence([int(seed), int(trial)])


def _check_d(d: float) -> float:
    d = float(d)
    if not abs(d) < 0.5:
        raise ValidationError(f"memory parameter d = {d} must lie in (-1/2, 1/2)")
    return d


def _check_common(length: int, burn_in: int | None, sigma: float) -> int:
    if length < 1:
        raise ValidationError(f"length must be >= 1, got {length}")
    if burn_in is not None and burn_in < 0:
        raise ValidationError(f"burn_in must be >= 0, got {burn_in}")
    if not sigma > 0:
        raise ValidationError(f"sigma must be positive, got {sigma}")
    return length if burn_in is None else burn_in


@dataclass(frozen=True)
class FracDiffSpec:
    d: float
    length: int
    burn_in: int | None = None
    sigma: float = 1.0
    seed: int | np.random.SeedSequence = 0


@dataclass(frozen=True)
class ArmaSpec:
    ar: Sequence[float] = ()
    ma: Sequence[float] = ()
    length: int = 1024
    burn_in: int | None = None
    sigma: float = 1.0
    seed: int | np.random.SeedSequence = 0


@dataclass(frozen=True)
class ArfimaSpec:
    ar: Sequence[float] = ()
    ma: Sequence[float] = ()
    d: float = 0.0
    length: int = 1024
    burn_in: int | None = None
    sigma: float = 1.0
    seed: int | np.random.SeedSequence = 0


@dataclass(frozen=True)
class MultiFdSpec:
    d: Sequence[float] | None = None
    length: int = 1024
    burn_in: int | None = None
    sigma: float = 1.0
    seed: int | np.random.SeedSequence = 0
    setting: str | None = None
    p: int | None = None


@dataclass(frozen=True)
class MarkovSpec:
    transition: np.ndarray  # column-stochastic: P[i, j] = P(next = i | current = j)
    values: Sequence[float] | None = None  # output map g; default g(i) = i
    length: int = 1024
    seed: int | np.random.SeedSequence = 0


@dataclass(frozen=True)
class MtdSpec:
    weights: Sequence[float]  # lambda_l, one per lag
    matrices: Sequence[np.ndarray]  # Q^(l), column-stochastic, positive diagonal
    values: Sequence[float] | None = None
    length: int = 1024
    seed: int | np.random.SeedSequence = 0


@dataclass(frozen=True)
class NonlinearArSpec:
    kind: str = "tanh"
    a: float = 0.5
    b: float = 0.4
    sigma: float = 1.0
    length: int = 1024
    burn_in: int | None = None
    seed: int | np.random.SeedSequence = 0


def frac_diff_coeffs(d: float, n: int) -> np.ndarray:
    """First ``n`` coefficients of ``(1 - B)^-d``: ``psi_k = psi_{k-1} (k - 1 + d) / k``."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    k = np.arange(1, n)
    return np.concatenate([[1.0], np.cumprod((k - 1 + d) / k)])


def frac_integrate(z, d: float) -> np.ndarray:
    """Apply ``(1 - B)^-d`` to ``z`` along axis 0, with zero values before the start."""
    z = np.asarray(z, dtype=float)
    if d == 0:
        return z.copy()
    n = z.shape[0]
    psi = frac_diff_coeffs(d, n)
    if z.ndim == 1:
        return signal.fftconvolve(psi, z)[:n]
    return signal.fftconvolve(psi[:, None], z, axes=0)[:n]


def frac_difference(x, d: float) -> np.ndarray:
    """Apply ``(1 - B)^d``, the inverse of :func:`frac_integrate`."""
    return frac_integrate(x, -d)


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def fracdiff_noise(spec: FracDiffSpec) -> np.ndarray:
    """Fractionally integrated Gaussian white noise, shape ``(T, 1)``."""
    d = _check_d(spec.d)
    burn = _check_common(spec.length, spec.burn_in, spec.sigma)
    z = spec.sigma * _rng(spec.seed).standard_normal(spec.length + burn)
    return frac_integrate(z, d)[burn:, None]


def _check_ar(ar) -> np.ndarray:
    ar = np.asarray(ar, dtype=float)
    if ar.size:
        # Roots of 1 - phi_1 z - ... - phi_p z^p must lie outside the unit disk.
        roots = np.roots(np.concatenate([-ar[::-1], [1.0]]))
        if np.any(np.abs(roots) <= 1.0 + 1e-10):
            raise ValidationError(
                f"AR polynomial with coefficients {ar.tolist()} has a root on or inside the unit circle"
            )
    return ar


def _arma_filter(z: np.ndarray, ar: np.ndarray, ma: np.ndarray) -> np.ndarray:
    if ar.size == 0 and ma.size == 0:
        return z
    num = np.concatenate([[1.0], ma])
    den = np.concatenate([[1.0], -ar])
    return signal.lfilter(num, den, z)


def arma_series(spec: ArmaSpec) -> np.ndarray:
    """``phi(B) X_t = theta(B) Z_t`` with ``phi(B) = 1 - sum phi_i B^i``, ``theta(B) = 1 + sum theta_j B^j``."""
    return arfima(ArfimaSpec(ar=spec.ar, ma=spec.ma, d=0.0, length=spec.length,
                             burn_in=spec.burn_in, sigma=spec.sigma, seed=spec.seed))


def arfima(spec: ArfimaSpec) -> np.ndarray:
    """ARFIMA(p, d, q): MA filter, AR recursion, then fractional integration."""
    d = _check_d(spec.d)
    ar = _check_ar(spec.ar)
    ma = np.asarray(spec.ma, dtype=float)
    burn = _check_common(spec.length, spec.burn_in, spec.sigma)
    z = spec.sigma * _rng(spec.seed).standard_normal(spec.length + burn)
    u = _arma_filter(z, ar, ma)
    return frac_integrate(u, d)[burn:, None]


def preset_memory(setting: str, p: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Memory vectors for the named validation settings.

    ``range`` draws iid ``0.25 * Beta(2, 2)`` values and needs ``rng``.
    """
    if setting not in PRESETS:
        raise ValidationError(f"unknown setting {setting!r}; expected one of {{{', '.join(PRESETS)}}}")
    if p < 1:
        raise ValidationError("p must be >= 1")
    if setting == "zero":
        return np.zeros(p)
    if setting == "constant":
        return np.full(p, 0.25)
    if setting == "subset":
        d = np.zeros(p)
        d[: int(np.ceil(0.1 * p))] = 0.4
        return d
    if rng is None:
        raise ValidationError("the 'range' setting needs a random generator")
    return 0.25 * rng.beta(2.0, 2.0, size=p)


def multivariate_fd(spec: MultiFdSpec) -> np.ndarray:
    """Coordinatewise fractional integration of independent Gaussian innovations."""
    rng = _rng(spec.seed)
    if spec.d is not None:
        d = np.atleast_1d(np.asarray(spec.d, dtype=float))
    elif spec.setting is not None and spec.p is not None:
        d = preset_memory(spec.setting, spec.p, rng)
    else:
        raise ValidationError("multivariate_fd needs either d or (setting, p)")
    for di in d:
        _check_d(di)
    burn = _check_common(spec.length, spec.burn_in, spec.sigma)
    p = d.size
    z = spec.sigma * rng.standard_normal((spec.length + burn, p))
    out = np.empty_like(z)
    for i, di in enumerate(d):
        out[:, i] = frac_integrate(z[:, i], di)
    return out[burn:]


def _check_stochastic(P, name: str) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValidationError(f"{name} must be a square matrix")
    if np.any(P < 0) or np.any(np.abs(P.sum(axis=0) - 1.0) > 1e-12):
        raise ValidationError(f"{name} must be column-stochastic (nonnegative, columns summing to 1)")
    return P


def stationary_distribution(P) -> np.ndarray:
    """Unique stationary distribution of a column-stochastic matrix."""
    P = np.asarray(P, dtype=float)
    w, v = np.linalg.eig(P)
    ones = np.flatnonzero(np.abs(w - 1.0) < 1e-9)
    if ones.size != 1:
        raise ValidationError("chain is reducible: no unique stationary distribution")
    pi = np.real(v[:, ones[0]])
    pi = pi / pi.sum()
    if np.any(pi < -1e-12):
        raise ValidationError("chain has no nonnegative stationary distribution")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def _draw(cdf: np.ndarray, u: float) -> int:
    return min(int(np.searchsorted(cdf, u, side="right")), len(cdf) - 1)


def _output_map(values, n_states: int) -> np.ndarray:
    g = np.arange(n_states, dtype=float) if values is None else np.asarray(values, dtype=float)
    if g.shape != (n_states,):
        raise ValidationError(f"output map needs {n_states} values, got {g.shape}")
    return g


def markov_series(spec: MarkovSpec) -> np.ndarray:
    """``Y_t = g(X_t)`` for a finite chain started from its stationary law."""
    P = _check_stochastic(spec.transition, "transition matrix")
    return _simulate_mtd([1.0], [P], spec.values, spec.length, spec.seed)


def mtd_series(spec: MtdSpec) -> np.ndarray:
    """Mixture-transition-distribution chain of order ``len(weights)``."""
    lam = np.asarray(spec.weights, dtype=float)
    if lam.ndim != 1 or lam.size < 1 or np.any(lam <= 0) or abs(lam.sum() - 1.0) > 1e-12:
        raise ValidationError("MTD weights must be positive and sum to 1")
    if len(spec.matrices) != lam.size:
        raise ValidationError("MTD needs one transition matrix per lag")
    Qs = [_check_stochastic(Q, f"Q^({i + 1})") for i, Q in enumerate(spec.matrices)]
    if any(Q.shape != Qs[0].shape for Q in Qs):
        raise ValidationError("MTD transition matrices must share one state space")
    if lam.size > 1 and any(np.any(np.diag(Q) <= 0) for Q in Qs):
        raise ValidationError("MTD transition matrices need strictly positive diagonals")
    return _simulate_mtd(lam, Qs, spec.values, spec.length, spec.seed)


def _lifted_transition(lam, Qs) -> np.ndarray:
    """Transition matrix on lag tuples ``(x_{t-1}, ..., x_{t-L})`` (first lag most significant)."""
    L, s = len(lam), Qs[0].shape[0]
    if L == 1:
        return lam[0] * Qs[0]
    n = s**L
    states = np.array(np.unravel_index(np.arange(n), (s,) * L)).T
    R = np.zeros((n, n))
    for col, past in enumerate(states):
        probs = sum(lam[l] * Qs[l][:, past[l]] for l in range(L))
        for new, pr in enumerate(probs):
            nxt = (new,) + tuple(past[:-1])
            R[np.ravel_multi_index(nxt, (s,) * L), col] += pr
    return R


def _simulate_mtd(lam, Qs, values, length: int, seed) -> np.ndarray:
    if length < 1:
        raise ValidationError("length must be >= 1")
    lam = np.asarray(lam, dtype=float)
    L, s = lam.size, Qs[0].shape[0]
    g = _output_map(values, s)
    xi = stationary_distribution(_lifted_transition(lam, Qs))
    # Conditional CDF of the next state for every lag tuple, indexed by the
    # tuple's code with the most recent state most significant.
    pasts = np.array(np.unravel_index(np.arange(s**L), (s,) * L)).T
    cdfs = np.array([np.cumsum(sum(lam[l] * Qs[l][:, past[l]] for l in range(L))) for past in pasts])
    u = _rng(seed).random(length + 1)
    code = _draw(np.cumsum(xi), u[0])
    lead = s ** (L - 1)
    out = np.empty(length)
    for t in range(length):
        x = _draw(cdfs[code], u[t + 1])
        code = x * lead + code // s
        out[t] = g[x]
    return out[:, None]


def _tanh_map(a, b):
    return lambda x: a * math.tanh(x) + b * x


def _sine_map(a, b):
    return lambda x: a * math.sin(x) + b * x


# f(x) = a*bounded(x) + b*x with |b| < 1 keeps sup_{|x|>r} |f(x)/x| < 1 for large r.
NONLINEAR_MAPS = {"tanh": _tanh_map, "sine": _sine_map}


def nonlinear_ar_series(spec: NonlinearArSpec) -> np.ndarray:
    """``X_{t+1} = f(X_t) + eps_t`` with ``f`` from :data:`NONLINEAR_MAPS`."""
    if spec.kind not in NONLINEAR_MAPS:
        raise ValidationError(f"unknown nonlinear map {spec.kind!r}; expected one of {sorted(NONLINEAR_MAPS)}")
    if not abs(spec.b) < 1:
        raise ValidationError(f"|b| must be < 1 for a stable nonlinear AR, got b = {spec.b}")
    burn = _check_common(spec.length, spec.burn_in, spec.sigma)
    f = NONLINEAR_MAPS[spec.kind](float(spec.a), float(spec.b))
    eps = spec.sigma * _rng(spec.seed).standard_normal(spec.length + burn)
    x = np.empty(spec.length + burn)
    prev = 0.0
    for t in range(x.size):
        prev = f(prev) + eps[t]
        x[t] = prev
    return x[burn:, None]
