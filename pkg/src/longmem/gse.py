"""Gaussian semiparametric (local Whittle) estimation of the memory vector.

Near the origin the spectral matrix of a fractionally integrated process is
approximated by ``Lambda_j(d) G Lambda_j(d)^*`` with

    Lambda_j(d) = diag(lam_j**-d * exp(-1j * d * (pi - lam_j) / 2)).

The phase sign matches the ``exp(-1j*lam*t)`` transform in
:mod:`longmem.spectral`, for which ``1 - exp(-1j*lam) = 2 sin(lam/2)
exp(1j*(pi - lam)/2)``. Profiling ``G`` out of the local likelihood leaves

    G(d) = (1/m) sum_j Re[Lambda_j^-1 I_j Lambda_j^-*]
    R(d) = log det G(d) - 2 * sum(d) * mean_j(log lam_j)

which is minimized over the box ``[-1/2 + eps, 1/2 - eps]^p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import linalg, optimize

from .errors import DegenerateCovarianceError, ValidationError
from .spectral import Periodogram

__all__ = [
    "GseConfig",
    "GseFit",
    "default_bandwidth",
    "lambda_diag",
    "g_hat",
    "objective",
    "gradient",
    "objective_and_gradient",
    "projected_gradient_norm",
    "estimate",
    "objective_grid",
    "gph_estimate",
]


def default_bandwidth(T: int) -> int:
    """``floor(sqrt(T))``."""
    return max(1, math.isqrt(int(T)))


@dataclass(frozen=True)
class GseConfig:
    bandwidth: int
    box_margin: float = 1e-3
    grad_tol: float = 1e-8
    max_iters: int = 500
    init: np.ndarray | None = None

    def validate(self, pg: Periodogram) -> None:
        if not 1 <= self.bandwidth <= len(pg):
            raise ValidationError(f"bandwidth {self.bandwidth} outside 1..{len(pg)} available frequencies")
        if not 0.0 < self.box_margin < 0.25:
            raise ValidationError("box_margin must lie in (0, 1/4)")
        if not self.grad_tol > 0:
            raise ValidationError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")


@dataclass(frozen=True)
class GseFit:
    d_hat: np.ndarray
    g_hat: np.ndarray
    objective: float
    grad_norm: float
    iterations: int
    bandwidth: int
    converged: bool
    active: tuple = field(default=())  # coordinates sitting on a box face
    message: str = ""

    @property
    def dim(self) -> int:
        return len(self.d_hat)


def _check_memory(d, p: int | None = None) -> np.ndarray:
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if d.ndim != 1:
        raise ValidationError("memory vector must be one-dimensional")
    if p is not None and d.shape[0] != p:
        raise ValidationError(f"memory vector has length {d.shape[0]}, expected {p}")
    if not np.all(np.abs(d) < 0.5):
        raise ValidationError(f"memory parameters must lie in (-1/2, 1/2), got {d.tolist()}")
    return d


def _check_bandwidth(pg: Periodogram, m: int) -> None:
    if not 1 <= m <= len(pg):
        raise ValidationError(f"bandwidth {m} outside 1..{len(pg)} available frequencies")


def lambda_diag(lam: float, d) -> np.ndarray:
    """Diagonal of ``Lambda(d)`` at a single frequency ``lam``."""
    if not lam > 0:
        raise ValidationError(f"frequency must be positive, got {lam}")
    d = np.atleast_1d(np.asarray(d, dtype=float))
    return lam ** (-d) * np.exp(-0.5j * d * (np.pi - lam))


def _log_factors(freqs: np.ndarray):
    log_lam = np.log(freqs)
    half_phase = 0.5 * (np.pi - freqs)
    return log_lam + 1j * half_phase, log_lam - 1j * half_phase


def _local_terms(pg: Periodogram, d: np.ndarray, m: int, with_derivs: bool):
    """Return G(d) and, optionally, the c+ / c- weighted sums used by the gradient.

    With ``c_plus = log lam + i(pi - lam)/2`` the (h, k) summand of G is
    ``Re[I_hk exp(c_plus d_h + c_minus d_k)]``, so differentiating in
    ``d_h`` multiplies by ``c_plus`` and in ``d_k`` by ``c_minus``.
    """
    c_plus, c_minus = _log_factors(pg.freqs[:m])
    scale = np.exp(c_plus[:, None] * d[None, :])  # Lambda_j^-1, shape (m, p)
    if pg.is_rank_one:
        z = scale * pg.coeffs[:m]
        zc = z.conj()
        G = np.real(z.T @ zc) / m
        if not with_derivs:
            return G, None, None
        B = np.real((c_plus[:, None] * z).T @ zc) / m
        C = np.real((c_minus[:, None] * z).T @ zc) / m
        return G, B, C
    W = scale[:, :, None] * pg.matrices(m) * scale.conj()[:, None, :]
    G = np.real(W.sum(axis=0)) / m
    if not with_derivs:
        return G, None, None
    B = np.real(np.tensordot(c_plus, W, axes=1)) / m
    C = np.real(np.tensordot(c_minus, W, axes=1)) / m
    return G, B, C


def _factor(G: np.ndarray):
    G = 0.5 * (G + G.T)
    scale = np.max(np.abs(np.diag(G)), initial=0.0)
    if not np.isfinite(scale) or scale <= 0:
        raise DegenerateCovarianceError("degenerate local covariance: G(d) is zero")
    try:
        c, lower = linalg.cho_factor(G, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise DegenerateCovarianceError("degenerate local covariance: G(d) is not positive definite") from None
    piv = np.diag(c) ** 2
    if piv.min() <= 1e-13 * G.shape[0] * scale:
        raise DegenerateCovarianceError("degenerate local covariance: G(d) is numerically singular")
    return (c, lower), G


def g_hat(pg: Periodogram, d, m: int) -> np.ndarray:
    """Profile estimate of the local spectral level matrix at ``d``."""
    _check_bandwidth(pg, m)
    d = _check_memory(d, pg.dim)
    G, _, _ = _local_terms(pg, d, m, with_derivs=False)
    return 0.5 * (G + G.T)


def objective_and_gradient(pg: Periodogram, d, m: int) -> tuple[float, np.ndarray]:
    _check_bandwidth(pg, m)
    d = _check_memory(d, pg.dim)
    G, B, C = _local_terms(pg, d, m, with_derivs=True)
    cf, G = _factor(G)
    mean_log = float(np.mean(np.log(pg.freqs[:m])))
    logdet = 2.0 * float(np.sum(np.log(np.diag(cf[0]))))
    value = logdet - 2.0 * float(np.sum(d)) * mean_log
    Ginv = linalg.cho_solve(cf, np.eye(G.shape[0]), check_finite=False)
    Ginv = 0.5 * (Ginv + Ginv.T)
    grad = (Ginv * B).sum(axis=1) + (Ginv * C).sum(axis=0) - 2.0 * mean_log
    return value, grad


def objective(pg: Periodogram, d, m: int) -> float:
    """Profiled local Whittle objective ``R(d)``."""
    _check_bandwidth(pg, m)
    d = _check_memory(d, pg.dim)
    G, _, _ = _local_terms(pg, d, m, with_derivs=False)
    cf, _ = _factor(G)
    mean_log = float(np.mean(np.log(pg.freqs[:m])))
    return 2.0 * float(np.sum(np.log(np.diag(cf[0])))) - 2.0 * float(np.sum(d)) * mean_log


def gradient(pg: Periodogram, d, m: int) -> np.ndarray:
    """Analytic gradient of :func:`objective`."""
    return objective_and_gradient(pg, d, m)[1]


def projected_gradient_norm(grad, d, lower: float, upper: float) -> float:
    """Max-norm of the gradient after zeroing components blocked by an active bound."""
    grad = np.asarray(grad, dtype=float)
    d = np.asarray(d, dtype=float)
    proj = np.where((d <= lower) & (grad > 0), 0.0, grad)
    proj = np.where((d >= upper) & (proj < 0), 0.0, proj)
    return float(np.max(np.abs(proj), initial=0.0))


def estimate(pg: Periodogram, cfg: GseConfig | None = None, **overrides) -> GseFit:
    """Minimize the local Whittle objective with L-BFGS-B.

    ``cfg`` defaults to the square-root bandwidth of the series the
    periodogram came from; keyword overrides replace individual config fields.
    """
    if cfg is None:
        if "bandwidth" not in overrides:
            if pg.T is None:
                raise ValidationError("bandwidth is required for a periodogram without a known length")
            overrides["bandwidth"] = default_bandwidth(pg.T)
        cfg = GseConfig(**overrides)
    elif overrides:
        cfg = replace(cfg, **overrides)
    cfg.validate(pg)
    p, m = pg.dim, cfg.bandwidth
    if m < p:
        raise DegenerateCovarianceError(
            f"bandwidth below dimension: m = {m} < p = {p} makes G(d) singular"
        )
    lo, hi = -0.5 + cfg.box_margin, 0.5 - cfg.box_margin
    x0 = np.zeros(p) if cfg.init is None else _check_memory(cfg.init, p).copy()
    x0 = np.clip(x0, lo, hi)
    # Raises on a degenerate starting point.
    f0, _ = objective_and_gradient(pg, x0, m)

    def fun(d):
        f, g = objective_and_gradient(pg, d, m)
        if not (np.isfinite(f) and np.all(np.isfinite(g))):
            raise DegenerateCovarianceError("non-finite objective during line search")
        return f, g

    res = optimize.minimize(
        fun,
        x0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(lo, hi)] * p,
        options={"maxiter": cfg.max_iters, "gtol": cfg.grad_tol, "ftol": 0.0, "maxls": 40},
    )
    iters, message = int(res.nit), str(res.message)
    x = np.clip(np.asarray(res.x, dtype=float), lo, hi)
    f, g = fun(x)
    gnorm = projected_gradient_norm(g, x, lo, hi)
    # L-BFGS-B often stops on a line-search failure just above a 1e-8
    # tolerance, where the objective is flat to rounding; finish with
    # Newton steps on the free coordinates.
    while gnorm > cfg.grad_tol and iters < cfg.max_iters:
        step = _newton_step(fun, x, g, lo, hi)
        if step is None:
            break
        x_new = np.clip(x + step, lo, hi)
        f_new, g_new = fun(x_new)
        g_new_norm = projected_gradient_norm(g_new, x_new, lo, hi)
        iters += 1
        if g_new_norm >= gnorm or f_new > f + 1e-12 * max(1.0, abs(f)):
            break
        x, f, g, gnorm = x_new, f_new, g_new, g_new_norm
        message = "newton polish"
    if f > f0:
        x, f = x0, f0
        g = fun(x)[1]
        gnorm = projected_gradient_norm(g, x, lo, hi)
    active = tuple(int(i) for i in np.flatnonzero((x <= lo) | (x >= hi)))
    return GseFit(
        d_hat=x,
        g_hat=g_hat(pg, x, m),
        objective=float(f),
        grad_norm=gnorm,
        iterations=iters,
        bandwidth=m,
        converged=bool(gnorm <= cfg.grad_tol),
        active=active,
        message=message,
    )


def _newton_step(fun, x, g, lo, hi, h: float = 1e-6):
    free = ~(((x <= lo) & (g > 0)) | ((x >= hi) & (g < 0)))
    idx = np.flatnonzero(free)
    if idx.size == 0:
        return None
    H = np.empty((idx.size, idx.size))
    for col, i in enumerate(idx):
        e = np.zeros_like(x)
        e[i] = h
        H[:, col] = (fun(x + e)[1][idx] - fun(x - e)[1][idx]) / (2 * h)
    H = 0.5 * (H + H.T)
    try:
        cf = linalg.cho_factor(H, check_finite=False)
    except linalg.LinAlgError:
        return None
    step = np.zeros_like(x)
    step[idx] = -linalg.cho_solve(cf, g[idx], check_finite=False)
    return step


def objective_grid(pg: Periodogram, m: int, coords, grid) -> np.ndarray:
    """Evaluate ``R`` over a grid of memory values for one or two coordinates.

    The periodogram is restricted to ``coords`` first. Each row of the result
    is ``(*d, R(d))``; ``R`` is NaN where G(d) is degenerate.
    """
    coords = np.atleast_1d(np.asarray(coords, dtype=int))
    if coords.size not in (1, 2):
        raise ValidationError("objective_grid takes one or two coordinates")
    pts = np.asarray(grid, dtype=float)
    if pts.size == 0:
        raise ValidationError("empty grid")
    pts = pts.reshape(-1, coords.size)
    sub = pg.select(coords)
    values = np.empty(len(pts))
    for i, d in enumerate(pts):
        try:
            values[i] = objective(sub, d, m)
        except DegenerateCovarianceError:
            values[i] = np.nan
    return np.column_stack([pts, values])


def gph_estimate(pg: Periodogram, coord: int, m: int) -> float:
    """Log-periodogram regression slope of ``log I_cc`` on ``-2 log lam`` over ``j <= m``."""
    if m < 2:
        raise ValidationError("GPH regression needs m >= 2")
    _check_bandwidth(pg, m)
    ords = pg.diagonal(m)[:, coord]
    bad = np.flatnonzero(ords <= 0)
    if bad.size:
        raise ValidationError(f"periodogram ordinate is zero at j = {bad[0] + 1} (coordinate {coord})")
    xr = -2.0 * np.log(pg.freqs[:m])
    yr = np.log(ords)
    xc = xr - xr.mean()
    return float(np.dot(xc, yr - yr.mean()) / np.dot(xc, xc))
