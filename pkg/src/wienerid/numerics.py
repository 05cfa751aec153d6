"""Shared numeric kernels: Gauss-Hermite quadrature, scalar minimization,
linear least squares, and finite-difference Jacobians."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import minimize_scalar as _brent_bounded

SQRT_PI = math.sqrt(math.pi)

MAX_QUAD_ORDER = 2000


class NumericsError(Exception):
    """Base class for numeric-kernel failures."""


class CostEvaluationError(NumericsError):
    """A cost or map returned a non-finite value."""

    def __init__(self, point, value):
        self.point = point
        self.value = value
        super().__init__(f"non-finite value {value} at {point}")


class RankDeficiencyError(NumericsError):
    """Regressor matrix numerically rank deficient."""

    def __init__(self, smallest_singular_value):
        self.smallest_singular_value = smallest_singular_value
        super().__init__(
            f"rank-deficient regressors (smallest singular value "
            f"{smallest_singular_value:.3e})"
        )


@dataclass(frozen=True)
class QuadratureRule:
    """Physicists' Gauss-Hermite rule: integral of exp(-x^2) g(x) dx."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def normal_expectation(self, g) -> float:
        """E{g(V)} for V ~ N(0, 1), evaluated as (1/sqrt(pi)) sum w g(sqrt(2) x)."""
        return float(self.weights @ g(math.sqrt(2.0) * self.nodes)) / SQRT_PI

    def log_normal_expectation(self, log_g_values: np.ndarray) -> np.ndarray:
        """log E{g(V)} from log g evaluated at sqrt(2) * nodes.

        Accepts an (..., order) array of log-integrand values and reduces the
        last axis with a max-shifted exponential sum, so individually
        underflowing terms cannot zero out the result.
        """
        lw = log_g_values + self.log_norm_weights()
        peak = np.max(lw, axis=-1, keepdims=True)
        finite = np.isfinite(peak)
        shift = np.where(finite, peak, 0.0)
        with np.errstate(divide="ignore"):
            out = np.log(np.sum(np.exp(lw - shift), axis=-1)) + np.squeeze(shift, -1)
        return np.where(np.squeeze(finite, -1), out, -np.inf)

    def log_norm_weights(self) -> np.ndarray:
        """log(w_i / sqrt(pi)); -inf where a tail weight underflowed to zero."""
        with np.errstate(divide="ignore"):
            return np.where(self.weights > 0.0, np.log(self.weights), -np.inf) - 0.5 * math.log(math.pi)


@functools.lru_cache(maxsize=32)
def gauss_hermite(order: int) -> QuadratureRule:
    """Nodes and weights via Golub-Welsch on the Jacobi (tridiagonal) matrix.

    Stable to order 2000; nodes and weights are symmetrized exactly about 0.
    """
    if not 1 <= order <= MAX_QUAD_ORDER:
        raise ValueError(f"order must be in [1, {MAX_QUAD_ORDER}], got {order}")
    if order == 1:
        return QuadratureRule(1, np.zeros(1), np.array([SQRT_PI]))
    off_diag = np.sqrt(np.arange(1, order) / 2.0)
    nodes, vectors = eigh_tridiagonal(np.zeros(order), off_diag)
    weights = SQRT_PI * vectors[0] ** 2
    nodes = 0.5 * (nodes - nodes[::-1])
    weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(order, nodes, weights)


@dataclass(frozen=True)
class OptimizerSettings:
    """Bracketed scalar search: coarse grid scan, then bounded refinement."""

    bracket: tuple[float, float] = (-3.0, 3.0)
    abs_tol: float = 1e-6
    max_iter: int = 200
    grid_points: int = 61

    def __post_init__(self):
        lo, hi = self.bracket
        if not lo < hi:
            raise ValueError(f"bracket must satisfy lo < hi, got {self.bracket}")
        if self.abs_tol <= 0:
            raise ValueError("abs_tol must be positive")
        if self.grid_points < 3:
            raise ValueError("grid_points must be >= 3")


@dataclass(frozen=True)
class ScalarMinResult:
    argmin: float
    min_value: float
    iterations: int
    degenerate: bool = False


def minimize_scalar(cost, settings: OptimizerSettings = OptimizerSettings()) -> ScalarMinResult:
    """Minimize a scalar cost on a bracket.

    A grid scan over settings.grid_points locates the coarse minimum (exact
    ties preferring the point of smallest magnitude, for determinism on
    symmetric costs), then golden-section/parabolic refinement runs on the
    neighboring grid cell.  Non-finite cost values raise CostEvaluationError
    with the offending point.
    """

    def checked(x: float) -> float:
        val = float(cost(x))
        if not math.isfinite(val):
            raise CostEvaluationError(x, val)
        return val

    lo, hi = settings.bracket
    xs = np.linspace(lo, hi, settings.grid_points)
    vals = np.array([checked(x) for x in xs])
    vmin = vals.min()
    if vals.max() == vmin:
        mid = xs[int(np.argmin(np.abs(xs)))]
        return ScalarMinResult(float(mid), float(vmin), len(xs), degenerate=True)
    ties = np.flatnonzero(vals == vmin)
    i = int(ties[np.argmin(np.abs(xs[ties]))])
    sub_lo = float(xs[max(i - 1, 0)])
    sub_hi = float(xs[min(i + 1, len(xs) - 1)])
    res = _brent_bounded(
        checked,
        bounds=(sub_lo, sub_hi),
        method="bounded",
        options={"xatol": settings.abs_tol, "maxiter": settings.max_iter},
    )
    x_best, v_best = float(res.x), float(res.fun)
    if vmin < v_best:
        x_best, v_best = float(xs[i]), float(vmin)
    return ScalarMinResult(x_best, v_best, len(xs) + int(res.nfev), degenerate=False)


def least_squares(regressors: np.ndarray, targets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares coefficients and residuals (targets - fit).

    Raises RankDeficiencyError when the smallest singular value falls below
    the usual eps * max(N, m) * s_max threshold.
    """
    X = np.asarray(regressors, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(targets, dtype=float)
    n, m = X.shape
    if n < m:
        raise ValueError(f"need at least as many rows as columns, got {n} x {m}")
    if len(y) != n:
        raise ValueError(f"targets length {len(y)} does not match {n} rows")
    coef, _, rank, sing = np.linalg.lstsq(X, y, rcond=None)
    cutoff = np.finfo(float).eps * max(n, m) * sing[0]
    if rank < m or sing[-1] <= cutoff:
        raise RankDeficiencyError(float(sing[-1]))
    return coef, y - X @ coef


def jacobian_fd(func, point, step: float) -> np.ndarray:
    """Central-difference Jacobian of an R^n -> R^m map; error O(step^2)."""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if step <= 0:
        raise ValueError("step must be positive")
    cols = []
    for j in range(point.size):
        shift = np.zeros_like(point)
        shift[j] = step
        f_plus = np.atleast_1d(np.asarray(func(point + shift), dtype=float))
        f_minus = np.atleast_1d(np.asarray(func(point - shift), dtype=float))
        if not (np.all(np.isfinite(f_plus)) and np.all(np.isfinite(f_minus))):
            raise CostEvaluationError(point + shift, "non-finite map value")
        cols.append((f_plus - f_minus) / (2.0 * step))
    return np.column_stack(cols)
