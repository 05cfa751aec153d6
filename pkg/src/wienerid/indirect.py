"""Two-step indirect inference on top of the best linear approximation.

Step 1 fits the auxiliary linear model (bla module).  Step 2 picks the
structured parameter whose implied auxiliary coefficients best match the fit
in a W-weighted metric, using either the closed-form binding functions of the
cubic FIR example (gaussian and uniform input) or a simulated binding
function with common random numbers.  The asymptotic covariance of the
matched estimate is inflation * (G' W G)^-1 / N.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import bla as bla_mod
from .numerics import (
    CostEvaluationError,
    OptimizerSettings,
    jacobian_fd,
    least_squares,
    minimize_scalar,
    ScalarMinResult,
)
from .reports import EstimateReport
from .signals import Distribution, DistributionKind, Seed, StreamRole, gen_white
from .system import DataRecord, SystemSpec, lagged_matrix, linear_output

JACOBIAN_STEP = 1e-5


class Weighting(enum.Enum):
    IDENTITY = "identity"
    SANDWICH = "sandwich"


@dataclass
class IndirectReport:
    """Step-2 output: matched parameter, Jacobian, predicted covariance."""

    theta_hat: np.ndarray
    G: np.ndarray
    predicted_cov: np.ndarray
    inflation: float
    weighting_used: Weighting
    diagnostics: ScalarMinResult | None = None

    @property
    def predicted_std(self) -> float:
        return float(np.sqrt(self.predicted_cov[0, 0]))


def beta_map_gaussian(theta: float, sigma_u2: float, sigma_v2: float) -> tuple[float, float]:
    """Asymptotic lag-(0,1) linear coefficients for gaussian white input.

    Both components share the scalar gain 3 sigma_u2 theta^2
    + 3 (sigma_u2 + sigma_v2), so beta1/beta2 = theta identically.
    """
    if sigma_u2 < 0 or sigma_v2 < 0:
        raise ValueError("variances must be >= 0")
    gain = 3.0 * sigma_u2 * theta**2 + 3.0 * (sigma_u2 + sigma_v2)
    return gain * theta, gain


def beta_map_gaussian_deriv(theta: float, sigma_u2: float, sigma_v2: float) -> tuple[float, float]:
    return (
        9.0 * sigma_u2 * theta**2 + 3.0 * (sigma_u2 + sigma_v2),
        6.0 * sigma_u2 * theta,
    )


def beta_map_uniform(theta: float, sigma_u2: float, sigma_v2: float) -> tuple[float, float]:
    """Asymptotic lag-(0,1) linear coefficients for uniform white input.

    The fourth moment of a centered uniform is (9/5) sigma_u2^2, which breaks
    the common-gain structure of the gaussian case.
    """
    if sigma_u2 < 0 or sigma_v2 < 0:
        raise ValueError("variances must be >= 0")
    beta1 = 1.8 * sigma_u2 * theta**3 + 3.0 * (sigma_u2 + sigma_v2) * theta
    beta2 = 3.0 * sigma_u2 * theta**2 + 3.0 * (0.6 * sigma_u2 + sigma_v2)
    return beta1, beta2


def beta_map_uniform_deriv(theta: float, sigma_u2: float, sigma_v2: float) -> tuple[float, float]:
    return (
        5.4 * sigma_u2 * theta**2 + 3.0 * (sigma_u2 + sigma_v2),
        6.0 * sigma_u2 * theta,
    )


@dataclass(frozen=True)
class AnalyticGaussianMap:
    """Closed-form binding function beta(theta), gaussian-input cubic FIR."""

    sigma_u2: float
    sigma_v2: float
    inflation: float = 1.0

    def __call__(self, theta: float) -> np.ndarray:
        return np.array(beta_map_gaussian(theta, self.sigma_u2, self.sigma_v2))

    def derivative(self, theta: float) -> np.ndarray:
        return np.array(beta_map_gaussian_deriv(theta, self.sigma_u2, self.sigma_v2))[:, None]

    def beta1_coeffs(self) -> tuple[float, float]:
        """(cubic, linear) coefficients of the first component in theta."""
        return 3.0 * self.sigma_u2, 3.0 * (self.sigma_u2 + self.sigma_v2)


@dataclass(frozen=True)
class AnalyticUniformMap:
    """Closed-form binding function beta(theta), uniform-input cubic FIR."""

    sigma_u2: float
    sigma_v2: float
    inflation: float = 1.0

    def __call__(self, theta: float) -> np.ndarray:
        return np.array(beta_map_uniform(theta, self.sigma_u2, self.sigma_v2))

    def derivative(self, theta: float) -> np.ndarray:
        return np.array(beta_map_uniform_deriv(theta, self.sigma_u2, self.sigma_v2))[:, None]

    def beta1_coeffs(self) -> tuple[float, float]:
        return 1.8 * self.sigma_u2, 3.0 * (self.sigma_u2 + self.sigma_v2)


def analytic_map(input_kind: DistributionKind, sigma_u2: float, sigma_v2: float):
    if input_kind is DistributionKind.GAUSSIAN_WHITE:
        return AnalyticGaussianMap(sigma_u2, sigma_v2)
    return AnalyticUniformMap(sigma_u2, sigma_v2)


def _simulated_beta(theta, u, spec_template, v_draws, lags) -> np.ndarray:
    """Least-squares fit of the linear model on noise replicates stacked over s."""
    lags = tuple(int(l) for l in lags)
    lead = max(spec_template.fir.max_lag, max(lags))
    n = len(u) - lead
    lin = linear_output(spec_template.fir, [float(theta)], u)[-n:]
    phi = lagged_matrix(u, n, lags)
    s_count = v_draws.shape[0]
    outputs = spec_template.nonlinearity.value(lin[None, :] + v_draws[:, -n:])
    stacked_phi = np.tile(phi, (s_count, 1))
    beta, _ = least_squares(stacked_phi, outputs.ravel())
    return beta


def beta_map_simulated(
    theta: float,
    u: np.ndarray,
    spec_template: SystemSpec,
    s_count: int,
    seed: Seed,
    lags,
) -> np.ndarray:
    """Monte Carlo binding function: average linear fit over s_count
    process-noise replicates on the fixed input (measurement noise excluded)."""
    if s_count < 1:
        raise ValueError("s_count must be >= 1")
    u = np.asarray(u, dtype=float)
    n_max = len(u) - spec_template.fir.max_lag
    v_dist = Distribution(DistributionKind.GAUSSIAN_WHITE, spec_template.sigma_v2)
    v_draws = np.stack([
        gen_white(v_dist, n_max, seed, path=(int(StreamRole.SIMULATION), s))
        for s in range(s_count)
    ])
    return _simulated_beta(theta, u, spec_template, v_draws, lags)


@dataclass
class SimulatedMap:
    """Simulated binding function with common random numbers.

    The process-noise replicates are drawn once at construction and reused at
    every theta the optimizer visits, so the matching criterion is a smooth
    deterministic function of theta.
    """

    u: np.ndarray
    spec_template: SystemSpec
    s_count: int
    seed: Seed
    lags: tuple[int, ...] = (0, 1)
    _v_draws: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.s_count < 1:
            raise ValueError("s_count must be >= 1")
        self.u = np.asarray(self.u, dtype=float)
        self.lags = tuple(int(l) for l in self.lags)
        n_max = len(self.u) - self.spec_template.fir.max_lag
        v_dist = Distribution(DistributionKind.GAUSSIAN_WHITE, self.spec_template.sigma_v2)
        self._v_draws = np.stack([
            gen_white(v_dist, n_max, self.seed, path=(int(StreamRole.SIMULATION), s))
            for s in range(self.s_count)
        ])

    @property
    def inflation(self) -> float:
        return 1.0 + 1.0 / self.s_count

    def __call__(self, theta: float) -> np.ndarray:
        return _simulated_beta(theta, self.u, self.spec_template, self._v_draws, self.lags)


def step2(
    beta_hat: np.ndarray,
    W: np.ndarray,
    beta_map,
    settings: OptimizerSettings = OptimizerSettings(),
    *,
    n_obs: int,
    weighting: Weighting = Weighting.SANDWICH,
) -> IndirectReport:
    """Match the binding function to the auxiliary fit in the W metric.

    The argmin is invariant to positive rescaling of W; the reported
    predicted_cov = inflation * (G' W G)^-1 / n_obs is a covariance prediction
    only when W is normalized as Cov{sqrt(N) (beta_hat - beta)}^-1.
    """
    beta_hat = np.asarray(beta_hat, dtype=float)
    W = np.asarray(W, dtype=float)
    if W.shape != (len(beta_hat), len(beta_hat)):
        raise ValueError(f"W shape {W.shape} does not match beta of length {len(beta_hat)}")
    if not np.allclose(W, W.T, rtol=1e-10, atol=1e-12):
        raise ValueError("W must be symmetric")
    eigvals = np.linalg.eigvalsh(W)
    if eigvals[0] <= 1e-12 * max(eigvals[-1], 0.0):
        raise ValueError(f"W must be positive definite (eigenvalues {eigvals})")

    def cost(theta: float) -> float:
        r = beta_map(theta) - beta_hat
        val = float(r @ W @ r)
        if not math.isfinite(val):
            raise CostEvaluationError(theta, val)
        return val

    result = minimize_scalar(cost, settings)
    theta_hat = result.argmin

    if hasattr(beta_map, "derivative"):
        G = np.asarray(beta_map.derivative(theta_hat), dtype=float).reshape(len(beta_hat), 1)
    else:
        G = jacobian_fd(lambda t: beta_map(float(t[0])), [theta_hat], JACOBIAN_STEP)

    inflation = float(getattr(beta_map, "inflation", 1.0))
    gwg = G.T @ W @ G
    try:
        predicted_cov = inflation * np.linalg.inv(gwg) / n_obs
    except np.linalg.LinAlgError:
        # flat criterion: no curvature, no finite covariance prediction
        predicted_cov = np.full_like(gwg, np.inf)
    return IndirectReport(
        theta_hat=np.array([theta_hat]),
        G=G,
        predicted_cov=predicted_cov,
        inflation=inflation,
        weighting_used=weighting,
        diagnostics=result,
    )


def solve_increasing_cubic(c3: float, c1: float, target: float, tol: float = 1e-13) -> float:
    """Unique real root of c3 x^3 + c1 x = target for c3 >= 0, c1 >= 0.

    Safeguarded Newton: iterates stay inside a sign-change bracket, falling
    back to bisection whenever a Newton step leaves it.
    """
    if c3 < 0 or c1 < 0 or (c3 == 0 and c1 == 0):
        raise ValueError("need c3 >= 0, c1 >= 0 and not both zero")

    def g(x: float) -> float:
        return c3 * x**3 + c1 * x - target

    hi = max(1.0, abs(target))
    while g(hi) < 0:
        hi *= 2.0
    lo = -hi
    while g(lo) > 0:
        lo *= 2.0
        hi = -lo

    x = target / c1 if c1 > 0 else math.copysign(abs(target / c3) ** (1.0 / 3.0), target)
    x = min(max(x, lo), hi)
    for _ in range(200):
        gx = g(x)
        if gx > 0:
            hi = x
        else:
            lo = x
        slope = 3.0 * c3 * x**2 + c1
        x_new = x - gx / slope if slope > 0 else 0.5 * (lo + hi)
        if not lo <= x_new <= hi:
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= tol * max(1.0, abs(x_new)):
            return x_new
        x = x_new
    return x


def zero_order_estimate(
    data: DataRecord,
    spec_template: SystemSpec,
    input_kind: DistributionKind | None = None,
) -> EstimateReport:
    """Order-zero indirect inference: regress y on u(t) alone and invert the
    first binding-function component (strictly increasing, so no weighting is
    needed and the inversion is unique)."""
    kind = input_kind if input_kind is not None else spec_template.input_dist.kind
    amap = analytic_map(kind, spec_template.input_dist.variance, spec_template.sigma_v2)
    beta1, _ = least_squares(data.lagged(0)[:, None], data.y)
    c3, c1 = amap.beta1_coeffs()
    theta_hat = solve_increasing_cubic(c3, c1, float(beta1[0]))
    return EstimateReport(theta_hat, method="ii0")


def first_order_estimate(
    data: DataRecord,
    spec_template: SystemSpec,
    input_kind: DistributionKind | None = None,
    weighted: bool = True,
    settings: OptimizerSettings = OptimizerSettings(),
) -> IndirectReport:
    """Order-one indirect inference with the matching analytic binding function.

    Unweighted uses the identity metric; weighted uses the inverse sandwich
    covariance of the auxiliary fit.
    """
    kind = input_kind if input_kind is not None else spec_template.input_dist.kind
    est = bla_mod.fit_bla(data, lags=(0, 1))
    if weighted:
        est = bla_mod.estimate_weighting(data, est)
        W = est.W
        weighting = Weighting.SANDWICH
    else:
        W = np.eye(2)
        weighting = Weighting.IDENTITY
    amap = analytic_map(kind, spec_template.input_dist.variance, spec_template.sigma_v2)
    return step2(
        est.beta_hat, W, amap, settings, n_obs=data.n_obs, weighting=weighting
    )
