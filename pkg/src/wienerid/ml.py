"""Maximum likelihood via Gauss-Hermite marginalization of the process noise.

Each log-likelihood term is a standard-normal expectation of
exp(-[y(t) - f(a(t) + sigma_v * vbar)]^2 / (2 sigma_e^2)), evaluated with a
max-shifted log-sum-exp so that the fast decay of the integrand (x^6 in the
exponent for the cubic) cannot underflow a whole term.  Additive constants of
the likelihood that do not depend on theta are dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import OptimizerSettings, gauss_hermite, minimize_scalar
from .reports import EstimateReport
from .system import DataRecord, SystemSpec, linear_output

DEFAULT_QUAD_ORDER = 1000


class QuadratureUnderflowError(Exception):
    """Every quadrature term of at least one likelihood term underflowed."""

    def __init__(self, theta, time_indices):
        self.theta = theta
        self.time_indices = time_indices
        super().__init__(
            f"likelihood terms at t = {list(time_indices)} underflowed at theta = {theta}"
        )


@dataclass(frozen=True)
class MlSettings:
    quad_order: int = DEFAULT_QUAD_ORDER
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    log_space: bool = True

    def __post_init__(self):
        if self.quad_order < 1:
            raise ValueError("quad_order must be >= 1")


def neg_log_likelihood(
    theta: float,
    data: DataRecord,
    spec_template: SystemSpec,
    settings: MlSettings = MlSettings(),
) -> float:
    """Negative log-likelihood up to a theta-independent additive constant."""
    if spec_template.sigma_e2 <= 0:
        raise ValueError("sigma_e2 must be positive for the likelihood")
    rule = gauss_hermite(settings.quad_order)
    nl = spec_template.nonlinearity
    a = linear_output(spec_template.fir, [float(theta)], data.u)[-data.n_obs:]
    shift = math.sqrt(2.0 * spec_template.sigma_v2) * rule.nodes
    # (N, order) log-integrand: -(y - f(a + sigma_v * vbar))^2 / (2 sigma_e^2);
    # overflow of resid^2 to inf is fine, the term just underflows to -inf
    resid = data.y[:, None] - nl.value(a[:, None] + shift[None, :])
    with np.errstate(over="ignore"):
        log_g = resid * resid / (-2.0 * spec_template.sigma_e2)

    if settings.log_space:
        per_term = rule.log_normal_expectation(log_g)
        if not np.all(np.isfinite(per_term)):
            bad = np.flatnonzero(~np.isfinite(per_term)) + 1
            raise QuadratureUnderflowError(float(theta), bad.tolist())
        return -float(np.sum(per_term))

    norm = rule.weights / math.sqrt(math.pi)
    expectations = np.exp(log_g) @ norm
    if np.any(expectations <= 0.0):
        bad = np.flatnonzero(expectations <= 0.0) + 1
        raise QuadratureUnderflowError(float(theta), bad.tolist())
    return -float(np.sum(np.log(expectations)))


def ml_estimate(
    data: DataRecord,
    spec_template: SystemSpec,
    settings: MlSettings = MlSettings(),
) -> EstimateReport:
    """Minimize the negative log-likelihood over the optimizer bracket."""
    if spec_template.fir.n_free != 1:
        raise ValueError("scalar search supports exactly one free coefficient")

    def cost(theta: float) -> float:
        return neg_log_likelihood(theta, data, spec_template, settings)

    result = minimize_scalar(cost, settings.optimizer)
    return EstimateReport(result.argmin, method="ml", diagnostics=result)
