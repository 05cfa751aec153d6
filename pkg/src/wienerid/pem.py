"""Prediction-error minimization with the conditional-mean predictor.

For the cubic nonlinearity both predictor moments have closed forms; other
polynomial nonlinearities fall back to Gauss-Hermite integration over the
process noise.  The weighted variant freezes its per-sample weights at a
consistent unweighted initial estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import OptimizerSettings, gauss_hermite, minimize_scalar
from .reports import EstimateReport
from .system import DataRecord, Nonlinearity, NonlinearityKind, SystemSpec, linear_output

FALLBACK_QUAD_ORDER = 50


@dataclass(frozen=True)
class PredictorMoments:
    """Conditional mean and prediction-error variance given the input history."""

    mean: float
    variance: float


def conditional_mean(nl: Nonlinearity, a, sigma_v2: float):
    """E{f(a + v)} for v ~ N(0, sigma_v2), elementwise in a."""
    a = np.asarray(a, dtype=float)
    if nl.kind is NonlinearityKind.CUBIC:
        # E{(a+v)^3} = a^3 + 3 a sigma_v2 (odd gaussian moments vanish)
        return a * a * a + 3.0 * a * sigma_v2
    if nl.kind is NonlinearityKind.IDENTITY:
        return a + 0.0
    return _quad_moments(nl, a, sigma_v2)[0]


def conditional_variance(nl: Nonlinearity, a, sigma_v2: float, sigma_e2: float):
    """E{(y - E{y})^2} given the input history; always >= sigma_e2."""
    a = np.asarray(a, dtype=float)
    if nl.kind is NonlinearityKind.CUBIC:
        sv2 = sigma_v2
        a2 = a * a
        return 9.0 * sv2 * a2 * a2 + 36.0 * sv2**2 * a2 + 15.0 * sv2**3 + sigma_e2
    if nl.kind is NonlinearityKind.IDENTITY:
        return np.full_like(a, sigma_v2 + sigma_e2)
    mean, second = _quad_moments(nl, a, sigma_v2)
    return np.maximum(second - mean**2, 0.0) + sigma_e2


def _quad_moments(nl: Nonlinearity, a: np.ndarray, sigma_v2: float):
    """First and second moments of f(a + v) by Gauss-Hermite over v."""
    rule = gauss_hermite(FALLBACK_QUAD_ORDER)
    v = np.sqrt(2.0 * sigma_v2) * rule.nodes
    fv = nl.value(a[..., None] + v)
    norm = rule.weights / np.sqrt(np.pi)
    return fv @ norm, (fv**2) @ norm


def predict(theta: float, u_t, u_tm1, sigma_v2: float):
    """Conditional-mean output prediction for the lag-one FIR with unit fixed tap."""
    a = np.asarray(theta, dtype=float) * np.asarray(u_t, dtype=float) + np.asarray(u_tm1, dtype=float)
    return a**3 + 3.0 * a * sigma_v2


def prediction_variance(theta: float, u_t, u_tm1, sigma_v2: float, sigma_e2: float):
    """Variance of the prediction error for the lag-one FIR with unit fixed tap."""
    a = np.asarray(theta, dtype=float) * np.asarray(u_t, dtype=float) + np.asarray(u_tm1, dtype=float)
    return 9.0 * sigma_v2 * a**4 + 36.0 * sigma_v2**2 * a**2 + 15.0 * sigma_v2**3 + sigma_e2


def predictor_moments(theta, u_t, u_tm1, sigma_v2, sigma_e2) -> PredictorMoments:
    return PredictorMoments(
        mean=float(predict(theta, u_t, u_tm1, sigma_v2)),
        variance=float(prediction_variance(theta, u_t, u_tm1, sigma_v2, sigma_e2)),
    )


def pem_estimate(
    data: DataRecord,
    spec_template: SystemSpec,
    weighted: bool = True,
    settings: OptimizerSettings = OptimizerSettings(),
) -> EstimateReport:
    """Minimize the (optionally variance-weighted) mean-square prediction error.

    The weighted search divides each squared prediction error by the
    prediction-error variance evaluated at the unweighted initial estimate;
    the weights stay frozen during the second search.
    """
    if spec_template.fir.n_free != 1:
        raise ValueError("scalar search supports exactly one free coefficient")
    nl = spec_template.nonlinearity
    sv2, se2 = spec_template.sigma_v2, spec_template.sigma_e2
    y = data.y
    u = data.u
    fir = spec_template.fir

    def noise_free_part(theta: float) -> np.ndarray:
        # trailing slice aligns records whose lead exceeds the FIR depth
        return linear_output(fir, [theta], u)[-len(y):]

    def pred_errors(theta: float) -> np.ndarray:
        return y - conditional_mean(nl, noise_free_part(theta), sv2)

    def unweighted_cost(theta: float) -> float:
        eps = pred_errors(theta)
        return float(np.mean(eps**2))

    initial = minimize_scalar(unweighted_cost, settings)
    if not weighted:
        return EstimateReport(initial.argmin, method="pem", diagnostics=initial)

    weights = conditional_variance(nl, noise_free_part(initial.argmin), sv2, se2)
    w_max = float(np.max(weights))
    if w_max <= 0.0:
        # noise-free data: constant (zero) weights reduce to the unweighted cost
        weights = np.ones_like(weights)
    else:
        weights = np.maximum(weights, 1e-12 * w_max)

    def weighted_cost(theta: float) -> float:
        eps = pred_errors(theta)
        return float(np.mean(eps**2 / weights))

    final = minimize_scalar(weighted_cost, settings)
    return EstimateReport(final.argmin, method="pem_weighted", diagnostics=final)
