"""Result containers shared by the estimators."""

from __future__ import annotations

from dataclasses import dataclass

from .numerics import ScalarMinResult


@dataclass
class EstimateReport:
    """One estimator's output on one data record."""

    theta_hat: float
    method: str
    diagnostics: ScalarMinResult | None = None
    predicted_std: float | None = None
