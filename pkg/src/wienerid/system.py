"""Simulation of the stochastic Wiener system y(t) = f(G(q) u(t) + v(t)) + e(t).

The linear block is FIR with a mix of free (estimated) and fixed coefficients.
A data record carries the input back to u(1 - L) for maximum lag L, so the
output sequence y(1..N) never needs zero-padding or start-up trimming.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .signals import Distribution


class NonlinearityKind(enum.Enum):
    CUBIC = "cubic"
    IDENTITY = "identity"
    POLYNOMIAL = "polynomial"


@dataclass(frozen=True)
class Nonlinearity:
    """Known static nonlinearity exposing the map and its derivative.

    Polynomial coefficients are in ascending powers; the cubic and identity
    kinds are special-cased so their conditional moments stay in closed form
    downstream.
    """

    kind: NonlinearityKind
    coeffs: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind is NonlinearityKind.POLYNOMIAL and len(self.coeffs) == 0:
            raise ValueError("polynomial nonlinearity needs at least one coefficient")
        if self.kind is not NonlinearityKind.POLYNOMIAL and self.coeffs:
            raise ValueError(f"{self.kind.value} nonlinearity takes no coefficients")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is NonlinearityKind.CUBIC:
            return x * x * x
        if self.kind is NonlinearityKind.IDENTITY:
            return x + 0.0
        return npoly.polyval(x, self.coeffs)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind is NonlinearityKind.CUBIC:
            return 3.0 * (x * x)
        if self.kind is NonlinearityKind.IDENTITY:
            return np.ones_like(x)
        return npoly.polyval(x, npoly.polyder(self.coeffs))


def cubic() -> Nonlinearity:
    return Nonlinearity(NonlinearityKind.CUBIC)


def identity() -> Nonlinearity:
    return Nonlinearity(NonlinearityKind.IDENTITY)


def polynomial(coeffs) -> Nonlinearity:
    return Nonlinearity(NonlinearityKind.POLYNOMIAL, tuple(float(c) for c in coeffs))


@dataclass(frozen=True)
class FirStructure:
    """FIR coefficient structure: free lags plus (lag, value) fixed taps."""

    free_lags: tuple[int, ...]
    fixed: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        lags = [*self.free_lags, *(lag for lag, _ in self.fixed)]
        if len(self.free_lags) == 0:
            raise ValueError("at least one free coefficient is required")
        if any(lag < 0 for lag in lags):
            raise ValueError("lags must be non-negative")
        if len(set(lags)) != len(lags):
            raise ValueError(f"lags must be distinct, got {lags}")

    @property
    def n_free(self) -> int:
        return len(self.free_lags)

    @property
    def max_lag(self) -> int:
        return max(lag for lag in (*self.free_lags, *(l for l, _ in self.fixed)))


def paper_fir() -> FirStructure:
    """Free coefficient at lag 0, fixed unit tap at lag 1."""
    return FirStructure(free_lags=(0,), fixed=((1, 1.0),))


@dataclass
class SystemSpec:
    """Complete description of a (true or model) stochastic Wiener system."""

    fir: FirStructure
    theta: np.ndarray
    nonlinearity: Nonlinearity
    sigma_v2: float
    sigma_e2: float
    input_dist: Distribution

    def __post_init__(self):
        self.theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        if self.theta.shape != (self.fir.n_free,):
            raise ValueError(
                f"theta has {self.theta.size} entries but the FIR structure has "
                f"{self.fir.n_free} free coefficients"
            )
        if self.sigma_v2 < 0 or self.sigma_e2 < 0:
            raise ValueError("noise variances must be >= 0")

    def with_theta(self, theta) -> "SystemSpec":
        return SystemSpec(
            self.fir, np.asarray(theta, dtype=float), self.nonlinearity,
            self.sigma_v2, self.sigma_e2, self.input_dist,
        )

    def impulse_sq_norm(self) -> float:
        """Sum of squared FIR coefficients, free and fixed."""
        return float(np.sum(self.theta**2) + sum(v**2 for _, v in self.fir.fixed))


def lagged_matrix(u: np.ndarray, n_obs: int, lags) -> np.ndarray:
    """Columns u(t - lag) for t = 1..n_obs, one per requested lag.

    The input array covers u(1 - lead .. n_obs) with lead = len(u) - n_obs;
    every requested lag must not exceed the lead.
    """
    u = np.asarray(u, dtype=float)
    lead = len(u) - n_obs
    lags = [int(lag) for lag in lags]
    if any(lag > lead for lag in lags):
        raise ValueError(
            f"lag {max(lags)} exceeds the {lead} leading input samples available"
        )
    return np.column_stack([u[lead - lag : lead - lag + n_obs] for lag in lags])


def linear_output(fir: FirStructure, theta, u) -> np.ndarray:
    """Noise-free FIR output for t = 1..N with N = len(u) - max_lag."""
    u = np.asarray(u, dtype=float)
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if theta.shape != (fir.n_free,):
        raise ValueError(f"expected {fir.n_free} free coefficients, got {theta.size}")
    n = len(u) - fir.max_lag
    if n < 1:
        raise ValueError(
            f"input of length {len(u)} cannot cover maximum lag {fir.max_lag}"
        )
    out = np.zeros(n)
    for coef, lag in zip(theta, fir.free_lags):
        out += coef * u[fir.max_lag - lag : fir.max_lag - lag + n]
    for lag, value in fir.fixed:
        out += value * u[fir.max_lag - lag : fir.max_lag - lag + n]
    return out


def simulate(spec: SystemSpec, u, v, e) -> tuple[np.ndarray, np.ndarray]:
    """Run the system: z(t) = G(q, theta) u(t) + v(t), y(t) = f(z(t)) + e(t)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    e = np.asarray(e, dtype=float)
    z_det = linear_output(spec.fir, spec.theta, u)
    n = len(z_det)
    if len(v) != n or len(e) != n:
        raise ValueError(
            f"noise lengths ({len(v)}, {len(e)}) do not match the {n} output samples"
        )
    z = z_det + v
    y = spec.nonlinearity.value(z) + e
    return z, y


@dataclass
class DataRecord:
    """One experiment: inputs u(1-L .. N) and outputs y(1 .. N)."""

    u: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.u.ndim != 1 or self.y.ndim != 1:
            raise ValueError("u and y must be one-dimensional")
        if len(self.u) <= len(self.y):
            raise ValueError(
                f"u (length {len(self.u)}) must carry at least one sample before "
                f"t = 1 (y has length {len(self.y)})"
            )

    @property
    def n_obs(self) -> int:
        return len(self.y)

    @property
    def lead(self) -> int:
        """Number of input samples before t = 1 (the maximum usable lag)."""
        return len(self.u) - len(self.y)

    def lagged(self, lag: int) -> np.ndarray:
        """u(t - lag) for t = 1..N."""
        return lagged_matrix(self.u, self.n_obs, [lag])[:, 0]

    def regressors(self, lags) -> np.ndarray:
        return lagged_matrix(self.u, self.n_obs, lags)

    def to_csv(self, path) -> None:
        """Write rows t, u(t), y(t) for t = 1-L .. N; y is empty for t < 1.

        Values carry 17 significant digits so a read back round-trips
        bit-exactly.
        """
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "u", "y"])
            for i, t in enumerate(range(1 - self.lead, self.n_obs + 1)):
                yval = "" if t < 1 else f"{self.y[t - 1]:.17g}"
                writer.writerow([t, f"{self.u[i]:.17g}", yval])

    @classmethod
    def from_csv(cls, path) -> "DataRecord":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header] != ["t", "u", "y"]:
                raise ValueError(f"{path}: expected header 't,u,y', got {header}")
            ts, us, ys = [], [], []
            for row in reader:
                if not row:
                    continue
                if len(row) != 3:
                    raise ValueError(f"{path}: malformed row {row}")
                t = int(row[0])
                ts.append(t)
                us.append(float(row[1]))
                if row[2].strip() == "":
                    if t >= 1:
                        raise ValueError(f"{path}: missing output at t = {t}")
                else:
                    if t < 1:
                        raise ValueError(f"{path}: unexpected output at t = {t}")
                    ys.append(float(row[2]))
        if not ts or ts != list(range(ts[0], ts[0] + len(ts))):
            raise ValueError(f"{path}: time indices must be contiguous")
        if ts[-1] != len(ys):
            raise ValueError(f"{path}: outputs must run from t = 1 to the last row")
        return cls(u=np.array(us), y=np.array(ys))


def check_derivative(nl: Nonlinearity, grid=None, step: float = 1e-6, rtol: float = 1e-6) -> None:
    """Verify f' against central differences of f on a grid; raises on mismatch."""
    if grid is None:
        grid = np.linspace(-3.0, 3.0, 25)
    grid = np.asarray(grid, dtype=float)
    fd = (nl.value(grid + step) - nl.value(grid - step)) / (2.0 * step)
    exact = nl.deriv(grid)
    scale = np.maximum(np.abs(exact), 1.0)
    worst = float(np.max(np.abs(fd - exact) / scale))
    if worst > rtol:
        raise ValueError(f"derivative disagrees with finite differences by {worst:.3e}")
