"""
Poisson regression with a linear, non-negative rate.

The type-level arrival rate of the alarm process is ``b + Σ w * Z`` with
``b > 0`` and ``w >= 0``, so both the counterfactual model and the structure
score fit exactly that form. The negative log-likelihood is convex in
``(b, w)`` and the bounds keep the rate positive, so L-BFGS-B finds the
global optimum.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import gammaln

from causal_alarm_rl.errors import InvalidArgumentError

RATE_FLOOR = 1e-10


@dataclass(frozen=True)
class PoissonRateFit:
    intercept: float
    coef: np.ndarray
    loglik: float

    def rate(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        return self.intercept + X.reshape(X.shape[0], self.coef.size) @ self.coef


def fit_linear_poisson(y: np.ndarray, X: np.ndarray, max_iter: int = 200) -> PoissonRateFit:
    """Maximum-likelihood ``y ~ Poisson(b + X @ w)``; ``X`` must be non-negative."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or y.size == 0:
        raise InvalidArgumentError("Poisson fit needs a non-empty 1-D response")
    X = np.asarray(X, dtype=np.float64)
    X = X.reshape(y.size, int(np.prod(X.shape[1:])))
    if (X < 0).any():
        raise InvalidArgumentError("Poisson rate covariates must be non-negative")

    col_max = X.max(axis=0, initial=0.0)
    scale = np.where(col_max > 0, col_max, 1.0)
    Xs = X / scale

    def neg_loglik(theta: np.ndarray):
        rate = theta[0] + Xs @ theta[1:]
        value = -(y * np.log(rate) - rate).sum()
        resid = y / rate - 1.0
        grad = -np.concatenate([[resid.sum()], Xs.T @ resid])
        return value, grad

    theta0 = np.zeros(1 + X.shape[1])
    theta0[0] = max(y.mean(), 1e-6)
    result = minimize(
        neg_loglik,
        theta0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(RATE_FLOOR, None)] + [(0.0, None)] * X.shape[1],
        options={"maxiter": max_iter, "ftol": 1e-12, "gtol": 1e-8},
    )
    loglik = float(-result.fun - gammaln(y + 1.0).sum())
    return PoissonRateFit(intercept=float(result.x[0]), coef=result.x[1:] / scale, loglik=loglik)
