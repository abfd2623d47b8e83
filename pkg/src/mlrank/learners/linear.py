"""Weighted L2-regularized logistic regression."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..losses import logistic, logistic_deriv, logistic_deriv2
from .base import BinaryProblem, check_features


@dataclass
class LinearModel:
    coef: np.ndarray
    intercept: float = 0.0

    @property
    def d(self) -> int:
        return self.coef.size

    def decision_function(self, X) -> np.ndarray:
        X = check_features(X, self.d)
        return X @ self.coef + self.intercept

    def predict(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.d,):
            raise ValueError(f"expected {self.d} features, got shape {x.shape}")
        return float(x @ self.coef + self.intercept)

    def to_dict(self) -> dict:
        return {"type": "linear", "coef": self.coef.tolist(), "intercept": self.intercept}

    @classmethod
    def from_dict(cls, d: dict) -> "LinearModel":
        return cls(np.array(d["coef"], dtype=float), float(d["intercept"]))


class ConvergenceError(RuntimeError):
    """Optimizer hit its iteration cap; carries the last iterate."""

    def __init__(self, message: str, last, grad_norm: float, trace=None):
        super().__init__(f"{message} (gradient inf-norm {grad_norm:.3g})")
        self.last = last
        self.grad_norm = grad_norm
        self.trace = trace


def logreg_objective(theta: np.ndarray, problem: BinaryProblem, lam: float) -> float:
    """``sum_n w_n log(1 + exp(-y_n (x_n . coef + b))) + lam |coef|^2``; ``theta = [coef, b]``."""
    coef, b = theta[:-1], theta[-1]
    margin = problem.y * (problem.X @ coef + b)
    return float(problem.weight @ logistic(margin) + lam * coef @ coef)


def logreg_gradient(theta: np.ndarray, problem: BinaryProblem, lam: float) -> np.ndarray:
    coef, b = theta[:-1], theta[-1]
    margin = problem.y * (problem.X @ coef + b)
    r = problem.weight * problem.y * logistic_deriv(margin)
    return np.concatenate([problem.X.T @ r + 2.0 * lam * coef, [r.sum()]])


def _logreg_hessian(theta, problem, lam):
    coef, b = theta[:-1], theta[-1]
    margin = problem.y * (problem.X @ coef + b)
    s = problem.weight * logistic_deriv2(margin)
    Xa = np.hstack([problem.X, np.ones((problem.X.shape[0], 1))])
    H = (Xa * s[:, None]).T @ Xa
    H[np.arange(coef.size), np.arange(coef.size)] += 2.0 * lam
    return H


def train_logreg(problem: BinaryProblem, lam: float, tol: float = 1e-8, max_iter: int = 100_000) -> LinearModel:
    """Minimize the weighted, L2-penalized logistic loss (intercept unpenalized).

    Newton directions with Armijo halving; gradient direction whenever the
    Hessian is not positive definite.  Stops at gradient inf-norm below ``tol``.
    """
    if lam < 0:
        raise ValueError("regularization must be nonnegative")
    d = problem.X.shape[1]
    theta = np.zeros(d + 1)
    f = logreg_objective(theta, problem, lam)
    g = logreg_gradient(theta, problem, lam)
    for _ in range(max_iter):
        gn = float(np.max(np.abs(g)))
        if gn < tol:
            return LinearModel(theta[:-1].copy(), float(theta[-1]))
        H = _logreg_hessian(theta, problem, lam)
        try:
            L = np.linalg.cholesky(H)
            step = -np.linalg.solve(L.T, np.linalg.solve(L, g))
        except np.linalg.LinAlgError:
            step = -g
        if not np.all(np.isfinite(step)) or step @ g >= 0:
            step = -g
        t = 1.0
        noise = 1e-13 * max(1.0, abs(f))
        while True:
            cand = theta + t * step
            fc = logreg_objective(cand, problem, lam)
            if fc <= f + 1e-4 * t * (g @ step):
                gc = logreg_gradient(cand, problem, lam)
                break
            if abs(fc - f) <= noise:
                gc = logreg_gradient(cand, problem, lam)
                if np.max(np.abs(gc)) < gn:
                    break
            if t < 1e-20:
                raise ConvergenceError("line search failed", LinearModel(theta[:-1].copy(), float(theta[-1])), gn)
            t *= 0.5
        theta, f, g = cand, fc, gc
    gn = float(np.max(np.abs(g)))
    raise ConvergenceError("logistic regression did not converge", LinearModel(theta[:-1].copy(), float(theta[-1])), gn)
