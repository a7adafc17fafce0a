"""Multinomial logistic regression fitted by damped Newton iterations."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

GRAD_TOL = 1e-6


class ConvergenceError(RuntimeError):
    pass


def _unpack(theta: np.ndarray, d: int, k: int):
    W = theta.reshape(k, d + 1)
    return W[:, :d], W[:, d]


def logistic_loss_and_grad(theta: np.ndarray, X: np.ndarray, Y: np.ndarray, w: np.ndarray, C: float):
    """Weighted softmax cross-entropy plus ``||coef||^2 / (2C)``.

    ``theta`` stacks, per class, the coefficients followed by the intercept.
    ``Y`` is the one-hot target of shape ``(n, k)``. Returns ``(loss, grad)``.
    """
    n, d = X.shape
    k = Y.shape[1]
    coef, icpt = _unpack(theta, d, k)
    z = X @ coef.T + icpt
    z = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    logp = z - lse
    loss = -float((w[:, None] * Y * logp).sum()) + float((coef * coef).sum()) / (2 * C)
    R = w[:, None] * (np.exp(logp) - Y)
    g_coef = R.T @ X + coef / C
    g_icpt = R.sum(axis=0)
    return loss, np.hstack([g_coef, g_icpt[:, None]]).ravel()


def _hessian(theta, X1, w, k, C, d):
    z = X1 @ theta.reshape(k, d + 1).T
    z -= z.max(axis=1, keepdims=True)
    P = np.exp(z)
    P /= P.sum(axis=1, keepdims=True)
    m = d + 1
    H = np.zeros((k * m, k * m))
    for a in range(k):
        for b in range(a, k):
            s = w * P[:, a] * ((1.0 if a == b else 0.0) - P[:, b])
            block = (X1 * s[:, None]).T @ X1
            H[a * m : (a + 1) * m, b * m : (b + 1) * m] = block
            if a != b:
                H[b * m : (b + 1) * m, a * m : (a + 1) * m] = block
    reg = np.tile(np.r_[np.full(d, 1.0 / C), 0.0], k)
    H[np.diag_indices_from(H)] += reg
    return H


@dataclass(frozen=True)
class LogisticModel:
    coef: np.ndarray  # (n_present, d)
    intercept: np.ndarray  # (n_present,)
    classes: np.ndarray  # global class index per row of coef
    n_classes: int
    n_iter: int = 0
    converged: bool = True

    def decision(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef.T + self.intercept

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        z = self.decision(X)
        z -= z.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        out = np.zeros((p.shape[0], self.n_classes))
        out[:, self.classes] = p
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)

    def importances(self) -> np.ndarray:
        """Absolute coefficient per (class, feature); absent classes get zeros."""
        out = np.zeros((self.n_classes, self.coef.shape[1]))
        out[self.classes] = np.abs(self.coef)
        return out

    def to_json(self) -> dict:
        return {
            "coef": self.coef.tolist(),
            "intercept": self.intercept.tolist(),
            "classes": self.classes.tolist(),
            "n_classes": self.n_classes,
            "n_iter": self.n_iter,
            "converged": self.converged,
        }

    @classmethod
    def from_json(cls, d: dict) -> "LogisticModel":
        classes = np.asarray(d["classes"], dtype=np.int64)
        coef = np.asarray(d["coef"], dtype=np.float64).reshape(classes.size, -1)
        return cls(coef, np.asarray(d["intercept"], dtype=np.float64), classes, d["n_classes"], d["n_iter"], d["converged"])


def train_logistic(
    X: np.ndarray,
    y: np.ndarray,
    weights: np.ndarray,
    n_classes: int,
    *,
    C: float = 1.0,
    max_iter: int = 1000,
    tol: float = GRAD_TOL,
) -> LogisticModel:
    """Newton's method with backtracking on the penalised weighted loss.

    Only classes present in ``y`` get parameters; with a single class the
    model predicts it everywhere. Converged when the gradient's max-norm
    drops below ``tol``.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    w = np.asarray(weights, dtype=np.float64)
    n, d = X.shape
    if C <= 0:
        raise ValueError("C must be positive")
    classes = np.unique(y)
    k = classes.size
    if k == 1:
        return LogisticModel(np.zeros((1, d)), np.zeros(1), classes, n_classes, 0, True)
    Y = (y[:, None] == classes[None, :]).astype(np.float64)
    X1 = np.hstack([X, np.ones((n, 1))])
    theta = np.zeros(k * (d + 1))
    loss, grad = logistic_loss_and_grad(theta, X, Y, w, C)
    # the softmax is unchanged by a shared shift of all intercepts; a tiny
    # ridge on those coordinates keeps the Newton system nonsingular
    icpt_ridge = np.tile(np.r_[np.zeros(d), 1e-10], k)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if not np.isfinite(loss):
            raise ConvergenceError("non-finite loss")
        if np.abs(grad).max() < tol:
            converged = True
            it -= 1
            break
        H = _hessian(theta, X1, w, k, C, d)
        H[np.diag_indices_from(H)] += icpt_ridge
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        while True:
            cand = theta - t * step
            c_loss, c_grad = logistic_loss_and_grad(cand, X, Y, w, C)
            if c_loss <= loss - 1e-4 * t * float(grad @ step) or t < 1e-10:
                break
            t *= 0.5
        if c_loss > loss:
            # no descent possible at this precision; the gradient is already tiny
            converged = np.abs(grad).max() < tol * 1e3
            break
        theta, loss, grad = cand, c_loss, c_grad
    if not converged:
        logger.warning("logistic regression stopped after %d iterations, |grad|=%.3g", it, np.abs(grad).max())
    coef, icpt = _unpack(theta, d, k)
    # a shared intercept shift leaves every probability unchanged; report the
    # zero-mean representative so equal optima compare equal
    icpt = icpt - icpt.mean()
    return LogisticModel(coef.copy(), icpt, classes, n_classes, it, converged)
