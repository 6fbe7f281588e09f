"""Logistic regression, unpenalized and with an L1 penalty.

Objective: mean logistic loss + l1_lambda * ||w||_1, intercept unpenalized.
The unpenalized path runs damped Newton; the L1 path runs outer IRLS with
cyclic coordinate descent on the local quadratic, glmnet style. Both are
deterministic and allocation-light so cross-validation stays fast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceError, InvalidInputError
from ..volume import NormalizationParams
from .design import DesignMatrix, check_labels

GRAD_TOL = 1e-8          # stop when the gradient inf-norm drops below this
COORD_TOL = 1e-8         # stop when no coordinate moved more than this
MAX_NEWTON_ITER = 1000
MAX_OUTER_ITER = 1000
KKT_TOL = 1e-6


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    intercept: float
    l1_lambda: float
    feature_names: tuple[str, ...]
    normalization: tuple[NormalizationParams, ...] | None = None

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.shape[0] != len(self.feature_names):
            raise InvalidInputError("weights must align with feature names")
        if not (np.isfinite(w).all() and np.isfinite(self.intercept)):
            raise InvalidInputError("model parameters must be finite")
        if self.l1_lambda < 0:
            raise InvalidInputError("l1_lambda must be non-negative")
        w = w.copy()
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _log_loss(z: np.ndarray, y: np.ndarray) -> float:
    # mean log(1 + exp(-s*z)) with s = +-1, computed without overflow
    s = 2.0 * y - 1.0
    m = -s * z
    return float(np.mean(np.logaddexp(0.0, m)))


def _penalized_loss(X: np.ndarray, y: np.ndarray, w: np.ndarray, b: float,
                    lam: float) -> float:
    return _log_loss(X @ w + b, y) + lam * float(np.abs(w).sum())


def lambda_max(X: DesignMatrix, y: np.ndarray) -> float:
    """Smallest penalty at which every weight is exactly zero."""
    y = check_labels(y, X.n)
    resid = y - y.mean()
    return float(np.abs(X.values.T @ resid).max() / X.n)


def logistic_fit(X: DesignMatrix, y: np.ndarray,
                 l1_lambda: float = 0.0) -> LinearModel:
    """Fit a binary logistic model; l1_lambda > 0 switches on the Lasso."""
    y = check_labels(y, X.n)
    if X.n < 2:
        raise InvalidInputError("need at least 2 samples")
    if l1_lambda < 0:
        raise InvalidInputError("l1_lambda must be non-negative")
    if l1_lambda == 0:
        w, b = _fit_newton(X.values, y.astype(np.float64))
    else:
        w, b = _fit_lasso(X.values, y.astype(np.float64), l1_lambda)
    return LinearModel(weights=w, intercept=b, l1_lambda=l1_lambda,
                       feature_names=X.columns)


def _fit_newton(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    n, d = X.shape
    Xb = np.hstack([X, np.ones((n, 1))])
    theta = np.zeros(d + 1)
    loss = _log_loss(Xb @ theta, y)
    for _ in range(MAX_NEWTON_ITER):
        z = Xb @ theta
        p = _sigmoid(z)
        grad = Xb.T @ (p - y) / n
        if np.abs(grad).max() < GRAD_TOL:
            break
        W = p * (1.0 - p)
        H = (Xb * W[:, None]).T @ Xb / n
        # tiny ridge keeps the solve well-posed when p saturates
        H[np.diag_indices_from(H)] += 1e-12
        step = np.linalg.solve(H, grad)
        t = 1.0
        while t > 1e-12:
            cand = theta - t * step
            cand_loss = _log_loss(Xb @ cand, y)
            if cand_loss <= loss:
                theta, loss = cand, cand_loss
                break
            t *= 0.5
        else:
            break  # no descent possible at machine precision
    return theta[:d].copy(), float(theta[d])


def _soft_threshold(v: float, t: float) -> float:
    if v > t:
        return v - t
    if v < -t:
        return v + t
    return 0.0


def _fit_lasso(X: np.ndarray, y: np.ndarray,
               lam: float) -> tuple[np.ndarray, float]:
    n, d = X.shape
    ybar = float(y.mean())
    w = np.zeros(d)
    b = float(np.log(ybar / (1.0 - ybar)))  # null model: p_i = ybar
    # same expression as lambda_max, so lam >= lambda_max short-circuits to
    # the exact all-zero solution instead of accumulating rounding noise
    if lam >= float(np.abs(X.T @ (y - y.mean())).max() / n):
        return w, b
    obj = _penalized_loss(X, y, w, b, lam)
    inner_tol = 1e-4  # tightened toward COORD_TOL as the outer loop settles
    for _ in range(MAX_OUTER_ITER):
        eta = X @ w + b
        p = _sigmoid(eta)
        omega = np.maximum(p * (1.0 - p), 1e-12)
        z = eta + (y - p) / omega
        WX = X * omega[:, None]
        denom = np.einsum("ij,ij->j", WX, X) / n
        omega_sum = float(omega.sum())
        w_new, b_new = w.copy(), b
        r = z - eta  # residual of the working response at the current fit

        def sweep(idx) -> float:
            nonlocal b_new
            delta = 0.0
            for j in idx:
                wj = w_new[j]
                rho = float(WX[:, j] @ r) / n + denom[j] * wj
                nj = _soft_threshold(rho, lam) / denom[j] if denom[j] > 0 else 0.0
                if nj != wj:
                    r[:] -= X[:, j] * (nj - wj)
                    w_new[j] = nj
                    delta = max(delta, abs(nj - wj))
            bn = b_new + float(omega @ r) / omega_sum
            if bn != b_new:
                r[:] -= bn - b_new
                delta = max(delta, abs(bn - b_new))
                b_new = bn
            return delta

        # full sweeps bracket active-set cycling, glmnet style
        for _ in range(1000):
            if sweep(range(d)) < inner_tol:
                break
            for _ in range(1000):
                active = np.nonzero(w_new)[0]
                if active.size == 0 or sweep(active) < inner_tol:
                    break

        # step-halve toward the CD solution if the true objective regressed
        t = 1.0
        while t > 1e-12:
            w_try = w + t * (w_new - w)
            b_try = b + t * (b_new - b)
            obj_try = _penalized_loss(X, y, w_try, b_try, lam)
            if obj_try <= obj + 1e-15:
                break
            t *= 0.5
        moved = max(float(np.abs(w_try - w).max(initial=0.0)), abs(b_try - b))
        w, b, obj = w_try, b_try, obj_try
        if moved < COORD_TOL and inner_tol <= COORD_TOL:
            break
        inner_tol = max(min(inner_tol, 0.1 * moved), COORD_TOL)
    else:
        raise ConvergenceError(
            f"lasso IRLS did not converge within {MAX_OUTER_ITER} iterations")
    return w, b


def lasso_kkt_violation(model: LinearModel, X: DesignMatrix,
                        y: np.ndarray) -> float:
    """Worst subgradient-optimality violation of the L1 objective.

    Zero weights must satisfy |g_j| <= lambda; nonzero weights must satisfy
    g_j = -lambda * sign(w_j), where g is the smooth-loss gradient.
    """
    y = check_labels(y, X.n)
    p = _sigmoid(X.values @ model.weights + model.intercept)
    g = X.values.T @ (p - y) / X.n
    lam = model.l1_lambda
    worst = abs(float(np.mean(p - y)))  # intercept is unpenalized: g_b = 0
    for j, wj in enumerate(model.weights):
        if wj == 0.0:
            worst = max(worst, abs(g[j]) - lam)
        else:
            worst = max(worst, abs(g[j] + lam * np.sign(wj)))
    return worst
