"""Soft-margin SVM trained by sequential minimal optimization.

Dual problem over alpha in [0, C]^n with sum(alpha * y) = 0. Working-set
selection picks the maximal KKT-violating pair (ties to the lowest index);
training stops when the violation gap drops below KKT_TOL.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, ConvergenceError, InvalidInputError
from ..volume import NormalizationParams
from .design import DesignMatrix, check_labels

KKT_TOL = 1e-3
_TAU = 1e-12  # curvature floor for the pair subproblem


@dataclass(frozen=True)
class KernelModel:
    support_vectors: np.ndarray   # (n_sv, d)
    dual_coef: np.ndarray         # alpha_i * y_i, shape (n_sv,)
    intercept: float
    kernel: str                   # "linear" | "rbf"
    gamma: float
    C: float
    feature_names: tuple[str, ...]
    normalization: tuple[NormalizationParams, ...] | None = None

    def __post_init__(self) -> None:
        sv = np.asarray(self.support_vectors, dtype=np.float64)
        dc = np.asarray(self.dual_coef, dtype=np.float64)
        if sv.ndim != 2 or sv.shape[1] != len(self.feature_names):
            raise InvalidInputError("support vectors must align with feature names")
        if dc.shape != (sv.shape[0],):
            raise InvalidInputError("one dual coefficient per support vector")
        if self.kernel not in ("linear", "rbf"):
            raise InvalidInputError(f"unknown kernel {self.kernel!r}")
        if not (np.isfinite(sv).all() and np.isfinite(dc).all()
                and np.isfinite(self.intercept)):
            raise InvalidInputError("model parameters must be finite")
        if np.abs(dc).max(initial=0.0) > self.C + 1e-9:
            raise InvalidInputError("dual coefficients exceed the box bound")
        if abs(float(dc.sum())) > 1e-6:
            raise InvalidInputError("dual coefficients violate sum(alpha*y) = 0")
        for arr in (sv, dc):
            arr.flags.writeable = False
        object.__setattr__(self, "support_vectors", sv)
        object.__setattr__(self, "dual_coef", dc)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))


def kernel_matrix(kernel: str, gamma: float, A: np.ndarray,
                  B: np.ndarray) -> np.ndarray:
    """K[i, j] = k(A_i, B_j) for the two supported kernels."""
    if kernel == "linear":
        return A @ B.T
    if kernel == "rbf":
        sq = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
              - 2.0 * (A @ B.T))
        return np.exp(-gamma * np.maximum(sq, 0.0))
    raise InvalidInputError(f"unknown kernel {kernel!r}")


def svm_fit(X: DesignMatrix, y: np.ndarray, C: float = 1.0,
            kernel: str = "linear", gamma: float | None = None) -> KernelModel:
    """Train a binary SVM; labels are {0,1} and map internally to {-1,+1}."""
    if C <= 0:
        raise ConfigError(f"C must be positive, got {C}")
    if kernel not in ("linear", "rbf"):
        raise ConfigError(f"kernel must be linear or rbf, got {kernel!r}")
    y01 = check_labels(y, X.n)
    if gamma is None:
        gamma = 1.0 / X.d
    if gamma <= 0:
        raise ConfigError(f"gamma must be positive, got {gamma}")

    s = 2.0 * y01.astype(np.float64) - 1.0
    K = kernel_matrix(kernel, gamma, X.values, X.values)
    alpha, b = _smo(K, s, C)

    keep = alpha > 1e-12
    # degenerate but legal: no support vectors means f(x) = b everywhere
    sv = X.values[keep]
    dc = alpha[keep] * s[keep]
    return KernelModel(support_vectors=sv, dual_coef=dc, intercept=b,
                       kernel=kernel, gamma=float(gamma), C=float(C),
                       feature_names=X.columns)


def _smo(K: np.ndarray, s: np.ndarray, C: float) -> tuple[np.ndarray, float]:
    n = s.shape[0]
    alpha = np.zeros(n)
    grad = -np.ones(n)  # gradient of 1/2 a'Qa - 1'a at a = 0, Q = ss' * K
    max_iter = max(100_000, 100 * n)
    for _ in range(max_iter):
        viol = -s * grad
        up = np.where(s > 0, alpha < C, alpha > 0)
        low = np.where(s > 0, alpha > 0, alpha < C)
        up_viol = np.where(up, viol, -np.inf)
        low_viol = np.where(low, viol, np.inf)
        m = float(up_viol.max())
        M = float(low_viol.min())
        if m - M < KKT_TOL:
            break
        i = int(np.argmax(up_viol))
        j = int(np.argmin(low_viol))

        # move t along (alpha_i + s_i t, alpha_j - s_j t), clipped to the box
        quad = max(K[i, i] + K[j, j] - 2.0 * K[i, j], _TAU)
        t = (m - M) / quad
        t = min(t, C - alpha[i] if s[i] > 0 else alpha[i])
        t = min(t, alpha[j] if s[j] > 0 else C - alpha[j])

        alpha[i] += s[i] * t
        alpha[j] -= s[j] * t
        # snap to the box so membership tests stay exact
        for k in (i, j):
            if alpha[k] < 1e-12:
                alpha[k] = 0.0
            elif alpha[k] > C - 1e-12:
                alpha[k] = C
        grad += t * s * (K[:, i] - K[:, j])
    else:
        raise ConvergenceError(f"SMO did not converge within {max_iter} iterations")

    free = (alpha > 0.0) & (alpha < C)
    viol = -s * grad
    if free.any():
        b = float(viol[free].mean())
    else:
        b = float((m + M) / 2.0)
    return alpha, b
