"""
Closed-form linear optimal transport between Gaussian approximations.

For source moments (m_s, Σ_s) and target moments (m_t, Σ_t) the Monge map
under quadratic cost is T(x) = A x + b with

    A = Σ_s^{-1/2} (Σ_s^{1/2} Σ_t Σ_s^{1/2})^{1/2} Σ_s^{-1/2},   b = m_t − A m_s.

Covariances are the biased sample estimates plus reg·I.
"""

import math
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

import sys
from pathlib import Path
BASE = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(BASE))

from utils.validators import validate_positive_float

logger = logging.getLogger(__name__)

DEFAULT_REG = 1e-6
SYMMETRY_TOL = 1e-10
EIG_TOL = 1e-12


class InsufficientSamplesError(ValueError):
    """Fewer than two samples on one side of a fit."""
    pass


class NotPositiveDefiniteError(ValueError):
    """Matrix has a negative eigenvalue beyond tolerance."""
    pass


def matrix_sqrt_spd(M, return_inv: bool = False):
    """
    Square root of a symmetric positive (semi)definite matrix via eigh.

    Args:
        M: Symmetric matrix
        return_inv: Also return the inverse square root

    Returns:
        S with S·S = M (and S^{-1} when return_inv)

    Raises:
        NotPositiveDefiniteError: Negative eigenvalue beyond tolerance, or a
            singular matrix when the inverse is requested
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"Expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("Matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > SYMMETRY_TOL * scale:
        raise ValueError("Matrix is not symmetric")

    w, V = np.linalg.eigh((M + M.T) / 2)
    if w.min() < -EIG_TOL * scale:
        raise NotPositiveDefiniteError(f"Negative eigenvalue {w.min():.3e}")
    w = np.clip(w, 0.0, None)

    S = (V * np.sqrt(w)) @ V.T
    S = (S + S.T) / 2
    if not return_inv:
        return S

    if w.min() <= 0:
        raise NotPositiveDefiniteError("Singular matrix has no inverse square root")
    S_inv = (V / np.sqrt(w)) @ V.T
    return S, (S_inv + S_inv.T) / 2


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Affine map T(x) = A x + b of the semantic space, fitted for atoms (i, j)."""
    A: np.ndarray
    b: np.ndarray
    source_atom: Optional[int] = None
    target_atom: Optional[int] = None
    fit: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64).reshape(2, 2)
        b = np.array(self.b, dtype=np.float64).reshape(2)
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("LinearMap entries must be finite")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.A, np.eye(2)) and not np.any(self.b))

    @classmethod
    def identity(cls) -> "LinearMap":
        return cls(A=np.eye(2), b=np.zeros(2))


def apply(T: LinearMap, x) -> np.ndarray:
    """A·x + b for one symbol [2] or a batch [B, 2]."""
    x = np.asarray(x, dtype=np.float64)
    return x @ T.A.T + T.b


def sample_moments(samples, reg: float = DEFAULT_REG) -> Tuple[np.ndarray, np.ndarray]:
    """
    Mean and regularized biased covariance of a point set.

    Raises:
        InsufficientSamplesError: Fewer than 2 points
    """
    X = np.asarray(samples, dtype=np.float64).reshape(-1, 2)
    if X.shape[0] < 2:
        raise InsufficientSamplesError(f"Need at least 2 samples, got {X.shape[0]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("Samples contain non-finite values")
    m = X.mean(axis=0)
    D = X - m
    cov = D.T @ D / X.shape[0] + reg * np.eye(2)
    return m, (cov + cov.T) / 2


def monge_from_moments(m_s, cov_s, m_t, cov_t) -> Tuple[np.ndarray, np.ndarray]:
    """Gaussian Monge map (A, b) from exact moments."""
    m_s = np.asarray(m_s, dtype=np.float64)
    m_t = np.asarray(m_t, dtype=np.float64)
    cs12, cs12_inv = matrix_sqrt_spd(cov_s, return_inv=True)
    middle = matrix_sqrt_spd(cs12 @ np.asarray(cov_t, dtype=np.float64) @ cs12)
    A = cs12_inv @ middle @ cs12_inv
    A = (A + A.T) / 2
    b = m_t - A @ m_s
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise ValueError("Monge map has non-finite entries")
    return A, b


def bures_w2(m_s, cov_s, m_t, cov_t) -> float:
    """Squared 2-Wasserstein distance between N(m_s, Σ_s) and N(m_t, Σ_t)."""
    cs12 = matrix_sqrt_spd(cov_s)
    cross = matrix_sqrt_spd(cs12 @ np.asarray(cov_t, dtype=np.float64) @ cs12)
    mean_term = float(np.sum((np.asarray(m_s) - np.asarray(m_t)) ** 2))
    cov_term = float(np.trace(cov_s) + np.trace(cov_t) - 2 * np.trace(cross))
    return max(mean_term + cov_term, 0.0)


def fit_linear_ot(source_samples, target_samples, reg: float = DEFAULT_REG,
                  source_atom: Optional[int] = None, target_atom: Optional[int] = None) -> LinearMap:
    """
    Fit the linear Monge map from one point cloud onto another.

    Args:
        source_samples: [n_s, 2] points, n_s >= 2
        target_samples: [n_t, 2] points, n_t >= 2
        reg: Covariance regularizer added to both sides

    Returns:
        LinearMap with fit diagnostics (counts, reg, Bures W2²)

    Raises:
        InsufficientSamplesError: Either side has fewer than 2 points
    """
    reg = validate_positive_float(reg, "reg", allow_zero=True)
    m_s, cov_s = sample_moments(source_samples, reg)
    m_t, cov_t = sample_moments(target_samples, reg)
    A, b = monge_from_moments(m_s, cov_s, m_t, cov_t)

    w2 = bures_w2(m_s, cov_s, m_t, cov_t)
    fit = {
        "n_source": int(np.asarray(source_samples).reshape(-1, 2).shape[0]),
        "n_target": int(np.asarray(target_samples).reshape(-1, 2).shape[0]),
        "reg": reg,
        "bures_w2": w2 if math.isfinite(w2) else None,
    }
    return LinearMap(A=A, b=b, source_atom=source_atom, target_atom=target_atom, fit=fit)
