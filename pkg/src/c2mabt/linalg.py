"""Regularized (optionally weighted) ridge-regression state.

Holds the Gram matrix ``G``, the response vector ``b`` and a lazily solved
estimate ``theta_hat = G^{-1} b``.  ``G`` only ever grows by symmetric
rank-one terms, so it stays symmetric and ``G - gamma*I`` stays PSD.
"""
from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular

_NORM_TOL = 1e-12


class RegressionState:
    """Gram matrix, b-vector and cached ridge estimate for dimension ``dim``."""

    def __init__(self, dim: int, gamma: float):
        if int(dim) != dim or dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {dim!r}")
        if not np.isfinite(gamma) or gamma <= 0:
            raise ValueError(f"gamma must be positive, got {gamma!r}")
        self.dim = int(dim)
        self.gamma = float(gamma)
        self.gram = self.gamma * np.eye(self.dim)
        self.bvec = np.zeros(self.dim)
        self.theta_hat = np.zeros(self.dim)
        self.update_count = 0
        self._dirty = False
        self._chol = None  # lower Cholesky factor of gram, valid when not dirty

    @property
    def dirty(self) -> bool:
        return self._dirty

    def _check_phi(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        if phi.shape[-1] != self.dim:
            raise ValueError(f"feature dimension {phi.shape[-1]} != {self.dim}")
        if not np.all(np.isfinite(phi)):
            raise ValueError("feature vector has non-finite entries")
        return phi

    def update(self, phi, outcome: float, weight: float = 1.0) -> "RegressionState":
        """Add ``weight * phi phi^T`` to G and ``weight * outcome * phi`` to b."""
        phi = self._check_phi(phi)
        if phi.ndim != 1:
            raise ValueError("update expects a single feature vector")
        if not (np.isfinite(weight) and weight > 0):
            raise ValueError(f"weight must be positive and finite, got {weight!r}")
        if not np.isfinite(outcome):
            raise ValueError(f"outcome must be finite, got {outcome!r}")
        if np.linalg.norm(phi) > 1 + _NORM_TOL:
            raise ValueError("feature vector norm exceeds 1")
        self.gram += weight * np.outer(phi, phi)
        self.bvec += (weight * float(outcome)) * phi
        self.update_count += 1
        self._dirty = True
        return self

    def batch_update(self, phis, outcomes, weights=None) -> "RegressionState":
        """Apply several weighted rank-one updates at once.

        Equivalent to calling :meth:`update` row by row; the Gram increment is
        symmetrized so the result does not depend on row order beyond rounding.
        """
        phis = self._check_phi(np.atleast_2d(phis))
        outcomes = np.asarray(outcomes, dtype=float).reshape(-1)
        n = phis.shape[0]
        if outcomes.shape[0] != n:
            raise ValueError("one outcome per feature row required")
        if not np.all(np.isfinite(outcomes)):
            raise ValueError("outcomes must be finite")
        if n == 0:
            return self
        w = np.ones(n) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
        if w.shape[0] != n or not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be positive, finite, one per row")
        if np.any(np.linalg.norm(phis, axis=1) > 1 + _NORM_TOL):
            raise ValueError("feature vector norm exceeds 1")
        wp = phis * w[:, None]
        inc = wp.T @ phis
        self.gram += 0.5 * (inc + inc.T)
        self.bvec += wp.T @ outcomes
        self.update_count += n
        self._dirty = True
        return self

    def _factor(self) -> np.ndarray:
        if self._dirty or self._chol is None:
            try:
                c, _ = cho_factor(self.gram, lower=True, check_finite=False)
            except np.linalg.LinAlgError as exc:  # invariants make this unreachable
                raise np.linalg.LinAlgError("Gram matrix lost positive definiteness") from exc
            self._chol = np.tril(c)
            self.theta_hat = cho_solve((self._chol, True), self.bvec, check_finite=False)
            self._dirty = False
        return self._chol

    def solve_theta(self) -> np.ndarray:
        """Return ``G^{-1} b``, the weighted ridge estimate."""
        self._factor()
        return self.theta_hat.copy()

    def ellipsoid_norms(self, phis) -> np.ndarray:
        """Row-wise ``sqrt(phi^T G^{-1} phi)`` via one triangular solve."""
        phis = self._check_phi(np.atleast_2d(phis))
        z = solve_triangular(self._factor(), phis.T, lower=True, check_finite=False)
        return np.sqrt(np.einsum("ij,ij->j", z, z))

    def ellipsoid_norm(self, phi) -> float:
        return float(self.ellipsoid_norms(phi)[0])

    def copy(self) -> "RegressionState":
        other = RegressionState(self.dim, self.gamma)
        other.gram = self.gram.copy()
        other.bvec = self.bvec.copy()
        other.theta_hat = self.theta_hat.copy()
        other.update_count = self.update_count
        other._dirty = self._dirty
        other._chol = None if self._chol is None else self._chol.copy()
        return other


def init_state(d: int, gamma: float) -> RegressionState:
    return RegressionState(d, gamma)


def weighted_rank_one_update(state: RegressionState, phi, outcome: float, weight: float = 1.0):
    return state.update(phi, outcome, weight)


def solve_theta(state: RegressionState) -> np.ndarray:
    return state.solve_theta()


def ellipsoid_norm(state: RegressionState, phi) -> float:
    return state.ellipsoid_norm(phi)
