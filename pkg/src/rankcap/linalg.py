"""Dense-matrix kernel: factorization, the norms used by every capacity bound,
and Frobenius-nearest projection onto a rank-and-spectral constraint set.

All functions are pure and operate on float64 arrays. The spectral norm is
computed by power iteration so it can be cross-checked against the full
factorization; everything else routes through one SVD entry point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .validation import as_matrix, as_positive_int, as_real

SVD_RECONSTRUCTION_TOL = 1e-8


class SvdFailure(RuntimeError):
    """Factorization did not converge."""


class PowerIterationFailure(RuntimeError):
    """Power iteration hit its iteration cap; carries the last estimate."""

    def __init__(self, message, last_estimate):
        super().__init__(message)
        self.last_estimate = float(last_estimate)


@dataclass(frozen=True)
class SvdFactors:
    """Thin SVD of a matrix: left/right have orthonormal columns, values are
    nonincreasing and nonnegative."""

    left: np.ndarray
    values: np.ndarray
    right: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1:
            raise ValueError("singular values must be a vector")
        if values.size and (np.any(values < 0.0) or np.any(np.diff(values) > 0.0)):
            raise ValueError("singular values must be nonnegative and nonincreasing")
        k = values.size
        if self.left.shape[1] != k or self.right.shape[1] != k:
            raise ValueError("factor column counts must match the number of singular values")

    def reconstruct(self):
        return (self.left * self.values) @ self.right.T


@dataclass(frozen=True)
class ConstraintSet:
    """The set {W : rank(W) <= rank, spectral_norm(W) <= spectral}.

    spectral = 0 is allowed and denotes the zero-matrix class.
    """

    rank: int
    spectral: float

    def __post_init__(self):
        as_positive_int(self.rank, "rank")
        as_real(self.spectral, "spectral", minimum=0.0)


def svd(matrix):
    """Thin SVD as SvdFactors; fails loudly instead of returning partial factors."""
    m = as_matrix(matrix)
    try:
        u, s, vt = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(
            f"factorization of {m.shape[0]}x{m.shape[1]} matrix "
            f"(frobenius {np.linalg.norm(m):.3e}) did not converge: {exc}"
        ) from exc
    return SvdFactors(left=u, values=s, right=vt.T)


def singular_values(matrix):
    m = as_matrix(matrix)
    try:
        return np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SvdFailure(f"singular values of {m.shape} matrix did not converge: {exc}") from exc


def spectral_norm(matrix, tol=1e-10, max_iter=10_000):
    """Largest singular value by power iteration on M^T M.

    Deterministic start: all-ones plus a small index ramp; if that start lies
    in the null space, basis vectors are tried in order. Stops when successive
    estimates agree to relative `tol`; raises PowerIterationFailure (carrying
    the last estimate) if `max_iter` is hit first.
    """
    m = as_matrix(matrix)
    as_real(tol, "tol", minimum=0.0)
    if tol <= 0.0:
        raise ValueError(f"tol must be > 0, got {tol}")
    cols = m.shape[1]

    v = np.ones(cols) + 1e-6 * np.arange(1, cols + 1)
    v /= np.linalg.norm(v)
    if np.linalg.norm(m @ v) == 0.0:
        for k in range(cols):
            candidate = np.zeros(cols)
            candidate[k] = 1.0
            if np.linalg.norm(m @ candidate) > 0.0:
                v = candidate
                break
        else:
            return 0.0

    estimate = 0.0
    for _ in range(max_iter):
        u = m @ v
        previous, estimate = estimate, float(np.linalg.norm(u))
        if estimate == 0.0:
            return 0.0
        if abs(estimate - previous) <= tol * estimate:
            return estimate
        w = m.T @ u
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return estimate
        v = w / norm_w
    raise PowerIterationFailure(
        f"no convergence to rel tol {tol:g} in {max_iter} iterations "
        f"(last estimate {estimate:.17g})",
        last_estimate=estimate,
    )


def frobenius_norm(matrix):
    return float(np.linalg.norm(as_matrix(matrix)))


def l21_norm_of_transpose(matrix):
    """Sum of the Euclidean norms of the rows of `matrix`."""
    m = as_matrix(matrix)
    return float(np.sum(np.linalg.norm(m, axis=1)))


def ky_fan(matrix, order):
    """Sum of the top `order` singular values."""
    m = as_matrix(matrix)
    as_positive_int(order, "order")
    if order > min(m.shape):
        raise ValueError(f"order {order} exceeds min dimension {min(m.shape)}")
    return float(np.sum(singular_values(m)[:order]))


def numerical_rank(matrix, tol_rel=1e-8):
    """Count of singular values above tol_rel times the largest."""
    as_real(tol_rel, "tol_rel", minimum=0.0)
    if tol_rel <= 0.0:
        raise ValueError(f"tol_rel must be > 0, got {tol_rel}")
    s = singular_values(matrix)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol_rel * s[0]))


def project_rank_spectral(matrix, constraint):
    """Frobenius-nearest matrix with rank <= constraint.rank and spectral norm
    <= constraint.spectral: keep the top `rank` singular triples, clip their
    values at the cap, zero the rest. Ties at the truncation boundary keep the
    first triples in factor order.
    """
    m = as_matrix(matrix)
    if not isinstance(constraint, ConstraintSet):
        raise ValueError("constraint must be a ConstraintSet")
    if constraint.rank > min(m.shape):
        raise ValueError(
            f"rank cap {constraint.rank} exceeds min dimension {min(m.shape)}"
        )
    factors = svd(m)
    r = constraint.rank
    clipped = np.minimum(factors.values[:r], constraint.spectral)
    return (factors.left[:, :r] * clipped) @ factors.right[:, :r].T
