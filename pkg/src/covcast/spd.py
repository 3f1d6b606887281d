"""Geometry of the manifold of complex Hermitian positive-definite matrices.

Covariance matrices live on the open cone of Hermitian positive-definite
(HPD) matrices.  This module provides the matrix functions (log, exp, sqrt),
three metrics on the cone (Euclidean, log-Euclidean, affine-invariant) with
their distances and exponential/logarithmic maps, and weighted barycenters
(Fréchet means) under each metric.

All operations are pure functions; :class:`SPDMatrix` and
:class:`HermitianTangent` are immutable wrappers around read-only arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "HERMITIAN_ATOL",
    "KARCHER_MAX_ITER",
    "KARCHER_TOL",
    "BarycenterResult",
    "HermitianTangent",
    "Metric",
    "NotHermitianError",
    "NotPositiveDefiniteError",
    "SPDMatrix",
    "barycenter",
    "distance",
    "exp_map",
    "log_map",
    "matrix_exp",
    "matrix_log",
    "matrix_sqrt",
]

# Absolute tolerance for the Hermitian gate at construction.
HERMITIAN_ATOL = 1e-12

# Stopping rule for the Karcher (affine-invariant barycenter) iteration:
# tangent-mean Frobenius norm below KARCHER_TOL, hard cap on iterations.
# For badly conditioned inputs the residual bottoms out above KARCHER_TOL at
# the float64 noise floor; once it is below KARCHER_FLOOR_TOL and stops
# improving for KARCHER_STALL_LIMIT iterations, the best iterate is accepted
# as the numerically attained fixed point.
KARCHER_TOL = 1e-10
KARCHER_FLOOR_TOL = 1e-8
KARCHER_STALL_LIMIT = 5
KARCHER_MAX_ITER = 200


class NotHermitianError(ValueError):
    """Input matrix is not Hermitian within tolerance."""


class NotPositiveDefiniteError(ValueError):
    """Input matrix has an eigenvalue outside the positive-definite cone."""


def _as_square_complex(entries) -> np.ndarray:
    mat = np.asarray(entries, dtype=np.complex128)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mat.shape}")
    if not np.all(np.isfinite(mat.view(np.float64))):
        raise ValueError("matrix entries must be finite")
    return mat


def _check_hermitian(mat: np.ndarray) -> np.ndarray:
    """Gate on Hermitian symmetry, then symmetrize to absorb round-off."""
    defect = np.abs(mat - mat.conj().T).max() if mat.size else 0.0
    if defect > HERMITIAN_ATOL:
        raise NotHermitianError(
            f"matrix is not Hermitian: max |X - X^H| = {defect:.3e} "
            f"exceeds {HERMITIAN_ATOL:.0e}"
        )
    return (mat + mat.conj().T) / 2


class SPDMatrix:
    """Complex Hermitian positive-definite matrix.

    The constructor enforces Hermitian symmetry to within 1e-12 absolute and
    strict positive definiteness (smallest eigenvalue > 0); the stored array
    is exactly Hermitian (symmetrized) and read-only.

    Parameters
    ----------
    entries : array_like, shape (n, n)
        Square complex matrix.

    Raises
    ------
    NotHermitianError
        If the Hermitian defect exceeds 1e-12.
    NotPositiveDefiniteError
        If the smallest eigenvalue is not strictly positive.
    """

    __slots__ = ("_mat",)

    def __init__(self, entries) -> None:
        mat = _check_hermitian(_as_square_complex(entries))
        eigmin = np.linalg.eigvalsh(mat)[0] if mat.size else 0.0
        if not eigmin > 0.0:
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite: min eigenvalue = {eigmin:.3e}"
            )
        mat.setflags(write=False)
        self._mat = mat

    @property
    def mat(self) -> np.ndarray:
        """Underlying (n, n) complex array, read-only."""
        return self._mat

    @property
    def dim(self) -> int:
        return self._mat.shape[0]

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"SPDMatrix(dim={self.dim})"


class HermitianTangent:
    """Complex Hermitian matrix, an element of a tangent space on the cone.

    Eigenvalues are unrestricted in sign; only Hermitian symmetry (within
    1e-12 absolute) is enforced.
    """

    __slots__ = ("_mat",)

    def __init__(self, entries) -> None:
        mat = _check_hermitian(_as_square_complex(entries))
        mat.setflags(write=False)
        self._mat = mat

    @property
    def mat(self) -> np.ndarray:
        return self._mat

    @property
    def dim(self) -> int:
        return self._mat.shape[0]

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"HermitianTangent(dim={self.dim})"


class Metric(Enum):
    """Metric on the cone of Hermitian positive-definite matrices."""

    EUCLIDEAN = "euclidean"
    LOG_EUCLIDEAN = "log_euclidean"
    AFFINE_INVARIANT = "affine_invariant"

    @property
    def label(self) -> str:
        return self.value


# ---------------------------------------------------------------------------
# Array-level matrix functions (internal; public API works on wrapper types).
# Inputs are symmetrized before eigendecomposition so round-off asymmetry
# never reaches eigh; outputs are re-symmetrized so they are exactly Hermitian.


def _eigh_sym(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return np.linalg.eigh((a + a.conj().T) / 2)


def _apply_spectral(a: np.ndarray, fn) -> np.ndarray:
    w, u = _eigh_sym(a)
    out = (u * fn(w)) @ u.conj().T
    return (out + out.conj().T) / 2


def _logm(a: np.ndarray) -> np.ndarray:
    w, u = _eigh_sym(a)
    if w[0] <= 0.0:
        raise NotPositiveDefiniteError(
            f"matrix logarithm undefined: min eigenvalue = {w[0]:.3e}"
        )
    out = (u * np.log(w)) @ u.conj().T
    return (out + out.conj().T) / 2


def _expm(a: np.ndarray) -> np.ndarray:
    return _apply_spectral(a, np.exp)


def _sqrtm(a: np.ndarray) -> np.ndarray:
    w, u = _eigh_sym(a)
    if w[0] <= 0.0:
        raise NotPositiveDefiniteError(
            f"matrix square root undefined on the cone: min eigenvalue = {w[0]:.3e}"
        )
    out = (u * np.sqrt(w)) @ u.conj().T
    return (out + out.conj().T) / 2


def _sqrtm_invsqrtm(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Principal square root and its inverse from a single eigendecomposition."""
    w, u = _eigh_sym(a)
    if w[0] <= 0.0:
        raise NotPositiveDefiniteError(
            f"matrix square root undefined on the cone: min eigenvalue = {w[0]:.3e}"
        )
    s = np.sqrt(w)
    sq = (u * s) @ u.conj().T
    isq = (u / s) @ u.conj().T
    return (sq + sq.conj().T) / 2, (isq + isq.conj().T) / 2


def _frob(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, "fro"))


# ---------------------------------------------------------------------------
# Matrix functions on wrapper types


def matrix_log(x: SPDMatrix) -> HermitianTangent:
    """Principal matrix logarithm U diag(ln λ_i) U^H of a positive-definite X."""
    return HermitianTangent(_logm(x.mat))


def matrix_exp(v: HermitianTangent) -> SPDMatrix:
    """Matrix exponential U diag(e^{μ_i}) U^H; always positive definite."""
    return SPDMatrix(_expm(v.mat))


def matrix_sqrt(x: SPDMatrix) -> SPDMatrix:
    """Principal square root S with S @ S = X."""
    return SPDMatrix(_sqrtm(x.mat))


# ---------------------------------------------------------------------------
# Distances and exponential/logarithmic maps


def _check_same_dim(x: SPDMatrix, other, what: str) -> None:
    if x.dim != other.dim:
        raise ValueError(f"dimension mismatch in {what}: {x.dim} vs {other.dim}")


def distance(metric: Metric, x: SPDMatrix, y: SPDMatrix) -> float:
    """Distance between two positive-definite matrices under a metric.

    Euclidean uses ``||X - Y||_F``, log-Euclidean ``||log X - log Y||_F``,
    and affine-invariant ``||log(X^{1/2} Y^{-1} X^{1/2})||_F`` (equivalently
    the root sum of squared log-eigenvalues of ``X^{-1/2} Y X^{-1/2}``).

    Parameters
    ----------
    metric : Metric
    x, y : SPDMatrix
        Points on the cone, same dimension.

    Returns
    -------
    float
        Nonnegative distance; zero iff ``x == y``.
    """
    _check_same_dim(x, y, "distance")
    if metric is Metric.EUCLIDEAN:
        return _frob(x.mat - y.mat)
    if metric is Metric.LOG_EUCLIDEAN:
        return _frob(_logm(x.mat) - _logm(y.mat))
    # Affine invariant: eigenvalues of X^{-1/2} Y X^{-1/2} are the same as
    # those of X^{-1} Y, and their logs give the geodesic distance.
    _, isq = _sqrtm_invsqrtm(x.mat)
    w = np.linalg.eigvalsh(_hermitian_congruence(isq, y.mat))
    if w[0] <= 0.0:
        raise NotPositiveDefiniteError(
            "affine-invariant distance: whitened matrix lost positive "
            f"definiteness (min eigenvalue {w[0]:.3e})"
        )
    return float(np.sqrt(np.sum(np.log(w) ** 2)))


def _hermitian_congruence(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """A @ X @ A^H for Hermitian A, X, re-symmetrized exactly."""
    out = a @ x @ a.conj().T
    return (out + out.conj().T) / 2


def exp_map(metric: Metric, x: SPDMatrix, v: HermitianTangent) -> SPDMatrix:
    """Exponential map: shoot from ``x`` with tangent velocity ``v``.

    Euclidean: ``X + V`` (raises if the result leaves the cone).
    Log-Euclidean: ``exp(log X + V)``.
    Affine-invariant: ``X^{1/2} exp(X^{-1/2} V X^{-1/2}) X^{1/2}``.
    """
    _check_same_dim(x, v, "exp_map")
    if metric is Metric.EUCLIDEAN:
        try:
            return SPDMatrix(x.mat + v.mat)
        except NotPositiveDefiniteError as exc:
            raise NotPositiveDefiniteError(
                "Euclidean exponential map left the positive-definite cone"
            ) from exc
    if metric is Metric.LOG_EUCLIDEAN:
        return SPDMatrix(_expm(_logm(x.mat) + v.mat))
    sq, isq = _sqrtm_invsqrtm(x.mat)
    inner = _expm(_hermitian_congruence(isq, v.mat))
    return SPDMatrix(_hermitian_congruence(sq, inner))


def log_map(metric: Metric, x: SPDMatrix, y: SPDMatrix) -> HermitianTangent:
    """Logarithmic map: tangent velocity at ``x`` reaching ``y``.

    Inverse of :func:`exp_map` for every metric:
    ``exp_map(m, x, log_map(m, x, y)) == y``.
    """
    _check_same_dim(x, y, "log_map")
    if metric is Metric.EUCLIDEAN:
        return HermitianTangent(y.mat - x.mat)
    if metric is Metric.LOG_EUCLIDEAN:
        return HermitianTangent(_logm(y.mat) - _logm(x.mat))
    sq, isq = _sqrtm_invsqrtm(x.mat)
    inner = _logm(_hermitian_congruence(isq, y.mat))
    return HermitianTangent(_hermitian_congruence(sq, inner))


# ---------------------------------------------------------------------------
# Weighted barycenters


@dataclass(frozen=True)
class BarycenterResult:
    """Weighted barycenter plus convergence diagnostics.

    ``converged`` is always True for the closed-form metrics; for the
    affine-invariant metric it reports whether the fixed-point iteration
    drove the tangent-mean norm below tolerance within the iteration cap.
    """

    point: SPDMatrix
    converged: bool
    iterations: int
    residual: float


def _check_weights(weights, n_points: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n_points,):
        raise ValueError(f"expected {n_points} weights, got shape {w.shape}")
    if np.any(w < 0.0):
        raise ValueError("weights must be nonnegative")
    total = float(w.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1 within 1e-9, got {total!r}")
    return w


def barycenter(
    metric: Metric,
    points: Sequence[SPDMatrix] | Iterable[SPDMatrix],
    weights,
) -> BarycenterResult:
    """Weighted barycenter (Fréchet mean) of positive-definite matrices.

    Minimizes ``sum_i w_i d(R_i, Y)^2`` over the cone.  The Euclidean and
    log-Euclidean barycenters have closed forms (``sum w_i R_i`` and
    ``exp(sum w_i log R_i)``).  The affine-invariant barycenter is computed
    by the Karcher fixed-point iteration

        ``X <- X^{1/2} exp(sum_i w_i log(X^{-1/2} R_i X^{-1/2})) X^{1/2}``

    initialized at the log-Euclidean barycenter and stopped when the
    tangent-mean Frobenius norm drops below ``KARCHER_TOL`` (unit step,
    at most ``KARCHER_MAX_ITER`` iterations).

    Parameters
    ----------
    metric : Metric
    points : sequence of SPDMatrix
        At least one point, all of the same dimension.
    weights : array_like
        Nonnegative, summing to 1 within 1e-9, one per point.

    Returns
    -------
    BarycenterResult
    """
    points = list(points)
    if not points:
        raise ValueError("barycenter requires at least one point")
    dim = points[0].dim
    for p in points[1:]:
        _check_same_dim(points[0], p, "barycenter")
    w = _check_weights(weights, len(points))

    # Zero-weight points cannot move the barycenter; dropping them avoids
    # needless eigendecompositions for one-hot and sparse weight vectors.
    active = np.flatnonzero(w > 0.0)
    mats = [points[int(i)].mat for i in active]
    wa = w[active]

    if metric is Metric.EUCLIDEAN:
        acc = np.tensordot(wa, np.stack(mats), axes=1)
        return BarycenterResult(SPDMatrix(acc), True, 0, 0.0)

    log_mean = np.tensordot(wa, np.stack([_logm(m) for m in mats]), axes=1)
    le_point = _expm(log_mean)
    if metric is Metric.LOG_EUCLIDEAN:
        return BarycenterResult(SPDMatrix(le_point), True, 0, 0.0)

    x = le_point
    iterations = 0
    best_residual = np.inf
    best_x = x
    stall = 0
    step = 1.0
    prev_residual = np.inf
    while True:
        sq, isq = _sqrtm_invsqrtm(x)
        tangent = np.zeros((dim, dim), dtype=np.complex128)
        for wi, m in zip(wa, mats):
            tangent += wi * _logm(_hermitian_congruence(isq, m))
        residual = _frob(tangent)
        if residual < KARCHER_TOL:
            return BarycenterResult(SPDMatrix(x), True, iterations, residual)
        if residual < best_residual:
            best_residual, best_x, stall = residual, x, 0
        else:
            stall += 1
        if best_residual < KARCHER_FLOOR_TOL and stall >= KARCHER_STALL_LIMIT:
            # round-off noise floor: the fixed point is attained to the
            # accuracy float64 permits for this conditioning
            return BarycenterResult(SPDMatrix(best_x), True, iterations, best_residual)
        if iterations >= KARCHER_MAX_ITER:
            return BarycenterResult(SPDMatrix(best_x), False, iterations, best_residual)
        if residual > prev_residual:
            # unit step can settle into a limit cycle on widely spread
            # ensembles; damping restores contraction without moving the
            # fixed point
            step = max(step / 2.0, 2.0**-10)
        x = _hermitian_congruence(sq, _expm(step * tangent))
        prev_residual = residual
        iterations += 1
