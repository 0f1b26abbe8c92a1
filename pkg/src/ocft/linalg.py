"""Dense complex linear algebra and combinatorial primitives.

Everything downstream (Pfaffian kernels, symmetric-polynomial closed forms,
Beta-function sums) is built on the handful of routines in this module:

* ``pfaffian``          -- skew-symmetric elimination with partial pivoting
* ``determinant``       -- LU via LAPACK, exact small-dimension formulas
* ``elementary_symmetric``  -- stable product-polynomial scheme
* ``log_gamma`` / ``log_beta`` -- log-domain special functions

All functions are pure; none keep state.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionError, DomainError, ShapeError

__all__ = [
    "as_complex_matrix",
    "determinant",
    "elementary_symmetric",
    "is_skew",
    "log_beta",
    "log_gamma",
    "pfaffian",
    "symmetrize_skew",
]


def as_complex_matrix(a) -> np.ndarray:
    """Return ``a`` as a 2-D complex ndarray without copying when possible."""
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got ndim={m.ndim}")
    return m


def is_skew(a, tol: float | None = None) -> bool:
    """Check |A + A^T|_max <= tol.

    ``tol`` defaults to ``1e-12 * |A|_max`` (absolute 1e-12 for a zero
    matrix) so that the check scales with the data.
    """
    m = as_complex_matrix(a)
    if m.shape[0] != m.shape[1]:
        return False
    scale = np.abs(m).max() if m.size else 0.0
    if tol is None:
        tol = 1e-12 * max(scale, 1.0)
    return bool(np.abs(m + m.T).max() <= tol) if m.size else True


def symmetrize_skew(a) -> np.ndarray:
    """Project onto the skew part, (A - A^T)/2, to suppress rounding drift."""
    m = as_complex_matrix(a)
    return 0.5 * (m - m.T)


def pfaffian(a, tol: float | None = None) -> complex:
    """Pfaffian of a complex skew-symmetric matrix.

    Uses skew-symmetric (Parlett-Reid style) elimination with partial
    pivoting: the matrix is reduced to tridiagonal form by congruence with
    unit lower-triangular Gauss transforms, and the Pfaffian is the product
    of the surviving superdiagonal entries times the pivot sign.  O(n^3),
    numerically stable for the small dimensions used here.

    Raises DimensionError for odd dimension, ShapeError if the skew check
    fails at ``tol`` (same default as :func:`is_skew`).
    """
    m = as_complex_matrix(a)
    n = m.shape[0]
    if m.shape[0] != m.shape[1] or n % 2 == 1:
        raise DimensionError(f"pfaffian needs an even square matrix, got {m.shape}")
    if not is_skew(m, tol):
        raise ShapeError("matrix is not skew-symmetric within tolerance")
    if n == 0:
        return 1.0 + 0.0j
    m = symmetrize_skew(m)

    val = 1.0 + 0.0j
    for k in range(0, n - 1, 2):
        # pivot the largest entry of column k below the diagonal into (k+1, k)
        kp = k + 1 + int(np.abs(m[k + 1:, k]).argmax())
        if kp != k + 1:
            m[[k + 1, kp], k:] = m[[kp, k + 1], k:]
            m[k:, [k + 1, kp]] = m[k:, [kp, k + 1]]
            val = -val
        pivot = m[k + 1, k]
        if pivot == 0.0:
            return 0.0 + 0.0j
        val *= m[k, k + 1]
        if k + 2 < n:
            tau = m[k + 2:, k] / pivot
            col = m[k + 2:, k + 1]
            m[k + 2:, k + 2:] += np.outer(tau, col) - np.outer(col, tau)
    return complex(val)


def determinant(a) -> complex:
    """Determinant of a square complex matrix.

    Dimensions 0..2 use the exact formula; larger matrices go through
    LAPACK's partially pivoted LU (``numpy.linalg.det``).
    """
    m = as_complex_matrix(a)
    n = m.shape[0]
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"determinant needs a square matrix, got {m.shape}")
    if n == 0:
        return 1.0 + 0.0j
    if n == 1:
        return complex(m[0, 0])
    if n == 2:
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    return complex(np.linalg.det(m))


def elementary_symmetric(values, l: int) -> float:
    """l-th elementary symmetric polynomial of the given values.

    Builds the coefficients of prod_i (1 + v_i t) by repeated convolution,
    which is numerically stable (no alternating Newton sums), then reads off
    the t^l coefficient.  ``l`` must lie in [0, len(values)].
    """
    v = np.asarray(values, dtype=float).ravel()
    if not np.all(np.isfinite(v)):
        raise DomainError("values must be finite")
    if not 0 <= l <= v.size:
        raise IndexError(f"l={l} out of range for {v.size} values")
    return float(elementary_symmetric_all(v)[l])


def elementary_symmetric_all(values) -> np.ndarray:
    """All elementary symmetric polynomials S^0..S^n as a vector."""
    v = np.asarray(values, dtype=float).ravel()
    coeffs = np.zeros(v.size + 1)
    coeffs[0] = 1.0
    for k, x in enumerate(v):
        coeffs[1:k + 2] += x * coeffs[:k + 1].copy()
    return coeffs


def log_gamma(x: float) -> float:
    """Natural log of Gamma(x) for x > 0."""
    if x <= 0:
        raise DomainError(f"log_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def log_beta(x: float, y: float) -> float:
    """log B(x, y) = log Gamma(x) + log Gamma(y) - log Gamma(x+y)."""
    if x <= 0 or y <= 0:
        raise DomainError(f"log_beta needs positive arguments, got ({x}, {y})")
    return math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y)


def random_skew(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Random dense complex skew-symmetric matrix (test helper)."""
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * (a - a.T) / 2.0
