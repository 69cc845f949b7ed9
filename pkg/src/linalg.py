import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.linalg import LinAlgWarning

from src.errors import InconsistentSymbol, NoConvergence, SingularMatrix

logger = logging.getLogger(__name__)

# Smallest admissible pivot after row scaling.
PIVOT_TOL = 1e-13
MAX_EIGEN_SIZE = 64


@dataclass(frozen=True)
class TruncatedSeries:
    """
    Formal power series in the variable (i*theta), truncated at order M.
    coefficients[n] multiplies (i*theta)**n.
    """
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValueError("series needs at least the constant coefficient")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def order(self) -> int:
        return self.coefficients.size - 1

    def __getitem__(self, n: int) -> float:
        return float(self.coefficients[n])

    def evaluate(self, z: complex) -> complex:
        return complex(np.polynomial.polynomial.polyval(z, self.coefficients))


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.size == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    return A


def _lu_scaled(A: np.ndarray):
    """LU factorisation of the row-equilibrated matrix. Returns (lu, piv, row_scale)."""
    scale = np.max(np.abs(A), axis=1)
    if np.any(scale == 0.0):
        raise SingularMatrix("matrix has a zero row")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A / scale[:, None])
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_TOL:
        raise SingularMatrix(
            f"pivot {pivots.min():.3e} below tolerance {PIVOT_TOL:.0e} "
            f"for a {A.shape[0]}x{A.shape[0]} system"
        )
    return lu, piv, scale


def solve(A, b) -> np.ndarray:
    """
    Solves A x = b with scaled partial pivoting. b may be a vector or a matrix
    of right-hand sides.
    """
    A = _as_square(A)
    b = np.asarray(b, dtype=float)
    lu, piv, scale = _lu_scaled(A)
    rhs = b / scale if b.ndim == 1 else b / scale[:, None]
    return scipy.linalg.lu_solve((lu, piv), rhs)


def inverse(A) -> np.ndarray:
    A = _as_square(A)
    return solve(A, np.eye(A.shape[0]))


def determinant(A) -> float:
    A = _as_square(A)
    return float(scipy.linalg.det(A))


def condition_estimate(A) -> float:
    """1-norm condition number, computed exactly from the explicit inverse."""
    A = _as_square(A)
    return float(np.linalg.norm(A, 1) * np.linalg.norm(inverse(A), 1))


def sort_eigenvalues(values) -> np.ndarray:
    """Descending magnitude, ties broken by ascending phase."""
    values = np.asarray(values, dtype=complex)
    magnitude = np.round(np.abs(values), 12)
    phase = np.angle(values)
    order = np.lexsort((phase, -magnitude))
    return values[order]


def eigenvalues(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.size == 0:
        raise ValueError(f"expected a non-empty square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_EIGEN_SIZE:
        raise ValueError(f"eigenvalues limited to size {MAX_EIGEN_SIZE}, got {A.shape[0]}")
    if not np.all(np.isfinite(A)):
        raise NoConvergence("matrix has non-finite entries")
    try:
        values = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as e:
        raise NoConvergence(f"eigenvalue iteration did not converge: {e}") from e
    return sort_eigenvalues(values)


def series_log(S: TruncatedSeries, tol: float = 1e-12) -> TruncatedSeries:
    """
    Logarithm of a formal power series with unit constant term, via
    n*s_n = sum_{k=1..n} k*l_k*s_{n-k}.
    """
    s = S.coefficients
    if abs(s[0] - 1.0) > tol:
        raise InconsistentSymbol(f"constant term {s[0]!r} differs from 1 by more than {tol}")
    M = S.order
    log = np.zeros(M + 1)
    for n in range(1, M + 1):
        acc = n * s[n]
        for k in range(1, n):
            acc -= k * log[k] * s[n - k]
        log[n] = acc / (n * s[0])
    return TruncatedSeries(log)


def series_exp(L: TruncatedSeries) -> TruncatedSeries:
    l = L.coefficients
    M = L.order
    out = np.zeros(M + 1)
    out[0] = np.exp(l[0])
    for n in range(1, M + 1):
        out[n] = sum(k * l[k] * out[n - k] for k in range(1, n + 1)) / n
    return TruncatedSeries(out)
