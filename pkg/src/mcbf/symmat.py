"""Dense symmetric-matrix kernel.

Everything downstream (barrier constructions, the SDP filter, the scenario
geometry) funnels through these few operations: symmetrize-on-construction,
eigendecomposition with an orthonormal basis, spectral application of a scalar
function, Frobenius products, and PSD tests.  Matrices are desk-scale
(p <= ~12), so plain dense LAPACK via numpy is the whole story.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, NumericalFailure

# Construction rejects inputs whose asymmetry exceeds this relative tolerance;
# smaller asymmetries are averaged away.
SYMMETRY_RTOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """A real symmetric p x p matrix, symmetrized and made read-only on construction."""

    a: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise DimensionError("matrix dimension must be at least 1")
        skew = np.abs(a - a.T)
        if np.any(skew > SYMMETRY_RTOL * (1.0 + np.abs(a))):
            raise ValueError(f"input is not symmetric (max asymmetry {skew.max():.3e})")
        object.__setattr__(self, "a", _frozen(0.5 * (a + a.T)))

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    @staticmethod
    def zeros(p: int) -> "SymMatrix":
        return SymMatrix(np.zeros((p, p)))

    @staticmethod
    def identity(p: int) -> "SymMatrix":
        return SymMatrix(np.eye(p))


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenvalues ascending, paired with orthonormal eigenvector columns."""

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(np.array(self.values, dtype=float)))
        object.__setattr__(self, "vectors", _frozen(np.array(self.vectors, dtype=float)))


def eig_sym(H: SymMatrix) -> EigenDecomposition:
    """Full symmetric eigendecomposition, eigenvalues ascending.

    Raises NumericalFailure if the underlying routine does not converge
    (ill-conditioned or non-finite input); never returns silently wrong data.
    """
    try:
        values, vectors = np.linalg.eigh(H.a)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"symmetric eigendecomposition failed: {exc}") from exc
    if not (np.isfinite(values).all() and np.isfinite(vectors).all()):
        raise NumericalFailure("symmetric eigendecomposition returned non-finite values")
    return EigenDecomposition(values, vectors)


def apply_classK_matrix(H: SymMatrix, alpha: Callable[[np.ndarray], np.ndarray]) -> SymMatrix:
    """Apply a scalar function to H through its spectrum: V diag(alpha(lambda)) V^T.

    The result commutes with H and its eigenvalue multiset is alpha applied to
    the eigenvalues of H.  The eigenvector basis is orthonormal, so the result
    is basis-independent even at repeated eigenvalues.
    """
    dec = eig_sym(H)
    mapped = np.asarray(alpha(dec.values), dtype=float)
    return SymMatrix((dec.vectors * mapped) @ dec.vectors.T)


def frobenius(A: SymMatrix, B: SymMatrix) -> float:
    """Frobenius product sum_ij A_ij B_ij  (equals trace(A B) for symmetric A, B)."""
    if A.dim != B.dim:
        raise DimensionError(f"dimension mismatch: {A.dim} vs {B.dim}")
    return float(np.sum(A.a * B.a))


def is_psd(H: SymMatrix, tol: float = 0.0) -> bool:
    """True iff the smallest eigenvalue of H is >= -tol."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return bool(eig_sym(H).values[0] >= -tol)
