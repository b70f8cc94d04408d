"""Dense complex-matrix primitives shared by every other service.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; rank and
invertibility decisions go through singular values with the thresholds held
by :class:`Tolerances`.
"""
import logging
from enum import Enum
from typing import Tuple

import numpy as np
import numpy.typing as npt
import scipy.linalg
from pydantic import BaseModel, ConfigDict, Field

from services.errors import DimensionMismatch, InvalidInput, NotInvertible

logger = logging.getLogger(__name__)

CMatrix = npt.NDArray[np.complex128]

# Ties in the phase normalization are broken by the first index within this
# relative distance of the largest modulus.
_PHASE_TIE_RTOL = 1e-9


class Tolerances(BaseModel):
    """Numerical policy used for rank, equality and strict-inequality tests."""
    model_config = ConfigDict(frozen=True)

    rank_rtol: float = Field(default=1e-10, gt=0, description="Relative threshold for numerical rank")
    eq_atol: float = Field(default=1e-9, gt=0, description="Absolute tolerance for operator-norm equality")
    margin_delta: float = Field(default=1e-8, gt=0, lt=1, description="Margin subtracted from strict inequalities")
    cond_max: float = Field(default=1e12, gt=0, description="Largest accepted condition number")


DEFAULT_TOLERANCES = Tolerances()


class TriState(str, Enum):
    TRUE = "true"
    FALSE = "false"
    INDETERMINATE = "indeterminate"

    @property
    def is_true(self) -> bool:
        return self is TriState.TRUE

    @property
    def is_false(self) -> bool:
        return self is TriState.FALSE

    @property
    def is_determinate(self) -> bool:
        return self is not TriState.INDETERMINATE

    @classmethod
    def from_bool(cls, value: bool) -> "TriState":
        return cls.TRUE if value else cls.FALSE

    @classmethod
    def all_of(cls, *states: "TriState") -> "TriState":
        """Conjunction: any FALSE wins, then any INDETERMINATE."""
        if any(s is cls.FALSE for s in states):
            return cls.FALSE
        if any(s is cls.INDETERMINATE for s in states):
            return cls.INDETERMINATE
        return cls.TRUE


def strictly_below(value: float, bound: float, tol: Tolerances = DEFAULT_TOLERANCES) -> TriState:
    """Decide ``value < bound`` for quantities whose negation is ``value == bound``.

    Values at least ``margin_delta`` below the bound are TRUE, values within
    the equality tolerance of the bound (or above it) are FALSE, anything in
    between is reported as INDETERMINATE.
    """
    if value <= bound - tol.margin_delta:
        return TriState.TRUE
    if value >= bound - min(tol.eq_atol, tol.margin_delta):
        return TriState.FALSE
    return TriState.INDETERMINATE


def nearly_zero(value: float, tol: Tolerances = DEFAULT_TOLERANCES) -> TriState:
    """Decide ``value == 0`` for a nonnegative residual."""
    if value <= tol.eq_atol:
        return TriState.TRUE
    if value > tol.margin_delta:
        return TriState.FALSE
    return TriState.INDETERMINATE


def as_cmatrix(A) -> CMatrix:
    """Coerce ``A`` to a finite 2-D complex128 array."""
    try:
        M = np.asarray(A, dtype=np.complex128)
    except (TypeError, ValueError) as e:
        raise InvalidInput(f"Cannot interpret value as a complex matrix: {e}") from e
    if M.ndim != 2:
        raise InvalidInput(f"Expected a 2-D matrix, got an array with {M.ndim} dimensions")
    if not np.all(np.isfinite(M)):
        raise InvalidInput("Matrix has non-finite entries")
    return M


def adjoint(A: CMatrix) -> CMatrix:
    return A.conj().T


def identity(n: int) -> CMatrix:
    return np.eye(n, dtype=np.complex128)


def singular_values(A: CMatrix) -> np.ndarray:
    """Singular values in decreasing order; empty for an empty matrix."""
    A = as_cmatrix(A)
    if A.size == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(A)


def phase_normalize(Q: CMatrix) -> CMatrix:
    """Rotate each column so its first entry of largest modulus is real positive."""
    Q = np.array(Q, dtype=np.complex128, copy=True)
    for j in range(Q.shape[1]):
        mags = np.abs(Q[:, j])
        top = mags.max()
        if top == 0:
            continue
        idx = int(np.flatnonzero(mags >= top * (1 - _PHASE_TIE_RTOL))[0])
        Q[:, j] *= np.conj(Q[idx, j]) / mags[idx]
    return Q


def orthonormalize(A, tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[CMatrix, int]:
    """Orthonormal, phase-normalized basis of the column space of ``A``.

    The numerical rank counts singular values above ``rank_rtol * sigma_max``.
    A zero (or empty) matrix yields rank 0 and an ``n x 0`` basis.
    """
    A = as_cmatrix(A)
    n = A.shape[0]
    if A.size == 0:
        return np.zeros((n, 0), dtype=np.complex128), 0
    U, s, _ = scipy.linalg.svd(A, full_matrices=False)
    if s[0] == 0:
        return np.zeros((n, 0), dtype=np.complex128), 0
    rank = int(np.count_nonzero(s > tol.rank_rtol * s[0]))
    return phase_normalize(U[:, :rank]), rank


def op_norm(A) -> float:
    """Operator 2-norm (largest singular value)."""
    s = singular_values(A)
    return float(s[0]) if s.size else 0.0


def condition_number(A) -> float:
    A = as_cmatrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"Condition number needs a square matrix, got {A.shape}")
    s = singular_values(A)
    if s.size == 0:
        return 1.0
    if s[-1] == 0:
        return float("inf")
    return float(s[0] / s[-1])


def inverse(A, tol: Tolerances = DEFAULT_TOLERANCES) -> CMatrix:
    """Inverse of a square matrix whose condition number is at most ``cond_max``."""
    A = as_cmatrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"Only square matrices can be inverted, got {A.shape}")
    if A.size == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    cond = condition_number(A)
    if cond > tol.cond_max:
        raise NotInvertible(f"Condition number {cond:.3e} exceeds {tol.cond_max:.1e}", cond=cond)
    return scipy.linalg.inv(A)


def polar_unitary(S, tol: Tolerances = DEFAULT_TOLERANCES) -> CMatrix:
    """Unitary factor ``W = S |S|^{-1}`` of an invertible matrix.

    Computed from the SVD ``S = U diag(s) V^H`` as ``W = U V^H``.
    """
    S = as_cmatrix(S)
    if S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"Polar factor needs a square matrix, got {S.shape}")
    if S.size == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    cond = condition_number(S)
    if cond > tol.cond_max:
        raise NotInvertible(f"Polar factor of a numerically singular matrix (cond {cond:.3e})", cond=cond)
    U, _, Vh = scipy.linalg.svd(S)
    return U @ Vh


def gap_distance(P1, P2) -> float:
    """Operator-norm distance between two (projector) matrices."""
    P1, P2 = as_cmatrix(P1), as_cmatrix(P2)
    if P1.shape != P2.shape or P1.shape[0] != P1.shape[1]:
        raise DimensionMismatch(f"Gap needs square matrices of equal size, got {P1.shape} and {P2.shape}")
    return op_norm(P1 - P2)
