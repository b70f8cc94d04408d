"""Subspaces of C^n, orthogonal and oblique projectors, graph charts and the
linear-group action on the Grassmannian."""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence, Tuple

import numpy as np
import scipy.linalg

from services.errors import DimensionMismatch, InvalidInput, NotComplementary
from services.substrate import (
    DEFAULT_TOLERANCES,
    CMatrix,
    Tolerances,
    TriState,
    adjoint,
    as_cmatrix,
    gap_distance,
    identity,
    inverse,
    op_norm,
    orthonormalize,
    singular_values,
    strictly_below,
)

logger = logging.getLogger(__name__)

# Bases handed to the Subspace constructor must be orthonormal to this level.
_ORTHONORMAL_ATOL = 1e-8


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of C^n held through an orthonormal column basis."""
    ambient_dim: int
    basis: CMatrix

    def __post_init__(self):
        basis = as_cmatrix(self.basis)
        if basis.shape[0] != self.ambient_dim:
            raise DimensionMismatch(
                f"Basis has {basis.shape[0]} rows for ambient dimension {self.ambient_dim}")
        if basis.shape[1] > self.ambient_dim:
            raise InvalidInput(f"{basis.shape[1]} basis vectors cannot be independent in C^{self.ambient_dim}")
        if basis.shape[1] and op_norm(adjoint(basis) @ basis - identity(basis.shape[1])) > _ORTHONORMAL_ATOL:
            raise InvalidInput("Subspace basis is not orthonormal")
        basis = basis.copy()
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def from_columns(cls, A, tol: Tolerances = DEFAULT_TOLERANCES) -> "Subspace":
        """Column span of ``A`` with its canonical basis.

        The canonical basis is read off the orthogonal projector, so it depends
        only on the subspace (not on the spanning set that produced it).
        """
        A = as_cmatrix(A)
        Q, rank = orthonormalize(A, tol)
        if rank == 0:
            return cls(A.shape[0], Q)
        canonical, _ = orthonormalize(Q @ adjoint(Q), tol)
        return cls(A.shape[0], canonical[:, :rank])

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def projector(self) -> CMatrix:
        P = self.basis @ adjoint(self.basis)
        P.setflags(write=False)
        return P

    def equals(self, other: "Subspace", tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
        _check_same_ambient(self, other)
        return gap_distance(self.projector, other.projector) <= tol.eq_atol

    def __repr__(self):
        return f"Subspace(ambient_dim={self.ambient_dim}, dim={self.dim})"


def coordinate_subspace(n: int, indices: Sequence[int]) -> Subspace:
    """span(e_i : i in indices), zero-based."""
    return Subspace(n, identity(n)[:, list(indices)])


def zero_subspace(n: int) -> Subspace:
    return Subspace(n, np.zeros((n, 0), dtype=np.complex128))


def full_space(n: int) -> Subspace:
    return Subspace(n, identity(n))


def _check_same_ambient(*subspaces: Subspace):
    dims = {s.ambient_dim for s in subspaces}
    if len(dims) > 1:
        raise DimensionMismatch(f"Subspaces live in ambient spaces of dimensions {sorted(dims)}")


@dataclass(frozen=True, eq=False)
class OrthProjector:
    matrix: CMatrix
    subspace: Subspace


@dataclass(frozen=True, eq=False)
class ObliqueProjector:
    """Idempotent with range ``range_space`` and nullspace ``null_space``."""
    matrix: CMatrix
    range_space: Subspace
    null_space: Subspace


@dataclass(frozen=True, eq=False)
class GraphCoordinate:
    """Operator X: anchor⊥ -> anchor whose graph {w + Xw} is a subspace."""
    anchor: Subspace
    matrix: CMatrix

    def __post_init__(self):
        X = as_cmatrix(self.matrix)
        expected = (self.anchor.dim, self.anchor.ambient_dim - self.anchor.dim)
        if X.shape != expected:
            raise DimensionMismatch(f"Graph coordinate has shape {X.shape}, expected {expected}")
        object.__setattr__(self, "matrix", X)


@dataclass(frozen=True)
class ComponentIndex:
    i: int
    j: int


@dataclass(frozen=True)
class BuckholtzReport:
    diff_invertible: TriState
    norm_value: float
    norm_lt_one: TriState
    direct_sum: TriState

    @property
    def verdicts(self) -> Tuple[TriState, TriState, TriState]:
        return self.diff_invertible, self.norm_lt_one, self.direct_sum

    @property
    def all_true(self) -> bool:
        return all(v.is_true for v in self.verdicts)

    @property
    def determinate(self) -> bool:
        return all(v.is_determinate for v in self.verdicts)

    @property
    def consistent(self) -> bool:
        """The three criteria agree unless one of them is indeterminate."""
        return not self.determinate or len(set(self.verdicts)) == 1

    @property
    def margin(self) -> float:
        return 1.0 - self.norm_value


def orth_projector(S: Subspace) -> OrthProjector:
    return OrthProjector(S.projector, S)


def perp(S: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> Subspace:
    n, k = S.ambient_dim, S.dim
    if k == 0:
        return full_space(n)
    if k == n:
        return zero_subspace(n)
    U, _, _ = scipy.linalg.svd(S.basis, full_matrices=True)
    return Subspace.from_columns(U[:, k:], tol)


def symmetry(S: Subspace) -> CMatrix:
    return 2 * S.projector - identity(S.ambient_dim)


def principal_angles(S: Subspace, T: Subspace) -> np.ndarray:
    """Principal angles in radians, increasing."""
    _check_same_ambient(S, T)
    cosines = singular_values(adjoint(S.basis) @ T.basis)
    return np.sort(np.arccos(np.clip(cosines, 0.0, 1.0)))


def _smallest_singular_value(A: CMatrix) -> float:
    s = singular_values(A)
    return float(s[-1]) if s.size else 1.0


def buckholtz_report(S: Subspace, Z: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> BuckholtzReport:
    """Evaluate the three equivalent characterizations of ``S ∔ Z = H``.

    (a) P_S - P_Z invertible, (b) ||P_S + P_Z - 1|| < 1, (c) the stacked bases
    span C^n with dim S + dim Z = n. Each criterion is computed on its own and
    mapped onto the scale of (b) before thresholding: sigma_min(P_S - P_Z)^2
    and sigma_min([B_S B_Z])^2 equal 1 - v^2 and 1 - v respectively.
    """
    _check_same_ambient(S, Z)
    n = S.ambient_dim
    eye = identity(n)

    norm_value = op_norm(S.projector + Z.projector - eye)
    norm_lt_one = strictly_below(norm_value, 1.0, tol)

    s_diff = _smallest_singular_value(S.projector - Z.projector)
    diff_invertible = strictly_below(float(np.sqrt(max(0.0, 1.0 - s_diff ** 2))), 1.0, tol)

    if S.dim + Z.dim != n:
        direct_sum = TriState.FALSE
    else:
        s_stack = _smallest_singular_value(np.hstack([S.basis, Z.basis]))
        direct_sum = strictly_below(1.0 - s_stack ** 2, 1.0, tol)

    return BuckholtzReport(diff_invertible, norm_value, norm_lt_one, direct_sum)


def complementary(S: Subspace, Z: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> TriState:
    """Primary direct-sum decision: criterion (b) with margin."""
    return buckholtz_report(S, Z, tol).norm_lt_one


def _require_complementary(S: Subspace, Z: Subspace, tol: Tolerances, what: str) -> BuckholtzReport:
    report = buckholtz_report(S, Z, tol)
    if not report.all_true:
        raise NotComplementary(
            f"{what}: direct sum test failed (norm {report.norm_value:.6g}, verdicts "
            f"{[v.value for v in report.verdicts]})")
    return report


def oblique_projector(L: Subspace, K: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> ObliqueProjector:
    """P_{L∥K} = P_L (P_L - P_K)^{-1}."""
    _require_complementary(L, K, tol, "oblique projector")
    E = L.projector @ inverse(L.projector - K.projector, tol)
    return ObliqueProjector(E, L, K)


def oblique_projector_oracle(L: Subspace, K: Subspace) -> CMatrix:
    """Idempotent obtained by solving x = l + k for every standard basis vector x."""
    _check_same_ambient(L, K)
    n = L.ambient_dim
    if L.dim + K.dim != n:
        raise NotComplementary(f"dim L + dim K = {L.dim + K.dim} != {n}")
    M = np.hstack([L.basis, K.basis])
    try:
        coeffs = scipy.linalg.solve(M, identity(n))
    except (scipy.linalg.LinAlgError, ValueError) as e:
        raise NotComplementary(f"Stacked bases are singular: {e}") from e
    return L.basis @ coeffs[:L.dim, :]


def graph_chart(Z: Subspace, S: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> GraphCoordinate:
    """Coordinates of S in G^Z: the X with S = {w + Xw : w in Z⊥}."""
    _require_complementary(S, Z, tol, "graph chart")
    Zp = perp(Z, tol)
    C = adjoint(Zp.basis) @ S.basis
    X = adjoint(Z.basis) @ S.basis @ inverse(C, tol)
    return GraphCoordinate(Z, X)


def graph_chart_inv(coord: GraphCoordinate, tol: Tolerances = DEFAULT_TOLERANCES) -> Subspace:
    Z = coord.anchor
    Zp = perp(Z, tol)
    return Subspace.from_columns(Zp.basis + Z.basis @ coord.matrix, tol)


def ando_projector(G, S: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> CMatrix:
    """P_{G(S)} = E (E + E^* - 1)^{-1} with E = G P_S G^{-1}."""
    G = as_cmatrix(G)
    if G.shape != (S.ambient_dim, S.ambient_dim):
        raise DimensionMismatch(f"Operator of shape {G.shape} cannot act on C^{S.ambient_dim}")
    G_inv = inverse(G, tol)
    E = (G @ S.basis) @ (adjoint(S.basis) @ G_inv)
    return E @ inverse(E + adjoint(E) - identity(S.ambient_dim), tol)


def act(G, S: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[Subspace, OrthProjector]:
    """Image G(S), together with its projector computed by Ando's formula."""
    P = ando_projector(G, S, tol)
    img = Subspace.from_columns(as_cmatrix(G) @ S.basis, tol)
    residual = gap_distance(P, img.projector)
    if residual > tol.eq_atol:
        logger.warning(f"[Grassmann] Ando projector differs from orthonormalized image by {residual:.3e}")
    return img, OrthProjector(P, img)


def image(G, S: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> Subspace:
    """G(S) by orthonormalization alone."""
    G = as_cmatrix(G)
    if G.shape != (S.ambient_dim, S.ambient_dim):
        raise DimensionMismatch(f"Operator of shape {G.shape} cannot act on C^{S.ambient_dim}")
    return Subspace.from_columns(G @ S.basis, tol)


def component_index(S: Subspace) -> ComponentIndex:
    return ComponentIndex(S.dim, S.ambient_dim - S.dim)
