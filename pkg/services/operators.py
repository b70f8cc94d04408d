"""Transition operators L^Z_{S,T}, the group Gl^Z and the unitary that
conjugates one orthogonal projector onto another."""
import logging
from dataclasses import dataclass

from services.errors import DimensionMismatch, GapTooLarge, InvalidGroupElement, NotComplementary
from services.grassmann import (
    Subspace,
    buckholtz_report,
    image,
    oblique_projector,
    perp,
)
from services.substrate import (
    DEFAULT_TOLERANCES,
    CMatrix,
    Tolerances,
    TriState,
    as_cmatrix,
    condition_number,
    gap_distance,
    identity,
    inverse,
    nearly_zero,
    polar_unitary,
    strictly_below,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class GlZOperator:
    """An invertible operator G with G(Z) = Z."""
    matrix: CMatrix
    invariant_space: Subspace

    @classmethod
    def checked(cls, G, Z: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> "GlZOperator":
        G = as_cmatrix(G)
        verdict = glz_check(G, Z, tol)
        if verdict.is_false:
            raise InvalidGroupElement(
                f"Operator is not an invertible map of the {Z.dim}-dimensional subspace onto itself")
        if not verdict.is_determinate:
            logger.warning(f"[Operators] Invariance of a {Z.dim}-dimensional subspace is borderline")
        return cls(G, Z)

    @property
    def n(self) -> int:
        return self.invariant_space.ambient_dim


@dataclass(frozen=True, eq=False)
class ConjugatingUnitary:
    """Unitary W with W P_source W^* = P_target."""
    matrix: CMatrix
    source: Subspace
    target: Subspace


def invariance_gap(G, Z: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """gap(G(Z), Z)."""
    return gap_distance(image(G, Z, tol).projector, Z.projector)


def glz_check(G, Z: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> TriState:
    G = as_cmatrix(G)
    if G.shape != (Z.ambient_dim, Z.ambient_dim):
        raise DimensionMismatch(f"Operator of shape {G.shape} does not act on C^{Z.ambient_dim}")
    if condition_number(G) > tol.cond_max:
        return TriState.FALSE
    return nearly_zero(invariance_gap(G, Z, tol), tol)


def big_L(Z: Subspace, S: Subspace, T: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> GlZOperator:
    """L^Z_{S,T} = P_{Z∥S} + P_{T∥Z} P_{S∥Z}.

    Fixes Z pointwise and carries S onto T.
    """
    z_along_s = oblique_projector(Z, S, tol).matrix
    s_along_z = oblique_projector(S, Z, tol).matrix
    t_along_z = oblique_projector(T, Z, tol).matrix
    return GlZOperator(z_along_s + t_along_z @ s_along_z, Z)


def big_L_analytic(Z: Subspace, S: Subspace, T: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> CMatrix:
    """Same operator as :func:`big_L`, written with projector differences only."""
    for other, name in ((S, "S"), (T, "T")):
        if not buckholtz_report(Z, other, tol).all_true:
            raise NotComplementary(f"Z is not a complement of {name}")
    PZ, PS, PT = Z.projector, S.projector, T.projector
    return (PZ @ inverse(PZ - PS, tol)
            + PT @ inverse(PT - PZ, tol) @ PS @ inverse(PS - PZ, tol))


def little_l(Z: Subspace, S: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> GlZOperator:
    """l_{Z,S} = L^Z_{S,Z⊥}: sends S onto Z⊥ and fixes Z."""
    return big_L(Z, S, perp(Z, tol), tol)


def pi_s0(G: GlZOperator, S0: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> Subspace:
    """G(S0) for S0 in G^Z."""
    Z = G.invariant_space
    if not buckholtz_report(S0, Z, tol).all_true:
        raise NotComplementary("Base point is not complementary to the invariant subspace")
    result = image(G.matrix, S0, tol)
    if not buckholtz_report(result, Z, tol).norm_lt_one.is_true:
        logger.warning("[Operators] G(S0) left G^Z; the operator is probably not in Gl^Z")
    return result


def section_sigma(Z: Subspace, S0: Subspace, T: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> GlZOperator:
    """Global cross section of pi_{S0}: T -> L^Z_{S0,T}."""
    return big_L(Z, S0, T, tol)


def compose_round_trip(Z: Subspace, S: Subspace, T: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """gap(L^Z_{T,S} L^Z_{S,T}(S), S)."""
    there = big_L(Z, S, T, tol).matrix
    back = big_L(Z, T, S, tol).matrix
    return gap_distance(image(back @ there, S, tol).projector, S.projector)


def w_unitary(S: Subspace, target: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> ConjugatingUnitary:
    """Polar factor of Q P + (1 - Q)(1 - P), which conjugates P = P_S onto Q = P_target."""
    gap = gap_distance(S.projector, target.projector)
    if not strictly_below(gap, 1.0, tol).is_true:
        raise GapTooLarge(f"Projector gap {gap:.6g} is not below 1 - {tol.margin_delta:g}")
    P, Q = S.projector, target.projector
    eye = identity(S.ambient_dim)
    W = polar_unitary(Q @ P + (eye - Q) @ (eye - P), tol)
    return ConjugatingUnitary(W, S, target)
