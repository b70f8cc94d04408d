"""Frames over the Grassmannian and the bundle maps built on them.

A frame is a triple (z, G, K) with G, K in Gl^z. ``project_p`` sends it to the
pair (G(z⊥), K(z⊥)) of subspaces sharing the complement z, ``project_pi`` to
z itself. The charts and trivializations below are explicit formulas in the
transition operators of :mod:`services.operators`.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Union

from services.delta import DeltaPair
from services.errors import (
    DimensionMismatch,
    GapTooLarge,
    InvalidGroupElement,
    InvalidInput,
    NotComplementary,
    NotInFiber,
    OutsideChartDomain,
    OutsideTrivializationDomain,
)
from services.grassmann import (
    ComponentIndex,
    Subspace,
    buckholtz_report,
    complementary,
    component_index,
    coordinate_subspace,
    image,
    perp,
)
from services.operators import GlZOperator, big_L, glz_check, little_l, w_unitary
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
    strictly_below,
)

logger = logging.getLogger(__name__)

_UNITARY_ATOL = 1e-8


@dataclass(frozen=True, eq=False)
class SplitFrame:
    """Splitting H = h_minus ⊕ h_plus plus the unitaries that carry a
    subspace onto one of the halves.

    ``t_prime`` is the unitary used on the K component of a frame; when it is
    omitted the same unitary serves both components.
    """
    h_minus: Subspace
    h_plus: Subspace
    t_unitary: CMatrix
    t_prime: Optional[CMatrix] = None

    def __post_init__(self):
        n = self.h_minus.ambient_dim
        if self.h_plus.ambient_dim != n or self.h_minus.dim + self.h_plus.dim != n:
            raise DimensionMismatch("h_minus and h_plus do not split the ambient space")
        if op_norm(adjoint(self.h_minus.basis) @ self.h_plus.basis) > _UNITARY_ATOL:
            raise InvalidInput("h_minus and h_plus are not orthogonal")
        for name in ("t_unitary", "t_prime"):
            U = getattr(self, name)
            if U is None:
                continue
            U = as_cmatrix(U)
            if U.shape != (n, n) or op_norm(adjoint(U) @ U - identity(n)) > _UNITARY_ATOL:
                raise InvalidInput(f"{name} is not a unitary on C^{n}")
            object.__setattr__(self, name, U)

    @property
    def t_second(self) -> CMatrix:
        return self.t_unitary if self.t_prime is None else self.t_prime

    def require_maps(self, source: Subspace, target: Subspace, tol: Tolerances = DEFAULT_TOLERANCES):
        for U in (self.t_unitary, self.t_second):
            residual = gap_distance(image(U, source, tol).projector, target.projector)
            if residual > tol.eq_atol:
                raise InvalidInput(f"Frame unitary misses its target subspace by {residual:.3e}")


def split_frame(source: Subspace, onto: str = "minus", tol: Tolerances = DEFAULT_TOLERANCES) -> SplitFrame:
    """Coordinate splitting with a unitary carrying ``source`` onto h_minus
    (``onto="minus"``) or h_plus (``onto="plus"``).

    h_minus is spanned by the leading standard basis vectors.
    """
    n, k = source.ambient_dim, source.dim
    if onto not in ("minus", "plus"):
        raise InvalidInput(f"onto must be 'minus' or 'plus', got {onto!r}")
    split = k if onto == "minus" else n - k
    h_minus = coordinate_subspace(n, range(split))
    h_plus = coordinate_subspace(n, range(split, n))
    target, other = (h_minus, h_plus) if onto == "minus" else (h_plus, h_minus)
    T = target.basis @ adjoint(source.basis) + other.basis @ adjoint(perp(source, tol).basis)
    return SplitFrame(h_minus, h_plus, T)


@dataclass(frozen=True, eq=False)
class FramePoint:
    z: Subspace
    g: GlZOperator
    k: GlZOperator

    def __post_init__(self):
        for name, op in (("g", self.g), ("k", self.k)):
            if op.n != self.z.ambient_dim:
                raise DimensionMismatch(f"Frame component {name} acts on C^{op.n}, base is in C^{self.z.ambient_dim}")
            if op.invariant_space is not self.z and not op.invariant_space.equals(self.z):
                raise InvalidGroupElement(f"Frame component {name} is attached to a different subspace")

    @classmethod
    def checked(cls, z: Subspace, G, K, tol: Tolerances = DEFAULT_TOLERANCES) -> "FramePoint":
        return cls(z, GlZOperator.checked(G, z, tol), GlZOperator.checked(K, z, tol))


@dataclass(frozen=True, eq=False)
class Trivialization:
    """Coordinates of a frame over Δ^{Z0}: the base pair, u in G^{h_minus}
    and the block-diagonal operators a, b."""
    pair: DeltaPair
    u: Subspace
    a: CMatrix
    b: CMatrix


@dataclass(frozen=True, eq=False)
class PiTrivialization:
    base: Subspace
    g: CMatrix
    k: CMatrix


def block_offdiagonal_residual(A, frames: SplitFrame) -> float:
    """Size of the parts of A that mix h_minus and h_plus."""
    A = as_cmatrix(A)
    n = frames.h_minus.ambient_dim
    P_minus, P_plus = frames.h_minus.projector, frames.h_plus.projector
    eye = identity(n)
    return max(op_norm((eye - P_minus) @ A @ P_minus), op_norm((eye - P_plus) @ A @ P_plus))


def project_p(f: FramePoint, tol: Tolerances = DEFAULT_TOLERANCES) -> DeltaPair:
    zp = perp(f.z, tol)
    S = image(f.g.matrix, zp, tol)
    T = image(f.k.matrix, zp, tol)
    if buckholtz_report(S, f.z, tol).all_true and buckholtz_report(T, f.z, tol).all_true:
        return DeltaPair(S, T, f.z)
    logger.warning("[Bundle] Frame base no longer certifies as a complement of its image pair")
    return DeltaPair(S, T)


def project_pi(f: FramePoint) -> Subspace:
    return f.z


def p_preimage_point(S: Subspace, T: Subspace, Z: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> FramePoint:
    """(Z, L^Z_{Z⊥,S}, L^Z_{Z⊥,T}), a frame over the pair (S, T)."""
    zp = perp(Z, tol)
    return FramePoint(Z, big_L(Z, zp, S, tol), big_L(Z, zp, T, tol))


def component_of_frame(f: FramePoint) -> ComponentIndex:
    return component_index(f.z)


def _require_complement(a: Subspace, b: Subspace, tol: Tolerances, what: str):
    if not buckholtz_report(a, b, tol).all_true:
        raise NotComplementary(f"{what}: subspaces are not complementary")


def _require_in_group(M, Z: Subspace, tol: Tolerances, what: str):
    if glz_check(M, Z, tol).is_false:
        raise InvalidGroupElement(f"{what} does not preserve the {Z.dim}-dimensional invariant subspace")


def e_chart(Z0: Subspace, frames: SplitFrame, z: Subspace, G, K,
            tol: Tolerances = DEFAULT_TOLERANCES) -> FramePoint:
    """Pull a pair (G, K) in Gl^{h_plus} back to a frame over z.

    With l = l_{Z0,z} and T0 carrying Z0⊥ onto h_plus the frame is
    (z, l^{-1} T0^* G T0 l, l^{-1} T0'^* K T0' l).
    """
    G, K = as_cmatrix(G), as_cmatrix(K)
    frames.require_maps(perp(Z0, tol), frames.h_plus, tol)
    _require_complement(z, Z0, tol, "chart base")
    _require_in_group(G, frames.h_plus, tol, "G")
    _require_in_group(K, frames.h_plus, tol, "K")
    l = little_l(Z0, z, tol).matrix
    l_inv = inverse(l, tol)
    T0, T0p = frames.t_unitary, frames.t_second
    A = l_inv @ adjoint(T0) @ G @ T0 @ l
    B = l_inv @ adjoint(T0p) @ K @ T0p @ l
    return FramePoint.checked(z, A, B, tol)


def e_chart_inv(Z0: Subspace, frames: SplitFrame, f: FramePoint,
                tol: Tolerances = DEFAULT_TOLERANCES):
    """Inverse of :func:`e_chart`: returns (z, G, K) with G, K in Gl^{h_plus}.

    The chart covers frames whose base z is a complement of Z0.
    """
    gap = gap_distance(f.z.projector, perp(Z0, tol).projector)
    if not strictly_below(gap, 1.0, tol).is_true:
        raise OutsideChartDomain(f"Base is not a complement of the chart anchor (gap to its complement {gap:.6g})")
    l = little_l(Z0, f.z, tol).matrix
    l_inv = inverse(l, tol)
    T0, T0p = frames.t_unitary, frames.t_second
    G = T0 @ l @ f.g.matrix @ l_inv @ adjoint(T0)
    K = T0p @ l @ f.k.matrix @ l_inv @ adjoint(T0p)
    return f.z, G, K


def _fiber_factors(S0: Subspace, z: Subspace, tol: Tolerances):
    l_s0z = little_l(S0, z, tol).matrix
    return l_s0z, inverse(l_s0z, tol), little_l(z, S0, tol).matrix


def fiber_psi(S0: Subspace, T0: Subspace, frames: SplitFrame, Lz: GlZOperator, z: Subspace, G, K,
              tol: Tolerances = DEFAULT_TOLERANCES) -> FramePoint:
    """Frame over z lying in the fiber above (S0, T0).

    ``Lz`` is L^z_{T0,S0}; ``frames.t_unitary`` carries S0 onto h_minus and
    G, K range over Gl^{h_plus}. The result projects to (S0, T0) when G and
    K also preserve h_minus.
    """
    G, K = as_cmatrix(G), as_cmatrix(K)
    if not (Lz.invariant_space is z or Lz.invariant_space.equals(z, tol)):
        raise InvalidInput("Transition operator is not attached to the frame base")
    frames.require_maps(S0, frames.h_minus, tol)
    _require_complement(z, S0, tol, "fiber base")
    _require_in_group(G, frames.h_plus, tol, "G")
    _require_in_group(K, frames.h_plus, tol, "K")
    T = frames.t_unitary
    l_s0z, l_s0z_inv, l_zs0 = _fiber_factors(S0, z, tol)
    l_zs0_inv = inverse(l_zs0, tol)

    def core(X):
        return l_s0z_inv @ adjoint(T) @ inverse(X, tol) @ T @ l_s0z @ l_zs0_inv

    psi_g = core(G)
    psi_k = inverse(Lz.matrix, tol) @ core(K)
    return FramePoint.checked(z, psi_g, psi_k, tol)


def fiber_psi_inverse(S0: Subspace, T0: Subspace, frames: SplitFrame, Lz: GlZOperator,
                      f: Union[FramePoint, "FiberPoint"], tol: Tolerances = DEFAULT_TOLERANCES):
    """Recover (z, G, K) from a frame produced by :func:`fiber_psi`."""
    if isinstance(f, FiberPoint):
        f = f.frame
    _require_complement(f.z, S0, tol, "fiber base")
    T = frames.t_unitary
    l_s0z, l_s0z_inv, l_zs0 = _fiber_factors(S0, f.z, tol)
    G = inverse(T @ l_s0z @ f.g.matrix @ l_zs0 @ l_s0z_inv @ adjoint(T), tol)
    K = inverse(T @ l_s0z @ Lz.matrix @ f.k.matrix @ l_zs0 @ l_s0z_inv @ adjoint(T), tol)
    return f.z, G, K


def fiber_residual(f: FramePoint, S0: Subspace, T0: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Distance of p(f) from (S0, T0)."""
    pair = project_p(f, tol)
    return max(gap_distance(pair.s.projector, S0.projector), gap_distance(pair.t.projector, T0.projector))


@dataclass(frozen=True, eq=False)
class FiberPoint:
    """A frame whose projection p(frame) is the pair ``base``."""
    frame: FramePoint
    base: DeltaPair
    residual: float = 0.0

    @classmethod
    def checked(cls, frame: FramePoint, S0: Subspace, T0: Subspace,
                tol: Tolerances = DEFAULT_TOLERANCES) -> "FiberPoint":
        residual = fiber_residual(frame, S0, T0, tol)
        if residual > tol.eq_atol:
            raise NotInFiber(f"Frame projects to a pair at gap {residual:.3e} from (S0, T0)")
        return cls(frame, DeltaPair(S0, T0, frame.z), residual)


def _require_trivialization_domain(Z0: Subspace, S: Subspace, T: Subspace, tol: Tolerances) -> Subspace:
    Z0p = perp(Z0, tol)
    for name, X in (("S", S), ("T", T)):
        gap = gap_distance(X.projector, Z0p.projector)
        if not strictly_below(gap, 1.0, tol).is_true:
            raise OutsideTrivializationDomain(
                f"{name} is at gap {gap:.6g} from the complement of the anchor")
    return Z0p


def trivialize_phi(Z0: Subspace, frames: SplitFrame, f: FramePoint,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> Trivialization:
    """Local trivialization over Δ^{Z0}.

    With (S, T) = p(f), W the unitary conjugating P_S onto P_{Z0⊥} and
    M = T_u W (T_u carries Z0⊥ onto h_minus):
      u = M z,
      a = M l_{S,z} l_{z,S}^{-1} G^{-1} l_{S,z}^{-1} M^*,
      b = M l_{S,z} l_{z,S}^{-1} K^{-1} (L^z_{T,S})^{-1} l_{S,z}^{-1} M^*.
    """
    pair = project_p(f, tol)
    S, T = pair.s, pair.t
    Z0p = _require_trivialization_domain(Z0, S, T, tol)
    frames.require_maps(Z0p, frames.h_minus, tol)
    M = frames.t_unitary @ w_unitary(S, Z0p, tol).matrix
    z = f.z
    l_sz = little_l(S, z, tol).matrix
    l_sz_inv = inverse(l_sz, tol)
    l_zs_inv = inverse(little_l(z, S, tol).matrix, tol)
    L_ts_inv = inverse(big_L(z, T, S, tol).matrix, tol)
    left = M @ l_sz @ l_zs_inv
    right = l_sz_inv @ adjoint(M)
    a = left @ inverse(f.g.matrix, tol) @ right
    b = left @ inverse(f.k.matrix, tol) @ L_ts_inv @ right
    return Trivialization(pair, image(M, z, tol), a, b)


def trivialize_phi_inv(Z0: Subspace, frames: SplitFrame, pair: DeltaPair, u: Subspace, a, b,
                       tol: Tolerances = DEFAULT_TOLERANCES) -> FramePoint:
    """Rebuild the frame from its trivialization coordinates (the formulas of
    :func:`trivialize_phi` solved for z, G and K)."""
    S, T = pair.s, pair.t
    a, b = as_cmatrix(a), as_cmatrix(b)
    Z0p = _require_trivialization_domain(Z0, S, T, tol)
    frames.require_maps(Z0p, frames.h_minus, tol)
    if not complementary(u, frames.h_minus, tol).is_true:
        raise OutsideTrivializationDomain("u is not a complement of h_minus")
    for name, X in (("a", a), ("b", b)):
        if glz_check(X, frames.h_minus, tol).is_false or glz_check(X, frames.h_plus, tol).is_false:
            raise OutsideTrivializationDomain(f"{name} is not block diagonal with respect to the splitting")
    M = frames.t_unitary @ w_unitary(S, Z0p, tol).matrix
    z = image(adjoint(M), u, tol)
    for name, X in (("S", S), ("T", T)):
        if not complementary(z, X, tol).is_true:
            raise OutsideTrivializationDomain(f"Recovered base is not a complement of {name}")
    l_sz = little_l(S, z, tol).matrix
    l_zs = little_l(z, S, tol).matrix
    L_ts = big_L(z, T, S, tol).matrix
    left = l_zs @ inverse(l_sz, tol) @ adjoint(M)
    G = inverse(left @ a @ M @ l_sz, tol)
    K = inverse(left @ b @ M @ l_sz @ L_ts, tol)
    return FramePoint.checked(z, G, K, tol)


def pi_trivialize(Z0: Subspace, f: FramePoint, tol: Tolerances = DEFAULT_TOLERANCES) -> PiTrivialization:
    """(z, W G W^*, W K W^*) with W conjugating P_z onto P_{Z0}; both
    operators then preserve Z0."""
    try:
        W = w_unitary(f.z, Z0, tol).matrix
    except GapTooLarge as e:
        raise OutsideChartDomain(str(e)) from e
    return PiTrivialization(f.z, W @ f.g.matrix @ adjoint(W), W @ f.k.matrix @ adjoint(W))


def pi_trivialize_inv(Z0: Subspace, triv: PiTrivialization, tol: Tolerances = DEFAULT_TOLERANCES) -> FramePoint:
    z = triv.base
    gap = gap_distance(z.projector, Z0.projector)
    if not strictly_below(gap, 1.0, tol).is_true:
        raise OutsideChartDomain(f"Base is at gap {gap:.6g} from the anchor")
    W = w_unitary(z, Z0, tol).matrix
    G = adjoint(W) @ as_cmatrix(triv.g) @ W
    K = adjoint(W) @ as_cmatrix(triv.k) @ W
    return FramePoint.checked(z, G, K, tol)


def pi_trivialize_check(Z0: Subspace, triv: PiTrivialization, tol: Tolerances = DEFAULT_TOLERANCES) -> TriState:
    """Both trivialized operators preserve Z0."""
    return TriState.all_of(glz_check(triv.g, Z0, tol), glz_check(triv.k, Z0, tol))
