"""Pairs of subspaces with a common complement: membership, neighborhoods and a
constructive complement search that returns verifiable certificates."""
import logging
from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Iterable, Iterator, Optional, Tuple

import numpy as np

from services.errors import DimensionMismatch, NotInDelta, SearchFailed
from services.grassmann import Subspace, buckholtz_report
from services.substrate import (
    DEFAULT_TOLERANCES,
    CMatrix,
    Tolerances,
    TriState,
    adjoint,
    orthonormalize,
)

logger = logging.getLogger(__name__)

DEFAULT_RETRY_BUDGET = 64
DEFAULT_MIN_RESIDUAL = 1e-2


class ComplementMethod(str, Enum):
    GREEDY = "greedy"
    RANDOM = "random"


@dataclass(frozen=True, eq=False)
class DeltaPair:
    s: Subspace
    t: Subspace
    witness: Optional[Subspace] = None

    def __post_init__(self):
        dims = {self.s.ambient_dim, self.t.ambient_dim}
        if self.witness is not None:
            dims.add(self.witness.ambient_dim)
        if len(dims) > 1:
            raise DimensionMismatch(f"Pair components live in ambient dimensions {sorted(dims)}")


@dataclass(frozen=True, eq=False)
class ComplementCertificate:
    z: Subspace
    margin_s: float
    margin_t: float
    method: ComplementMethod
    seed: int


def _check_pair(S: Subspace, T: Subspace):
    if S.ambient_dim != T.ambient_dim:
        raise DimensionMismatch(f"Subspaces of C^{S.ambient_dim} and C^{T.ambient_dim}")


def in_delta(S: Subspace, T: Subspace, tol: Tolerances = DEFAULT_TOLERANCES) -> TriState:
    """At finite dimension a common complement exists iff dim S = dim T."""
    _check_pair(S, T)
    return TriState.from_bool(S.dim == T.dim)


def certify(S: Subspace, T: Subspace, Z: Subspace,
            tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[TriState, float, float]:
    """Re-verify a witness: combined verdict of both Buckholtz reports and the two margins."""
    _check_pair(S, T)
    report_s = buckholtz_report(S, Z, tol)
    report_t = buckholtz_report(T, Z, tol)
    verdict = TriState.all_of(*report_s.verdicts, *report_t.verdicts)
    return verdict, report_s.margin, report_t.margin


def delta_neighborhood_check(Z0: Subspace, S: Subspace, T: Subspace,
                             tol: Tolerances = DEFAULT_TOLERANCES) -> TriState:
    """(S, T) in Δ^{Z0}: both S and T are complementary to Z0."""
    _check_pair(S, T)
    _check_pair(S, Z0)
    return TriState.all_of(buckholtz_report(S, Z0, tol).norm_lt_one,
                           buckholtz_report(T, Z0, tol).norm_lt_one)


def _candidate_pool(n: int) -> Iterator[CMatrix]:
    eye = np.eye(n, dtype=np.complex128)
    for i in range(n):
        yield eye[:, i]
    for i, j in combinations(range(n), 2):
        yield (eye[:, i] + eye[:, j]) / np.sqrt(2.0)


def _random_pool(rng: np.random.Generator, n: int, draws: int) -> Iterator[CMatrix]:
    for _ in range(draws):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        yield v / np.linalg.norm(v)


def _residual(v: CMatrix, spanning: CMatrix, tol: Tolerances) -> float:
    Q, _ = orthonormalize(spanning, tol)
    return float(np.linalg.norm(v - Q @ (adjoint(Q) @ v)))


def _extend(S: Subspace, T: Subspace, basis: CMatrix, candidates: Iterable[CMatrix],
            target_dim: int, min_residual: float, tol: Tolerances) -> CMatrix:
    """Append candidates that stay well outside span(Z ∪ S) and span(Z ∪ T)."""
    for v in candidates:
        if basis.shape[1] >= target_dim:
            break
        if all(_residual(v, np.hstack([X.basis, basis]), tol) >= min_residual for X in (S, T)):
            basis = np.hstack([basis, v[:, None]])
    return basis


def common_complement(S: Subspace, T: Subspace, tol: Tolerances = DEFAULT_TOLERANCES, seed: int = 0,
                      retry_budget: int = DEFAULT_RETRY_BUDGET,
                      min_residual: float = DEFAULT_MIN_RESIDUAL) -> ComplementCertificate:
    """Find Z with Z ∔ S = Z ∔ T = H.

    Standard basis vectors, then normalized pairwise sums e_i + e_j, are tried
    in a fixed order; slots left open are filled from seeded random unit
    vectors (``retry_budget`` draws per slot). A result is returned only after
    both Buckholtz reports come back all-true.
    """
    if not in_delta(S, T, tol).is_true:
        raise NotInDelta(f"dim S = {S.dim} and dim T = {T.dim} differ; no common complement exists")
    n = S.ambient_dim
    target_dim = n - S.dim
    rng = np.random.default_rng(seed)

    basis = _extend(S, T, np.zeros((n, 0), dtype=np.complex128), _candidate_pool(n),
                    target_dim, min_residual, tol)
    method = ComplementMethod.GREEDY
    if basis.shape[1] < target_dim:
        logger.warning(f"[Complement] Deterministic pool exhausted with {basis.shape[1]}/{target_dim} "
                       f"vectors; switching to seeded random draws")
        method = ComplementMethod.RANDOM
        draws = (target_dim - basis.shape[1]) * retry_budget
        basis = _extend(S, T, basis, _random_pool(rng, n, draws), target_dim, min_residual, tol)

    best = (float("-inf"), float("-inf"))
    if basis.shape[1] == target_dim:
        Z = Subspace.from_columns(basis, tol) if target_dim else Subspace(n, basis)
        verdict, margin_s, margin_t = certify(S, T, Z, tol)
        if verdict.is_true:
            return ComplementCertificate(Z, margin_s, margin_t, method, seed)
        best = (margin_s, margin_t)

    if basis.shape[1] < target_dim:
        logger.warning(f"[Complement] Candidate pools gave only {basis.shape[1]}/{target_dim} vectors; "
                       f"restarting from random subspaces")
    else:
        logger.warning(f"[Complement] {method.value.capitalize()} witness did not certify; "
                       f"restarting from random subspaces")
    for attempt in range(retry_budget):
        draw = rng.standard_normal((n, target_dim)) + 1j * rng.standard_normal((n, target_dim))
        Z = Subspace.from_columns(draw, tol)
        verdict, margin_s, margin_t = certify(S, T, Z, tol)
        if verdict.is_true:
            logger.info(f"[Complement] Random witness certified after {attempt + 1} draws")
            return ComplementCertificate(Z, margin_s, margin_t, ComplementMethod.RANDOM, seed)
        if min(margin_s, margin_t) > min(best):
            best = (margin_s, margin_t)

    raise SearchFailed(f"No certified common complement within {retry_budget} random draws", margins=best)
