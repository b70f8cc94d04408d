"""Seeded random instances for the property suites and the tests.

Everything is drawn from a caller-owned ``numpy.random.Generator``, so an
instance is a pure function of the generator state. Subspaces come from
orthonormalized complex Gaussian matrices; complements with controlled margin
are graphs of scaled operators; group elements are block upper-triangular in
an adapted orthonormal basis with well-conditioned diagonal blocks.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from services.bundle import FramePoint, SplitFrame
from services.grassmann import GraphCoordinate, Subspace, graph_chart_inv, perp
from services.operators import GlZOperator, big_L
from services.substrate import DEFAULT_TOLERANCES, CMatrix, Tolerances, adjoint, op_norm

# Singular values of generated diagonal blocks are drawn from [1, BLOCK_MAX_COND].
BLOCK_MAX_COND = 4.0
OFF_DIAGONAL_SCALE = 0.5


def complex_gaussian(rng: np.random.Generator, rows: int, cols: int) -> CMatrix:
    return (rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2.0)


def random_unitary(rng: np.random.Generator, n: int) -> CMatrix:
    Q, R = scipy.linalg.qr(complex_gaussian(rng, n, n))
    d = np.diag(R)
    phases = np.where(np.abs(d) > 0, d / np.abs(d), 1.0)
    return Q * phases


def random_well_conditioned(rng: np.random.Generator, n: int, max_cond: float = BLOCK_MAX_COND) -> CMatrix:
    """U diag(s) V^* with s in [1, max_cond]."""
    if n == 0:
        return np.zeros((0, 0), dtype=np.complex128)
    s = rng.uniform(1.0, max_cond, n)
    return random_unitary(rng, n) @ np.diag(s) @ adjoint(random_unitary(rng, n))


def split_dimension(rng: np.random.Generator, n: int) -> int:
    """Dimension of a proper nonzero subspace of C^n (1 when n = 1)."""
    return int(rng.integers(1, n)) if n > 1 else 1


def random_subspace(rng: np.random.Generator, n: int, k: int, tol: Tolerances = DEFAULT_TOLERANCES) -> Subspace:
    if k == 0:
        return Subspace(n, np.zeros((n, 0), dtype=np.complex128))
    return Subspace.from_columns(complex_gaussian(rng, n, k), tol)


def graph_subspace(rng: np.random.Generator, anchor: Subspace, scale: float = 1.0,
                   tol: Tolerances = DEFAULT_TOLERANCES) -> Subspace:
    """Random complement of ``anchor``: the graph of an operator of norm ``scale``.

    Its gap to anchor⊥ is scale / sqrt(1 + scale^2).
    """
    n, k = anchor.ambient_dim, anchor.dim
    X = complex_gaussian(rng, k, n - k)
    norm = op_norm(X)
    if norm > 0:
        X = X * (scale / norm)
    return graph_chart_inv(GraphCoordinate(anchor, X), tol)


def random_graph_coordinate(rng: np.random.Generator, anchor: Subspace, scale: float = 1.0) -> GraphCoordinate:
    X = complex_gaussian(rng, anchor.dim, anchor.ambient_dim - anchor.dim)
    norm = op_norm(X)
    return GraphCoordinate(anchor, X * (scale / norm) if norm > 0 else X)


def random_glz(rng: np.random.Generator, Z: Subspace, max_cond: float = BLOCK_MAX_COND,
               off_diagonal: float = OFF_DIAGONAL_SCALE, tol: Tolerances = DEFAULT_TOLERANCES) -> CMatrix:
    """Random element of Gl^Z: [[A, B], [0, D]] in the basis [B_Z, B_{Z⊥}]."""
    n, k = Z.ambient_dim, Z.dim
    U = np.hstack([Z.basis, perp(Z, tol).basis])
    M = np.zeros((n, n), dtype=np.complex128)
    M[:k, :k] = random_well_conditioned(rng, k, max_cond)
    M[k:, k:] = random_well_conditioned(rng, n - k, max_cond)
    M[:k, k:] = off_diagonal * complex_gaussian(rng, k, n - k)
    return U @ M @ adjoint(U)


def random_block_diagonal(rng: np.random.Generator, first: Subspace, max_cond: float = BLOCK_MAX_COND,
                          tol: Tolerances = DEFAULT_TOLERANCES) -> CMatrix:
    """Random operator preserving both ``first`` and its orthogonal complement."""
    return random_glz(rng, first, max_cond, off_diagonal=0.0, tol=tol)


def random_invertible(rng: np.random.Generator, n: int, max_cond: float = 1e3) -> CMatrix:
    """Random operator with log-uniform singular values in [1, max_cond]."""
    s = np.exp(rng.uniform(0.0, np.log(max_cond), n))
    s[0], s[-1] = 1.0, max_cond
    return random_unitary(rng, n) @ np.diag(s) @ adjoint(random_unitary(rng, n))


@dataclass(frozen=True, eq=False)
class AnchoredFrame:
    """A frame over Δ^{anchor} together with the pair it projects to."""
    frame: FramePoint
    s: Subspace
    t: Subspace


def random_frame_near_anchor(rng: np.random.Generator, Z0: Subspace, scale: float = 0.3,
                             tol: Tolerances = DEFAULT_TOLERANCES) -> AnchoredFrame:
    """Frame (z, G, K) with z close to Z0 and G(z⊥), K(z⊥) close to Z0⊥.

    G = L^z_{z⊥,S} D with D preserving z and z⊥, so G(z⊥) = S exactly.
    """
    Z0p = perp(Z0, tol)
    S = graph_subspace(rng, Z0, scale, tol)
    T = graph_subspace(rng, Z0, scale, tol)
    z = graph_subspace(rng, Z0p, scale, tol)
    zp = perp(z, tol)
    G = big_L(z, zp, S, tol).matrix @ random_block_diagonal(rng, z, tol=tol)
    K = big_L(z, zp, T, tol).matrix @ random_block_diagonal(rng, z, tol=tol)
    frame = FramePoint(z, GlZOperator(G, z), GlZOperator(K, z))
    return AnchoredFrame(frame, S, T)


def random_h_plus_operator(rng: np.random.Generator, frames: SplitFrame,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> CMatrix:
    return random_glz(rng, frames.h_plus, tol=tol)


def off_block_perturbation(rng: np.random.Generator, frames: SplitFrame, scale: float = 1.0) -> CMatrix:
    """Random operator mapping h_minus into h_plus and killing h_plus."""
    B = complex_gaussian(rng, frames.h_plus.dim, frames.h_minus.dim)
    return scale * frames.h_plus.basis @ B @ adjoint(frames.h_minus.basis)
