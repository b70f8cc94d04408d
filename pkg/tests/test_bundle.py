import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from services import instance_generator as gen
from services.bundle import (
    FiberPoint,
    FramePoint,
    block_offdiagonal_residual,
    component_of_frame,
    e_chart,
    e_chart_inv,
    fiber_psi,
    fiber_psi_inverse,
    fiber_residual,
    p_preimage_point,
    pi_trivialize,
    pi_trivialize_check,
    pi_trivialize_inv,
    project_p,
    project_pi,
    split_frame,
    trivialize_phi,
    trivialize_phi_inv,
)
from services.errors import (
    InvalidGroupElement,
    InvalidInput,
    NotInFiber,
    OutsideChartDomain,
    OutsideTrivializationDomain,
)
from services.grassmann import ComponentIndex, complementary, component_index, coordinate_subspace, perp
from services.operators import big_L, glz_check
from services.substrate import TriState, gap_distance, op_norm

SEEDS = st.integers(min_value=0, max_value=2 ** 32 - 1)
DIMS = (4, 6, 8)


def _close(A, B, scale=None):
    return op_norm(A - B) <= 1e-8 * max(1.0, op_norm(B) if scale is None else scale)


def test_split_frame_sends_source_to_requested_half(e1, e2):
    frames = split_frame(e1, "minus")
    assert frames.h_minus.equals(e1)
    assert_allclose(frames.t_unitary, np.eye(2), atol=1e-15)
    swap = split_frame(e2, "minus")
    assert_allclose(swap.t_unitary, [[0, 1], [1, 0]], atol=1e-15)
    plus = split_frame(coordinate_subspace(3, [0]), "plus")
    assert plus.h_minus.dim == 2 and plus.h_plus.dim == 1
    assert_allclose(plus.t_second, plus.t_unitary)


def test_split_frame_rejects_unknown_half(e1):
    with pytest.raises(InvalidInput):
        split_frame(e1, "sideways")


def test_frame_point_components_must_share_base(e1, e2):
    with pytest.raises(InvalidGroupElement):
        FramePoint.checked(e2, [[0, 1], [1, 0]], np.eye(2))
    f = FramePoint.checked(e2, np.eye(2), [[1, 0], [1, 1]])
    assert project_pi(f) is e2


def test_preimage_point_example(e1, e2, diagonal):
    f = p_preimage_point(e1, diagonal, e2)
    assert_allclose(f.g.matrix, np.eye(2), atol=1e-14)
    assert_allclose(f.k.matrix, [[1, 0], [1, 1]], atol=1e-14)
    pair = project_p(f)
    assert pair.s.equals(e1) and pair.t.equals(diagonal)
    assert pair.witness is e2


def test_component_bookkeeping():
    z = coordinate_subspace(3, [0])
    S = coordinate_subspace(3, [1, 2])
    T = gen.graph_subspace(np.random.default_rng(1), z, 0.5)
    f = p_preimage_point(S, T, z)
    assert component_of_frame(f) == ComponentIndex(1, 2)
    pair = project_p(f)
    assert component_index(pair.s) == ComponentIndex(2, 1)
    assert component_index(pair.t) == ComponentIndex(2, 1)


def test_e_chart_orthogonal_example(e1, e2):
    frames = split_frame(e2, "plus")
    G = np.array([[2, 0], [1, 3]])
    K = np.array([[1, 0], [5, 1]])
    f = e_chart(e1, frames, e2, G, K)
    assert_allclose(f.g.matrix, G, atol=1e-14)
    assert_allclose(f.k.matrix, K, atol=1e-14)


def test_e_chart_rejects_operators_outside_group(e1, e2):
    frames = split_frame(e2, "plus")
    with pytest.raises(InvalidGroupElement):
        e_chart(e1, frames, e2, [[0, 1], [1, 0]], np.eye(2))


def test_e_chart_inverse_outside_domain(e1):
    frames = split_frame(perp(e1), "plus")
    f = FramePoint.checked(e1, np.eye(2), np.eye(2))
    with pytest.raises(OutsideChartDomain):
        e_chart_inv(e1, frames, f)


@pytest.mark.parametrize("n", DIMS)
def test_e_chart_round_trip(n, rng):
    Z0 = gen.random_subspace(rng, n, n // 2)
    frames = split_frame(perp(Z0), "plus")
    for _ in range(5):
        z = gen.graph_subspace(rng, Z0, float(rng.uniform(0.2, 2.0)))
        G = gen.random_h_plus_operator(rng, frames)
        K = gen.random_h_plus_operator(rng, frames)
        f = e_chart(Z0, frames, z, G, K)
        assert glz_check(f.g.matrix, z) is TriState.TRUE
        z_back, G_back, K_back = e_chart_inv(Z0, frames, f)
        assert z_back is z
        assert _close(G_back, G) and _close(K_back, K)


def test_fiber_psi_identity_example(e1, e2, diagonal):
    frames = split_frame(e1, "minus")
    Lz = big_L(e2, diagonal, e1)
    f = fiber_psi(e1, diagonal, frames, Lz, e2, np.eye(2), np.eye(2))
    assert_allclose(f.g.matrix, np.eye(2), atol=1e-14)
    assert_allclose(f.k.matrix, [[1, 0], [1, 1]], atol=1e-14)
    assert fiber_residual(f, e1, diagonal) <= 1e-12


def test_fiber_psi_negative_control_leaves_fiber(e1, e2, diagonal):
    frames = split_frame(e1, "minus")
    Lz = big_L(e2, diagonal, e1)
    G = np.array([[1, 0], [1, 1]])
    f = fiber_psi(e1, diagonal, frames, Lz, e2, G, np.eye(2))
    assert fiber_residual(f, e1, diagonal) > 0.5


def test_fiber_point_of_identity_frame(e1, e2, diagonal):
    frames = split_frame(e1, "minus")
    Lz = big_L(e2, diagonal, e1)
    point = FiberPoint.checked(fiber_psi(e1, diagonal, frames, Lz, e2, np.eye(2), np.eye(2)), e1, diagonal)
    assert point.base.s is e1 and point.base.t is diagonal
    assert point.base.witness is e2
    assert point.residual <= 1e-12
    z, G, K = fiber_psi_inverse(e1, diagonal, frames, Lz, point)
    assert z is e2
    assert_allclose(G, np.eye(2), atol=1e-12)
    assert_allclose(K, np.eye(2), atol=1e-12)


def test_fiber_point_rejects_frame_off_the_fiber(e1, e2, diagonal):
    frames = split_frame(e1, "minus")
    Lz = big_L(e2, diagonal, e1)
    f = fiber_psi(e1, diagonal, frames, Lz, e2, [[1, 0], [1, 1]], np.eye(2))
    with pytest.raises(NotInFiber):
        FiberPoint.checked(f, e1, diagonal)


def test_fiber_psi_rejects_operator_outside_group(e1, e2, diagonal):
    frames = split_frame(e1, "minus")
    Lz = big_L(e2, diagonal, e1)
    with pytest.raises(InvalidGroupElement):
        fiber_psi(e1, diagonal, frames, Lz, e2, [[1, 1], [0, 1]], np.eye(2))


def _fiber_instance(rng, n):
    k = n // 2
    z = gen.random_subspace(rng, n, n - k)
    S0 = gen.graph_subspace(rng, z, float(rng.uniform(0.2, 2.0)))
    T0 = gen.graph_subspace(rng, z, float(rng.uniform(0.2, 2.0)))
    return z, S0, T0, split_frame(S0, "minus"), big_L(z, T0, S0)


@pytest.mark.parametrize("n", DIMS)
def test_fiber_law_and_inverse(n, rng):
    for _ in range(5):
        z, S0, T0, frames, Lz = _fiber_instance(rng, n)
        G = gen.random_block_diagonal(rng, frames.h_minus)
        K = gen.random_block_diagonal(rng, frames.h_minus)
        f = fiber_psi(S0, T0, frames, Lz, z, G, K)
        assert fiber_residual(f, S0, T0) <= 1e-8
        _, G_back, K_back = fiber_psi_inverse(S0, T0, frames, Lz, f)
        assert _close(G_back, G) and _close(K_back, K)


def test_fiber_negative_control_escapes_in_most_instances(rng):
    escaped = 0
    for _ in range(40):
        z, S0, T0, frames, Lz = _fiber_instance(rng, 6)
        G = gen.random_block_diagonal(rng, frames.h_minus) + gen.off_block_perturbation(rng, frames)
        K = gen.random_block_diagonal(rng, frames.h_minus)
        escaped += fiber_residual(fiber_psi(S0, T0, frames, Lz, z, G, K), S0, T0) > 1e-8
    assert escaped >= 38


def test_trivialization_zero_gap_case(e1, e2):
    frames = split_frame(perp(e1), "minus")
    f = FramePoint.checked(e1, np.eye(2), np.eye(2))
    triv = trivialize_phi(e1, frames, f)
    assert triv.pair.s.equals(e2) and triv.pair.t.equals(e2)
    assert triv.u.equals(frames.h_plus)
    assert_allclose(triv.a, np.eye(2), atol=1e-14)
    assert_allclose(triv.b, np.eye(2), atol=1e-14)
    back = trivialize_phi_inv(e1, frames, triv.pair, triv.u, triv.a, triv.b)
    assert back.z.equals(e1)
    assert_allclose(back.g.matrix, np.eye(2), atol=1e-14)


def test_trivialization_outside_domain(e1, e2):
    frames = split_frame(perp(e1), "minus")
    f = FramePoint.checked(e2, np.eye(2), np.eye(2))
    with pytest.raises(OutsideTrivializationDomain):
        trivialize_phi(e1, frames, f)


def test_trivialization_inverse_rejects_mixed_blocks(e1):
    frames = split_frame(perp(e1), "minus")
    triv = trivialize_phi(e1, frames, FramePoint.checked(e1, np.eye(2), np.eye(2)))
    with pytest.raises(OutsideTrivializationDomain):
        trivialize_phi_inv(e1, frames, triv.pair, triv.u, [[1, 1], [0, 1]], triv.b)


@pytest.mark.parametrize("n", DIMS)
def test_trivialization_round_trip(n, rng):
    Z0 = gen.random_subspace(rng, n, n // 2)
    frames = split_frame(perp(Z0), "minus")
    for _ in range(5):
        anchored = gen.random_frame_near_anchor(rng, Z0)
        f = anchored.frame
        triv = trivialize_phi(Z0, frames, f)
        assert gap_distance(triv.pair.s.projector, anchored.s.projector) <= 1e-8
        assert gap_distance(triv.pair.t.projector, anchored.t.projector) <= 1e-8
        assert complementary(triv.u, frames.h_minus) is TriState.TRUE
        assert block_offdiagonal_residual(triv.a, frames) <= 1e-8 * max(1.0, op_norm(triv.a))
        assert block_offdiagonal_residual(triv.b, frames) <= 1e-8 * max(1.0, op_norm(triv.b))
        back = trivialize_phi_inv(Z0, frames, triv.pair, triv.u, triv.a, triv.b)
        assert gap_distance(back.z.projector, f.z.projector) <= 1e-8
        assert _close(back.g.matrix, f.g.matrix) and _close(back.k.matrix, f.k.matrix)


@given(SEEDS)
@settings(max_examples=20, deadline=None)
def test_trivialization_inverse_then_forward(seed):
    rng = np.random.default_rng(seed)
    n = 8
    Z0 = gen.random_subspace(rng, n, 3)
    frames = split_frame(perp(Z0), "minus")
    f = gen.random_frame_near_anchor(rng, Z0).frame
    triv = trivialize_phi(Z0, frames, f)
    a = gen.random_block_diagonal(rng, frames.h_minus)
    b = gen.random_block_diagonal(rng, frames.h_minus)
    again = trivialize_phi(Z0, frames, trivialize_phi_inv(Z0, frames, triv.pair, triv.u, a, b))
    assert gap_distance(again.u.projector, triv.u.projector) <= 1e-8
    assert _close(again.a, a) and _close(again.b, b)


def test_pi_trivialization_example(e1, e2, diagonal):
    f = p_preimage_point(e1, e2, diagonal)
    pt = pi_trivialize(e1, f)
    assert pt.base is diagonal
    assert pi_trivialize_check(e1, pt) is TriState.TRUE
    back = pi_trivialize_inv(e1, pt)
    assert _close(back.g.matrix, f.g.matrix) and _close(back.k.matrix, f.k.matrix)


def test_pi_trivialization_outside_domain(e1, e2):
    f = FramePoint.checked(e2, np.eye(2), np.eye(2))
    with pytest.raises(OutsideChartDomain):
        pi_trivialize(e1, f)


@pytest.mark.parametrize("n", DIMS)
def test_pi_trivialization_round_trip(n, rng):
    Z0 = gen.random_subspace(rng, n, n // 2)
    for _ in range(5):
        f = gen.random_frame_near_anchor(rng, Z0).frame
        pt = pi_trivialize(Z0, f)
        assert pi_trivialize_check(Z0, pt) is TriState.TRUE
        back = pi_trivialize_inv(Z0, pt)
        assert _close(back.g.matrix, f.g.matrix) and _close(back.k.matrix, f.k.matrix)
