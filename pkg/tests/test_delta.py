import logging

import numpy as np
import pytest

from services import instance_generator as gen
from services.bundle import p_preimage_point, project_p
from services.delta import (
    ComplementMethod,
    DeltaPair,
    certify,
    common_complement,
    delta_neighborhood_check,
    in_delta,
)
from services.errors import DimensionMismatch, NotInDelta, SearchFailed
from services.grassmann import coordinate_subspace, full_space, zero_subspace
from services.serialization import CertificateModel, dumps
from services.substrate import TriState, gap_distance


def test_in_delta_compares_dimensions(e1, diagonal):
    assert in_delta(e1, diagonal) is TriState.TRUE
    assert in_delta(coordinate_subspace(3, [0]), coordinate_subspace(3, [0, 1])) is TriState.FALSE
    with pytest.raises(DimensionMismatch):
        in_delta(e1, coordinate_subspace(3, [0]))


def test_pair_components_share_ambient_space(e1):
    with pytest.raises(DimensionMismatch):
        DeltaPair(e1, coordinate_subspace(3, [0]))


def test_common_complement_example(e1, e2, diagonal):
    cert = common_complement(e1, diagonal)
    assert cert.z.equals(e2)
    assert cert.method is ComplementMethod.GREEDY
    assert cert.margin_s == pytest.approx(1.0)
    assert cert.margin_t == pytest.approx(1 - 1 / np.sqrt(2))


def test_common_complement_is_reproducible(e1, diagonal):
    first = dumps(CertificateModel.from_certificate(common_complement(e1, diagonal, seed=7)))
    second = dumps(CertificateModel.from_certificate(common_complement(e1, diagonal, seed=7)))
    assert first == second


def test_common_complement_of_equal_subspaces(e1, e2):
    assert common_complement(e1, e1).z.equals(e2)


def test_common_complement_rejects_unequal_dimensions():
    with pytest.raises(NotInDelta):
        common_complement(coordinate_subspace(3, [0]), coordinate_subspace(3, [0, 1]))


def test_common_complement_extreme_dimensions():
    top = common_complement(full_space(3), full_space(3))
    assert top.z.dim == 0
    bottom = common_complement(zero_subspace(3), zero_subspace(3))
    assert bottom.z.equals(full_space(3))


@pytest.mark.parametrize("n", (4, 6, 8))
def test_common_complement_of_random_pairs(n, rng):
    for _ in range(5):
        k = int(rng.integers(1, n))
        S = gen.random_subspace(rng, n, k)
        T = gen.random_subspace(rng, n, k)
        cert = common_complement(S, T, seed=3)
        verdict, margin_s, margin_t = certify(S, T, cert.z)
        assert verdict is TriState.TRUE
        assert margin_s == pytest.approx(cert.margin_s) and margin_t == pytest.approx(cert.margin_t)
        pair = project_p(p_preimage_point(S, T, cert.z))
        assert gap_distance(pair.s.projector, S.projector) <= 1e-8
        assert gap_distance(pair.t.projector, T.projector) <= 1e-8


def test_search_failure_reports_best_margins(e1):
    with pytest.raises(SearchFailed) as info:
        common_complement(e1, e1, retry_budget=0, min_residual=2.0)
    assert len(info.value.margins) == 2


def test_certify_rejects_non_complement(e1, diagonal):
    verdict, margin_s, _ = certify(e1, diagonal, e1)
    assert verdict is TriState.FALSE
    assert margin_s == pytest.approx(0.0)


def test_delta_neighborhood(e1, e2, diagonal):
    assert delta_neighborhood_check(e2, e1, diagonal) is TriState.TRUE
    assert delta_neighborhood_check(e1, e1, diagonal) is TriState.FALSE


def test_delta_neighborhood_of_zero_complement():
    assert delta_neighborhood_check(zero_subspace(3), full_space(3), full_space(3)) is TriState.TRUE


def test_random_fallback_certifies(e1, e2, caplog):
    # No pool vector sits 0.9 away from both coordinate axes of C^2.
    with caplog.at_level(logging.WARNING, logger="services.delta"):
        cert = common_complement(e1, e2, seed=5, min_residual=0.9)
    assert cert.method is ComplementMethod.RANDOM
    assert certify(e1, e2, cert.z)[0] is TriState.TRUE
    assert "gave only 0/1 vectors" in caplog.text
