import numpy as np
import pytest

from qmap.classify import (
    E2_FAMILIES,
    E3_FAMILIES,
    M2_FAMILIES,
    canonical_rank2_pair,
    canonical_rank2_params,
    classify_E2,
    classify_E3,
    classify_unital_qpos_m2,
    extract_generator_Y,
    fixed_rank_one_projections,
    is_qpure_m2,
    random_idempotent_ucp,
    random_unital_qpos_m2_with_params,
    reconstruct,
)
from qmap.errors import ClassificationError, DimensionError, RankThreeError
from qmap.forms import E3_RANKS, e3_form, phi_r_family, qpure_invertible_canonical, rank2_canonical, rank3_unital_map
from qmap.limits import is_idempotent_ucp
from qmap.superop import Superoperator, conjugate_map, haar_unitary


def _e2_family_map(family, rng):
    return random_idempotent_ucp(2, family, rng) if family == "E2_state" else (
        conjugate_map(reconstruct(family, {}), haar_unitary(2, rng)), {}, None)


@pytest.mark.parametrize("family", E2_FAMILIES)
def test_e2_round_trip(family):
    rng = np.random.default_rng(11)
    for _ in range(20):
        Phi, params, _ = _e2_family_map(family, rng)
        form = classify_E2(Phi)
        assert form.family == family
        for key, value in params.items():
            np.testing.assert_allclose(form.params[key], value, atol=1e-6)
        assert form.reconstructed().distance(Phi) <= 1e-8


@pytest.mark.parametrize("family", [f for f in E3_FAMILIES])
def test_e3_round_trip(family):
    rng = np.random.default_rng(13)
    for _ in range(10):
        Phi, params, _ = random_idempotent_ucp(3, family, rng)
        form = classify_E3(Phi)
        assert form.family == family
        for key, value in params.items():
            np.testing.assert_allclose(form.params[key], value, atol=1e-6)
        assert form.reconstructed().distance(Phi) <= 1e-8


@pytest.mark.parametrize("family", E3_FAMILIES)
def test_e3_forms_are_idempotent_ucp_with_known_rank(family):
    lam = 0.3 if family in ("E3_I", "E3_II", "E3_III", "E3_VI") else None
    Phi = reconstruct(family, {"lambda": lam, "weights": [0.2, 0.3, 0.5]})
    assert is_idempotent_ucp(Phi)
    assert Phi.rank() == E3_RANKS[family]


def test_swapped_lambda_is_folded():
    # lambda = 0.7 is conjugate to lambda = 0.3 by swapping the last two basis vectors
    form = classify_E3(e3_form("E3_II", 0.7))
    assert form.family == "E3_II" and abs(form.params["lambda"] - 0.3) < 1e-9


def test_state_weights_increasing():
    from qmap.forms import state_map

    form = classify_E2(state_map(weights=[0.7, 0.3]))
    np.testing.assert_allclose(form.params["weights"], [0.3, 0.7], atol=1e-12)


def test_classifiers_reject_bad_input():
    with pytest.raises(ClassificationError):
        classify_E3(0.5 * Superoperator.identity(3))
    with pytest.raises(DimensionError):
        classify_E3(Superoperator.identity(2))
    with pytest.raises(DimensionError):
        classify_E2(Superoperator.identity(3))


def test_fixed_rank_one_projections_of_diagonal_form():
    vs = fixed_rank_one_projections(e3_form("E3_IV"))
    assert len(vs) >= 1
    for v in vs:
        E = np.outer(v, v.conj())
        np.testing.assert_allclose(e3_form("E3_IV")(E), E, atol=1e-8)


@pytest.mark.parametrize("cls", M2_FAMILIES)
def test_m2_round_trip(cls):
    for seed in range(10):
        phi, _, params, _ = random_unital_qpos_m2_with_params(seed, cls)
        form = classify_unital_qpos_m2(phi)
        assert form.family == cls
        for key, value in params.items():
            np.testing.assert_allclose(form.params[key], value, atol=1e-6)
        assert form.reconstructed().distance(phi) <= 1e-8


def test_rank_three_is_rejected():
    with pytest.raises(RankThreeError, match="got rank 3"):
        classify_unital_qpos_m2(rank3_unital_map())


def test_non_qpositive_is_rejected():
    with pytest.raises(ClassificationError):
        classify_unital_qpos_m2(phi_r_family(1.2))


def test_rank2_pair_representative():
    assert canonical_rank2_pair(0.8, 0.3) == (0.8, 0.3)
    assert canonical_rank2_pair(0.6, 0.1) == pytest.approx((0.9, 0.4))
    lam, lam_p, X = canonical_rank2_params(rank2_canonical(0.6, 0.1))
    assert (lam, lam_p) == pytest.approx((0.9, 0.4))
    assert conjugate_map(rank2_canonical(lam, lam_p), X).distance(rank2_canonical(0.6, 0.1)) < 1e-9


def test_generator_of_qpure_schur_map():
    gen = extract_generator_Y(qpure_invertible_canonical([0.75, -0.75]))
    np.testing.assert_allclose(gen.Y, np.diag([0.75j, -0.75j]), atol=1e-10)
    assert gen.is_qpure_canonical()


def test_generator_of_phi_r_is_not_representable():
    gen = extract_generator_Y(phi_r_family(1.2))
    assert gen.residual > 1e-3
    assert not gen.is_qpure_canonical()


def test_qpurity_flags():
    assert not is_qpure_m2(classify_unital_qpos_m2(rank2_canonical(0.8, 0.3)))
    assert is_qpure_m2(classify_unital_qpos_m2(qpure_invertible_canonical([0.5, -0.5])))


def test_describe():
    form = classify_E3(e3_form("E3_II", 0.4))
    assert form.describe() == "E3 form (II), λ=0.400"
