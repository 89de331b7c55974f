import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qmap.classify import random_unital_qpos_m2
from qmap.corners import (
    CornerProblem,
    compression_family,
    schur_corner_problem,
    flip_corner,
    flip_forcing_check,
    hypermax_refutation_search,
    is_corner,
    is_q_corner,
    limit_corner,
    projection_label,
    pure_state_corner_problem,
    rank_obstruction,
    rectangular_idempotency,
)
from qmap.errors import DimensionError
from qmap.forms import state_map
from qmap.superop import RectangularMap, Superoperator, haar_unitary


def test_flip_corner_blocks(rng):
    phi = random_unital_qpos_m2(3)
    U = haar_unitary(2, rng)
    p = flip_corner(phi, U)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    np.testing.assert_allclose(p.gamma(A), phi(A @ U.conj().T) @ U, atol=1e-10)
    np.testing.assert_allclose(p.psi(A), U.conj().T @ phi(U @ A @ U.conj().T) @ U, atol=1e-10)
    assert (p.n, p.k) == (2, 2)
    with pytest.raises(DimensionError):
        flip_corner(phi, np.eye(3))


@pytest.mark.parametrize("seed", range(3))
def test_flip_corner_is_hypermaximal(seed):
    rng = np.random.default_rng(seed)
    p = flip_corner(random_unital_qpos_m2(seed), haar_unitary(2, rng))
    assert is_corner(p)
    assert is_q_corner(p).tag == "certified_sampled"
    assert hypermax_refutation_search(p) is None


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.integers(0, 2**32 - 1))
def test_flip_forcing_needs_identity_diagonals(diag, seed):
    X, Y = np.diag(diag[:2]), np.diag(diag[2:])
    U = haar_unitary(2, np.random.default_rng(seed))
    check = flip_forcing_check(X, Y, U)
    assert check["unitary"]
    if check["block_psd"]:
        assert check["diagonal_defect"] < 1e-4


def test_flip_forcing_identity_diagonals_pass(rng):
    check = flip_forcing_check(np.eye(2), np.eye(2), haar_unitary(2, rng))
    assert check["block_psd"] and check["diagonal_defect"] == 0


def test_projection_label_and_family_order():
    assert projection_label([1, 0, 1, 1]) == "e11+e33+e44"
    fam = [projection_label(d) for d in compression_family(4)]
    assert fam[:4] == ["e22+e33+e44", "e11+e33+e44", "e11+e22+e44", "e11+e22+e33"]
    assert len(fam) == 4 + 6


@pytest.mark.parametrize("decoupled,label", [(1, "e11+e33+e44"), (0, "e22+e33+e44")])
def test_schur_corner_witness(decoupled, label):
    p = schur_corner_problem(decoupled=decoupled)
    assert is_corner(p) and not is_q_corner(p).refuted
    w = hypermax_refutation_search(p)
    assert w is not None and w.label == label and w.is_valid()
    sigma = limit_corner(p)
    assert rectangular_idempotency(sigma) < 1e-8


def test_pure_state_corner_witness():
    p = pure_state_corner_problem()
    w = hypermax_refutation_search(p)
    assert w is not None and w.is_valid() and w.label == "e22+e33+e44"


def test_rank_obstruction_full_rank_step():
    # sigma(B) = b11 I has full-rank image; faithful state rho = diag(0.5, 0.5)
    sigma = RectangularMap.from_function(lambda B: B[0, 0] * np.eye(2), (2, 2))
    ob = rank_obstruction(np.diag([0.5, 0.5]), sigma)
    assert ob.step == "full_rank" and ob.value < 0
    assert np.real(ob.vector.conj() @ ob.matrix @ ob.vector) == pytest.approx(ob.value)
    assert ob.value == pytest.approx((0.5 - 4) * 1.0)


def test_rank_obstruction_low_rank_step():
    sigma = RectangularMap.from_function(lambda B: B[0, 1] * np.diag([1.0, 0.0]), (2, 2))
    ob = rank_obstruction(np.diag([0.3, 0.7]), sigma)
    assert ob.step == "low_rank" and ob.value < 0
    assert rank_obstruction(np.eye(2) / 2, RectangularMap.from_function(lambda B: 0 * B, (2, 2))) is None


def test_faithful_state_to_identity_corner_is_not_q_corner():
    gamma = RectangularMap.from_function(lambda B: 0.5 * B, (2, 2))
    p = CornerProblem.build(state_map(weights=[0.5, 0.5]), gamma, Superoperator.identity(2))
    assert is_q_corner(p).refuted
