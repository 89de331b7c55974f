import numpy as np
import pytest

from qmap.config import DEFAULT, ToleranceConfig
from qmap.errors import SchemaError, SingularResolventError
from qmap.forms import (
    phi_r_family,
    phi_r_threshold,
    qpure_invertible_canonical,
    schur_qpos_mask,
    state_density,
    state_map,
)
from qmap.superop import is_completely_positive


def test_overrides_ignore_none():
    cfg = DEFAULT.with_overrides(grid_points=32, t_cap=None)
    assert cfg.grid_points == 32 and cfg.t_cap == DEFAULT.t_cap
    with pytest.raises(ValueError):
        DEFAULT.with_overrides(grid_points=8)
    assert ToleranceConfig().to_dict()["eig_floor"] == 1e-9


def test_error_messages():
    assert str(SchemaError("$.n", "expected a positive integer")) == "$.n: expected a positive integer"
    assert SingularResolventError(2.0, 1e13).t == 2.0


def test_state_map_round_trip():
    D = np.array([[0.3, 0.1j], [-0.1j, 0.7]])
    phi = state_map(density=D)
    np.testing.assert_allclose(state_density(phi), D, atol=1e-12)
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(phi(A), np.trace(D @ A) * np.eye(2), atol=1e-12)


def test_phi_r_domain():
    with pytest.raises(ValueError):
        phi_r_family(1.0)
    with pytest.raises(ValueError):
        phi_r_family(1.5)
    assert phi_r_threshold(np.sqrt(2)) == pytest.approx(0.0, abs=1e-12)
    assert is_completely_positive(phi_r_family(1.3)).ok


def test_qpos_mask_is_psd():
    for x in (0.0, 0.5):
        M = schur_qpos_mask([0.6, -0.2, -0.4], x)
        assert np.linalg.eigvalsh(M)[0] > 0
    with pytest.raises(ValueError):
        qpure_invertible_canonical([0.5, 0.5])
