import numpy as np
import pytest

from thermal_wigner.phase import apply_J, apply_J_left, apply_J_right, as_phase_point, symplectic_matrix, wedge


def test_apply_j_columns():
    assert np.array_equal(apply_J([1.0, 0.0]), [0.0, 1.0])
    assert np.array_equal(apply_J([0.0, 1.0]), [-1.0, 0.0])
    assert np.array_equal(apply_J([1.0, 2.0, 3.0, 4.0]), [-3.0, -4.0, 1.0, 2.0])


@pytest.mark.parametrize("d", [1, 2, 3])
def test_j_squared_is_minus_identity(d, rng):
    x = rng.normal(size=(5, 2 * d))
    assert np.array_equal(apply_J(apply_J(x)), -x)
    J = symplectic_matrix(d)
    assert np.array_equal(J @ J, -np.eye(2 * d))
    assert np.array_equal(J.T, -J)
    m = rng.normal(size=(2 * d, 2 * d))
    assert np.allclose(apply_J_left(m), J @ m)
    assert np.allclose(apply_J_right(m), m @ J)


def test_wedge_examples():
    assert wedge([1.0, 0.0], [0.0, 1.0]) == 1.0
    assert wedge([1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]) == 1.0


def test_wedge_antisymmetric(rng):
    for _ in range(20):
        a, b = rng.normal(size=(2, 4))
        assert wedge(a, b) == pytest.approx(-wedge(b, a), abs=1e-14)
        assert wedge(a, a) == pytest.approx(0.0, abs=1e-14)


def test_dimension_errors():
    with pytest.raises(ValueError):
        wedge([1.0, 0.0], [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        apply_J([1.0, 2.0, 3.0])
    with pytest.raises(ValueError):
        as_phase_point([1.0, np.nan])
    with pytest.raises(ValueError):
        as_phase_point([1.0, 2.0], dof=2)
