import numpy as np
import pytest
from scipy.integrate import solve_ivp

from thermal_wigner.stepper import BS3, DOPRI5, ODETolerances, integrate_batch


@pytest.mark.parametrize("tab", [DOPRI5, BS3], ids=lambda t: t.name)
def test_tableau_consistency(tab):
    assert np.allclose(tab.a.sum(axis=1), tab.c)
    assert tab.b.sum() == pytest.approx(1.0)
    assert tab.b_low.sum() == pytest.approx(1.0)
    # second- and third-order conditions for the propagating weights
    assert tab.b @ tab.c == pytest.approx(0.5)
    assert tab.b @ tab.c**2 == pytest.approx(1 / 3)
    assert tab.b @ (tab.a @ tab.c) == pytest.approx(1 / 6)
    # FSAL: the last stage equals the propagating combination
    assert np.allclose(tab.a[-1], tab.b)


def test_dopri5_matches_scipy_rk45_coefficients():
    from scipy.integrate._ivp.rk import RK45

    assert np.allclose(DOPRI5.c[:-1], RK45.C)
    assert np.allclose(DOPRI5.b[:-1], RK45.B)
    assert np.allclose(DOPRI5.a[:-1, :-2], RK45.A)
    assert np.allclose(DOPRI5.e, -RK45.E)


def _vdp(y):
    return np.column_stack([y[:, 1], 2.0 * (1 - y[:, 0] ** 2) * y[:, 1] - y[:, 0]])


@pytest.mark.parametrize("method", ["dopri5", "bs3"])
def test_agrees_with_solve_ivp(method):
    y0 = np.array([[2.0, 0.0], [0.5, -1.0], [-1.0, 1.5]])
    stops = [0.5, 1.7, 3.0]
    tol = ODETolerances(rtol=1e-10, atol=1e-12, method=method)
    res = integrate_batch(_vdp, y0, stops, tol)
    assert res.reached.all()
    for i in range(3):
        ref = solve_ivp(lambda t, y: _vdp(y[None])[0], (0, 3), y0[i], t_eval=stops, rtol=1e-12, atol=1e-14,
                        method="DOP853")
        assert np.allclose(res.states[:, i], ref.y.T, rtol=1e-7, atol=1e-8)


def test_exponential_decay_and_repeated_stops():
    res = integrate_batch(lambda y: -y, np.ones((1, 1)), [0.0, 1.0, 1.0, 2.0])
    assert res.states[0, 0, 0] == 1.0
    assert res.states[1, 0, 0] == res.states[2, 0, 0]
    assert res.states[3, 0, 0] == pytest.approx(np.exp(-2), rel=1e-8)


def test_blow_up_is_reported_not_raised():
    # y' = y^2, y(0) = 1 blows up at s = 1
    res = integrate_batch(lambda y: y * y, np.array([[1.0], [0.1]]), [0.5, 2.0])
    assert res.reached[0].all()
    assert res.diverged[0] and not res.diverged[1]
    assert not res.reached[1, 0] and np.isnan(res.states[1, 0]).all()
    assert res.s_event[0] == pytest.approx(1.0, abs=1e-3)
    assert res.states[1, 1, 0] == pytest.approx(0.1 / (1 - 0.2), rel=1e-8)


def test_monitor_freezes_rows():
    res = integrate_batch(lambda y: np.ones_like(y), np.zeros((2, 1)) + [[0.0], [-5.0]], [3.0],
                          monitor=lambda y: y[:, 0] > 1.0)
    assert res.flagged[0] and not res.flagged[1]
    assert 1.0 < res.s_event[0] < 3.0
    assert res.states[0, 1, 0] == pytest.approx(-2.0)


def test_rows_are_independent_of_batch_companions():
    rng = np.random.default_rng(3)
    y0 = rng.normal(size=(8, 2))
    full = integrate_batch(_vdp, y0, [1.0, 2.5])
    for i in (0, 5):
        alone = integrate_batch(_vdp, y0[i : i + 1], [1.0, 2.5])
        assert np.array_equal(alone.states[:, 0], full.states[:, i])


def test_validation():
    with pytest.raises(ValueError):
        ODETolerances(rtol=0)
    with pytest.raises(ValueError):
        ODETolerances(method="rk4")
    with pytest.raises(ValueError):
        integrate_batch(lambda y: y, np.ones((1, 1)), [1.0, 0.5])
    with pytest.raises(ValueError):
        integrate_batch(lambda y: y, np.ones(3), [1.0])
