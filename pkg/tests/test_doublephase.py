import numpy as np
import pytest

from thermal_wigner import models
from thermal_wigner.doublephase import (
    critical_time,
    double_hamiltonian,
    initial_state,
    morse_imaginary_trajectory,
    propagate_batch,
    propagate_thermal,
    rhs,
    state_size,
    unpack,
)
from thermal_wigner.stepper import ODETolerances

TIGHT = ODETolerances(rtol=1e-12, atol=1e-13)


def _midpoints(model, rng, n):
    if isinstance(model, models.Morse):
        # bound midpoints with eps < 0.3, well away from the divergent orbits
        out = []
        while len(out) < n:
            x = rng.normal(size=2) * [np.sqrt(model.D), 0.15]
            if model.normalized_energy(x) < 0.3:
                out.append(x)
        return np.array(out)
    return rng.normal(scale=0.6, size=(n, 2 * model.dof))


MODELS = [models.harmonic_oscillator(1.0, 1.0), models.kerr(1.0, 0.3, 1.0), models.morse(0.05, 1.0),
          models.nelson(2.0, 1.0)]


def test_state_layout():
    assert state_size(1) == 13 and state_size(2) == 41
    Y = initial_state(np.array([[1.0, 2.0]]))
    x, yw, jx, jy, area = unpack(Y, 1)
    assert np.array_equal(x[0], [1, 2]) and not yw.any() and not jy.any() and area[0] == 0
    assert np.array_equal(jx[0], np.eye(2))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_rhs_at_start_kicks_chord_only(model, rng):
    X = _midpoints(model, rng, 4)
    d = rhs(initial_state(X), model)
    n = X.shape[1]
    assert np.all(d[:, :n] == 0)
    assert np.allclose(d[:, n : 2 * n], -2 * np.real(model.gradient(X)))
    assert np.all(np.isfinite(d)) and np.isrealobj(d)


def test_harmonic_closed_forms():
    ho = models.harmonic_oscillator(1.0, 1.0)
    out = propagate_thermal(np.array([1.0, 0.0]), 2.0, ho, TIGHT)
    assert np.allclose(out.centre, [np.cosh(1.0), 0.0], atol=1e-10)
    assert out.euclidean_action + 2 * 0.5 == pytest.approx((2 - np.sinh(2)) * 0.5, abs=1e-10)
    assert out.det_jac == pytest.approx(np.cosh(1.0) ** 2, rel=1e-10)
    assert not (out.caustic_crossed or out.diverged)


def test_zero_theta_is_identity():
    out = propagate_thermal(np.array([0.3, -0.4]), 0.0, models.kerr(1.0, 0.2, 1.0))
    assert np.array_equal(out.centre, [0.3, -0.4])
    assert out.euclidean_action == 0 and out.det_jac == 1 and out.weight == 1


def test_negative_theta_rejected():
    with pytest.raises(ValueError):
        propagate_thermal(np.zeros(2), -1.0, models.harmonic_oscillator())


def test_kerr_propagation_matches_normal_form():
    k = models.kerr(1.0, 0.1, 1.0)
    from thermal_wigner.symbols import normal_form_thermal

    out = propagate_thermal(np.array([1.0, 0.0]), 2.0, k, TIGHT)
    c, s, d = normal_form_thermal(k.normal_form(), np.array([1.0, 0.0]), 2.0)
    assert np.allclose(out.centre, c, atol=1e-8, rtol=1e-8)
    assert out.euclidean_action == pytest.approx(s, rel=1e-8, abs=1e-8)
    assert out.det_jac == pytest.approx(d, rel=1e-8)


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
@pytest.mark.parametrize("theta", [0.5, 2.0])
def test_jacobian_matches_finite_differences(model, theta, rng):
    X = _midpoints(model, rng, 3)
    h = 1e-5
    n = X.shape[1]
    (base,) = propagate_batch(X, [theta], model, TIGHT)
    assert base.valid.all()
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        (plus,) = propagate_batch(X + e, [theta], model, TIGHT)
        (minus,) = propagate_batch(X - e, [theta], model, TIGHT)
        fd = (plus.centre - minus.centre) / (2 * h)
        col = base.jac[:, :, k]
        scale = np.maximum(1.0, np.abs(col))
        assert np.max(np.abs(fd - col) / scale) < 1e-5


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_double_hamiltonian_is_conserved(model, rng):
    X = _midpoints(model, rng, 5)
    thetas = [0.5, 1.0, 2.0]
    batches, raw = propagate_batch(X, thetas, model, return_raw=True)
    h0 = 2 * model.value(X)
    for k, th in enumerate(thetas):
        ok = raw.reached[k]
        hh = double_hamiltonian(raw.states[k][ok], model)
        drift = np.abs(hh - h0[ok]) / np.maximum(1.0, np.abs(h0[ok]))
        assert np.all(drift < 1e-6 * (th / 2))


@pytest.mark.parametrize("model", MODELS, ids=lambda m: m.name)
def test_short_time_action_is_cubic(model, rng):
    X = _midpoints(model, rng, 1)
    thetas = np.geomspace(0.02, 0.2, 6)
    batches = propagate_batch(X, thetas, model, TIGHT)
    resid = np.array([abs(b.action[0] + b.theta * model.symbol_h(X)[0]) for b in batches])
    slope = np.polyfit(np.log(thetas), np.log(resid), 1)[0]
    assert slope >= 2.7


def test_caustic_or_divergence_zeroes_the_weight():
    m = models.morse(0.05, 1.0)
    q0 = -np.log(1 + np.sqrt(0.9))
    out = propagate_thermal(np.array([0.0, q0]), 10.0, m)
    assert out.diverged or out.caustic_crossed
    assert out.weight == 0.0


@pytest.mark.parametrize("eps", [0.25, 0.5, 0.9])
def test_divergence_time_matches_critical_time(eps):
    m = models.morse(0.05, 1.0)
    q0 = -np.log(1 + np.sqrt(eps))
    out = propagate_thermal(np.array([0.0, q0]), 20.0, m)
    assert out.diverged
    assert out.s_event == pytest.approx(critical_time(eps), rel=0.01)


def test_critical_time_values():
    assert critical_time(0.25) == pytest.approx(np.log(2 + np.sqrt(3)) / np.sqrt(0.75), rel=1e-12)
    assert critical_time(0.25) == pytest.approx(1.5206, abs=1e-4)
    assert critical_time(1 - 1e-10) == pytest.approx(1.0, rel=1e-4)
    e = np.linspace(0.01, 0.99, 50)
    assert np.all(np.diff(critical_time(e)) < 0)
    for bad in (0.0, 1.0, -0.1):
        with pytest.raises(ValueError):
            critical_time(bad)


def test_morse_trajectory_matches_closed_form():
    chi, eps = 0.05, 0.5
    m = models.morse(chi, 1.0)
    q0 = -np.log(1 + np.sqrt(eps))
    s = 0.9 * critical_time(eps)
    q_ref, p_imag = morse_imaginary_trajectory(q0, s, chi)
    _, raw = propagate_batch(np.array([[0.0, q0]]), [2 * s], m, TIGHT, return_raw=True)
    x, yw, *_ = unpack(raw.states[0, 0], 1)
    # z = x + (i/2) J y_w: Re z = centre, Im z_p = -y_w_q / 2, Im z_q = y_w_p / 2
    assert x[1] == pytest.approx(q_ref, abs=1e-6)
    assert x[0] == pytest.approx(0.0, abs=1e-6)
    assert -0.5 * yw[1] == pytest.approx(p_imag, rel=1e-6)
    assert 0.5 * yw[0] == pytest.approx(0.0, abs=1e-6)
    q_start, _ = morse_imaginary_trajectory(q0, 0.0, chi)
    assert q_start == pytest.approx(q0, abs=1e-14)
    with pytest.raises(ValueError):
        morse_imaginary_trajectory(q0, 1.01 * critical_time(eps), chi)
    with pytest.raises(ValueError):
        morse_imaginary_trajectory(0.2, 0.1, chi)


def test_thread_split_is_bit_identical(rng):
    m = models.nelson(2.0, 1.0)
    X = rng.normal(scale=0.5, size=(40, 4))
    (a,) = propagate_batch(X, [1.5], m, threads=1)
    (b,) = propagate_batch(X, [1.5], m, threads=3)
    assert np.array_equal(a.log_amplitude, b.log_amplitude)
    assert np.array_equal(a.centre, b.centre)


def test_multiple_thetas_in_any_order():
    ho = models.harmonic_oscillator()
    X = np.array([[0.5, 0.5]])
    out = propagate_batch(X, [2.0, 0.5, 1.0], ho)
    assert [b.theta for b in out] == [2.0, 0.5, 1.0]
    for b in out:
        assert np.allclose(b.centre[0], np.cosh(b.theta / 2) * X[0], rtol=1e-7)
