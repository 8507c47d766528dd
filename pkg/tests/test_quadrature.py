import warnings

import numpy as np
import pytest
from scipy.special import roots_jacobi

from conftest import batch_means_se
from thermal_wigner import models
from thermal_wigner.quadrature import (
    MidpointGrid,
    adaptive_cubature,
    gauss_chebyshev3,
    gauss_hermite,
    gauss_legendre,
    gaussian_grid,
    mc_grid,
    metropolis_sampler,
    morse_grid,
    nelson_grid,
    nelson_map,
    rectangle_grid,
)
from thermal_wigner.reference import classical_averages


def test_gauss_legendre_examples():
    x, w = gauss_legendre(1)
    assert x[0] == 0 and w[0] == 2
    x, w = gauss_legendre(2)
    assert np.allclose(x, [-1 / np.sqrt(3), 1 / np.sqrt(3)]) and np.allclose(w, 1)
    x, w = gauss_legendre(3)
    assert w @ x**4 == pytest.approx(0.4, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 5, 16, 33, 64])
def test_gauss_legendre_degree_exactness(n):
    x, w = gauss_legendre(n)
    for k in range(2 * n):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert abs(w @ x**k - exact) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 7, 30, 64])
def test_gauss_chebyshev3_matches_jacobi(n):
    x, w = gauss_chebyshev3(n)
    xr, wr = roots_jacobi(n, -0.5, 0.5)
    order = np.argsort(xr)
    assert np.allclose(x, xr[order], atol=1e-13)
    assert np.allclose(w, wr[order], rtol=1e-11)
    assert np.all(w > 0)


@pytest.mark.parametrize("n", [1, 3, 12, 64])
def test_gauss_chebyshev3_moments(n):
    x, w = gauss_chebyshev3(n)
    assert w.sum() == pytest.approx(np.pi, rel=1e-13)
    if n >= 1:
        assert w @ x == pytest.approx(np.pi / 2, rel=1e-12)
    # moments against the weight, computed independently by adaptive cubature on (-1, 1)
    # after the substitution x = cos(t) that removes the endpoint singularity
    for k in range(min(2 * n, 20)):
        ref = adaptive_cubature(lambda t: np.cos(t[:, 0]) ** k * (1 + np.cos(t[:, 0])), [0.0], [np.pi],
                                rel_tol=1e-13, abs_tol=1e-14).value
        assert w @ x**k == pytest.approx(ref, rel=1e-11, abs=1e-12)


@pytest.mark.parametrize("n", [1, 4, 20, 64])
def test_gauss_hermite_moments(n):
    from math import gamma

    x, w = gauss_hermite(n)
    for k in range(0, min(2 * n, 40), 2):
        exact = gamma((k + 1) / 2)
        assert w @ x**k == pytest.approx(exact, rel=1e-11)


def test_midpoint_grid_validation():
    with pytest.raises(ValueError):
        MidpointGrid(np.zeros((0, 2)), np.zeros(0), {})
    with pytest.raises(ValueError):
        MidpointGrid(np.zeros((2, 2)), np.array([0.0, np.nan]), {})
    g = rectangle_grid([(0, 1), (0, 2)], 4)
    assert len(g) == 16 and g.weights.sum() == pytest.approx(2.0)


def test_morse_grid_properties():
    chi = 0.05
    m = models.morse(chi, 1.0)
    g = morse_grid(chi, 300, 300)
    assert len(g) == 90_000
    assert np.all(m.normalized_energy(g.nodes) < 1)
    # the bound region has area 4 pi D = pi / chi
    assert g.weights.sum() == pytest.approx(np.pi / chi, rel=1e-10)


def test_morse_grid_area_against_cubature():
    chi = 0.05
    D = 1 / (4 * chi)

    def width(q):
        e = (1 - np.exp(-q[:, 0])) ** 2
        return 4 * D * np.sqrt(np.clip(1 - e, 0, None))

    # q from -ln 2 (inner wall) to a far cut where the width has died off
    res = adaptive_cubature(width, [-np.log(2)], [40.0], rel_tol=1e-10, max_evals=200_000)
    g = morse_grid(chi, 60, 200)
    assert g.weights.sum() == pytest.approx(res.value, rel=1e-6)


def test_morse_grid_weights_are_jacobian_times_rule(rng):
    chi = 0.08
    P, wp = gauss_legendre(20)
    Q, wq = gauss_chebyshev3(30)
    g = morse_grid(chi, 20, 30)
    for i in rng.choice(len(g), 25, replace=False):
        p, q = g.nodes[i]
        Qi = 1 - np.exp(-q)
        Pi = p * 2 * chi / np.sqrt(1 - Qi * Qi)
        a = np.argmin(abs(P - Pi))
        b = np.argmin(abs(Q - Qi))
        assert abs(P[a] - Pi) < 1e-10 and abs(Q[b] - Qi) < 1e-10
        # GC3 weight = GL-style weight * sqrt((1+Q)/(1-Q)), so the jacobian enters as 1/(2 chi)
        assert g.weights[i] == pytest.approx(wp[a] * wq[b] / (2 * chi), rel=1e-12)


def test_gaussian_grid_integrates_gaussians_exactly():
    ho = models.harmonic_oscillator(1.0, 1.0)
    for theta in (0.5, 2.0):
        g = gaussian_grid(ho.domain, theta, 16, scaling="classical")
        vals = np.exp(-theta * ho.classical(g.nodes))
        assert g.integrate(vals) == pytest.approx(2 * np.pi / theta, rel=1e-12)


def test_nelson_map_basics():
    nodes, jac = nelson_map(np.zeros(4), 2.0, 0.5, 0.5)
    assert np.array_equal(nodes, np.zeros(4))
    g = nelson_grid(2.0, 0.5, 10, scaling="classical")
    n = models.nelson(2.0, 1.0)
    # the Boltzmann weight in mapped coordinates is exp(-|T|^2): value 1 at the origin
    assert np.exp(-0.5 * n.classical(np.zeros(4))) == 1.0
    T = np.array([[0.3, -0.2, 0.5, 0.1]])
    x, _ = nelson_map(T, 2.0, 0.5, 0.5)
    assert 0.5 * n.classical(x)[0] == pytest.approx(np.sum(T * T), rel=1e-12)
    assert len(g) == 10**4


def test_nelson_grid_classical_energy_matches_metropolis():
    theta, mu = 0.5, 2.0
    n = models.nelson(mu, 1.0)
    mean, _ = classical_averages(n, theta, nelson_grid(mu, theta, 12, scaling="classical"))
    run = metropolis_sampler(lambda x: -theta * n.classical(x), np.zeros(4), 1.2, 200_000, seed=5, n_chains=20)
    h = n.classical(run.samples)
    se = batch_means_se(h)
    assert abs(h.mean() - mean) < 3 * se
    assert mean == pytest.approx(2 / theta, rel=1e-12)


def test_cubature_examples():
    r = adaptive_cubature(lambda x: np.ones(len(x)), [0.0], [1.0])
    assert r.value == pytest.approx(1.0, abs=1e-15) and r.converged
    r = adaptive_cubature(lambda x: x[:, 0] * x[:, 1], [0, 0], [1, 1])
    assert r.value == pytest.approx(0.25, rel=1e-13)
    r = adaptive_cubature(lambda x: np.exp(-0.5 * np.sum(x * x, axis=1)), [-6, -6], [6, 6], rel_tol=1e-8)
    assert r.value == pytest.approx(2 * np.pi, rel=1e-7) and r.converged
    assert r.error <= 1e-8 * r.value


def test_cubature_budget_flag():
    r = adaptive_cubature(lambda x: np.abs(x[:, 0] - 0.3) ** 0.1 * np.abs(x[:, 1] - 0.7) ** 0.1,
                          [0, 0], [1, 1], rel_tol=1e-14, max_evals=2000)
    assert not r.converged and r.n_evals <= 2000 and np.isfinite(r.value)


def test_metropolis_standard_normal():
    run = metropolis_sampler(lambda x: -0.5 * x[:, 0] ** 2, [0.0], 2.4, 1_000_000, seed=1, n_chains=50)
    x = run.samples[:, 0]
    assert len(x) == 1_000_000
    assert abs(x.mean()) < 4 * batch_means_se(x)
    assert abs(x.var() - 1) < 4 * batch_means_se((x - x.mean()) ** 2)
    assert 0.1 <= run.acceptance_rate <= 0.6


def test_metropolis_classical_equipartition():
    ho = models.harmonic_oscillator(1.0, 1.0)
    g = mc_grid(ho, 1.0, 200_000, seed=11)
    h = ho.classical(g.nodes)
    assert abs(h.mean() - 1.0) < 4 * batch_means_se(h)
    assert g.descriptor["seed"] == 11 and g.descriptor["burn_in"] == 0.1


def test_metropolis_determinism_and_failures():
    f = lambda x: -0.5 * np.sum(x * x, axis=1)  # noqa: E731
    a = metropolis_sampler(f, [0.0, 0.0], 1.0, 5000, seed=3).samples
    b = metropolis_sampler(f, [0.0, 0.0], 1.0, 5000, seed=3).samples
    assert np.array_equal(a, b)
    with pytest.raises(RuntimeError):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            metropolis_sampler(f, [0.0, 0.0], 1e6, 5000, seed=3, window=200)
    with pytest.raises(ValueError):
        metropolis_sampler(lambda x: np.full(len(x), -np.inf), [0.0], 1.0, 10, seed=0)
    with pytest.warns(RuntimeWarning):
        metropolis_sampler(f, [0.0, 0.0], 1e-3, 2000, seed=3)
