"""Semiclassical thermal averages and Wigner functions.

Averages are ratios of midpoint integrals

    <O> = sum_i w_i A(X_i) O(x(X_i)) / sum_i w_i A(X_i),

with ``A = sqrt|det dx/dX| exp(S_E / hbar)``; all overall constants cancel.
Sums are formed in log space with numpy's pairwise summation, so results
do not depend on how the trajectories were chunked.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .doublephase import ThermalBatch, propagate_batch
from .quadrature import MidpointGrid, default_grid, gauss_legendre
from .stepper import ODETolerances

__all__ = [
    "EngineError",
    "ThermalSample",
    "ThermalObservableResult",
    "thermal_samples",
    "ratio_from_sample",
    "observables_from_sample",
    "trace_ratio",
    "thermal_energy",
    "specific_heat",
    "thermal_observables",
    "WignerValues",
    "wigner_values",
    "wigner_at",
    "WignerGrid",
    "wigner_grid",
    "wigner_marginals",
]


class EngineError(RuntimeError):
    pass


@dataclass
class ThermalSample:
    """Trajectories for one thermal time together with their grid."""

    batch: ThermalBatch
    grid: MidpointGrid

    @property
    def theta(self):
        return self.batch.theta

    @property
    def log_terms(self):
        return self.grid.log_weights + self.batch.log_amplitude


@dataclass
class ThermalObservableResult:
    theta: float
    mean_energy: float
    specific_heat: float
    partition_weight_sum: float
    discarded_fraction: float
    negative_heat: bool = False
    mean_energy_sq: float = float("nan")


def _resolve_grids(model, thetas, grid, resolution):
    """Group thermal times by grid; returns ``[(grid, [theta indices])]``."""
    if isinstance(grid, MidpointGrid):
        return [(grid, list(range(len(thetas))))]
    if callable(grid):
        return [(grid(t), [i]) for i, t in enumerate(thetas)]
    if grid not in (None, "default"):
        raise TypeError("grid must be a MidpointGrid, a callable theta -> grid, or None")
    if model.domain.kind in ("morse-bound", "rectangle"):
        return [(default_grid(model, None, resolution), list(range(len(thetas))))]
    return [(default_grid(model, t, resolution), [i]) for i, t in enumerate(thetas)]


def thermal_samples(model, thetas, grid=None, tol=None, threads=1, resolution=None):
    """Propagate grid midpoints for every thermal time in `thetas`.

    θ-independent grids are propagated once with stops at every
    ``theta / 2``; θ-dependent grids (the default for all-space and Nelson
    domains) are rebuilt per θ.
    """
    thetas = [float(t) for t in np.atleast_1d(thetas)]
    tol = tol or ODETolerances()
    out = [None] * len(thetas)
    for g, idx in _resolve_grids(model, thetas, grid, resolution):
        batches = propagate_batch(g.nodes, [thetas[i] for i in idx], model, tol, threads)
        for i, b in zip(idx, batches):
            out[i] = ThermalSample(b, g)
    return out


def _normalised_terms(sample):
    t = sample.log_terms
    ok = np.isfinite(t)
    if not ok.any():
        raise EngineError(
            f"all trajectories discarded at theta={sample.theta} "
            f"(discarded fraction {sample.batch.discarded_fraction:.3f})"
        )
    m = np.max(t[ok])
    w = np.where(ok, np.exp(np.where(ok, t - m, 0.0)), 0.0)
    return w, m, ok


def ratio_from_sample(sample, observable):
    """``<O>`` from precomputed trajectories; `observable` acts on centres."""
    w, _, ok = _normalised_terms(sample)
    vals = np.zeros(len(w))
    vals[ok] = observable(sample.batch.centre[ok])
    return float(np.sum(w * vals) / np.sum(w))


def trace_ratio(model, theta, observable, grid=None, tol=None, threads=1):
    """Semiclassical ``Tr(exp(-beta H) O) / Tr exp(-beta H)``."""
    if theta < 0:
        raise ValueError("theta must be non-negative")
    (sample,) = thermal_samples(model, [theta], grid, tol, threads)
    return ratio_from_sample(sample, observable)


def thermal_energy(model, theta, grid=None, tol=None, threads=1):
    return trace_ratio(model, theta, model.symbol_h, grid, tol, threads)


def observables_from_sample(sample, model):
    w, m, ok = _normalised_terms(sample)
    x = sample.batch.centre[ok]
    z = np.sum(w)
    h = np.sum(w[ok] * model.symbol_h(x)) / z
    h2 = np.sum(w[ok] * model.symbol_h2(x)) / z
    beta = sample.theta / model.hbar
    c = beta * beta * (h2 - h * h)
    with np.errstate(over="ignore"):
        zsum = float(np.exp(m) * z)
    return ThermalObservableResult(
        theta=sample.theta, mean_energy=float(h), specific_heat=float(c), partition_weight_sum=zsum,
        discarded_fraction=sample.batch.discarded_fraction, negative_heat=bool(c < 0), mean_energy_sq=float(h2),
    )


def specific_heat(model, theta, grid=None, tol=None, threads=1):
    """``beta^2 (<H^2> - <H>^2)`` with the Weyl symbols of H and H^2.

    The semiclassical value can come out negative; it is returned as is
    with a :class:`RuntimeWarning`.
    """
    (sample,) = thermal_samples(model, [theta], grid, tol, threads)
    res = observables_from_sample(sample, model)
    if res.negative_heat:
        warnings.warn(f"negative semiclassical specific heat {res.specific_heat:.4g} at theta={theta}",
                      RuntimeWarning, stacklevel=2)
    return res.specific_heat


def thermal_observables(model, thetas, grid=None, tol=None, threads=1, resolution=None):
    """Mean energy, specific heat and diagnostics for every theta.

    Rows whose trajectories are all discarded raise :class:`EngineError`
    from the per-theta evaluation; callers that want NaN rows should catch
    it per theta (the CLI does).
    """
    samples = thermal_samples(model, thetas, grid, tol, threads, resolution)
    return [observables_from_sample(s, model) for s in samples]


# ---------------------------------------------------------------------------
# Wigner function


@dataclass
class WignerValues:
    """Unnormalised semiclassical Wigner values at target centres.

    ``log_value`` is ``-1/2 log|det dx/dX| + S_E / hbar`` at the midpoint
    that maps onto each target; NaN where the root search failed.
    """

    points: np.ndarray
    midpoints: np.ndarray
    log_value: np.ndarray
    converged: np.ndarray
    caustic: np.ndarray
    iterations: np.ndarray

    @property
    def value(self):
        return np.exp(self.log_value)


def _fallback_guess(model, theta, x):
    p = model.domain.params
    freq = np.asarray(p.get("frequencies", [1.0]), dtype=float)
    centre = np.asarray(p.get("centre", np.zeros(x.shape[-1])), dtype=float)
    stretch = np.cosh(0.5 * np.concatenate([freq, freq]) * theta)
    return centre + (x - centre) / stretch


def wigner_values(model, theta, points, tol=None, max_iter=50, step_tol=1e-10, max_halvings=30):
    """Solve ``x(X) = x'`` by damped Newton-Raphson for each target ``x'``.

    Starts from ``X = x'``; targets whose starting trajectory is discarded
    restart from the harmonic estimate ``x' / cosh(w theta / 2)``.  Newton
    steps are halved while the residual grows or the trial trajectory is
    discarded.  The Jacobian of the map comes from the tangent ODE.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    tol = tol or ODETolerances()
    xp = np.atleast_2d(np.asarray(points, dtype=float))
    M, n = xp.shape

    def evaluate(X):
        (b,) = propagate_batch(X, [theta], model, tol)
        return b

    X = xp.copy()
    b = evaluate(X)
    bad = ~b.valid
    if bad.any():
        X[bad] = _fallback_guess(model, theta, xp[bad])
        b2 = evaluate(X[bad])
        for name in ("centre", "jac", "det_jac", "action", "log_amplitude", "caustic", "diverged"):
            getattr(b, name)[bad] = getattr(b2, name)
    centre, jac, action, det = b.centre.copy(), b.jac.copy(), b.action.copy(), b.det_jac.copy()
    valid = b.valid.copy()
    res = np.where(valid[:, None], centre - xp, np.nan)
    rnorm = np.linalg.norm(res, axis=1)
    converged = valid & (rnorm <= 1e-13 * (1 + np.linalg.norm(xp, axis=1)))
    failed = ~valid
    iters = np.zeros(M, dtype=int)

    for _ in range(max_iter):
        act = np.flatnonzero(~converged & ~failed)
        if act.size == 0:
            break
        iters[act] += 1
        dX = np.linalg.solve(jac[act], res[act][..., None])[..., 0]
        lam = np.ones(act.size)
        pending = np.arange(act.size)
        for _h in range(max_halvings + 1):
            if pending.size == 0:
                break
            rows = act[pending]
            Xt = X[rows] - lam[pending, None] * dX[pending]
            bt = evaluate(Xt)
            rt = bt.centre - xp[rows]
            rn = np.linalg.norm(rt, axis=1)
            ok = bt.valid & np.isfinite(rn) & (rn < rnorm[rows] + 1e-14 * (1 + np.linalg.norm(xp[rows], axis=1)))
            acc = rows[ok]
            X[acc] = Xt[ok]
            centre[acc], jac[acc], action[acc], det[acc] = bt.centre[ok], bt.jac[ok], bt.action[ok], bt.det_jac[ok]
            res[acc] = rt[ok]
            step = lam[pending[ok]] * np.linalg.norm(dX[pending[ok]], axis=1)
            small = (step <= step_tol * (1 + np.linalg.norm(X[acc], axis=1))) | (
                rn[ok] <= 1e-13 * (1 + np.linalg.norm(xp[acc], axis=1)))
            converged[acc[small]] = True
            rnorm[acc] = rn[ok]
            pending = pending[~ok]
            lam[pending] *= 0.5
        # rows that could not reduce the residual at all
        if pending.size:
            stalled = act[pending]
            close = rnorm[stalled] <= 1e-9 * (1 + np.linalg.norm(xp[stalled], axis=1))
            converged[stalled[close]] = True
            failed[stalled[~close]] = True

    caustic = b.caustic.copy()
    with np.errstate(divide="ignore", invalid="ignore"):
        logv = -0.5 * np.log(np.abs(det)) + action / model.hbar
    logv = np.where(converged & np.isfinite(logv), logv, np.nan)
    return WignerValues(xp, X, logv, converged, caustic, iters)


def wigner_at(model, theta, x_prime, tol=None, **kw):
    """Unnormalised semiclassical Wigner value at one phase-space point.

    Raises
    ------
    EngineError
        If the root search fails or the trajectory crosses a caustic.
    """
    wv = wigner_values(model, theta, np.asarray(x_prime, dtype=float)[None, :], tol, **kw)
    if not wv.converged[0]:
        raise EngineError(f"Newton-Raphson did not converge for x'={x_prime} at theta={theta}")
    return float(wv.value[0])


@dataclass
class WignerGrid:
    """Normalised Wigner values on a rectangular ``(p, q)`` grid (d = 1)."""

    theta: float
    p: np.ndarray
    q: np.ndarray
    wp: np.ndarray
    wq: np.ndarray
    values: np.ndarray  # shape (len(p), len(q)); NaN where unreachable
    reachable: np.ndarray

    def marginal(self, axis):
        W = np.where(self.reachable, self.values, 0.0)
        if axis == "q":
            return self.q, self.wp @ W
        if axis == "p":
            return self.p, W @ self.wq
        raise ValueError("axis must be 'p' or 'q'")


def _axis_rule(lo, hi, n, rule):
    if rule == "legendre":
        t, w = gauss_legendre(n)
        return 0.5 * (hi - lo) * t + 0.5 * (hi + lo), 0.5 * (hi - lo) * w
    if rule == "trapezoid":
        x = np.linspace(lo, hi, n)
        w = np.full(n, (hi - lo) / (n - 1))
        w[[0, -1]] *= 0.5
        return x, w
    raise ValueError(f"unknown rule {rule!r}")


def wigner_grid(model, theta, p_range, q_range, n_p=41, n_q=41, rule="legendre", tol=None):
    """Semiclassical Wigner function on a grid, normalised to unit integral."""
    if model.dof != 1:
        raise ValueError("wigner_grid is for one degree of freedom")
    p, wp = _axis_rule(*p_range, n_p, rule)
    q, wq = _axis_rule(*q_range, n_q, rule)
    P, Q = np.meshgrid(p, q, indexing="ij")
    wv = wigner_values(model, theta, np.column_stack([P.ravel(), Q.ravel()]), tol)
    logv = wv.log_value.reshape(n_p, n_q)
    reach = np.isfinite(logv)
    if not reach.any():
        raise EngineError(f"no reachable grid point at theta={theta}")
    vals = np.where(reach, np.exp(logv - np.nanmax(logv)), 0.0)
    norm = wp @ vals @ wq
    vals = np.where(reach, vals / norm, np.nan)
    return WignerGrid(theta, p, q, wp, wq, vals, reach)


def wigner_marginals(model, theta, axis, p_range, q_range, n_p=41, n_q=41, rule="legendre", tol=None):
    """Projection of the normalised Wigner function onto ``p`` or ``q``.

    Returns ``(coords, density, weights)``; ``sum(weights * density) == 1``.
    """
    g = wigner_grid(model, theta, p_range, q_range, n_p, n_q, rule, tol)
    coords, dens = g.marginal(axis)
    return coords, dens, (g.wq if axis == "q" else g.wp)
