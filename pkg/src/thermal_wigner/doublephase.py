"""Imaginary-time trajectories in the double phase space.

The centre ``x`` and the rotated chord momentum ``y_w`` evolve under the
real Hamiltonian ``HH_w(x, y) = H(x + i/2 J y) + H(x - i/2 J y)`` (the
``w = -i`` rotation), together with the tangent map ``(dx/dX, dy_w/dX)``
and the euclidean area ``int y_w . dx``.  Because the two arguments of
``HH_w`` are complex conjugates, one complex gradient/Hessian call at
``z = x + i/2 J y_w`` gives every derivative, and only real and imaginary
parts are ever kept.

State layout for ``n = 2d``:
``[x (n), y_w (n), dx/dX (n*n), dy_w/dX (n*n), area (1)]``, i.e.
``8 d^2 + 4 d + 1`` reals.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .phase import apply_J, apply_J_left, apply_J_right
from .stepper import ODETolerances, integrate_batch

__all__ = [
    "state_size",
    "initial_state",
    "unpack",
    "rhs",
    "double_hamiltonian",
    "ThermalBatch",
    "TrajectoryOutcome",
    "propagate_batch",
    "propagate_thermal",
    "critical_time",
    "morse_imaginary_trajectory",
    "CAUSTIC_FLOOR",
]

CAUSTIC_FLOOR = 1e-12


def state_size(dof):
    return 8 * dof * dof + 4 * dof + 1


def initial_state(X):
    """Stack of initial states for midpoints `X` with shape ``(N, 2d)``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    N, n = X.shape
    Y = np.zeros((N, 2 * n + 2 * n * n + 1))
    Y[:, :n] = X
    Y[:, 2 * n : 2 * n + n * n] = np.eye(n).ravel()
    return Y


def unpack(Y, dof):
    """Views ``(x, y_w, jac_x, jac_y, area)`` into a stack of states."""
    n = 2 * dof
    Y = np.asarray(Y)
    lead = Y.shape[:-1]
    x = Y[..., :n]
    yw = Y[..., n : 2 * n]
    jx = Y[..., 2 * n : 2 * n + n * n].reshape(lead + (n, n))
    jy = Y[..., 2 * n + n * n : 2 * n + 2 * n * n].reshape(lead + (n, n))
    return x, yw, jx, jy, Y[..., -1]


def _det(m):
    if m.shape[-1] == 2:
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    with np.errstate(invalid="ignore"):
        return np.linalg.det(m)


def rhs(Y, model):
    """Time derivative of a stack of double-phase-space states.

    With ``g = grad H(z)`` and ``M = hess H(z)`` at ``z = x + i/2 J y_w``:
    ``dx/ds = J Im g``, ``dy_w/ds = -2 Re g``; the tangent map obeys
    ``d(jac_x) = J Im M jac_x + 1/2 J Re M J jac_y`` and
    ``d(jac_y) = -2 Re M jac_x + Im M J jac_y``; the area grows as
    ``y_w . dx/ds``.
    """
    dof = model.dof
    n = 2 * dof
    Y = np.asarray(Y)
    x, yw, jx, jy, _ = unpack(Y, dof)
    z = x + 0.5j * apply_J(yw)
    g = np.asarray(model.gradient(z))
    hs = np.asarray(model.hessian(z))
    dx = apply_J(g.imag)
    dyw = -2.0 * g.real
    im_h, re_h = hs.imag, hs.real
    a = apply_J_left(im_h)
    b = 0.5 * apply_J_right(apply_J_left(re_h))
    c = -2.0 * re_h
    d = apply_J_right(im_h)
    djx = np.matmul(a, jx) + np.matmul(b, jy)
    djy = np.matmul(c, jx) + np.matmul(d, jy)
    out = np.empty_like(Y, dtype=float)
    out[..., :n] = dx
    out[..., n : 2 * n] = dyw
    out[..., 2 * n : 2 * n + n * n] = djx.reshape(Y.shape[:-1] + (n * n,))
    out[..., 2 * n + n * n : 2 * n + 2 * n * n] = djy.reshape(Y.shape[:-1] + (n * n,))
    out[..., -1] = np.sum(yw * dx, axis=-1)
    return out


def double_hamiltonian(Y, model):
    """``HH_w`` along a stack of states; conserved and equal to ``2 H(X)``."""
    x, yw, *_ = unpack(Y, model.dof)
    z = x + 0.5j * apply_J(yw)
    return 2.0 * np.real(model.value(z))


@dataclass
class ThermalBatch:
    """Trajectory data for many midpoints at one thermal time.

    ``log_amplitude`` is ``log sqrt|det| + S_E / hbar`` and is ``-inf`` for
    discarded rows (caustic crossed or diverged before ``s = theta/2``).
    """

    theta: float
    midpoints: np.ndarray
    centre: np.ndarray
    area: np.ndarray
    action: np.ndarray
    det_jac: np.ndarray
    jac: np.ndarray
    caustic: np.ndarray
    diverged: np.ndarray
    log_amplitude: np.ndarray

    @property
    def valid(self):
        return ~(self.caustic | self.diverged)

    @property
    def weight(self):
        return np.exp(self.log_amplitude)

    @property
    def discarded_fraction(self):
        n = len(self.valid)
        return float(np.count_nonzero(~self.valid)) / n if n else 0.0


@dataclass(frozen=True)
class TrajectoryOutcome:
    centre: np.ndarray
    euclidean_action: float
    det_jac: float
    weight: float
    caustic_crossed: bool
    diverged: bool
    s_event: float = float("nan")


def _integrate_chunk(X, s_stops, model, tol):
    dof = model.dof
    n = 2 * dof

    def f(Y):
        return rhs(Y, model)

    def monitor(Y):
        jx = Y[:, 2 * n : 2 * n + n * n].reshape(-1, n, n)
        return _det(jx) <= CAUSTIC_FLOOR

    return integrate_batch(f, initial_state(X), s_stops, tol, monitor)


def _run(X, s_stops, model, tol, threads):
    if threads <= 1 or len(X) < 2 * threads:
        return _integrate_chunk(X, s_stops, model, tol)
    chunks = np.array_split(np.arange(len(X)), threads)
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda idx: _integrate_chunk(X[idx], s_stops, model, tol), chunks))
    res = parts[0]
    res.states = np.concatenate([p.states for p in parts], axis=1)
    res.reached = np.concatenate([p.reached for p in parts], axis=1)
    for name in ("diverged", "flagged", "s_event", "n_steps"):
        setattr(res, name, np.concatenate([getattr(p, name) for p in parts]))
    return res


def propagate_batch(X, thetas, model, tol=None, threads=1, return_raw=False):
    """Propagate every midpoint in `X` to ``s = theta / 2`` for each theta.

    Parameters
    ----------
    X : array_like, shape (N, 2d)
    thetas : sequence of float
        Thermal times (any order, all ``>= 0``).
    model : HamiltonianModel
    tol : ODETolerances, optional
    threads : int
        Rows are split into this many chunks run on a thread pool; results
        do not depend on the split.

    Returns
    -------
    list of ThermalBatch
        One entry per theta, in the order given.
    """
    tol = tol or ODETolerances()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[-1] != 2 * model.dof:
        raise ValueError(f"midpoints must have length {2 * model.dof}")
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    if np.any(thetas < 0):
        raise ValueError("theta must be non-negative")
    order = np.argsort(thetas, kind="stable")
    res = _run(X, 0.5 * thetas[order], model, tol, threads)

    dof = model.dof
    with np.errstate(over="ignore", invalid="ignore"):
        h0 = model.symbol_h(X)
    out = [None] * len(thetas)
    for k, idx in enumerate(order):
        theta = float(thetas[idx])
        Y = res.states[k]
        ok = res.reached[k]
        x, _, jx, _, area = unpack(Y, dof)
        det = _det(jx)
        action = area - theta * h0
        caustic = res.flagged & ~ok
        diverged = res.diverged & ~ok
        with np.errstate(divide="ignore", invalid="ignore"):
            log_amp = 0.5 * np.log(np.abs(det)) + action / model.hbar
        log_amp = np.where(ok & np.isfinite(log_amp), log_amp, -np.inf)
        out[idx] = ThermalBatch(
            theta=theta, midpoints=X, centre=x, area=area, action=action, det_jac=det,
            jac=jx, caustic=caustic, diverged=diverged, log_amplitude=log_amp,
        )
    if return_raw:
        return out, res
    return out


def propagate_thermal(X, theta, model, tol=None):
    """Single-midpoint version of :func:`propagate_batch`."""
    if theta < 0:
        raise ValueError("theta must be non-negative")
    X = np.asarray(X, dtype=float)
    (batch,), raw = propagate_batch(X[None, :], [theta], model, tol, return_raw=True)
    bad = bool(batch.caustic[0] or batch.diverged[0])
    return TrajectoryOutcome(
        centre=batch.centre[0],
        euclidean_action=float(batch.action[0]),
        det_jac=float(batch.det_jac[0]),
        weight=0.0 if bad else float(np.exp(batch.log_amplitude[0])),
        caustic_crossed=bool(batch.caustic[0]),
        diverged=bool(batch.diverged[0]),
        s_event=float(raw.s_event[0]),
    )


def critical_time(epsilon):
    """``omega s_c`` at which the imaginary-time Morse orbit of energy
    ``epsilon`` (in units of D) runs off to infinity."""
    eps = np.asarray(epsilon, dtype=float)
    if np.any((eps <= 0) | (eps >= 1)):
        raise ValueError("epsilon must lie in (0, 1)")
    out = np.log(1 / np.sqrt(eps) + np.sqrt(1 / eps - 1)) / np.sqrt(1 - eps)
    return float(out) if out.ndim == 0 else out


def morse_imaginary_trajectory(q0, s, chi=0.05, hbar=1.0):
    """Closed-form Morse orbit at imaginary time ``t = -i s`` from ``(0, q0)``.

    Only for ``q0 < 0`` (so the orbit starts at its inner turning point).
    Returns ``(q, p_imag)`` with ``p = i p_imag``; units ``omega = 1``.
    """
    if q0 >= 0:
        raise ValueError("q0 must be negative")
    D = hbar / (4 * chi)
    eps = (1 - np.exp(-q0)) ** 2
    if np.any(np.asarray(s) >= critical_time(eps)):
        raise ValueError("s must stay below the critical time")
    big_omega = np.sqrt(1 - eps)
    ch = np.cosh(big_omega * np.asarray(s))
    sh = np.sinh(big_omega * np.asarray(s))
    den = 1 - np.sqrt(eps) * ch
    q = np.log(den / (1 - eps))
    p_imag = -2 * D * np.sqrt(eps * (1 - eps)) * sh / den
    return q, p_imag
