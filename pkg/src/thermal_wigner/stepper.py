"""Batched embedded Runge-Kutta integration with per-row step control.

Many independent trajectories are advanced together as rows of one array.
Each row keeps its own parameter ``s``, step size and controller history,
so a row's result does not depend on which other rows share the batch.
Rows that blow up, underflow their step, or are flagged by a monitor are
frozen and reported; that is a normal outcome, not an exception.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["Tableau", "DOPRI5", "BS3", "TABLEAUS", "ODETolerances", "BatchResult", "integrate_batch"]


@dataclass(frozen=True)
class Tableau:
    name: str
    c: np.ndarray
    a: np.ndarray
    b: np.ndarray  # propagating weights
    b_low: np.ndarray  # embedded weights
    order: int  # order of the propagating solution
    fsal: bool = True

    @property
    def stages(self):
        return len(self.c)

    @property
    def e(self):
        return self.b - self.b_low


DOPRI5 = Tableau(
    name="dopri5",
    c=np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1]),
    a=np.array(
        [
            [0, 0, 0, 0, 0, 0, 0],
            [1 / 5, 0, 0, 0, 0, 0, 0],
            [3 / 40, 9 / 40, 0, 0, 0, 0, 0],
            [44 / 45, -56 / 15, 32 / 9, 0, 0, 0, 0],
            [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0, 0],
            [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0, 0],
            [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0],
        ]
    ),
    b=np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0]),
    b_low=np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]),
    order=5,
)

BS3 = Tableau(
    name="bs3",
    c=np.array([0, 1 / 2, 3 / 4, 1]),
    a=np.array([[0, 0, 0, 0], [1 / 2, 0, 0, 0], [0, 3 / 4, 0, 0], [2 / 9, 1 / 3, 4 / 9, 0]]),
    b=np.array([2 / 9, 1 / 3, 4 / 9, 0]),
    b_low=np.array([7 / 24, 1 / 4, 1 / 3, 1 / 8]),
    order=3,
)

TABLEAUS = {t.name: t for t in (DOPRI5, BS3)}


@dataclass(frozen=True)
class ODETolerances:
    """Error control and failure thresholds for :func:`integrate_batch`."""

    rtol: float = 1e-8
    atol: float = 1e-10
    method: str = "dopri5"
    divergence_bound: float = 1e8
    max_steps: int = 200_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")
        if self.method not in TABLEAUS:
            raise ValueError(f"unknown method {self.method!r}; choose from {sorted(TABLEAUS)}")
        if not self.divergence_bound > 0:
            raise ValueError("divergence_bound must be positive")

    @property
    def tableau(self):
        return TABLEAUS[self.method]


@dataclass
class BatchResult:
    """Snapshots at the requested stops plus per-row failure information.

    ``states[k, i]`` is row ``i`` at ``stops[k]`` and is NaN when the row was
    frozen before reaching that stop.  ``flagged`` rows were stopped by the
    monitor at ``s_event``; ``diverged`` rows blew up there.
    """

    stops: np.ndarray
    states: np.ndarray
    reached: np.ndarray
    diverged: np.ndarray
    flagged: np.ndarray
    s_event: np.ndarray
    n_steps: np.ndarray


def _error_norm(err, y0, y1, tol):
    scale = tol.atol + tol.rtol * np.maximum(np.abs(y0), np.abs(y1))
    with np.errstate(invalid="ignore", over="ignore"):
        r = np.sqrt(np.mean((err / scale) ** 2, axis=1))
    r[~np.isfinite(r)] = np.inf
    return r


def _initial_step(f, y0, f0, tol, order):
    # Hairer-Norsett-Wanner starting step, per row
    scale = tol.atol + tol.rtol * np.abs(y0)
    with np.errstate(all="ignore"):
        d0 = np.sqrt(np.mean((y0 / scale) ** 2, axis=1))
        d1 = np.sqrt(np.mean((f0 / scale) ** 2, axis=1))
        h0 = np.where((d0 < 1e-5) | (d1 < 1e-5), 1e-6, 0.01 * d0 / np.maximum(d1, 1e-300))
        h0[~np.isfinite(h0) | (h0 <= 0)] = 1e-6
        f1 = f(y0 + h0[:, None] * f0)
        d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2, axis=1)) / h0
        dm = np.maximum(d1, d2)
        h1 = np.where(dm <= 1e-15, np.maximum(1e-6, h0 * 1e-3), (0.01 / np.where(dm > 0, dm, 1)) ** (1 / (order + 1)))
        h = np.minimum(100 * h0, h1)
    h[~np.isfinite(h) | (h <= 0)] = 1e-6
    return h


def integrate_batch(f, y0, stops, tol=None, monitor=None):
    """Integrate ``dy/ds = f(y)`` for every row of `y0` from ``s = 0``.

    Parameters
    ----------
    f : callable
        Autonomous right-hand side mapping an ``(n, m)`` array to ``(n, m)``.
    y0 : ndarray, shape (N, m)
    stops : array_like
        Non-decreasing, non-negative values of ``s`` at which to record
        the state.
    tol : ODETolerances, optional
    monitor : callable, optional
        Called as ``monitor(y)`` on freshly accepted states; returns a
        boolean mask of rows to freeze (e.g. caustic crossings).

    Returns
    -------
    BatchResult
    """
    tol = tol or ODETolerances()
    tab = tol.tableau
    y0 = np.array(y0, dtype=float)
    if y0.ndim != 2:
        raise ValueError("y0 must be a 2-D array (rows are trajectories)")
    stops = np.asarray(stops, dtype=float)
    if stops.ndim != 1 or np.any(stops < 0) or np.any(np.diff(stops) < 0):
        raise ValueError("stops must be a non-decreasing sequence of non-negative numbers")
    N, m = y0.shape
    K = len(stops)

    states = np.full((K, N, m), np.nan)
    reached = np.zeros((K, N), dtype=bool)
    diverged = np.zeros(N, dtype=bool)
    flagged = np.zeros(N, dtype=bool)
    s_event = np.full(N, np.nan)
    n_steps = np.zeros(N, dtype=int)

    y = y0.copy()
    s = np.zeros(N)
    k_next = np.zeros(N, dtype=int)
    err_prev = np.ones(N)

    def record(rows):
        # store every stop that the given rows have reached
        rows = np.asarray(rows)
        while rows.size:
            kk = k_next[rows]
            hit = kk < K
            hit[hit] = s[rows[hit]] >= stops[kk[hit]]
            if not hit.any():
                break
            r = rows[hit]
            states[k_next[r], r] = y[r]
            reached[k_next[r], r] = True
            k_next[r] += 1
            rows = r

    if N == 0 or K == 0:
        return BatchResult(stops, states, reached, diverged, flagged, s_event, n_steps)

    record(np.arange(N))
    active = np.flatnonzero(k_next < K)
    if active.size == 0:
        return BatchResult(stops, states, reached, diverged, flagged, s_event, n_steps)

    with np.errstate(all="ignore"):
        k1 = np.zeros_like(y)
        k1[active] = f(y[active])
    h = np.zeros(N)
    h[active] = _initial_step(f, y[active], k1[active], tol, tab.order)

    beta1 = 0.7 / tab.order
    beta2 = 0.4 / tab.order
    safety = 0.9
    a, b, e, c = tab.a, tab.b, tab.e, tab.c

    while active.size:
        ya = y[active]
        sa = s[active]
        target = stops[k_next[active]]
        ha = h[active]
        last = sa + ha >= target - 1e-14 * np.maximum(1.0, np.abs(target))
        step = np.where(last, target - sa, ha)

        ks = [k1[active]]
        with np.errstate(all="ignore"):
            for i in range(1, tab.stages):
                inc = sum(a[i, j] * ks[j] for j in range(i) if a[i, j] != 0)
                ks.append(f(ya + step[:, None] * inc))
            y_new = ya + step[:, None] * sum(b[j] * ks[j] for j in range(tab.stages) if b[j] != 0)
            err = step[:, None] * sum(e[j] * ks[j] for j in range(tab.stages) if e[j] != 0)
        en = _error_norm(err, ya, y_new, tol)
        finite = np.all(np.isfinite(y_new), axis=1)
        en[~finite] = np.inf
        accept = en <= 1.0

        # step-size proposal: PI controller on acceptance, plain shrink on rejection
        with np.errstate(divide="ignore", over="ignore"):
            fac_acc = safety * np.maximum(en, 1e-10) ** (-beta1) * err_prev[active] ** beta2
            fac_rej = np.maximum(0.2, safety * np.maximum(en, 1e-10) ** (-1.0 / tab.order))
        fac_acc = np.clip(fac_acc, 0.2, 5.0)
        fac_rej = np.where(np.isfinite(fac_rej), np.minimum(fac_rej, 0.9), 0.2)
        h_next = np.where(accept, step * fac_acc, step * fac_rej)
        # a step shortened only to land on a stop keeps the controller's proposal
        h_next = np.where(accept & last, np.maximum(h_next, ha), h_next)

        acc_rows = active[accept]
        y[acc_rows] = y_new[accept]
        s[acc_rows] = np.where(last[accept], target[accept], sa[accept] + step[accept])
        err_prev[acc_rows] = np.maximum(en[accept], 1e-4)
        n_steps[active] += 1
        if tab.fsal:
            k1[acc_rows] = ks[-1][accept]
        h[active] = h_next

        # failure checks on accepted rows
        big = np.max(np.abs(y_new[accept]), axis=1) > tol.divergence_bound if acc_rows.size else np.zeros(0, bool)
        if big.any():
            bad = acc_rows[big]
            diverged[bad] = True
            s_event[bad] = s[bad]
        if monitor is not None and acc_rows.size:
            ok_rows = acc_rows[~big]
            if ok_rows.size:
                mflag = np.asarray(monitor(y[ok_rows]), dtype=bool)
                fl = ok_rows[mflag]
                flagged[fl] = True
                s_event[fl] = s[fl]
        if not tab.fsal and acc_rows.size:
            live = acc_rows[~(diverged[acc_rows] | flagged[acc_rows])]
            if live.size:
                with np.errstate(all="ignore"):
                    k1[live] = f(y[live])

        tiny = h[active] < 1e-13 * np.maximum(1.0, np.abs(s[active]))
        over = n_steps[active] >= tol.max_steps
        stuck = active[tiny | over]
        stuck = stuck[~(diverged[stuck] | flagged[stuck])]
        if stuck.size:
            diverged[stuck] = True
            s_event[stuck] = s[stuck]

        done = diverged | flagged
        ok_acc = acc_rows[~done[acc_rows]]
        record(ok_acc)
        active = active[(k_next[active] < K) & ~done[active]]

    return BatchResult(stops, states, reached, diverged, flagged, s_event, n_steps)
