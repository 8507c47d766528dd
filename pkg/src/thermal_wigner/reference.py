"""Reference computations: quantum spectra, classical averages, Poincare sections."""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy.integrate import quad, solve_ivp
from scipy.sparse.linalg import eigsh
from scipy.spatial import ConvexHull

from .models import bound_state_count
from .quadrature import default_grid

__all__ = [
    "Spectrum",
    "morse_spectrum",
    "fd_eigensolver_2d",
    "spectrum_thermal_averages",
    "classical_averages",
    "PoincareSection",
    "poincare_section",
    "section_area",
    "classify_orbits",
]


@dataclass(frozen=True)
class Spectrum:
    energies: np.ndarray
    truncated: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        if e.ndim != 1 or e.size == 0:
            raise ValueError("spectrum needs a non-empty 1-D list of energies")
        if not np.all(np.isfinite(e)):
            raise ValueError("energies must be finite")
        object.__setattr__(self, "energies", np.sort(e))

    def __len__(self):
        return len(self.energies)

    def tail_weight(self, theta, hbar=1.0):
        """Boltzmann factor of the highest level relative to the lowest."""
        return float(np.exp(-theta / hbar * (self.energies[-1] - self.energies[0])))


def morse_spectrum(chi, hbar=1.0):
    """Bound levels ``hbar[(n + 1/2) - chi (n + 1/2)^2]``, ``n = 0..N`` (``omega = 1``)."""
    N = bound_state_count(chi)
    n = np.arange(N + 1) + 0.5
    return Spectrum(hbar * (n - chi * n * n), truncated=False, meta={"model": "morse", "chi": chi, "N": N})


def fd_eigensolver_2d(potential, x_range=(-4.5, 4.5), y_range=(-4.0, 5.0), nx=160, ny=160, hbar=1.0, k_count=120,
                      mass=1.0):
    """Lowest levels of ``-(hbar^2 / 2m) lap + V`` on a box.

    Five-point Laplacian on ``nx x ny`` interior points with Dirichlet
    (zero) walls; eigenvalues from sparse shift-invert Lanczos.
    """
    if nx < 32 or ny < 32:
        raise ValueError("need at least 32 points per axis")
    x = np.linspace(*x_range, nx + 2)[1:-1]
    y = np.linspace(*y_range, ny + 2)[1:-1]
    hx, hy = x[1] - x[0], y[1] - y[0]

    def second_diff(n, h):
        return sps.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / (h * h)

    lap = sps.kron(second_diff(nx, hx), sps.identity(ny)) + sps.kron(sps.identity(nx), second_diff(ny, hy))
    X, Y = np.meshgrid(x, y, indexing="ij")
    V = np.asarray(potential(X, Y), dtype=float).ravel()
    H = (-(hbar * hbar) / (2 * mass) * lap + sps.diags(V)).tocsc()
    k = min(k_count, nx * ny - 2)
    # fixed start vector keeps repeated runs bit-identical
    v0 = np.ones(H.shape[0])
    vals = eigsh(H, k=k, sigma=float(V.min()) - 1.0, which="LM", return_eigenvectors=False, tol=1e-10, v0=v0)
    meta = {"method": "fd-5point", "boundary": "dirichlet", "nx": nx, "ny": ny,
            "x_range": list(x_range), "y_range": list(y_range), "k": k}
    return Spectrum(np.sort(vals), truncated=True, meta=meta)


def spectrum_thermal_averages(spectrum, theta, hbar=1.0):
    """Mean energy and specific heat ``beta^2 Var(E)`` from a list of levels."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    beta = theta / hbar
    e = spectrum.energies
    w = np.exp(-beta * (e - e[0]))
    w /= np.sum(w)
    mean = float(np.sum(w * e))
    var = float(np.sum(w * (e - mean) ** 2))
    return mean, beta * beta * var


def classical_averages(model, theta, grid=None):
    """Mean energy and specific heat under ``exp(-theta H_c / hbar)``.

    Integrates over the model's domain with `grid` (default: the
    classically scaled grid of the domain).  Uses the classical Hamiltonian.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    if grid is None:
        grid = default_grid(model, theta, scaling="classical")
    beta = theta / model.hbar
    h = model.classical(grid.nodes)
    t = grid.log_weights - beta * h
    w = np.exp(t - np.max(t))
    w /= np.sum(w)
    mean = float(np.sum(w * h))
    var = float(np.sum(w * (h - mean) ** 2))
    return mean, beta * beta * var


# ---------------------------------------------------------------------------
# real-time dynamics


@dataclass
class PoincareSection:
    mu: float
    energy: float
    crossings: list  # one (k, 2) array of (x, p_x) per trajectory
    initial_conditions: np.ndarray
    max_energy_error: float
    max_abs_y: float

    def rows(self):
        for i, c in enumerate(self.crossings):
            for x, px in c:
                yield i, x, px


def _nelson_V(x, y, mu):
    a = 0.5 * x * x - y
    return a * a + mu * x * x


def section_area(mu, energy):
    """Area of the energetically allowed region of the ``y = 0`` section."""
    # V(x, 0) = x^4/4 + mu x^2 is increasing in |x|
    xmax = np.sqrt(2 * (-mu + np.sqrt(mu * mu + energy)))
    val, _ = quad(lambda x: 2 * np.sqrt(max(0.0, 2 * (energy - _nelson_V(x, 0.0, mu)))), -xmax, xmax, limit=200)
    return val


def poincare_section(mu=2.0, energy=4.8, n_trajectories=12, t_max=2000.0, seed=0, rtol=1e-10, atol=1e-12):
    """Crossings of ``y = 0`` with ``dy/dt > 0`` for Nelson orbits at fixed energy.

    Initial conditions are drawn uniformly on the allowed part of the
    section plane and completed with ``p_y > 0`` on the energy shell.
    Integration uses DOP853 with dense-output root finding for the events.
    """
    rng = np.random.default_rng(seed)
    xmax = np.sqrt(2 * (-mu + np.sqrt(mu * mu + energy)))
    ics = []
    while len(ics) < n_trajectories:
        x = rng.uniform(-xmax, xmax)
        pmax2 = 2 * (energy - _nelson_V(x, 0.0, mu))
        if pmax2 <= 0:
            continue
        px = rng.uniform(-1, 1) * np.sqrt(pmax2)
        py2 = pmax2 - px * px
        if py2 <= 1e-8:
            continue
        ics.append([px, np.sqrt(py2), x, 0.0])
    ics = np.array(ics)

    def f(t, s):
        px, py, x, y = s
        a = 0.5 * x * x - y
        return [-(2 * a * x + 2 * mu * x), 2 * a, px, py]

    def event(t, s):
        return s[3]

    event.direction = 1

    crossings = []
    e_err = 0.0
    y_err = 0.0
    for s0 in ics:
        sol = solve_ivp(f, (0, t_max), s0, method="DOP853", rtol=rtol, atol=atol, events=event)
        ye = sol.y_events[0]
        # the start sits on y = 0 and may be reported as a crossing
        ye = ye[sol.t_events[0] > 1e-9]
        if len(ye):
            h = 0.5 * (ye[:, 0] ** 2 + ye[:, 1] ** 2) + _nelson_V(ye[:, 2], ye[:, 3], mu)
            e_err = max(e_err, float(np.max(np.abs(h - energy)) / energy))
            y_err = max(y_err, float(np.max(np.abs(ye[:, 3]))))
        crossings.append(ye[:, [2, 0]] if len(ye) else np.zeros((0, 2)))
    return PoincareSection(mu, energy, crossings, ics, e_err, y_err)


def classify_orbits(section, island_max=0.12, chaos_min=0.3, fill_min=0.55, bins=8):
    """Label each trajectory of a section as ``"island"``, ``"chaotic"`` or ``"other"``.

    ``hull`` is the convex-hull area of a trajectory's crossings as a
    fraction of the allowed section area.  ``fill`` is the fraction of grid
    cells inside that hull that contain a crossing; a torus traces a curve
    and fills few cells, a chaotic orbit covers an area.
    """
    total = section_area(section.mu, section.energy)
    labels, stats = [], []
    for pts in section.crossings:
        if len(pts) < 10:
            labels.append("other")
            stats.append((0.0, 0.0))
            continue
        hull = ConvexHull(pts)
        frac = hull.volume / total
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        H, xe, ye = np.histogram2d(pts[:, 0], pts[:, 1], bins=bins, range=[[lo[0], hi[0]], [lo[1], hi[1]]])
        cx = 0.5 * (xe[1:] + xe[:-1])
        cy = 0.5 * (ye[1:] + ye[:-1])
        C = np.stack(np.meshgrid(cx, cy, indexing="ij"), axis=-1).reshape(-1, 2)
        inside = np.all(hull.equations[:, :2] @ C.T + hull.equations[:, 2:3] <= 0, axis=0)
        fill = np.count_nonzero(H.ravel()[inside] > 0) / max(1, np.count_nonzero(inside))
        stats.append((frac, fill))
        if frac < island_max:
            labels.append("island")
        elif frac > chaos_min and fill > fill_min:
            labels.append("chaotic")
        else:
            labels.append("other")
    return labels, stats
