"""Quadrature rules, midpoint grids, adaptive cubature and Metropolis sampling.

A :class:`MidpointGrid` carries nodes together with *log* measure weights,
so that a sum ``sum_i w_i f(X_i)`` can be formed stably in log space even
when Gauss-Hermite weights and Boltzmann factors span hundreds of decades.
"""

import heapq
import warnings
from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np

__all__ = [
    "gauss_legendre",
    "gauss_chebyshev3",
    "gauss_hermite",
    "MidpointGrid",
    "tensor_grid",
    "rectangle_grid",
    "gaussian_grid",
    "morse_grid",
    "nelson_grid",
    "nelson_map",
    "mc_grid",
    "default_grid",
    "CubatureResult",
    "adaptive_cubature",
    "MCMCResult",
    "metropolis_sampler",
]


def gauss_legendre(n):
    """Nodes and weights on (-1, 1), exact up to degree ``2n - 1``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.polynomial.legendre.leggauss(n)


def gauss_chebyshev3(n):
    """Gauss rule for the weight ``sqrt((1 + x) / (1 - x))`` on (-1, 1).

    Nodes are ``cos((2k - 1) pi / (2n + 1))``, weights
    ``2 pi (1 + x_k) / (2n + 1)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(1, n + 1)
    x = np.cos((2 * k - 1) * np.pi / (2 * n + 1))
    w = 2 * np.pi * (1 + x) / (2 * n + 1)
    return x[::-1].copy(), w[::-1].copy()


def gauss_hermite(n):
    """Nodes and weights for ``exp(-t^2)`` on the real line."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.polynomial.hermite.hermgauss(n)


@dataclass
class MidpointGrid:
    """Quadrature nodes in phase space with log measure weights."""

    nodes: np.ndarray
    log_weights: np.ndarray
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        self.log_weights = np.asarray(self.log_weights, dtype=float)
        if len(self.nodes) != len(self.log_weights):
            raise ValueError("node and weight counts differ")
        if len(self.nodes) == 0:
            raise ValueError("grid is empty")
        if not (np.all(np.isfinite(self.nodes)) and np.all(np.isfinite(self.log_weights))):
            raise ValueError("grid nodes and weights must be finite")

    def __len__(self):
        return len(self.nodes)

    @property
    def weights(self):
        return np.exp(self.log_weights)

    def integrate(self, values):
        """``sum_i w_i values_i`` (values must not overflow when weighted)."""
        return float(np.sum(self.weights * np.asarray(values)))


def tensor_grid(rules):
    """Tensor product of 1-D ``(nodes, weights)`` rules.

    Returns ``(points, weights)`` with points of shape ``(prod n_i, len(rules))``.
    """
    pts = np.stack(np.meshgrid(*[r[0] for r in rules], indexing="ij"), axis=-1)
    wts = np.ones(pts.shape[:-1])
    for axis, r in enumerate(rules):
        shape = [1] * len(rules)
        shape[axis] = -1
        wts = wts * np.reshape(r[1], shape)
    return pts.reshape(-1, len(rules)), wts.ravel()


def rectangle_grid(bounds, n):
    """Gauss-Legendre tensor grid on a box ``[(lo, hi), ...]``."""
    if np.isscalar(n):
        n = [int(n)] * len(bounds)
    rules = []
    for (lo, hi), k in zip(bounds, n):
        t, w = gauss_legendre(k)
        rules.append((0.5 * (hi - lo) * t + 0.5 * (hi + lo), 0.5 * (hi - lo) * w))
    pts, w = tensor_grid(rules)
    return MidpointGrid(pts, np.log(w), {"rule": "legendre", "bounds": [list(b) for b in bounds], "n": list(n)})


def _effective_theta(theta, omega, scaling):
    if scaling == "classical":
        return np.full(np.shape(omega), float(theta))
    if scaling != "semiclassical":
        raise ValueError(f"unknown scaling {scaling!r}")
    # the thermal Gaussian of a harmonic mode has exponent sinh(w theta)/w * H
    return np.sinh(np.asarray(omega) * theta) / np.asarray(omega)


def gaussian_grid(domain, theta, n, hbar=1.0, scaling="semiclassical"):
    """Scaled Gauss-Hermite tensor grid over all of phase space.

    Each coordinate ``i`` is scaled so that the rule's ``exp(-t^2)`` matches
    ``exp(-theta_eff k_i x_i^2 / (2 hbar))``, where ``k_i`` is the local
    stiffness at the minimum and ``theta_eff`` is ``theta`` (classical
    scaling) or ``sinh(w theta) / w`` (semiclassical scaling, the exact
    width for a harmonic mode of frequency ``w``).
    """
    if theta <= 0:
        raise ValueError("an all-space grid needs theta > 0")
    p = domain.params
    centre = np.asarray(p["centre"], dtype=float)
    k = np.asarray(p["stiffness"], dtype=float)
    freq = np.asarray(p["frequencies"], dtype=float)
    dof = len(freq)
    th = _effective_theta(theta, freq, scaling)
    th = np.concatenate([th, th])
    sigma = np.sqrt(hbar / (th * k))
    t, w = gauss_hermite(n)
    pts, wts = tensor_grid([(t, w)] * (2 * dof))
    nodes = centre + np.sqrt(2) * sigma * pts
    log_w = np.log(wts) + np.sum(pts * pts, axis=1) + np.sum(np.log(np.sqrt(2) * sigma))
    return MidpointGrid(nodes, log_w, {"rule": "hermite", "n": n, "scaling": scaling, "theta": theta})


def morse_grid(chi, n_p, n_q, hbar=1.0):
    """Gauss-Legendre x Gauss-Chebyshev(3rd kind) grid over the bound region.

    Uses ``p = hbar sqrt(1 - Q^2) P / (2 chi)``, ``q = -ln(1 - Q)`` with
    ``P, Q`` in (-1, 1); the Jacobian ``hbar/(2 chi) sqrt((1+Q)/(1-Q))`` is
    absorbed by the Chebyshev weight.
    """
    if not 0 < chi < 0.5:
        raise ValueError("chi must lie in (0, 1/2)")
    P, wp = gauss_legendre(n_p)
    Q, wq = gauss_chebyshev3(n_q)
    pq, w = tensor_grid([(P, wp), (Q, wq)])
    P, Q = pq[:, 0], pq[:, 1]
    p = hbar * np.sqrt(1 - Q * Q) * P / (2 * chi)
    q = -np.log1p(-Q)
    w = w * hbar / (2 * chi)
    return MidpointGrid(np.column_stack([p, q]), np.log(w), {"rule": "morse", "n_p": n_p, "n_q": n_q, "chi": chi})


def nelson_map(T, mu, theta_x, theta_y, hbar=1.0):
    """Map ``(P_x, P_y, X, Y)`` to phase space ``(p_x, p_y, x, y)``.

    With ``theta_x = theta_y = theta`` the classical Boltzmann weight
    becomes ``exp(-(P_x^2 + P_y^2 + X^2 + Y^2))``.  The Jacobian is constant.
    """
    T = np.asarray(T, dtype=float)
    px = T[..., 0] * np.sqrt(2 * hbar / theta_x)
    py = T[..., 1] * np.sqrt(2 * hbar / theta_y)
    x = T[..., 2] * np.sqrt(hbar / (theta_x * mu))
    y = T[..., 3] * np.sqrt(hbar / theta_y) + 0.5 * x * x
    jac = np.sqrt(2 * hbar / theta_x) * np.sqrt(2 * hbar / theta_y) * np.sqrt(hbar / (theta_x * mu)) * np.sqrt(hbar / theta_y)
    return np.stack([px, py, x, y], axis=-1), jac


def nelson_grid(mu, theta, n=12, hbar=1.0, scaling="semiclassical"):
    """Gauss-Hermite grid in the Nelson coordinates that Gaussianise the
    Boltzmann weight.  With semiclassical scaling each mode's ``theta`` is
    replaced by ``sinh(w theta)/w`` (``w_x = sqrt(2 mu)``, ``w_y = sqrt 2``)."""
    if theta <= 0 or mu <= 0:
        raise ValueError("mu and theta must be positive")
    th_x, th_y = _effective_theta(theta, np.array([np.sqrt(2 * mu), np.sqrt(2.0)]), scaling)
    t, w = gauss_hermite(n)
    T, wts = tensor_grid([(t, w)] * 4)
    nodes, jac = nelson_map(T, mu, th_x, th_y, hbar)
    log_w = np.log(wts) + np.sum(T * T, axis=1) + np.log(jac)
    return MidpointGrid(nodes, log_w, {"rule": "nelson-hermite", "n": n, "scaling": scaling, "theta": theta})


def mc_grid(model, theta, n_samples, seed, proposal_scale=None, burn_in=0.1, thin=1, n_chains=64):
    """Monte Carlo grid: Metropolis samples of ``exp(-theta H_c / hbar)``.

    Each sample carries the weight ``exp(theta H_c / hbar) / n``, so grid sums
    become importance-sampling estimates of integrals over phase space.
    """
    beta = theta / model.hbar
    bound = model.domain.kind == "morse-bound"

    def logp(x):
        h = model.classical(x)
        out = -beta * h
        if bound:
            out = np.where(model.normalized_energy(x) < 1, out, -np.inf)
        return out

    x0 = np.zeros(2 * model.dof)
    if proposal_scale is None:
        proposal_scale = 1.0 / np.sqrt(max(beta, 1e-12))
    run = metropolis_sampler(logp, x0, proposal_scale, n_samples, seed, burn_in=burn_in, thin=thin, n_chains=n_chains)
    xs = run.samples
    log_w = beta * model.classical(xs) - np.log(len(xs))
    return MidpointGrid(
        xs, log_w,
        {"rule": "mc", "samples": len(xs), "seed": seed, "burn_in": burn_in, "thin": thin,
         "n_chains": n_chains, "acceptance_rate": run.acceptance_rate, "theta": theta},
    )


def default_grid(model, theta, resolution=None, scaling="semiclassical"):
    """The grid each built-in domain uses unless told otherwise."""
    kind = model.domain.kind
    if kind == "morse-bound":
        n = resolution or 300
        return morse_grid(model.chi, n, n, model.hbar)
    if kind == "nelson-mapped":
        return nelson_grid(model.mu, theta, resolution or 12, model.hbar, scaling)
    if kind == "all-space-gaussian-mapped":
        # 64 points per axis in 1-D; a 4-D tensor grid gets 16 (65536 nodes)
        return gaussian_grid(model.domain, theta, resolution or (64 if model.dof == 1 else 16), model.hbar, scaling)
    raise ValueError(f"no default grid for domain {kind!r}")


# ---------------------------------------------------------------------------
# h-adaptive cubature

# Gauss-Kronrod 7/15 on [-1, 1] (positive half, centre last)
_XGK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                 0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                 0.207784955007898467600689403773245, 0.0])
_WGK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                 0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                 0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
_GK_T = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_GK_W = np.concatenate([_WGK[:-1], _WGK[::-1]])
_G_W = np.zeros(15)
_G_W[[1, 3, 5]] = _WG[:3]
_G_W[[13, 11, 9]] = _WG[:3]
_G_W[7] = _WG[3]


def _gk15(f, lo, hi):
    c, h = 0.5 * (lo[0] + hi[0]), 0.5 * (hi[0] - lo[0])
    fx = f((c + h * _GK_T)[:, None])
    k = h * np.dot(_GK_W, fx)
    g = h * np.dot(_G_W, fx)
    return k, abs(k - g), 0, 15


class _GenzMalik:
    """Degree-7 rule with embedded degree-5 estimate on an n-cube."""

    l2, l3, l4, l5 = np.sqrt(9 / 70), np.sqrt(9 / 10), np.sqrt(9 / 10), np.sqrt(9 / 19)

    def __init__(self, n):
        self.n = n
        eye = np.eye(n)
        c = np.zeros((1, n))
        s2 = np.concatenate([self.l2 * eye, -self.l2 * eye])
        s3 = np.concatenate([self.l3 * eye, -self.l3 * eye])
        s4 = []
        for i, j in combinations(range(n), 2):
            for si, sj in product((1, -1), repeat=2):
                v = np.zeros(n)
                v[i], v[j] = si * self.l4, sj * self.l4
                s4.append(v)
        s4 = np.array(s4).reshape(-1, n)
        s5 = self.l5 * np.array(list(product((1, -1), repeat=n)), dtype=float)
        self.points = np.concatenate([c, s2, s3, s4, s5])
        self.sizes = [1, 2 * n, 2 * n, len(s4), len(s5)]
        w7 = [(12824 - 9120 * n + 400 * n * n) / 19683, 980 / 6561, (1820 - 400 * n) / 19683, 200 / 19683,
              6859 / 19683 / 2**n]
        w5 = [(729 - 950 * n + 50 * n * n) / 729, 245 / 486, (265 - 100 * n) / 1458, 25 / 729, 0.0]
        self.w7 = np.repeat(w7, self.sizes)
        self.w5 = np.repeat(w5, self.sizes)

    def __call__(self, f, lo, hi):
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        fx = f(c + h * self.points)
        vol = np.prod(2 * h)
        v7 = vol * np.dot(self.w7, fx)
        v5 = vol * np.dot(self.w5, fx)
        n = self.n
        f0 = fx[0]
        f2 = fx[1 : 1 + 2 * n]
        f3 = fx[1 + 2 * n : 1 + 4 * n]
        d2 = f2[:n] + f2[n:] - 2 * f0
        d3 = f3[:n] + f3[n:] - 2 * f0
        fourth = np.abs(d2 - (self.l2 / self.l3) ** 2 * d3)
        return v7, abs(v7 - v5), int(np.argmax(fourth)), len(fx)


@dataclass
class CubatureResult:
    value: float
    error: float
    n_evals: int
    converged: bool


def adaptive_cubature(f, lower, upper, rel_tol=1e-8, abs_tol=0.0, max_evals=100_000):
    """Globally adaptive integration over a box.

    `f` maps an ``(m, dim)`` array of points to ``m`` values.  The region
    with the largest error estimate is bisected (along the axis with the
    largest fourth difference in more than one dimension) until the total
    error drops below ``max(abs_tol, rel_tol |value|)`` or the evaluation
    budget is spent.  Uses Gauss-Kronrod 7/15 in 1-D, Genz-Malik otherwise.
    """
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if lower.shape != upper.shape or np.any(upper <= lower):
        raise ValueError("need lower < upper in every dimension")
    dim = len(lower)
    rule = _gk15 if dim == 1 else _GenzMalik(dim)

    def fv(x):
        return np.asarray(f(x), dtype=float).reshape(len(x))

    v, e, ax, ne = rule(fv, lower, upper)
    n_evals = ne
    heap = [(-e, 0, lower, upper, v, e, ax)]
    total_v, total_e = v, e
    counter = 1
    while total_e > max(abs_tol, rel_tol * abs(total_v)) and n_evals + 2 * ne <= max_evals:
        _, _, lo, hi, v, e, ax = heapq.heappop(heap)
        if dim == 1:
            ax = 0
        mid = 0.5 * (lo[ax] + hi[ax])
        hi1 = hi.copy()
        hi1[ax] = mid
        lo2 = lo.copy()
        lo2[ax] = mid
        total_v -= v
        total_e -= e
        for a, b in ((lo, hi1), (lo2, hi)):
            v2, e2, ax2, ne2 = rule(fv, a, b)
            n_evals += ne2
            total_v += v2
            total_e += e2
            heapq.heappush(heap, (-e2, counter, a, b, v2, e2, ax2))
            counter += 1
    # re-sum to shed the drift of the running totals
    value = float(sum(item[4] for item in heap))
    error = float(sum(item[5] for item in heap))
    return CubatureResult(value, error, n_evals, error <= max(abs_tol, rel_tol * abs(value)))


# ---------------------------------------------------------------------------
# Metropolis-Hastings


@dataclass
class MCMCResult:
    samples: np.ndarray
    acceptance_rate: float
    n_chains: int
    burn_in: int
    thin: int


def metropolis_sampler(log_density, x0, proposal_scale, n_samples, seed, burn_in=0.1, thin=1, n_chains=1,
                       window=1000):
    """Random-walk Metropolis with Gaussian proposals.

    Parameters
    ----------
    log_density : callable
        Vectorised ``(n_chains, d) -> (n_chains,)`` log target (unnormalised;
        ``-inf`` outside the support).
    x0 : array_like, shape (d,)
        Start for every chain.
    proposal_scale : float or array_like
        Standard deviation of the proposal per coordinate.
    n_samples : int
        Total retained samples over all chains.
    seed : int
    burn_in : float or int
        Fraction (< 1) of each chain, or a number of steps, to discard.
    thin : int
        Keep every ``thin``-th step.
    n_chains : int
        Independent chains advanced together.

    Returns
    -------
    MCMCResult
        ``samples`` has shape ``(n_samples, d)``; chain ``c`` occupies a
        contiguous block.

    Raises
    ------
    RuntimeError
        If no proposal is accepted in any chain over ``window`` steps.
    """
    rng = np.random.default_rng(seed)
    x = np.tile(np.asarray(x0, dtype=float), (n_chains, 1))
    d = x.shape[1]
    lp = np.asarray(log_density(x), dtype=float)
    if not np.all(np.isfinite(lp)):
        raise ValueError("log density must be finite at x0")
    per_chain = -(-n_samples // n_chains)
    burn = int(burn_in * per_chain) if burn_in < 1 else int(burn_in)
    n_steps = burn + per_chain * thin
    scale = np.broadcast_to(np.asarray(proposal_scale, dtype=float), (d,))
    out = np.empty((per_chain, n_chains, d))
    accepted = 0
    recent = 0
    kept = 0
    for step in range(n_steps):
        prop = x + scale * rng.standard_normal((n_chains, d))
        lp_prop = np.asarray(log_density(prop), dtype=float)
        u = rng.random(n_chains)
        with np.errstate(invalid="ignore"):
            acc = np.log(u) < lp_prop - lp
        x[acc] = prop[acc]
        lp[acc] = lp_prop[acc]
        n_acc = int(np.count_nonzero(acc))
        accepted += n_acc
        recent += n_acc
        if (step + 1) % window == 0:
            if recent == 0:
                raise RuntimeError(f"Metropolis chain stuck: no acceptance in {window} steps (scale={scale})")
            recent = 0
        if step >= burn and (step - burn) % thin == 0:
            out[kept] = x
            kept += 1
    rate = accepted / (n_steps * n_chains)
    if not 0.1 <= rate <= 0.6:
        warnings.warn(f"Metropolis acceptance rate {rate:.3f} outside [0.1, 0.6]", RuntimeWarning, stacklevel=2)
    samples = out.transpose(1, 0, 2).reshape(-1, d)[:n_samples]
    return MCMCResult(samples, rate, n_chains, burn, thin)
