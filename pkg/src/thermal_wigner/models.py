"""Hamiltonian models with complex-argument evaluation and Weyl symbols.

Each model evaluates its classical Hamiltonian, gradient and Hessian at
complex phase-space points (analytic continuation), batched over leading
axes.  Derivatives are coded by hand.

Coordinates follow the ``(p_1..p_d, q_1..q_d)`` ordering throughout.
"""

from dataclasses import dataclass, field
from math import floor

import numpy as np

from .symbols import NormalForm, groenewold_power, harmonic_normal_form, kerr_normal_form

__all__ = [
    "MidpointDomain",
    "HamiltonianModel",
    "HarmonicOscillator",
    "Kerr",
    "Morse",
    "Nelson",
    "harmonic_oscillator",
    "kerr",
    "morse",
    "nelson",
    "bound_state_count",
]


@dataclass(frozen=True)
class MidpointDomain:
    """Region of midpoints over which thermal integrals run.

    ``kind`` is one of ``"all-space-gaussian-mapped"``, ``"rectangle"``,
    ``"morse-bound"`` or ``"nelson-mapped"``; ``params`` carries whatever
    the grid builders in :mod:`thermal_wigner.quadrature` need.
    """

    kind: str
    params: dict = field(default_factory=dict)

    KINDS = ("all-space-gaussian-mapped", "rectangle", "morse-bound", "nelson-mapped")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}")


class HamiltonianModel:
    """Common interface; concrete models override the evaluation methods."""

    name = "model"
    dof = 1
    hbar = 1.0

    def value(self, z):
        raise NotImplementedError

    def gradient(self, z):
        raise NotImplementedError

    def hessian(self, z):
        raise NotImplementedError

    def symbol_h(self, x):
        """Weyl symbol of H at real points."""
        return np.real(self.value(np.asarray(x, dtype=float)))

    def symbol_h2(self, x):
        raise NotImplementedError

    def classical(self, x):
        """Classical Hamiltonian at real points."""
        return np.real(self.value(np.asarray(x, dtype=float)))

    @property
    def domain(self):
        raise NotImplementedError

    def params(self):
        """Parameters as a plain dict, for metadata."""
        return {"model": self.name, "hbar": self.hbar}

    def _split(self, z):
        z = np.asarray(z)
        if z.shape[-1] != 2 * self.dof:
            raise ValueError(f"{self.name}: expected length {2 * self.dof}, got {z.shape[-1]}")
        return z[..., : self.dof], z[..., self.dof :]


class _Separable(HamiltonianModel):
    """``H = T(p) + V(q)`` with ``T`` quadratic.

    For this form the Moyal series of ``H * H`` stops at second order:
    ``symbol(H^2) = H^2 - (hbar^2/4) tr(T_pp V_qq)``.
    """

    def kinetic_curvature(self):
        """Diagonal of ``d^2T/dp^2`` (constant)."""
        raise NotImplementedError

    def potential_hessian_diag(self, q):
        raise NotImplementedError

    def symbol_h2(self, x):
        x = np.asarray(x, dtype=float)
        _, q = self._split(x)
        h = self.symbol_h(x)
        corr = np.sum(self.kinetic_curvature() * self.potential_hessian_diag(q), axis=-1)
        return h * h - 0.25 * self.hbar**2 * corr


@dataclass(frozen=True, eq=False)
class HarmonicOscillator(_Separable):
    omega: float = 1.0
    hbar: float = 1.0
    dof: int = 1
    name = "harmonic"

    def value(self, z):
        z = np.asarray(z)
        return 0.5 * self.omega * np.sum(z * z, axis=-1)

    def gradient(self, z):
        return self.omega * np.asarray(z)

    def hessian(self, z):
        z = np.asarray(z)
        eye = np.eye(2 * self.dof, dtype=z.dtype)
        return self.omega * np.broadcast_to(eye, z.shape + (2 * self.dof,)).copy()

    def kinetic_curvature(self):
        return np.full(self.dof, self.omega)

    def potential_hessian_diag(self, q):
        return np.full(np.shape(q), self.omega)

    def normal_form(self):
        return harmonic_normal_form(self.omega)

    def spectrum_function(self):
        return lambda I: self.omega * I

    @property
    def domain(self):
        n = 2 * self.dof
        return MidpointDomain(
            "all-space-gaussian-mapped",
            {"centre": np.zeros(n), "stiffness": np.full(n, self.omega),
             "frequencies": np.full(self.dof, self.omega)},
        )

    def params(self):
        return {"model": self.name, "omega": self.omega, "hbar": self.hbar, "dof": self.dof}


@dataclass(frozen=True, eq=False)
class Kerr(HamiltonianModel):
    """Kerr oscillator ``hbar w0 [I + chi I^2]``, ``I = (p^2 + q^2) / (2 hbar)``.

    ``value`` is the classical function; its Weyl symbol differs by the
    constant ``-hbar w0 chi / 4``.
    """

    omega0: float = 1.0
    chi: float = 0.1
    hbar: float = 1.0
    name = "kerr"
    dof = 1

    def value(self, z):
        z = np.asarray(z)
        I = np.sum(z * z, axis=-1) / (2 * self.hbar)
        return self.hbar * self.omega0 * (I + self.chi * I * I)

    def _dH_du(self, u):
        return 0.5 * self.omega0 + self.omega0 * self.chi * u / (2 * self.hbar)

    def gradient(self, z):
        z = np.asarray(z)
        u = np.sum(z * z, axis=-1)
        return 2 * self._dH_du(u)[..., None] * z

    def hessian(self, z):
        z = np.asarray(z)
        u = np.sum(z * z, axis=-1)
        d2 = self.omega0 * self.chi / (2 * self.hbar)
        eye = np.eye(2, dtype=z.dtype)
        return 2 * self._dH_du(u)[..., None, None] * eye + 4 * d2 * z[..., :, None] * z[..., None, :]

    def symbol_h(self, x):
        return self.classical(x) - 0.25 * self.hbar * self.omega0 * self.chi

    def symbol_h2(self, x):
        # H = a o + b o^2 with o = p^2 + q^2, so H^2 = a^2 o^2 + 2ab o^3 + b^2 o^4
        a = self.omega0 / 2
        b = self.omega0 * self.chi / (4 * self.hbar)
        o2, o3, o4 = (groenewold_power(n, self.hbar) for n in (2, 3, 4))
        poly = o2.scaled(a * a) + o3.scaled(2 * a * b) + o4.scaled(b * b)
        return poly(np.asarray(x, dtype=float))

    def normal_form(self) -> NormalForm:
        return kerr_normal_form(self.omega0, self.chi, self.hbar)

    def spectrum_function(self):
        return lambda I: self.hbar * self.omega0 * (I / self.hbar + self.chi * (I / self.hbar) ** 2)

    @property
    def domain(self):
        return MidpointDomain(
            "all-space-gaussian-mapped",
            {"centre": np.zeros(2), "stiffness": np.full(2, self.omega0),
             "frequencies": np.array([self.omega0])},
        )

    def params(self):
        return {"model": self.name, "omega0": self.omega0, "chi": self.chi, "hbar": self.hbar}


def bound_state_count(chi):
    """Highest Morse bound-state index ``N = floor(1/(2 chi) - 1/2)``."""
    if not 0 < chi < 0.5:
        raise ValueError(f"chi must lie in (0, 1/2), got {chi}")
    return int(floor(1 / (2 * chi) - 0.5))


@dataclass(frozen=True, eq=False)
class Morse(_Separable):
    """Morse oscillator in units with ``omega = 1``.

    ``H = p^2 / (4D) + D (1 - exp(-q))^2`` with ``D = hbar / (4 chi)``.
    """

    chi: float = 0.05
    hbar: float = 1.0
    name = "morse"
    dof = 1

    def __post_init__(self):
        if not 0 < self.chi < 0.5:
            raise ValueError(f"chi must lie in (0, 1/2), got {self.chi}")

    @property
    def D(self):
        return self.hbar / (4 * self.chi)

    def value(self, z):
        p, q = self._split(z)
        e = 1 - np.exp(-q[..., 0])
        return p[..., 0] ** 2 / (4 * self.D) + self.D * e * e

    def gradient(self, z):
        p, q = self._split(z)
        eq = np.exp(-q[..., 0])
        return np.stack([p[..., 0] / (2 * self.D), 2 * self.D * (1 - eq) * eq], axis=-1)

    def hessian(self, z):
        p, q = self._split(z)
        eq = np.exp(-q[..., 0])
        out = np.zeros(np.shape(z) + (2,), dtype=np.result_type(np.asarray(z), float))
        out[..., 0, 0] = 1 / (2 * self.D)
        out[..., 1, 1] = 2 * self.D * (2 * eq * eq - eq)
        return out

    def kinetic_curvature(self):
        return np.array([1 / (2 * self.D)])

    def potential_hessian_diag(self, q):
        eq = np.exp(-np.asarray(q))
        return 2 * self.D * (2 * eq * eq - eq)

    def normalized_energy(self, x):
        """``eps = H / D``; bound motion has ``eps < 1``."""
        return self.classical(x) / self.D

    def bound_state_count(self):
        return bound_state_count(self.chi)

    @property
    def domain(self):
        return MidpointDomain("morse-bound", {"chi": self.chi, "hbar": self.hbar})

    def params(self):
        return {"model": self.name, "chi": self.chi, "hbar": self.hbar}


@dataclass(frozen=True, eq=False)
class Nelson(_Separable):
    """Unit-mass particle in ``V(x, y) = (x^2/2 - y)^2 + mu x^2``."""

    mu: float = 2.0
    hbar: float = 1.0
    name = "nelson"
    dof = 2

    def potential(self, x, y):
        a = 0.5 * x * x - y
        return a * a + self.mu * x * x

    def value(self, z):
        p, q = self._split(z)
        return 0.5 * np.sum(p * p, axis=-1) + self.potential(q[..., 0], q[..., 1])

    def gradient(self, z):
        p, q = self._split(z)
        x, y = q[..., 0], q[..., 1]
        a = 0.5 * x * x - y
        return np.stack([p[..., 0], p[..., 1], 2 * a * x + 2 * self.mu * x, -2 * a], axis=-1)

    def hessian(self, z):
        z = np.asarray(z)
        _, q = self._split(z)
        x, y = q[..., 0], q[..., 1]
        out = np.zeros(z.shape + (4,), dtype=np.result_type(z, float))
        out[..., 0, 0] = 1
        out[..., 1, 1] = 1
        out[..., 2, 2] = 3 * x * x - 2 * y + 2 * self.mu
        out[..., 2, 3] = out[..., 3, 2] = -2 * x
        out[..., 3, 3] = 2
        return out

    def kinetic_curvature(self):
        return np.ones(2)

    def potential_hessian_diag(self, q):
        q = np.asarray(q)
        x, y = q[..., 0], q[..., 1]
        return np.stack([3 * x * x - 2 * y + 2 * self.mu, np.full(np.shape(x), 2.0)], axis=-1)

    @property
    def domain(self):
        return MidpointDomain(
            "nelson-mapped",
            {"mu": self.mu, "frequencies": np.array([np.sqrt(2 * self.mu), np.sqrt(2.0)])},
        )

    def params(self):
        return {"model": self.name, "mu": self.mu, "hbar": self.hbar}


def harmonic_oscillator(omega=1.0, hbar=1.0, dof=1):
    if omega <= 0 or hbar <= 0:
        raise ValueError("omega and hbar must be positive")
    return HarmonicOscillator(omega=omega, hbar=hbar, dof=dof)


def kerr(omega0=1.0, chi=0.1, hbar=1.0):
    if omega0 <= 0 or chi <= 0 or hbar <= 0:
        raise ValueError("omega0, chi and hbar must be positive")
    return Kerr(omega0=omega0, chi=chi, hbar=hbar)


def morse(chi=0.05, hbar=1.0):
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    return Morse(chi=chi, hbar=hbar)


def nelson(mu=2.0, hbar=1.0):
    if mu <= 0 or hbar <= 0:
        raise ValueError("mu and hbar must be positive")
    return Nelson(mu=mu, hbar=hbar)
