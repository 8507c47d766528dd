"""Weyl symbols of polynomial operators and closed-form normal-form dynamics.

Two independent routes to operator-product symbols live here:

* :func:`groenewold_power` -- the three-term radial recurrence for the
  symbols of ``(p^2 + q^2)^n``;
* :func:`moyal_product` -- the exact (terminating) Moyal series for
  polynomials, done symbolically with sympy.  It is slow and is meant as a
  ground truth in tests.

The normal-form part gives the thermal centre, euclidean action and
Jacobian determinant of ``H = F(J)``, ``J = x^2/2`` in closed form.
"""

from dataclasses import dataclass
from itertools import product
from math import factorial
from typing import Callable

import numpy as np
import sympy as sp

__all__ = [
    "RadialPolynomial",
    "groenewold_power",
    "phase_symbols",
    "moyal_product",
    "NormalForm",
    "harmonic_normal_form",
    "kerr_normal_form",
    "normal_form_thermal",
    "normal_form_spectrum",
]


@dataclass(frozen=True)
class RadialPolynomial:
    """Polynomial ``sum_k coeffs[k] * u**k`` in ``u = p^2 + q^2``."""

    coeffs: tuple
    hbar: float = 1.0

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def evaluate(self, u):
        u = np.asarray(u)
        out = np.zeros_like(u, dtype=np.result_type(u, float))
        for c in reversed(self.coeffs):
            out = out * u + float(c)
        return out

    def __call__(self, x):
        x = np.asarray(x)
        return self.evaluate(np.sum(x * x, axis=-1))

    def __add__(self, other):
        if not isinstance(other, RadialPolynomial):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0] * (n - len(self.coeffs))
        b = list(other.coeffs) + [0] * (n - len(other.coeffs))
        return RadialPolynomial(tuple(x + y for x, y in zip(a, b)), self.hbar)

    def scaled(self, factor):
        return RadialPolynomial(tuple(factor * c for c in self.coeffs), self.hbar)

    def to_sympy(self, p, q):
        u = p**2 + q**2
        return sp.expand(sum(sp.nsimplify(c) * u**k for k, c in enumerate(self.coeffs)))


def groenewold_power(n, hbar=1):
    """Weyl symbol of ``(p^2 + q^2)^n`` as a :class:`RadialPolynomial`.

    Iterates ``o^{n+1} = [u - hbar^2 (u d_u^2 + d_u)] o^n`` starting from
    ``o = u``.  Coefficient arithmetic follows the type of `hbar`, so an
    integer or ``Fraction`` gives exact coefficients.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    h2 = hbar * hbar
    c = [0, 1]
    for _ in range(n - 1):
        new = [0] * (len(c) + 1)
        for k, ck in enumerate(c):
            if ck == 0:
                continue
            new[k + 1] += ck
            if k >= 1:
                new[k - 1] -= h2 * k * k * ck
        c = new
    return RadialPolynomial(tuple(c), hbar)


def phase_symbols(dof=1):
    """Sympy symbols ``(ps, qs)`` for a ``dof``-dimensional phase space."""
    if dof == 1:
        return (sp.Symbol("p", real=True),), (sp.Symbol("q", real=True),)
    ps = sp.symbols(f"p1:{dof + 1}", real=True)
    qs = sp.symbols(f"q1:{dof + 1}", real=True)
    return tuple(ps), tuple(qs)


def _diff(expr, syms, orders):
    for s, k in zip(syms, orders):
        if k:
            expr = sp.diff(expr, s, k)
    return expr


def moyal_product(a, b, hbar=1, dof=1):
    """Exact Weyl symbol of the operator product ``A B`` for polynomials.

    Uses ``A * exp[(i hbar / 2) sum_j (<d_qj d_pj> - <d_pj d_qj>)] * B``,
    expanded over multi-indices; the series stops at the smaller total
    degree.  `a` and `b` are sympy expressions in :func:`phase_symbols`.
    """
    ps, qs = phase_symbols(dof)
    gens = ps + qs
    a = sp.expand(sp.sympify(a))
    b = sp.expand(sp.sympify(b))
    deg_a = sp.Poly(a, *gens).total_degree() if a.free_symbols else 0
    deg_b = sp.Poly(b, *gens).total_degree() if b.free_symbols else 0
    half = sp.I * sp.nsimplify(hbar) / 2
    total = sp.Integer(0)
    for n in range(min(deg_a, deg_b) + 1):
        for idx in product(range(n + 1), repeat=2 * dof):
            if sum(idx) != n:
                continue
            ai, bi = idx[:dof], idx[dof:]
            coef = half**n * (-1) ** sum(bi)
            for k in idx:
                coef /= factorial(k)
            # a-indices pair d_q on A with d_p on B; b-indices the reverse
            da = _diff(_diff(a, qs, ai), ps, bi)
            if da == 0:
                continue
            db = _diff(_diff(b, ps, ai), qs, bi)
            total += coef * da * db
    return sp.expand(total)


@dataclass(frozen=True)
class NormalForm:
    """Hamiltonian ``F(J)`` of the action ``J = (p^2 + q^2) / 2``.

    ``F`` should be the Weyl symbol used to generate the flow.  The
    frequency is ``dF``; ``d2F`` is its derivative.
    """

    F: Callable
    dF: Callable
    d2F: Callable


def harmonic_normal_form(omega=1.0, shift=0.0):
    return NormalForm(
        F=lambda J: omega * J + shift,
        dF=lambda J: omega + 0.0 * J,
        d2F=lambda J: 0.0 * J,
    )


def kerr_normal_form(omega0=1.0, chi=0.1, hbar=1.0):
    """Symbol ``hbar w0 [J/hbar + chi (J/hbar)^2 - chi/4]`` of the Kerr Hamiltonian."""
    return NormalForm(
        F=lambda J: hbar * omega0 * (J / hbar + chi * (J / hbar) ** 2 - chi / 4),
        dF=lambda J: omega0 * (1 + 2 * chi * J / hbar),
        d2F=lambda J: 2 * chi * omega0 / hbar + 0.0 * J,
    )


def normal_form_thermal(nf, X, theta):
    """Closed-form thermal trajectory data for a normal form.

    Parameters
    ----------
    nf : NormalForm
    X : array_like, shape (..., 2)
        Midpoints ``(p, q)``.
    theta : float
        Thermal time, ``theta >= 0``.

    Returns
    -------
    centre : ndarray, shape (..., 2)
        ``cosh(w theta / 2) X``.
    action : ndarray
        Euclidean action ``[w theta - sinh(w theta)] J - theta F(J)``.
    det_jac : ndarray
        ``cosh^2(w theta/2) [1 + J w' theta tanh(w theta/2)]``.
    """
    if theta < 0:
        raise ValueError("theta must be non-negative")
    X = np.asarray(X, dtype=float)
    J = 0.5 * np.sum(X * X, axis=-1)
    w = nf.dF(J)
    half = 0.5 * w * theta
    ch = np.cosh(half)
    centre = ch[..., None] * X
    action = (w * theta - np.sinh(w * theta)) * J - theta * nf.F(J)
    det_jac = ch**2 * (1 + J * nf.d2F(J) * theta * np.tanh(half))
    return centre, action, det_jac


def normal_form_spectrum(G, n_max, hbar=1.0):
    """Levels ``E_n = G(hbar (n + 1/2))`` for ``n = 0..n_max``."""
    from .reference import Spectrum

    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    n = np.arange(n_max + 1)
    energies = np.asarray(G(hbar * (n + 0.5)), dtype=float)
    return Spectrum(np.sort(energies), truncated=True)
