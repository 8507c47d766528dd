"""Phase-space primitives.

Points are real arrays whose last axis has length ``2d`` and is ordered as
``(p_1, ..., p_d, q_1, ..., q_d)``.  Every function here broadcasts over
leading axes so that batches of points can be handled in one call.
"""

import numpy as np

__all__ = ["dof_of", "apply_J", "apply_J_left", "apply_J_right", "symplectic_matrix", "wedge", "as_phase_point"]


def dof_of(x):
    """Number of degrees of freedom implied by the last axis of `x`."""
    n = np.shape(x)[-1]
    if n % 2:
        raise ValueError(f"phase-space vectors need an even length, got {n}")
    return n // 2


def _check_dim(x, dof):
    d = dof_of(x)
    if dof is not None and d != dof:
        raise ValueError(f"expected a point with d={dof} (length {2 * dof}), got length {2 * d}")
    return d


def as_phase_point(coords, dof=None):
    """Validate `coords` as a finite phase-space point (or batch of points)."""
    x = np.asarray(coords, dtype=float)
    _check_dim(x, dof)
    if not np.all(np.isfinite(x)):
        raise ValueError("phase-space point has non-finite coordinates")
    return x


def apply_J(x, dof=None):
    """Return ``J x``, i.e. ``(p, q) -> (-q, p)`` per degree of freedom.

    Acts on the last axis; complex input is fine.  For stacks of matrices
    use :func:`apply_J_left` / :func:`apply_J_right`.
    """
    x = np.asarray(x)
    d = _check_dim(x, dof)
    out = np.empty_like(x)
    out[..., :d] = -x[..., d:]
    out[..., d:] = x[..., :d]
    return out


def apply_J_left(m):
    """``J @ m`` for a stack of ``(2d, k)`` matrices."""
    m = np.asarray(m)
    d = m.shape[-2] // 2
    out = np.empty_like(m)
    out[..., :d, :] = -m[..., d:, :]
    out[..., d:, :] = m[..., :d, :]
    return out


def apply_J_right(m):
    """``m @ J`` for a stack of ``(k, 2d)`` matrices."""
    m = np.asarray(m)
    d = m.shape[-1] // 2
    out = np.empty_like(m)
    out[..., :d] = m[..., d:]
    out[..., d:] = -m[..., :d]
    return out


def symplectic_matrix(dof):
    """Dense ``2d x 2d`` matrix J with blocks ``[[0, -I], [I, 0]]``.

    Only meant for tests and diagnostics; the hot paths use :func:`apply_J`.
    """
    eye = np.eye(dof)
    zero = np.zeros((dof, dof))
    return np.block([[zero, -eye], [eye, zero]])


def wedge(xi, x):
    """Symplectic product ``xi ^ x = (J xi) . x``."""
    xi = np.asarray(xi)
    x = np.asarray(x)
    if xi.shape[-1] != x.shape[-1]:
        raise ValueError(f"dimension mismatch: {xi.shape[-1]} vs {x.shape[-1]}")
    return np.sum(apply_J(xi) * x, axis=-1)
