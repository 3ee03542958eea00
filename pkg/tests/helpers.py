"""Shared test utilities: random instances, independent brute-force oracles,
and geometric checks that do not reuse the construction under test."""

import itertools
import math

import numpy as np

from mpskmax import core


def randmat(rng, n, d):
    """Circular complex Gaussian matrix, unit variance per entry."""
    return (rng.standard_normal((n, d))
            + 1j * rng.standard_normal((n, d))) / math.sqrt(2.0)


def brute_force_max(V, m_order):
    """Exhaustive maximum of ||V^H s||^2 over canonical sequences.

    Plain loop over M^(N-1) exponent tuples; independent of the solver and
    of the vectorized oracle.
    """
    V = np.asarray(V, dtype=complex)
    n = V.shape[0]
    best_val, best_seq = -1.0, None
    for tail in itertools.product(range(m_order), repeat=n - 1):
        e = np.array((0,) + tail, dtype=np.int64)
        val = core.metric(V, e, m_order)
        if val > best_val:
            best_val, best_seq = val, e
    return best_val, best_seq


def decisions_batch(V, phis, m_order):
    """Row-wise MPSK decisions for many angle vectors at once.

    Returns (exponents (B, N), tie_free (B,)); a sample is tie-free when no
    row statistic sits within 1e-9 of a decision boundary.
    """
    phis = np.asarray(phis, dtype=float)
    sines = np.sin(phis)
    cosines = np.cos(phis)
    prods = np.cumprod(np.hstack([np.ones((len(phis), 1)), cosines]), axis=1)
    ct = np.empty((len(phis), phis.shape[1] + 1))
    ct[:, :-1] = prods[:, :-1] * sines
    ct[:, -1] = prods[:, -1]
    c = ct[:, 1::2] + 1j * ct[:, 0::2]
    z = c @ np.asarray(V, dtype=complex).T
    scaled = np.arctan2(z.imag, z.real) * m_order / core.TWO_PI + 0.5
    tie_free = np.all(np.abs(scaled - np.round(scaled)) > 1e-9, axis=1)
    return np.floor(scaled).astype(np.int64) % m_order, tie_free


def random_angles(rng, count, rank, m_order):
    """Uniform angle vectors over the region of interest."""
    phis = np.empty((count, 2 * rank - 1))
    phis[:, :-1] = rng.uniform(-math.pi / 2, math.pi / 2,
                               (count, 2 * rank - 2))
    phis[:, -1] = rng.uniform(-math.pi / m_order, math.pi / m_order, count)
    return phis


def _ctilde_jacobian(phi, h=1e-7):
    phi = np.asarray(phi, dtype=float)
    base = core.c_tilde(phi)
    jac = np.empty((len(base), len(phi)))
    for j in range(len(phi)):
        step = phi.copy()
        step[j] += h
        jac[:, j] = (core.c_tilde(step) - base) / h
    return jac


def cell_interior_point(lifted_data, combo, phi_vertex, eps=1e-6):
    """A point inside the cell led by the vertex of ``combo``.

    The led cell is the sector whose tangent cone lies above the vertex in
    the last angle; its interior direction g solves n_i . g = sign(c_i)
    where the c_i expand the last-angle axis in the surface normals n_i.
    Independent geometric construction used to cross-check the candidate
    rules.
    """
    jac = _ctilde_jacobian(phi_vertex)
    normals = lifted_data[list(combo)] @ jac
    e_last = np.zeros(len(combo))
    e_last[-1] = 1.0
    coeffs = np.linalg.solve(normals.T, e_last)
    direction = np.linalg.solve(normals, np.sign(coeffs))
    direction /= np.linalg.norm(direction)
    return np.asarray(phi_vertex) + eps * direction
