"""Auxiliary-angle parameterization, MPSK decisions, and the quadratic metric.

Everything here is stateless and re-entrant.  Sequences of MPSK symbols are
represented by integer exponent vectors ``e`` with symbols ``exp(j*2*pi*e/M)``;
auxiliary-angle vectors are plain 1-D float arrays of length ``2*d - 1`` for
working rank ``d``, with the first ``2*d - 2`` entries in (-pi/2, pi/2] and the
last entry range-restricted to (-pi/M, pi/M].
"""

import math

import numpy as np

TWO_PI = 2.0 * math.pi

# half-open interval bounds are enforced with this much slack; candidates that
# land exactly on a range endpoint are rotation-duplicates and canonicalize to
# the same sequence, so admitting both endpoints is harmless
RANGE_SLACK = 1e-12

# below this tail norm the spherical parameterization is non-unique (pole);
# remaining angles are set to zero, which still reproduces the input vector
POLE_TOL = 1e-12


class _Sentinel:
    __slots__ = ("_name",)

    def __init__(self, name):
        self._name = name

    def __repr__(self):
        return self._name


#: intersection falls outside the angle region of interest
REJECTED = _Sentinel("REJECTED")
#: linear system is rank-deficient: uncountably many intersections
DEGENERATE = _Sentinel("DEGENERATE")


def alphabet(m_order):
    """The M complex unit-circle symbols exp(j*2*pi*m/M), m = 0..M-1."""
    return np.exp(2j * math.pi * np.arange(m_order) / m_order)


def working_rank(phi):
    """Rank d implied by an angle vector of length 2d-1."""
    return (len(phi) + 1) // 2


def c_tilde(phi):
    """Real unit vector of length 2d swept by the 2d-1 auxiliary angles.

    Component t is sin(phi_t) times the product of cos(phi_i) for i < t;
    the final component is the full cosine product.
    """
    phi = np.asarray(phi, dtype=float)
    k = len(phi)
    out = np.empty(k + 1)
    prod = 1.0
    for i in range(k):
        out[i] = prod * math.sin(phi[i])
        prod *= math.cos(phi[i])
    out[k] = prod
    return out


def c_complex(phi):
    """Complex unit vector of length d: even components of c_tilde plus
    j times the odd components (1-based positions)."""
    return complex_from_tilde(c_tilde(phi))


def complex_from_tilde(ct):
    """Fold a real 2d vector into the corresponding complex d vector."""
    return ct[1::2] + 1j * ct[0::2]


def tilde_from_complex(c):
    """Inverse of :func:`complex_from_tilde`."""
    c = np.asarray(c, dtype=complex)
    out = np.empty(2 * len(c))
    out[0::2] = c.imag
    out[1::2] = c.real
    return out


def phi_cascade(u):
    """Angles (all in (-pi/2, pi/2]) reconstructing unit vector ``u`` up to
    its last component, which must be nonnegative for an exact round trip.

    Returns len(u)-1 angles via the arcsin cascade phi_i = arcsin(u_i / r_i)
    with r_i the norm of u_{i:}.  Below POLE_TOL the remaining angles are
    zeroed out.
    """
    u = np.asarray(u, dtype=float)
    k = len(u) - 1
    out = np.zeros(k)
    for i in range(k):
        r = math.sqrt(float(np.dot(u[i:], u[i:])))
        if r < POLE_TOL:
            return out
        out[i] = math.asin(max(-1.0, min(1.0, u[i] / r)))
    return out


def spherical_coords(u, range_bound):
    """Angle vector phi with c_tilde(phi) equal to ``u`` or ``-u``.

    The sign is chosen so that the last angle lands in
    (-range_bound, range_bound]; if neither sign does, returns REJECTED.
    """
    u = np.asarray(u, dtype=float)
    for v in (u, -u):
        last = math.atan2(v[-2], v[-1])
        if -range_bound - RANGE_SLACK < last <= range_bound + RANGE_SLACK:
            phi = np.empty(len(v) - 1)
            phi[:-1] = phi_cascade(v)[:-1]
            if math.hypot(v[-2], v[-1]) < POLE_TOL:
                last = 0.0
            phi[-1] = last
            return phi
    return REJECTED


def decision_from_product(z, m_order):
    """Alphabet exponent whose symbol phase is nearest to arg(z).

    An exact boundary tie resolves to the counterclockwise (larger) exponent.
    Raises ValueError on z == 0, where no decision is defined.
    """
    if z == 0:
        raise ValueError("MPSK decision undefined: projected statistic is zero")
    a = math.atan2(z.imag, z.real)
    return int(math.floor(a * m_order / TWO_PI + 0.5)) % m_order


def psk_decision(v_row, phi, m_order):
    """Exponent maximizing Re{conj(symbol) * (v_row . c(phi))}."""
    z = complex(np.dot(np.asarray(v_row), c_complex(phi)))
    return decision_from_product(z, m_order)


def sequence_decision(V, phi, m_order):
    """Row-wise MPSK decisions for every row of V at angles phi."""
    V = np.asarray(V)
    z = V @ c_complex(phi)
    if np.any(z == 0):
        raise ValueError("MPSK decision undefined: projected statistic is zero")
    a = np.arctan2(z.imag, z.real)
    return np.floor(a * m_order / TWO_PI + 0.5).astype(np.int64) % m_order


def metric(V, exponents, m_order):
    """Squared norm of V^H s for the sequence with the given exponents."""
    V = np.asarray(V)
    s = np.exp(2j * math.pi * np.asarray(exponents) / m_order)
    g = V.conj().T @ s
    return float(np.real(np.vdot(g, g)))


def canonicalize(exponents, m_order):
    """Rotate the sequence so its first exponent is zero (metric-invariant)."""
    e = np.asarray(exponents, dtype=np.int64)
    return (e - e[0]) % m_order


def rotate(exponents, shift, m_order):
    """Shift every exponent by ``shift`` modulo M (a global phase rotation)."""
    return (np.asarray(exponents, dtype=np.int64) + shift) % m_order
