"""Pure-numpy backend for the per-combination candidate construction.

This is the reference implementation of the hot kernel; the compiled
extension in ``_kernel.pyx`` mirrors it operation for operation.  The entry
point :func:`process_chunk` takes a block of hypersurface index combinations
and emits, for each combination whose intersection is a valid cell vertex,
the canonical exponent vectors of the adjacent cells.

Geometry of the three resolution rules, for a combination I of 2d-1
boundary surfaces with vertex angles phi(V; I):

* rows contributing no surface keep their unambiguous decision at the
  vertex;
* a row contributing one surface is ambiguous between the two alphabet
  exponents adjacent to the boundary ray its statistic lies on; the cell
  on the increasing-last-angle side is selected by the sweep orientation
  of arg(z) along the curve cut out by the other 2d-2 surfaces (the
  statistic traces a centered ellipse there, so its phase is monotone);
* a row contributing two surfaces is fully ambiguous at the vertex; its
  M/2-1 cell values are the interior decisions read off between
  consecutive rotated boundaries on the slice last-angle = pi/M, obtained
  by intersecting the ambiguity pairs of consecutive boundary points
  (exactly one consecutive pair, the wrap across the region boundary, has
  no common element).

The single-surface rule needs a basis of the 2-plane orthogonal to the
other 2d-2 surfaces; besides the vertex null vector w, the direction
b2 = V1 (U[slot,:] / sigma) from the SVD A = U diag(sigma) V1^T of the full
stack satisfies A b2 = e_slot, so no additional factorization is required.
"""

import itertools
import math

import numpy as np

from . import core

# relative smallest-singular-value threshold separating a unique vertex from
# uncountably many intersections
TOL_RANK = 1e-9

# |z| below this times the row norm is treated as a vanishing decision
# statistic (degenerate input), never tie-broken silently
TOL_ZERO = 1e-12

# relative floor on the orientation products used by the single-surface rule
TOL_ORIENT = 1e-12

STAT_DEGENERATE = 0
STAT_REJECTED = 1
STAT_AMBIGUOUS = 2


def lift_rows(V, m_order):
    """Real boundary matrix of shape (M*N/2, 2d): block k holds the rows of
    exp(-j*pi*(2k+1)/M) * V with interleaved real/imag columns."""
    if m_order % 2:
        raise ValueError("alphabet order must be even")
    V = np.asarray(V, dtype=complex)
    n, d = V.shape
    half = m_order // 2
    rot = np.exp(-1j * math.pi * (2 * np.arange(half) + 1) / m_order)
    rotated = (rot[:, None, None] * V[None, :, :]).reshape(half * n, d)
    out = np.empty((half * n, 2 * d))
    out[:, 0::2] = rotated.real
    out[:, 1::2] = rotated.imag
    return out


def _sign_by_last_nonzero(w):
    for i in range(len(w) - 1, -1, -1):
        if abs(w[i]) > core.POLE_TOL:
            return w if w[i] > 0 else -w
    return w


def _boundary_index(z, m_order):
    """Index k of the boundary ray pi*(2k+1)/M (mod 2pi) that arg(z) lies on.

    Only valid for z on (or numerically near) a boundary; there the scaled
    angle sits mid-interval, so plain floor is the stable readout.
    """
    a = math.atan2(z.imag, z.real)
    return int(math.floor(a * m_order / core.TWO_PI)) % m_order


def stage1(lifted, combo, m_order):
    """Vertex factorization for one combination.

    Returns (w, u, s, vt) where w is the null vector oriented into the
    last-angle window, or (sentinel, None, None, None) when the combination
    is DEGENERATE (rank drop) or REJECTED (vertex outside the window).
    """
    a = lifted[list(combo)]
    u, s, vt = np.linalg.svd(a, full_matrices=True)
    if s[-1] <= TOL_RANK * s[0]:
        return core.DEGENERATE, None, None, None
    w = vt[-1]
    win = math.pi / m_order + core.RANGE_SLACK
    if -win < math.atan2(w[-2], w[-1]) <= win:
        return w, u, s, vt
    w = -w
    if -win < math.atan2(w[-2], w[-1]) <= win:
        return w, u, s, vt
    return core.REJECTED, None, None, None


def vertex_null_vector(lifted, combo, m_order):
    """Oriented null vector of the stacked surface rows, or a sentinel."""
    return stage1(lifted, combo, m_order)[0]


def _resolve_single(v_row, b1, b2, z_vertex, m_order):
    """Cell value for a row with one participating surface.

    ``b1``/``b2`` span the plane orthogonal to the other 2d-2 surfaces;
    ``z_vertex`` is the row statistic at the vertex (on a boundary ray).
    Returns an exponent or None when the geometry is numerically degenerate.
    """
    alpha = complex(np.dot(v_row, core.complex_from_tilde(b1)))
    beta = complex(np.dot(v_row, core.complex_from_tilde(b2)))
    sweep_z = (alpha.conjugate() * beta).imag
    p = complex(b1[-1], b1[-2])
    q = complex(b2[-1], b2[-2])
    sweep_t = (p.conjugate() * q).imag
    if abs(sweep_z) <= TOL_ORIENT * abs(alpha) * abs(beta):
        return None
    if abs(sweep_t) <= TOL_ORIENT * abs(p) * abs(q):
        return None
    k = _boundary_index(z_vertex, m_order)
    return (k + 1) % m_order if sweep_z * sweep_t > 0 else k


def _slice_point(lifted, rows, m_order):
    """In-region intersection of the given 2d-2 surfaces with the hyperplane
    last-angle = pi/M, as a c-tilde vector; None when rank-deficient."""
    sp = math.sin(math.pi / m_order)
    cp = math.cos(math.pi / m_order)
    width = lifted.shape[1]  # 2d
    if rows:
        a = lifted[list(rows)]
        g = np.empty((len(rows), width - 1))
        g[:, : width - 2] = a[:, : width - 2]
        g[:, width - 2] = sp * a[:, width - 2] + cp * a[:, width - 1]
        _, s, vt = np.linalg.svd(g, full_matrices=True)
        if s[-1] <= TOL_RANK * s[0]:
            return None
        w = _sign_by_last_nonzero(vt[-1])
    else:
        w = np.array([1.0])
    ct = np.empty(width)
    ct[: width - 2] = w[: width - 2]
    ct[width - 2] = sp * w[width - 2]
    ct[width - 1] = cp * w[width - 2]
    return ct


def _resolve_pair(lifted, v_row, base, row, m_order, n_rows):
    """Cell values (length M/2 - 1) for a row contributing two surfaces.

    ``base`` holds the 2d-3 surfaces from other rows.  Returns (values, tag)
    where tag is None on success, STAT_DEGENERATE or STAT_AMBIGUOUS on
    failure.
    """
    half = m_order // 2
    norm = float(np.linalg.norm(v_row))
    kappas = []
    for j in range(half):
        ct = _slice_point(lifted, base + [j * n_rows + row], m_order)
        if ct is None:
            return None, STAT_DEGENERATE
        z = complex(np.dot(v_row, core.complex_from_tilde(ct)))
        if abs(z) <= TOL_ZERO * norm:
            return None, STAT_DEGENERATE
        kappas.append(_boundary_index(z, m_order))
    pairs = [frozenset({k, (k + 1) % m_order}) for k in kappas]
    if half == 2:
        common = pairs[0] & pairs[1]
        if len(common) != 1:
            return None, STAT_AMBIGUOUS
        return [next(iter(common))], None
    commons = [pairs[j] & pairs[(j + 1) % half] for j in range(half)]
    empty = [j for j, c in enumerate(commons) if not c]
    if len(empty) != 1 or any(len(c) > 1 for c in commons):
        return None, STAT_AMBIGUOUS
    start = (empty[0] + 1) % half
    return [next(iter(commons[(start + t) % half])) for t in range(half - 1)], None


def resolve_combo(lifted, v, combo, m_order, w, u, s, vt):
    """Resolve one accepted combination given its stage-1 factorization.

    Returns (tag, base_exponents, pair_rows, pair_values); tag is None on
    success or one of the STAT_* failure codes.
    """
    n_rows = v.shape[0]
    k = len(combo)
    origins = [int(i) % n_rows for i in combo]
    count = {}
    for n in origins:
        count[n] = count.get(n, 0) + 1
    c_v = core.complex_from_tilde(w)
    z_all = v @ c_v
    norms = np.linalg.norm(v, axis=1)
    exps = np.zeros(n_rows, dtype=np.int64)
    for n in range(n_rows):
        if n in count:
            continue
        if abs(z_all[n]) <= TOL_ZERO * norms[n]:
            return STAT_DEGENERATE, None, None, None
        exps[n] = core.decision_from_product(complex(z_all[n]), m_order)
    for slot in range(k):
        n = origins[slot]
        if count[n] != 1:
            continue
        if abs(z_all[n]) <= TOL_ZERO * norms[n]:
            return STAT_DEGENERATE, None, None, None
        b2 = vt[:k].T @ (u[slot] / s)
        val = _resolve_single(v[n], w, b2, complex(z_all[n]), m_order)
        if val is None:
            return STAT_DEGENERATE, None, None, None
        exps[n] = val
    pair_rows = sorted(n for n, c in count.items() if c == 2)
    pair_values = []
    for n in pair_rows:
        base = [int(i) for i in combo if i % n_rows != n]
        vals, tag = _resolve_pair(lifted, v[n], base, n, m_order, n_rows)
        if vals is None:
            return tag, None, None, None
        pair_values.append(vals)
    return None, exps, pair_rows, pair_values


def process_chunk(lifted, v, combos, m_order):
    """Run the full construction on a block of combinations.

    Parameters
    ----------
    lifted : (M*N/2, 2d) float array from :func:`lift_rows`
    v : (N, d) complex matrix (first d columns of the problem matrix)
    combos : (B, 2d-1) integer array of sorted surface index combinations
    m_order : even alphabet order M

    Returns
    -------
    exps : (E, N) int16 canonical exponent vectors
    combo_ix : (E,) int64 index into ``combos`` of the producing combination
    cell_ix : (E,) int32 1-based cell index within the combination
    stats : length-3 int64 array [degenerate, rejected, ambiguity_failures]
    """
    combos = np.asarray(combos, dtype=np.int64)
    n_rows = v.shape[0]
    stats = np.zeros(3, dtype=np.int64)
    if combos.size == 0:
        return (np.empty((0, n_rows), dtype=np.int16), np.empty(0, dtype=np.int64),
                np.empty(0, dtype=np.int32), stats)

    a = lifted[combos]  # (B, 2d-1, 2d)
    u_all, sig, vt_all = np.linalg.svd(a, full_matrices=True)
    null = vt_all[:, -1, :]
    degenerate = sig[:, -1] <= TOL_RANK * sig[:, 0]
    win = math.pi / m_order + core.RANGE_SLACK
    th_pos = np.arctan2(null[:, -2], null[:, -1])
    th_neg = np.arctan2(-null[:, -2], -null[:, -1])
    in_pos = (th_pos > -win) & (th_pos <= win)
    in_neg = (th_neg > -win) & (th_neg <= win)
    accept = ~degenerate & (in_pos | in_neg)
    stats[STAT_DEGENERATE] += int(np.count_nonzero(degenerate))
    stats[STAT_REJECTED] += int(np.count_nonzero(~degenerate & ~in_pos & ~in_neg))

    out_exps, out_combo, out_cell = [], [], []
    for b in np.nonzero(accept)[0]:
        w = null[b] if in_pos[b] else -null[b]
        tag, exps, pair_rows, pair_values = resolve_combo(
            lifted, v, combos[b], m_order, w, u_all[b], sig[b], vt_all[b])
        if tag is not None:
            stats[tag] += 1
            continue
        q = 0
        for choice in itertools.product(*pair_values) if pair_rows else ((),):
            q += 1
            e = exps.copy()
            for n, val in zip(pair_rows, choice):
                e[n] = val
            out_exps.append((e - e[0]) % m_order)
            out_combo.append(b)
            out_cell.append(q)
    if not out_exps:
        return (np.empty((0, n_rows), dtype=np.int16), np.empty(0, dtype=np.int64),
                np.empty(0, dtype=np.int32), stats)
    return (np.array(out_exps, dtype=np.int16), np.array(out_combo, dtype=np.int64),
            np.array(out_cell, dtype=np.int32), stats)
