"""Boundary-surface arrangement: lifting, combination enumeration,
intersection vertices, ambiguity resolution, and the candidate set.

The candidate set S(V) is built rank by rank: for each d = 1..D and each
combination of 2d-1 boundary surfaces (at most two per matrix row), the
intersection vertex contributes the sequences of its adjacent cells.  The
union over all ranks, deduplicated on canonical exponent vectors, provably
contains the maximizer of ||V^H s||^2.
"""

import itertools
import json
import math
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field

import numpy as np

from . import _backend, _fallback, core
from .core import DEGENERATE, REJECTED

TOL_RANK = _fallback.TOL_RANK

DEFAULT_CHUNK = 8192


@dataclass
class LiftedMatrix:
    """Real boundary matrix with row provenance.

    Row k*N + n holds the interleaved real/imag parts of row n of V rotated
    by exp(-j*pi*(2k+1)/M); each such row defines one decision boundary.
    """

    data: np.ndarray
    m_order: int
    n_rows: int
    rank: int

    @property
    def n_surfaces(self):
        return self.data.shape[0]

    def origin(self, index):
        """(source row, rotation index) of a surface index."""
        return index % self.n_rows, index // self.n_rows

    def surfaces_of_row(self, row):
        """All M/2 surface indices that originate from one matrix row."""
        return [k * self.n_rows + row for k in range(self.m_order // 2)]


def lift(V, m_order):
    """Build the (M*N/2) x 2d boundary matrix for the first d columns of V."""
    V = np.asarray(V, dtype=complex)
    if V.ndim != 2:
        raise ValueError("V must be a 2-D matrix")
    if np.any(np.all(V == 0, axis=1)):
        raise ValueError("V must have no all-zero rows")
    data = _fallback.lift_rows(V, m_order)
    return LiftedMatrix(data=data, m_order=m_order, n_rows=V.shape[0],
                        rank=V.shape[1])


def combination_stream(n_rows, rank, m_order):
    """All size-(2*rank - 1) surface index subsets with at most two surfaces
    per source row, in lexicographic order."""
    for chunk in _combo_chunks(n_rows, rank, m_order, DEFAULT_CHUNK):
        for row in chunk:
            yield tuple(int(i) for i in row)


def _combo_chunks(n_rows, rank, m_order, chunk_size, representatives_only=False):
    """Stream lexicographic combinations as int64 arrays.

    Subsets with three or more surfaces from one row are always dropped (no
    vertex exists there).  With ``representatives_only`` a same-row pair is
    kept only as its rotation-(0, 1) representative: by the common-axis
    property every pair choice from one row shares the vertex and its
    cells, so the other choices would only produce duplicates.
    """
    size = 2 * rank - 1
    n_surfaces = (m_order // 2) * n_rows
    if size > n_surfaces:
        return
    if _backend._kernel is not None:
        gen = _backend._kernel.combo_chunk
        state = np.zeros(size + 1, dtype=np.int64)
        while True:
            out = np.empty((chunk_size, size), dtype=np.int64)
            filled = gen(n_surfaces, size, n_rows, state, out,
                         representatives_only)
            if filled:
                yield out[:filled]
            if filled < chunk_size:
                return
    it = itertools.combinations(range(n_surfaces), size)
    while True:
        block = list(itertools.islice(it, chunk_size))
        if not block:
            return
        arr = np.asarray(block, dtype=np.int64)
        keep = np.ones(len(arr), dtype=bool)
        if size >= 2:
            origins = arr % n_rows
            rotations = arr // n_rows
            for i, j in itertools.combinations(range(size), 2):
                same = origins[:, i] == origins[:, j]
                if size >= 3:
                    for l in range(j + 1, size):
                        keep &= ~(same & (origins[:, j] == origins[:, l]))
                if representatives_only:
                    keep &= ~(same & (rotations[:, j] > 1))
        arr = arr[keep]
        if len(arr):
            yield arr


def intersection_point(lifted, combo):
    """Vertex angles of the given surface combination.

    Returns the angle vector when the surfaces meet at a single point whose
    last angle lies in (-pi/M, pi/M]; REJECTED when the unique intersection
    falls outside that range; DEGENERATE when the stacked rows are
    rank-deficient (uncountably many intersections, no cell vertex).
    """
    w = _fallback.vertex_null_vector(lifted.data, tuple(combo), lifted.m_order)
    if w is REJECTED or w is DEGENERATE:
        return w
    return _angles_from_tilde(w)


def _angles_from_tilde(w):
    phi = np.empty(len(w) - 1)
    phi[:-1] = core.phi_cascade(w)[:-1]
    if math.hypot(w[-2], w[-1]) < core.POLE_TOL:
        phi[-1] = 0.0
    else:
        phi[-1] = math.atan2(w[-2], w[-1])
    return phi


def restricted_intersection(lifted, rows):
    """Intersection of the given 2d-2 surfaces with the hyperplane
    last-angle = pi/M, as a full angle vector ending in pi/M.

    Returns DEGENERATE on rank drop and REJECTED if the reduced coordinates
    leave (-pi/2, pi/2] (possible only at parameterization poles).
    """
    ct = _fallback._slice_point(lifted.data, list(rows), lifted.m_order)
    if ct is None:
        return DEGENERATE
    phi = np.empty(lifted.data.shape[1] - 1)
    phi[:-1] = core.phi_cascade(ct)[:-1]
    phi[-1] = math.pi / lifted.m_order
    bound = math.pi / 2 + core.RANGE_SLACK
    if np.any(phi[:-1] <= -bound) or np.any(phi[:-1] > bound):
        return REJECTED
    return phi


def ambiguity_pair(v_row, phi, m_order, tol=1e-6):
    """The two adjacent alphabet exponents tied at a boundary point.

    ``phi`` must place the row statistic z = v_row . c(phi) on one of the
    row's decision boundaries (within ``tol`` radians); the returned pair is
    (k, k+1 mod M) for boundary ray pi*(2k+1)/M.
    """
    z = complex(np.dot(np.asarray(v_row), core.c_complex(phi)))
    if abs(z) == 0:
        raise ValueError("ambiguity undefined: projected statistic is zero")
    a = math.atan2(z.imag, z.real)
    k = int(math.floor(a * m_order / core.TWO_PI)) % m_order
    ray = math.pi * (2 * k + 1) / m_order
    off = (a - ray + math.pi) % core.TWO_PI - math.pi
    if abs(off) > tol:
        raise ValueError(
            f"statistic with phase {a:.6f} is not on a decision boundary")
    return (k, (k + 1) % m_order)


@dataclass
class CellCandidate:
    """One candidate sequence with the geometry that produced it."""

    exponents: np.ndarray
    rank: int
    indices: tuple
    cell: int
    vertex: np.ndarray


class AmbiguityResolutionError(RuntimeError):
    """Consecutive boundary ambiguity sets failed to overlap as expected;
    indicates a tolerance failure or a degenerate input."""


def candidates_for(V, lifted, combo):
    """Candidate sequences of all cells led by one combination's vertex.

    Reference implementation used for verification; the enumeration entry
    point below runs the same construction through a batch backend.  Returns
    an empty list when a sub-intersection is degenerate (the combination is
    skipped conservatively); raises AmbiguityResolutionError on an
    inconsistent ambiguity structure and ValueError if the vertex itself is
    not a valid cell vertex.
    """
    V = np.asarray(V, dtype=complex)
    combo = tuple(int(i) for i in combo)
    w, u, s, vt = _fallback.stage1(lifted.data, combo, lifted.m_order)
    if w is REJECTED or w is DEGENERATE:
        raise ValueError(f"combination {combo} has no in-range vertex: {w!r}")
    tag, exps, pair_rows, pair_values = _fallback.resolve_combo(
        lifted.data, V[:, :lifted.rank], combo, lifted.m_order, w, u, s, vt)
    if tag == _fallback.STAT_AMBIGUOUS:
        raise AmbiguityResolutionError(
            f"ambiguity sets of combination {combo} do not chain")
    if tag is not None:
        return []
    vertex = _angles_from_tilde(w)
    out = []
    q = 0
    for choice in itertools.product(*pair_values) if pair_rows else ((),):
        q += 1
        e = exps.copy()
        for n, val in zip(pair_rows, choice):
            e[n] = val
        out.append(CellCandidate(
            exponents=core.canonicalize(e, lifted.m_order), rank=lifted.rank,
            indices=combo, cell=q, vertex=vertex))
    return out


@dataclass
class CandidateSet:
    """Deduplicated candidate collection with per-rank tallies."""

    members: dict
    rank_counts: dict
    n_rows: int
    m_order: int
    degenerate_skips: int = 0
    rejected: int = 0
    ambiguity_failures: int = 0
    combos_examined: int = 0

    def __len__(self):
        return len(self.members)

    def __contains__(self, exponents):
        key = np.asarray(exponents, dtype=np.int16).tobytes()
        return key in self.members

    def exponent_array(self):
        """All canonical members as one (|S|, N) int array, sorted."""
        rows = sorted(np.frombuffer(k, dtype=np.int16) for k in self.members)
        return np.array(rows, dtype=np.int64).reshape(len(self.members),
                                                      self.n_rows)

    def records(self):
        """Deterministically ordered dump records."""
        for key in sorted(self.members):
            rank, indices, cell = self.members[key]
            yield {
                "exponents": np.frombuffer(key, dtype=np.int16).tolist(),
                "rank": rank,
                "indices": list(indices),
                "cell": cell,
            }


def _run_chunks(V, m_order, workers, backend, chunk_size, fold):
    """Drive the backend over every rank and combination chunk.

    ``fold(rank, exps, combo_arr, combo_ix, cell_ix)`` consumes one result
    block; folds must be order-independent.  Returns aggregate statistics.
    """
    V = np.asarray(V, dtype=complex)
    _, process = _backend.get_backend(backend)
    n_rows, rank_max = V.shape
    stats_total = np.zeros(3, dtype=np.int64)
    combos_total = 0

    def tasks():
        for d in range(1, rank_max + 1):
            vd = np.ascontiguousarray(V[:, :d])
            lifted = _fallback.lift_rows(vd, m_order)
            half_cells = max(1, (m_order // 2 - 1) ** (d - 1))
            size = chunk_size or max(256, DEFAULT_CHUNK // half_cells)
            for arr in _combo_chunks(n_rows, d, m_order, size,
                                     representatives_only=True):
                yield d, lifted, vd, arr

    if workers <= 1:
        for d, lifted, vd, arr in tasks():
            exps, combo_ix, cell_ix, stats = process(lifted, vd, arr, m_order)
            stats_total += stats
            combos_total += len(arr)
            fold(d, exps, arr, combo_ix, cell_ix)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pending = {}
            for task in tasks():
                d, lifted, vd, arr = task
                fut = pool.submit(process, lifted, vd, arr, m_order)
                pending[fut] = (d, arr)
                if len(pending) >= 2 * workers:
                    done, _ = wait(pending, return_when=FIRST_COMPLETED)
                    for fut in done:
                        d_done, arr_done = pending.pop(fut)
                        exps, combo_ix, cell_ix, stats = fut.result()
                        stats_total += stats
                        combos_total += len(arr_done)
                        fold(d_done, exps, arr_done, combo_ix, cell_ix)
            for fut, (d_done, arr_done) in pending.items():
                exps, combo_ix, cell_ix, stats = fut.result()
                stats_total += stats
                combos_total += len(arr_done)
                fold(d_done, exps, arr_done, combo_ix, cell_ix)
    return stats_total, combos_total


def enumerate_candidates(V, m_order, workers=1, backend=None, chunk_size=None):
    """Construct the full candidate set S(V) for a preprocessed matrix.

    V must have no all-zero rows and 1 <= D <= N.  Candidates are collected
    per rank d = 1..D over the first d columns, deduplicated exactly on
    canonical exponent vectors; each member keeps the lexicographically
    smallest (rank, combination, cell) provenance so results are identical
    for any worker count.
    """
    V = np.asarray(V, dtype=complex)
    _validate_problem(V, m_order)
    members = {}
    rank_keys = {d: set() for d in range(1, V.shape[1] + 1)}

    def fold(d, exps, combo_arr, combo_ix, cell_ix):
        seen = rank_keys[d]
        for row, b, q in zip(exps, combo_ix, cell_ix):
            key = row.tobytes()
            seen.add(key)
            prov = (d, tuple(int(i) for i in combo_arr[b]), int(q))
            old = members.get(key)
            if old is None or prov < old:
                members[key] = prov

    stats, combos_total = _run_chunks(V, m_order, workers, backend,
                                      chunk_size, fold)
    return CandidateSet(
        members=members,
        rank_counts={d: len(keys) for d, keys in rank_keys.items()},
        n_rows=V.shape[0], m_order=m_order,
        degenerate_skips=int(stats[_fallback.STAT_DEGENERATE]),
        rejected=int(stats[_fallback.STAT_REJECTED]),
        ambiguity_failures=int(stats[_fallback.STAT_AMBIGUOUS]),
        combos_examined=combos_total)


def search_best(V, m_order, metric_matrix, workers=1, backend=None,
                chunk_size=None):
    """Enumerate candidates keeping only the metric maximizer.

    Memory stays proportional to the number of distinct candidates (one
    hash key each); the metric is evaluated against ``metric_matrix`` with a
    batch-shape-independent accumulation so the reduction is bit-identical
    for any worker count.  Ties resolve to the lexicographically smallest
    canonical exponent vector.

    Returns (value, exponents, n_distinct, rank_counts, stats_dict).
    """
    V = np.asarray(V, dtype=complex)
    _validate_problem(V, m_order)
    mc = np.asarray(metric_matrix, dtype=complex).conj()
    seen = set()
    rank_keys = {d: set() for d in range(1, V.shape[1] + 1)}
    best = [-1.0, None]  # value, key

    def fold(d, exps, combo_arr, combo_ix, cell_ix):
        if not len(exps):
            return
        keys = [row.tobytes() for row in exps]
        rank_keys[d].update(keys)
        fresh = [i for i, key in enumerate(keys) if key not in seen]
        if not fresh:
            return
        seen.update(keys[i] for i in fresh)
        block = exps[fresh]
        values = _metric_rows(block, mc, m_order)
        for i, val in enumerate(values):
            key = keys[fresh[i]]
            if val > best[0] or (val == best[0] and key < best[1]):
                best[0] = float(val)
                best[1] = key
    stats, combos_total = _run_chunks(V, m_order, workers, backend,
                                      chunk_size, fold)
    if best[1] is None:
        raise RuntimeError("no candidate produced; input is fully degenerate "
                           "(consider solve(..., jitter=True))")
    exponents = np.frombuffer(best[1], dtype=np.int16).astype(np.int64)
    info = {
        "degenerate_skips": int(stats[_fallback.STAT_DEGENERATE]),
        "rejected": int(stats[_fallback.STAT_REJECTED]),
        "ambiguity_failures": int(stats[_fallback.STAT_AMBIGUOUS]),
        "combos_examined": combos_total,
    }
    return (best[0], exponents, len(seen),
            {d: len(k) for d, k in rank_keys.items()}, info)


def _metric_rows(exps, v_conj, m_order):
    """||V^H s||^2 per exponent row, accumulated row-by-row over the matrix
    so the result does not depend on how candidates were batched."""
    s = np.exp(2j * math.pi * exps.astype(np.float64) / m_order)
    g = np.zeros((len(exps), v_conj.shape[1]), dtype=complex)
    for n in range(v_conj.shape[0]):
        g += s[:, n:n + 1] * v_conj[n]
    return (g.real ** 2 + g.imag ** 2).sum(axis=1)


def _validate_problem(V, m_order):
    if m_order < 2 or m_order % 2:
        raise ValueError("alphabet order must be even and >= 2")
    n, d = V.shape
    if not 1 <= d <= n:
        raise ValueError(f"need 1 <= rank <= rows, got {d} and {n}")
    if np.any(np.all(V == 0, axis=1)):
        raise ValueError("V must have no all-zero rows (preprocess first)")


def cardinality_formula(n_rows, rank, m_order):
    """Exact size of the candidate set for a generic N x D matrix.

    Double sum over working rank and the number of participating same-row
    surface pairs; 0**0 counts as 1.  Exact integer arithmetic throughout.
    """
    if m_order < 2 or m_order % 2:
        raise ValueError("alphabet order must be even and >= 2")
    if not 1 <= rank <= n_rows:
        raise ValueError("need 1 <= rank <= n_rows")
    half = m_order // 2
    total = 0
    for d in range(1, rank + 1):
        for i in range(d):
            total += (math.comb(n_rows, i)
                      * math.comb(n_rows - i, 2 * (d - i) - 1)
                      * half ** (2 * (d - i) - 2)
                      * (half - 1) ** i)
    return total


def write_candidate_dump(candidate_set, path):
    """Write one JSON record per candidate, deterministically ordered."""
    with open(path, "w") as fh:
        for rec in candidate_set.records():
            fh.write(json.dumps(rec) + "\n")
