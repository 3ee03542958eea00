# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for the per-combination candidate construction.

Mirrors ``_fallback.process_chunk`` operation for operation; see that module
for the geometry.  One LAPACK dgesdd per combination covers the vertex, the
degeneracy test, and (through the A b = e_slot identity) the null-plane
bases needed by the single-surface rule; only pair rows trigger further
small SVDs.  The main loop releases the GIL so chunks can be processed from
a thread pool with real parallelism.
"""

from libc.math cimport atan2, floor, sin, cos, sqrt, fabs, M_PI
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy

import numpy as np
cimport numpy as cnp
from scipy.linalg.cython_lapack cimport dgesdd

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI
cdef double TOL_RANK = 1e-9
cdef double TOL_ZERO = 1e-12
cdef double TOL_ORIENT = 1e-12
cdef double RANGE_SLACK = 1e-12
cdef double POLE_TOL = 1e-12

cdef enum:
    STAT_DEGENERATE = 0
    STAT_REJECTED = 1
    STAT_AMBIGUOUS = 2
    MAX_DIM = 64  # 2d; ranks beyond 32 are far outside this solver's regime

# generous dgesdd jobz='A' workspace bound for dims up to MAX_DIM
cdef enum:
    LWORK_CAP = 4 * MAX_DIM * MAX_DIM + 8 * MAX_DIM


cdef inline int _decide(double zr, double zi, int m) noexcept nogil:
    cdef double a = atan2(zi, zr)
    cdef int val = <int>floor(a * m / TWO_PI + 0.5)
    val %= m
    if val < 0:
        val += m
    return val


cdef inline int _boundary_index(double zr, double zi, int m) noexcept nogil:
    cdef double a = atan2(zi, zr)
    cdef int val = <int>floor(a * m / TWO_PI)
    val %= m
    if val < 0:
        val += m
    return val


cdef struct SvdWork:
    double *a       # gathered rows; row-major (n, m) == column-major (m, n)
    double *u
    double *vt
    double *s
    double *work
    int *iwork
    int lwork


cdef int _svd_null_tail(SvdWork *ws, int m, int n) noexcept nogil:
    """SVD of the row-major (n, m) matrix in ws.a.  Because that memory is
    the column-major (m, n) transpose, LAPACK's U holds the right singular
    vectors of the row-major matrix as columns (ldu = m) and its VT holds
    the left singular vectors transposed (ldvt = n).  Singular values land
    in ws.s.  Returns LAPACK info."""
    cdef char jobz = b'A'
    cdef int info = 0
    cdef int lda = m, ldu = m, ldvt = n
    dgesdd(&jobz, &m, &n, ws.a, &lda, ws.s, ws.u, &ldu, ws.vt, &ldvt,
           ws.work, &ws.lwork, ws.iwork, &info)
    return info


def process_chunk(double[:, ::1] lifted, double complex[:, ::1] v,
                  cnp.int64_t[:, ::1] combos, int m_order):
    """Drop-in replacement for ``_fallback.process_chunk``."""
    cdef int n_rows = v.shape[0]
    cdef int d = v.shape[1]
    cdef int width = 2 * d          # columns of the lifted matrix
    cdef int k = 2 * d - 1          # combination size
    cdef int half = m_order // 2
    cdef Py_ssize_t n_combos = combos.shape[0]
    cdef int q_max = 1
    cdef int p_cap = k // 2
    cdef int t
    if half > 1:
        for t in range(p_cap):
            q_max *= half - 1
    if q_max < 1:
        q_max = 1
    if width > MAX_DIM:
        raise ValueError("working rank too large for the compiled kernel")

    stats_arr = np.zeros(3, dtype=np.int64)
    if n_combos == 0:
        return (np.empty((0, n_rows), dtype=np.int16),
                np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int32),
                stats_arr)

    out_exps = np.empty((n_combos * q_max, n_rows), dtype=np.int16)
    out_combo = np.empty(n_combos * q_max, dtype=np.int64)
    out_cell = np.empty(n_combos * q_max, dtype=np.int32)
    cdef cnp.int16_t[:, ::1] exps_view = out_exps
    cdef cnp.int64_t[::1] combo_view = out_combo
    cdef cnp.int32_t[::1] cell_view = out_cell
    cdef cnp.int64_t[::1] stats = stats_arr

    cdef SvdWork ws
    ws.lwork = LWORK_CAP
    ws.a = <double *>malloc(sizeof(double) * MAX_DIM * MAX_DIM)
    ws.u = <double *>malloc(sizeof(double) * MAX_DIM * MAX_DIM)
    ws.vt = <double *>malloc(sizeof(double) * MAX_DIM * MAX_DIM)
    ws.s = <double *>malloc(sizeof(double) * MAX_DIM)
    ws.work = <double *>malloc(sizeof(double) * LWORK_CAP)
    ws.iwork = <int *>malloc(sizeof(int) * 8 * MAX_DIM)
    cdef double *wvec = <double *>malloc(sizeof(double) * MAX_DIM)
    cdef double *b2 = <double *>malloc(sizeof(double) * MAX_DIM)
    cdef double *ctbuf = <double *>malloc(sizeof(double) * MAX_DIM)
    cdef int *origin = <int *>malloc(sizeof(int) * k)
    cdef int *rowcount = <int *>malloc(sizeof(int) * n_rows)
    cdef cnp.int64_t *base_exp = <cnp.int64_t *>malloc(
        sizeof(cnp.int64_t) * n_rows)
    cdef int *pair_rows = <int *>malloc(sizeof(int) * (p_cap + 1))
    cdef int *pair_vals = <int *>malloc(sizeof(int) * ((p_cap + 1) * (half + 1)))
    cdef int *kappas = <int *>malloc(sizeof(int) * (half + 1))
    cdef int *commons = <int *>malloc(sizeof(int) * (half + 1))
    cdef double *norms = <double *>malloc(sizeof(double) * n_rows)
    if (ws.a == NULL or ws.u == NULL or ws.vt == NULL or ws.s == NULL or
            ws.work == NULL or ws.iwork == NULL or wvec == NULL or
            b2 == NULL or ctbuf == NULL or origin == NULL or
            rowcount == NULL or base_exp == NULL or pair_rows == NULL or
            pair_vals == NULL or kappas == NULL or commons == NULL or
            norms == NULL):
        free(ws.a); free(ws.u); free(ws.vt); free(ws.s); free(ws.work)
        free(ws.iwork); free(wvec); free(b2); free(ctbuf); free(origin)
        free(rowcount); free(base_exp); free(pair_rows); free(pair_vals)
        free(kappas); free(commons); free(norms)
        raise MemoryError

    cdef Py_ssize_t b, emitted = 0
    cdef int r, c, i, j, n, src, n_pairs, tag
    cdef double th, win, nv, sign, coef
    cdef double sp = sin(M_PI / m_order)
    cdef double cp = cos(M_PI / m_order)
    cdef double complex z, alpha, beta
    cdef double p_r, p_i, q_r, q_i, sweep_z, sweep_t, scale
    cdef int kap, val, q, qq, digit, rem, nc, start, empty_count, empty_pos
    cdef cnp.int64_t e0, ecan

    with nogil:
        for n in range(n_rows):
            nv = 0.0
            for j in range(d):
                nv += (v[n, j].real * v[n, j].real +
                       v[n, j].imag * v[n, j].imag)
            norms[n] = sqrt(nv)
        win = M_PI / m_order + RANGE_SLACK

        for b in range(n_combos):
            # stage 1: vertex factorization of the stacked surface rows
            for r in range(k):
                src = <int>combos[b, r]
                memcpy(ws.a + r * width, &lifted[src, 0],
                       sizeof(double) * width)
            if _svd_null_tail(&ws, width, k) != 0:
                stats[STAT_DEGENERATE] += 1
                continue
            if ws.s[k - 1] <= TOL_RANK * ws.s[0]:
                stats[STAT_DEGENERATE] += 1
                continue
            sign = 1.0
            for c in range(width):
                wvec[c] = ws.u[(width - 1) * width + c]
            th = atan2(wvec[width - 2], wvec[width - 1])
            if not (-win < th <= win):
                th = atan2(-wvec[width - 2], -wvec[width - 1])
                if not (-win < th <= win):
                    stats[STAT_REJECTED] += 1
                    continue
                for c in range(width):
                    wvec[c] = -wvec[c]

            # classify rows by participation count
            for n in range(n_rows):
                rowcount[n] = 0
            for r in range(k):
                origin[r] = <int>(combos[b, r] % n_rows)
                rowcount[origin[r]] += 1

            tag = -1
            # rule (i): unambiguous rows decided at the vertex
            for n in range(n_rows):
                if rowcount[n] != 0:
                    continue
                z = 0
                for j in range(d):
                    z += v[n, j] * (wvec[2 * j + 1] + 1j * wvec[2 * j])
                if sqrt(z.real * z.real + z.imag * z.imag) <= TOL_ZERO * norms[n]:
                    tag = STAT_DEGENERATE
                    break
                base_exp[n] = _decide(z.real, z.imag, m_order)
            if tag >= 0:
                stats[tag] += 1
                continue

            # rule (ii): rows with one participating surface; the boundary
            # ambiguity resolves toward the sweep orientation of arg(z)
            # along the curve cut out by the other surfaces.  The second
            # in-plane direction comes from the stage-1 factors: with
            # A = U diag(s) V1^T, the vector V1 (U[slot,:]/s) maps to
            # e_slot, hence is orthogonal to every other surface row.
            for r in range(k):
                n = origin[r]
                if rowcount[n] != 1:
                    continue
                z = 0
                for j in range(d):
                    z += v[n, j] * (wvec[2 * j + 1] + 1j * wvec[2 * j])
                if sqrt(z.real * z.real + z.imag * z.imag) <= TOL_ZERO * norms[n]:
                    tag = STAT_DEGENERATE
                    break
                for c in range(width):
                    b2[c] = 0.0
                for j in range(k):
                    # A-left-vector row r, component j, over sigma_j
                    coef = ws.vt[j + r * k] / ws.s[j]
                    for c in range(width):
                        b2[c] += ws.u[j * width + c] * coef
                alpha = 0
                beta = 0
                for j in range(d):
                    alpha += v[n, j] * (wvec[2 * j + 1] + 1j * wvec[2 * j])
                    beta += v[n, j] * (b2[2 * j + 1] + 1j * b2[2 * j])
                sweep_z = alpha.real * beta.imag - alpha.imag * beta.real
                p_r = wvec[width - 1]
                p_i = wvec[width - 2]
                q_r = b2[width - 1]
                q_i = b2[width - 2]
                sweep_t = p_r * q_i - p_i * q_r
                scale = sqrt((alpha.real * alpha.real + alpha.imag * alpha.imag)
                             * (beta.real * beta.real + beta.imag * beta.imag))
                if fabs(sweep_z) <= TOL_ORIENT * scale:
                    tag = STAT_DEGENERATE
                    break
                scale = sqrt((p_r * p_r + p_i * p_i) * (q_r * q_r + q_i * q_i))
                if fabs(sweep_t) <= TOL_ORIENT * scale:
                    tag = STAT_DEGENERATE
                    break
                kap = _boundary_index(z.real, z.imag, m_order)
                if sweep_z * sweep_t > 0:
                    base_exp[n] = (kap + 1) % m_order
                else:
                    base_exp[n] = kap
            if tag >= 0:
                stats[tag] += 1
                continue

            # rule (iii): rows with a participating pair of surfaces; read
            # the interior decisions between consecutive rotated boundaries
            # on the slice last-angle = pi/M
            n_pairs = 0
            for n in range(n_rows):
                if rowcount[n] != 2:
                    continue
                for qq in range(half):
                    i = 0
                    for c in range(k):
                        if origin[c] == n:
                            continue
                        src = <int>combos[b, c]
                        for j in range(width - 2):
                            ws.a[i * k + j] = lifted[src, j]
                        ws.a[i * k + width - 2] = (sp * lifted[src, width - 2]
                                                   + cp * lifted[src, width - 1])
                        i += 1
                    src = qq * n_rows + n
                    for j in range(width - 2):
                        ws.a[i * k + j] = lifted[src, j]
                    ws.a[i * k + width - 2] = (sp * lifted[src, width - 2]
                                               + cp * lifted[src, width - 1])
                    i += 1
                    if _svd_null_tail(&ws, k, i) != 0 or \
                            ws.s[i - 1] <= TOL_RANK * ws.s[0]:
                        tag = STAT_DEGENERATE
                        break
                    for c in range(k):
                        wvec[c] = ws.u[(k - 1) * k + c]
                    sign = 0.0
                    for c in range(k - 1, -1, -1):
                        if fabs(wvec[c]) > POLE_TOL:
                            sign = 1.0 if wvec[c] > 0 else -1.0
                            break
                    if sign < 0:
                        for c in range(k):
                            wvec[c] = -wvec[c]
                    for c in range(width - 2):
                        ctbuf[c] = wvec[c]
                    ctbuf[width - 2] = sp * wvec[width - 2]
                    ctbuf[width - 1] = cp * wvec[width - 2]
                    z = 0
                    for j in range(d):
                        z += v[n, j] * (ctbuf[2 * j + 1] + 1j * ctbuf[2 * j])
                    if sqrt(z.real * z.real + z.imag * z.imag) <= TOL_ZERO * norms[n]:
                        tag = STAT_DEGENERATE
                        break
                    kappas[qq] = _boundary_index(z.real, z.imag, m_order)
                if tag >= 0:
                    break
                if half == 2:
                    val = -1
                    for i in range(2):
                        kap = (kappas[0] + i) % m_order
                        if kap == kappas[1] or kap == (kappas[1] + 1) % m_order:
                            if val >= 0:
                                val = -1
                                break
                            val = kap
                    if val < 0:
                        tag = STAT_AMBIGUOUS
                        break
                    pair_vals[n_pairs * (half - 1)] = val
                else:
                    empty_count = 0
                    empty_pos = -1
                    for qq in range(half):
                        nc = 0
                        val = -1
                        for i in range(2):
                            kap = (kappas[qq] + i) % m_order
                            if kap == kappas[(qq + 1) % half] or \
                                    kap == (kappas[(qq + 1) % half] + 1) % m_order:
                                nc += 1
                                val = kap
                        if nc == 0:
                            empty_count += 1
                            empty_pos = qq
                            commons[qq] = -1
                        elif nc == 1:
                            commons[qq] = val
                        else:
                            empty_count = -m_order  # two shared: malformed
                            break
                    if empty_count != 1:
                        tag = STAT_AMBIGUOUS
                        break
                    start = (empty_pos + 1) % half
                    for i in range(half - 1):
                        pair_vals[n_pairs * (half - 1) + i] = \
                            commons[(start + i) % half]
                pair_rows[n_pairs] = n
                n_pairs += 1
            if tag >= 0:
                stats[tag] += 1
                continue

            # assemble the (M/2-1)^p cell sequences, canonicalized
            q = 1
            for i in range(n_pairs):
                q *= half - 1
            for qq in range(q):
                rem = qq
                for i in range(n_pairs - 1, -1, -1):
                    digit = rem % (half - 1)
                    rem //= half - 1
                    base_exp[pair_rows[i]] = pair_vals[i * (half - 1) + digit]
                e0 = base_exp[0]
                for n in range(n_rows):
                    ecan = (base_exp[n] - e0) % m_order
                    if ecan < 0:
                        ecan += m_order
                    exps_view[emitted, n] = <cnp.int16_t>ecan
                combo_view[emitted] = b
                cell_view[emitted] = qq + 1
                emitted += 1

    free(ws.a); free(ws.u); free(ws.vt); free(ws.s); free(ws.work)
    free(ws.iwork); free(wvec); free(b2); free(ctbuf); free(origin)
    free(rowcount); free(base_exp); free(pair_rows); free(pair_vals)
    free(kappas); free(commons); free(norms)
    return (out_exps[:emitted].copy(), out_combo[:emitted].copy(),
            out_cell[:emitted].copy(), stats_arr)


def combo_chunk(int n_surfaces, int size, int n_rows, cnp.int64_t[::1] state,
                cnp.int64_t[:, ::1] out, bint representatives_only):
    """Fill ``out`` with successive lexicographic index combinations.

    ``state`` holds [started_flag, c_0, ..., c_{size-1}] and is advanced in
    place.  Combinations with three surfaces from one row are always
    dropped; with ``representatives_only`` every same-row pair must be the
    rotation pair (0, 1), which deduplicates pair classes that share their
    vertex and cells.  Returns the number of rows written (less than the
    capacity of ``out`` exactly when the stream is exhausted).
    """
    cdef Py_ssize_t cap = out.shape[0]
    cdef Py_ssize_t filled = 0
    cdef int i, j, n, nc
    cdef bint ok
    cdef cnp.int64_t *cur = &state[1]
    if state[0] == 0:
        if size > n_surfaces:
            return 0
        for i in range(size):
            cur[i] = i
        state[0] = 1
    elif state[0] == 2:
        return 0
    with nogil:
        while filled < cap:
            # per-row multiplicity and pair-representative screening
            ok = True
            for i in range(size):
                n = <int>(cur[i] % n_rows)
                nc = 1
                for j in range(size):
                    if j != i and <int>(cur[j] % n_rows) == n:
                        nc += 1
                if nc > 2:
                    ok = False
                    break
                if nc == 2 and representatives_only:
                    # indices are sorted, so the pair is (k1*N+n, k2*N+n)
                    # with k1 < k2; keep only rotations (0, 1)
                    if cur[i] // n_rows > 1:
                        ok = False
                        break
            if ok:
                for i in range(size):
                    out[filled, i] = cur[i]
                filled += 1
            # lexicographic successor
            i = size - 1
            while i >= 0 and cur[i] == n_surfaces - size + i:
                i -= 1
            if i < 0:
                state[0] = 2
                break
            cur[i] += 1
            for j in range(i + 1, size):
                cur[j] = cur[j - 1] + 1
    return filled
