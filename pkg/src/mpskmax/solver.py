"""End-to-end exact solve, the exhaustive oracle, and rank-scalable solving."""

import math
from dataclasses import dataclass

import numpy as np

from . import arrangement, core

# singular values below this times the largest are treated as zero when
# computing the effective rank
RANK_TOL = 1e-10

ORACLE_BUDGET = 10_000_000
_ORACLE_CHUNK = 1 << 16


class BudgetExceededError(RuntimeError):
    """Exhaustive search would exceed the configured sequence budget."""


@dataclass(eq=False)
class SolveResult:
    sequence: np.ndarray
    value: float
    candidates_examined: int
    degenerate_skips: int
    effective_rank: int

    def __eq__(self, other):
        if not isinstance(other, SolveResult):
            return NotImplemented
        return (np.array_equal(self.sequence, other.sequence)
                and self.value == other.value
                and self.candidates_examined == other.candidates_examined
                and self.degenerate_skips == other.degenerate_skips
                and self.effective_rank == other.effective_rank)


@dataclass
class Preprocessed:
    matrix: np.ndarray
    zero_rows: list
    effective_rank: int


def _as_problem_matrix(V):
    V = np.asarray(V, dtype=complex)
    if V.ndim != 2 or V.size == 0:
        raise ValueError("V must be a nonempty 2-D matrix")
    if not np.all(np.isfinite(V.real)) or not np.all(np.isfinite(V.imag)):
        raise ValueError("V must be finite")
    return V


def preprocess(V):
    """Drop all-zero rows and reduce to a full-column-rank factor.

    Zero rows do not affect the maximization; their positions are recorded
    so the solver can reinsert exponent 0 there.  When the column count
    exceeds the numerical rank, V is replaced by the thin SVD factor
    U[:, :r] * sigma[:r], which preserves the Gram matrix V V^H and hence
    the metric.
    """
    V = _as_problem_matrix(V)
    nonzero = ~np.all(V == 0, axis=1)
    zero_rows = [int(i) for i in np.nonzero(~nonzero)[0]]
    V = V[nonzero]
    if V.shape[0] == 0:
        raise ValueError("V has no nonzero rows")
    u, sig, _ = np.linalg.svd(V, full_matrices=False)
    rank = int(np.count_nonzero(sig > RANK_TOL * sig[0]))
    if rank < V.shape[1]:
        V = u[:, :rank] * sig[:rank]
    return Preprocessed(matrix=V, zero_rows=zero_rows, effective_rank=rank)


def working_matrix(V, m_order=None, rank=None):
    """Preprocess V and apply an optional rank cap.

    Returns (v_work, v_metric, zero_rows, effective_rank): the matrix the
    enumeration runs on, the original-column matrix (zero rows dropped) the
    metric is evaluated against, the dropped row positions, and the working
    rank.  With a rank cap below the effective rank, v_work holds the
    strongest principal components scaled by their singular values.
    """
    V = _as_problem_matrix(V)
    pre = preprocess(V)
    v_metric = V[~np.all(V == 0, axis=1)]
    if rank is None or rank >= pre.effective_rank:
        return pre.matrix, v_metric, pre.zero_rows, pre.effective_rank
    if rank < 1:
        raise ValueError("rank must be >= 1")
    u, sig, _ = np.linalg.svd(pre.matrix, full_matrices=False)
    return u[:, :rank] * sig[:rank], v_metric, pre.zero_rows, rank


def solve(V, m_order, rank=None, workers=1, backend=None, jitter=False):
    """Exact maximizer of ||V^H s||^2 over length-N MPSK sequences.

    The candidate set is enumerated on the preprocessed matrix while the
    metric is always evaluated against the original V.  ``rank`` caps the
    working rank: the matrix is then approximated by its strongest principal
    components, which trades exactness for speed (the result is still the
    best candidate under the true metric, and is nondecreasing in ``rank``).
    Metric ties resolve to the lexicographically smallest canonical
    sequence.  ``jitter`` applies a fixed-seed 1e-10 relative perturbation
    before enumeration, a workaround for pathologically degenerate inputs;
    the metric side is unaffected.
    """
    n_raw = _as_problem_matrix(V).shape[0]
    v_work, v_metric, zero_rows, eff = working_matrix(V, m_order, rank)
    if jitter:
        rng = np.random.default_rng(np.random.Philox(key=0x6a6974746572))
        scale = 1e-10 * float(np.abs(v_work).max())
        v_work = v_work + scale * (rng.standard_normal(v_work.shape)
                                   + 1j * rng.standard_normal(v_work.shape))
    value, exps, n_distinct, _, info = arrangement.search_best(
        v_work, m_order, v_metric, workers=workers, backend=backend)
    full = np.zeros(n_raw, dtype=np.int64)
    full[[i for i in range(n_raw) if i not in zero_rows]] = exps
    return SolveResult(sequence=core.canonicalize(full, m_order),
                       value=value,
                       candidates_examined=n_distinct,
                       degenerate_skips=info["degenerate_skips"],
                       effective_rank=eff)


def solve_rank_reduced(V, m_order, d_max, workers=1, backend=None):
    """Exact solve on the best rank-``d_max`` approximation of V.

    Candidate sets nest as the rank grows, so the returned value is
    nondecreasing in ``d_max`` and equals the exact optimum at the full
    effective rank.
    """
    return solve(V, m_order, rank=d_max, workers=workers, backend=backend)


def exhaustive_oracle(V, m_order, budget=ORACLE_BUDGET):
    """Brute-force scan of all M^(N-1) canonical sequences.

    Refuses (BudgetExceededError) when the scan would exceed ``budget``
    sequences.  Same tie-break as :func:`solve`: among equal metrics the
    lexicographically smallest canonical sequence wins, which the ascending
    scan order provides for free.
    """
    V = _as_problem_matrix(V)
    n = V.shape[0]
    total = m_order ** (n - 1)
    if total > budget:
        raise BudgetExceededError(
            f"exhaustive search needs {total} sequences, budget is {budget}")
    vc = V.conj()
    powers = m_order ** np.arange(n - 2, -1, -1, dtype=np.int64) \
        if n > 1 else np.empty(0, dtype=np.int64)
    best_val = -1.0
    best_idx = -1
    for start in range(0, total, _ORACLE_CHUNK):
        idx = np.arange(start, min(start + _ORACLE_CHUNK, total),
                        dtype=np.int64)
        exps = np.zeros((len(idx), n), dtype=np.int64)
        if n > 1:
            exps[:, 1:] = (idx[:, None] // powers) % m_order
        s = np.exp(2j * math.pi * exps / m_order)
        g = s @ vc
        vals = (g.real ** 2 + g.imag ** 2).sum(axis=1)
        k = int(np.argmax(vals))
        if vals[k] > best_val:
            best_val = float(vals[k])
            best_idx = int(idx[k])
    exps = np.zeros(n, dtype=np.int64)
    if n > 1:
        exps[1:] = (best_idx // powers) % m_order
    return SolveResult(sequence=exps, value=best_val,
                       candidates_examined=total, degenerate_skips=0,
                       effective_rank=min(V.shape))
