"""Error-normalised least squares, Subspace Pursuit and group trimming."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InvalidSparsityError, UnderdeterminedError
from .fourier_system import Dictionary, StackedSystem

log = logging.getLogger(__name__)

SCALE_FLOOR = 1e-300
RANK_TOL = 1e-10
SP_MAX_ITER = 50
SP_STAGNATION = 1e-12
DEFAULT_TRIM = 0.08


@dataclass(frozen=True)
class ScaleSet:
    """Per-column noise scales ``s`` and the right-hand-side scale ``s_b``."""

    s: np.ndarray
    s_b: float
    diagnostics: tuple = ()


def compute_scales(stacked: StackedSystem, dictionary: Dictionary) -> ScaleSet:
    """Leading-order noise sensitivity of each feature on the stacked ``u_t`` core system.

    A power ``beta > 1`` feature is scaled by ``beta`` times the mean magnitude of
    the ``(alpha, beta - 1)`` column; other features use their own column.
    """
    if stacked.n_rows == 0:
        raise UnderdeterminedError("scales need a non-empty stacked system")
    mean_abs = np.mean(np.abs(stacked.rows), axis=0)
    s = np.empty(len(dictionary))
    for l, (a, b) in enumerate(dictionary.entries):
        lower = dictionary.get(a, b - 1) if b > 1 else None
        s[l] = b * mean_abs[lower] if lower is not None else mean_abs[l]
    diags = []
    tiny = np.flatnonzero(s < SCALE_FLOOR)
    if tiny.size:
        diags.append("zero scale floored for " + ", ".join(dictionary.names[i] for i in tiny))
        log.debug(diags[-1])
    s = np.maximum(s, SCALE_FLOOR)
    s_b = max(float(np.mean(np.abs(stacked.rhs))), SCALE_FLOOR)
    return ScaleSet(s, s_b, tuple(diags))


def qr_lstsq(A: np.ndarray, y: np.ndarray, rank_tol: float = RANK_TOL):
    """Least squares by column-pivoted QR.

    Columns whose pivot falls below ``rank_tol`` times the leading pivot get a
    zero coefficient.  Returns ``(x, dropped_columns)``.
    """
    n = A.shape[1]
    x = np.zeros(n)
    if n == 0:
        return x, np.array([], dtype=int)
    Q, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0:
        return x, np.arange(n)
    r = int(np.sum(diag > rank_tol * diag[0]))
    z = scipy.linalg.solve_triangular(R[:r, :r], Q[:, :r].T @ y)
    x[piv[:r]] = z
    return x, np.sort(piv[r:])


def normalized_least_squares(stacked: StackedSystem, scales: ScaleSet, support) -> np.ndarray:
    """Fit on ``support`` after dividing columns by ``s`` and the rhs by ``s_b``, then undo.

    Returns a length-L coefficient vector, zero off the support.
    """
    support = np.asarray(sorted(support), dtype=int)
    if support.size == 0:
        raise UnderdeterminedError("empty support")
    if stacked.n_rows < support.size:
        raise UnderdeterminedError(
            f"{stacked.n_rows} rows cannot determine {support.size} coefficients"
        )
    A = stacked.rows[:, support] / scales.s[support]
    y = stacked.rhs / scales.s_b
    c_tilde, dropped = qr_lstsq(A, y)
    if dropped.size:
        log.debug("rank-deficient columns dropped: %s", support[dropped].tolist())
    c = np.zeros(stacked.rows.shape[1])
    c[support] = c_tilde * scales.s_b / scales.s[support]
    return c


def _top_k(values: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest entries; ties go to the lower index."""
    order = np.argsort(-values, kind="stable")
    return np.sort(order[:k])


def _ls_on(A, y, cols):
    x, _ = qr_lstsq(A[:, cols], y)
    return x


def subspace_pursuit(A: np.ndarray, y: np.ndarray, k: int,
                     max_iter: int = SP_MAX_ITER, tol: float = SP_STAGNATION) -> np.ndarray:
    """k-sparse support by Subspace Pursuit on unit-norm columns ``A``.

    Returns the sorted support indices.
    """
    n_rows, L = A.shape
    if not 1 <= k <= L or k > n_rows:
        raise InvalidSparsityError(f"sparsity {k} invalid for a {n_rows}x{L} system")
    support = _top_k(np.abs(A.T @ y), k)
    x = _ls_on(A, y, support)
    resid = y - A[:, support] @ x
    rnorm = np.linalg.norm(resid)
    for _ in range(max_iter):
        merged = np.union1d(support, _top_k(np.abs(A.T @ resid), k))
        x_merged = _ls_on(A, y, merged)
        candidate = merged[_top_k(np.abs(x_merged), k)]
        x_new = _ls_on(A, y, candidate)
        resid_new = y - A[:, candidate] @ x_new
        rnorm_new = np.linalg.norm(resid_new)
        if rnorm_new >= rnorm - tol * max(rnorm, 1.0):
            break
        support, resid, rnorm = candidate, resid_new, rnorm_new
    return support


def normalize_columns(A: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(A, axis=0)
    return A / np.where(norms > 0, norms, 1.0)


def contribution_scores(coefficients: np.ndarray, stacked: StackedSystem, support) -> np.ndarray:
    """``|c_l| * ||column l||_2`` for each ``l`` in ``support`` (raw, not normalised)."""
    support = np.asarray(support, dtype=int)
    return np.abs(coefficients[support]) * np.linalg.norm(stacked.rows[:, support], axis=0)


def group_trim(support, scores, threshold: float = DEFAULT_TRIM):
    """Drop the low-scoring group whose cumulative share of the total stays below ``threshold``.

    Returns the remaining support (sorted).  The top-scoring feature is always kept.
    """
    support = np.asarray(support, dtype=int)
    scores = np.asarray(scores, dtype=np.float64)
    total = scores.sum()
    if support.size <= 1 or total <= 0:
        return support
    order = np.argsort(scores, kind="stable")
    share = np.cumsum(scores[order]) / total
    k_max = int(np.sum(share < threshold))
    if k_max == 0:
        return support
    cutoff = scores[order[k_max - 1]]
    remove = scores <= cutoff
    remove[order[-1]] = False
    return np.sort(support[~remove])


@dataclass
class SupportSet:
    """Support found for one requested sparsity, with the trimming history."""

    indices: tuple
    sparsity_requested: int
    trim_iterations: int = 0
    initial: tuple = ()
    trace: list = field(default_factory=list)  # (support, raw scores) per trimming pass

    def __len__(self):
        return len(self.indices)


def trim_to_convergence(stacked: StackedSystem, scales: ScaleSet, initial,
                        threshold: float = DEFAULT_TRIM, k: int | None = None) -> SupportSet:
    """Alternate error-normalised refits and group trimming until the support is fixed."""
    support = np.asarray(sorted(initial), dtype=int)
    k = k if k is not None else support.size
    result = SupportSet(tuple(support.tolist()), k, 0, tuple(support.tolist()))
    for _ in range(max(k, 1)):
        if support.size == 0:
            break
        c = normalized_least_squares(stacked, scales, support)
        scores = contribution_scores(c, stacked, support)
        result.trace.append((tuple(support.tolist()), scores.tolist()))
        trimmed = group_trim(support, scores, threshold)
        if np.array_equal(trimmed, support):
            break
        support = trimmed
        result.trim_iterations += 1
    result.indices = tuple(support.tolist())
    return result
