"""Dynamic-programming alignment that maximizes cumulative affinity.

Conventions
-----------
A path is an (L, 2) integer array of 0-based (i, j) index pairs.  It starts
at (0, 0), ends at (t_A - 1, t_B - 1), and consecutive pairs differ by one
of the moves (1, 1), (1, 0), (0, 1), so L >= max(t_A, t_B).

When several predecessors of a cell tie on cumulative score, backtracking
prefers the diagonal (i-1, j-1), then (i-1, j), then (i, j-1).  This makes
the output deterministic and returns the main diagonal for an identity
affinity matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatchError, NonFiniteError, TooLargeError

BRUTE_FORCE_MAX = 10

# Tie-break priority of the move *into* a cell: diagonal, then row advance,
# then column advance.
_MOVE_PRIORITY = {(1, 1): 2, (1, 0): 1, (0, 1): 0}


@dataclass
class Alignment:
    """A warping path plus its cumulative (un-normalized) affinity."""

    path: np.ndarray  # (L, 2) int64, 0-based
    raw_score: float
    shape: tuple[int, int]  # (t_A, t_B) of the aligned grid

    @property
    def length(self) -> int:
        """Number of aligned index pairs (the alignment length t_AB)."""
        return self.path.shape[0]

    def path_matrix(self) -> np.ndarray:
        """The 0/1 indicator matrix Y with Y[i, j] = 1 iff (i, j) is aligned."""
        y = np.zeros(self.shape, dtype=np.float64)
        y[self.path[:, 0], self.path[:, 1]] = 1.0
        return y


def affinity_matrix(a, b, metric: np.ndarray) -> np.ndarray:
    """Pairwise affinity a_i^T M b_j between all moments of two series.

    `a` and `b` are TimeSeries; `metric` is the d x d matrix M.
    """
    metric = np.asarray(metric, dtype=np.float64)
    if metric.ndim != 2 or metric.shape[0] != metric.shape[1]:
        raise DimMismatchError(f"metric must be square, got shape {metric.shape}")
    if a.dim != b.dim or a.dim != metric.shape[0]:
        raise DimMismatchError(
            f"dims disagree: series {a.dim} vs {b.dim}, metric {metric.shape[0]}"
        )
    if not np.all(np.isfinite(metric)):
        raise NonFiniteError("metric contains non-finite entries")
    return a.values @ metric @ b.values.T


def _check_affinities(c) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] < 1 or c.shape[1] < 1:
        raise DimMismatchError(f"affinity matrix must be non-empty 2-D, got {c.shape}")
    if not np.all(np.isfinite(c)):
        raise NonFiniteError("affinity matrix contains non-finite entries")
    return c


def dtw_align(affinities) -> Alignment:
    """Best monotone warping path by total affinity, O(t_A * t_B).

    Returns the globally maximal cumulative score; the path is reconstructed
    by backtracking with the module's deterministic tie-break.
    """
    c = _check_affinities(affinities)
    ta, tb = c.shape
    rows = c.tolist()
    score = [[0.0] * tb for _ in range(ta)]
    s0 = score[0]
    s0[0] = rows[0][0]
    for j in range(1, tb):
        s0[j] = s0[j - 1] + rows[0][j]
    for i in range(1, ta):
        prev, cur, crow = score[i - 1], score[i], rows[i]
        cur[0] = prev[0] + crow[0]
        for j in range(1, tb):
            best = prev[j - 1]
            if prev[j] > best:
                best = prev[j]
            if cur[j - 1] > best:
                best = cur[j - 1]
            cur[j] = best + crow[j]

    # Backtrack; on ties prefer diagonal, then (i-1, j), then (i, j-1).
    i, j = ta - 1, tb - 1
    rev = [(i, j)]
    while i > 0 or j > 0:
        if i == 0:
            j -= 1
        elif j == 0:
            i -= 1
        else:
            diag, up, left = score[i - 1][j - 1], score[i - 1][j], score[i][j - 1]
            best = max(diag, up, left)
            if diag == best:
                i, j = i - 1, j - 1
            elif up == best:
                i -= 1
            else:
                j -= 1
        rev.append((i, j))
    path = np.array(rev[::-1], dtype=np.int64)
    return Alignment(path, float(score[ta - 1][tb - 1]), (ta, tb))


def brute_force_align(affinities) -> Alignment:
    """Exhaustive alignment oracle; same tie-break order as `dtw_align`.

    Enumerates every monotone path, so it is only feasible for small grids
    (guarded at t_A, t_B <= 10).
    """
    c = _check_affinities(affinities)
    ta, tb = c.shape
    if ta > BRUTE_FORCE_MAX or tb > BRUTE_FORCE_MAX:
        raise TooLargeError(
            f"brute force limited to {BRUTE_FORCE_MAX} x {BRUTE_FORCE_MAX}, got {ta} x {tb}"
        )
    rows = c.tolist()

    best = None  # (score, reversed-move-priority key, path)
    stack = [((0, 0), rows[0][0], [(0, 0)], [])]
    while stack:
        (i, j), total, path, moves = stack.pop()
        if i == ta - 1 and j == tb - 1:
            key = (total, tuple(_MOVE_PRIORITY[m] for m in reversed(moves)))
            if best is None or key > best[0]:
                best = (key, path)
            continue
        for move in ((1, 1), (1, 0), (0, 1)):
            ni, nj = i + move[0], j + move[1]
            if ni < ta and nj < tb:
                stack.append(
                    ((ni, nj), total + rows[ni][nj], path + [(ni, nj)], moves + [move])
                )
    (score, _), path = best
    return Alignment(np.array(path, dtype=np.int64), float(score), (ta, tb))
