"""Maximal-volume submatrix selection.

Given a tall matrix M (rows >= cols), find cols row indices whose square
submatrix has (approximately) maximal |det|.  The returned selection carries
the standard dominance certificate: with B = M @ inv(M_sel), every entry of B
satisfies |B_ij| <= 1 + tol.  This is the row-selection engine that drives
tensor-train sweeps: block rows are candidate index-combinations, and the
selected rows become the combinations that survive into the next core.

Deterministic by construction: the initial selection comes from partially
pivoted Gaussian elimination (lowest row index wins ties), and each swap
targets the largest |B_ij| with (row, column) ties broken lowest-first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

#: Ridge added to the selected submatrix diagonal when it is singular,
#: scaled by the largest |entry| so it survives float addition whatever
#: the magnitude of the scores.
RIDGE = 1e-12

#: Default dominance tolerance and swap cap.
DEFAULT_TOL = 0.01
DEFAULT_MAX_ITERS = 100


class RankDeficient(np.linalg.LinAlgError):
    """The selected submatrix cannot be inverted even after ridging."""


@dataclass(frozen=True)
class ScoreMatrix:
    """A dense block of objective scores submitted for row selection.

    ``data`` is rows x cols, row-major; ``row_labels`` names each row with the
    candidate index-combination it was evaluated at (may be empty for plain
    linear-algebra use).
    """

    data: np.ndarray
    row_labels: tuple[tuple[int, ...], ...] = field(default=())

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise ValueError(f"score matrix must be 2-D, got shape {data.shape}")
        rows, cols = data.shape
        if not (rows >= cols >= 1):
            raise ValueError(f"need rows >= cols >= 1, got {rows}x{cols}")
        if not np.all(np.isfinite(data)):
            raise ValueError("score matrix entries must all be finite")
        if self.row_labels and len(self.row_labels) != rows:
            raise ValueError("row_labels length must match row count")
        object.__setattr__(self, "data", data)

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class RowSelection:
    """cols distinct row indices plus the |det| of the submatrix they span.

    ``certified`` is False only when the swap loop hit ``max_iters`` before
    reaching the dominance certificate; the selection is still the best one
    seen (each swap strictly grows the volume).
    """

    picked: tuple[int, ...]
    volume: float
    certified: bool = True


def volume(m: ScoreMatrix, rows: Sequence[int]) -> float:
    """|det| of the square submatrix at the given row indices (singular -> 0)."""
    rows = list(rows)
    if len(rows) != m.cols:
        raise ValueError(f"need exactly {m.cols} rows, got {len(rows)}")
    if len(set(rows)) != len(rows):
        raise ValueError(f"row indices must be distinct, got {rows}")
    for r in rows:
        if not (0 <= r < m.rows):
            raise ValueError(f"row index {r} outside [0, {m.rows})")
    return abs(float(np.linalg.det(m.data[rows])))


def _pivot_rows(a: np.ndarray) -> list[int]:
    # Partially pivoted elimination on a working copy; the pivot row of each
    # column seeds the initial selection.  argmax takes the first (lowest)
    # index on ties.  A zero pivot column contributes the first unused row,
    # leaving singularity to the ridge path in _coefficients.
    work = a.copy()
    n, r = work.shape
    order = list(range(n))
    for k in range(r):
        rel = int(np.argmax(np.abs(work[k:, k])))
        p = k + rel
        if p != k:
            work[[k, p]] = work[[p, k]]
            order[k], order[p] = order[p], order[k]
        if work[k, k] != 0.0:
            factors = work[k + 1 :, k] / work[k, k]
            work[k + 1 :] -= np.outer(factors, work[k])
    return order[:r]


def _coefficients(a: np.ndarray, picked: list[int]) -> np.ndarray:
    # B = A @ inv(A[picked]); singular submatrices get a diagonal ridge.
    sub = a[picked]
    try:
        b = np.linalg.solve(sub.T, a.T).T
        if np.all(np.isfinite(b)):
            return b
    except np.linalg.LinAlgError:
        pass
    ridge = RIDGE * max(1.0, float(np.abs(sub).max()))
    try:
        b = np.linalg.solve(sub.T + ridge * np.eye(len(picked)), a.T).T
    except np.linalg.LinAlgError as exc:
        raise RankDeficient(
            f"selected {len(picked)}x{len(picked)} submatrix is not invertible "
            f"even with ridge {ridge}"
        ) from exc
    if not np.all(np.isfinite(b)):
        raise RankDeficient("coefficient matrix is non-finite after ridging")
    return b


def maxvol(
    m: ScoreMatrix,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
) -> RowSelection:
    """Select ``cols`` rows of near-maximal volume.

    Iterates single-row swaps: find the largest |B_ij|; if it exceeds
    ``1 + tol``, row i replaces the j-th selected row (a strict volume
    increase by that factor), and B is updated with a rank-1 correction.
    Stops when the certificate holds or after ``max_iters`` swaps.
    """
    if tol < 0:
        raise ValueError(f"tol must be >= 0, got {tol}")
    a = m.data
    n, r = a.shape
    if n == r:
        # The only possible selection; B is the identity by construction.
        return RowSelection(picked=tuple(range(r)), volume=volume(m, range(r)))

    picked = _pivot_rows(a)
    b = _coefficients(a, picked)

    # Rows already selected expand to (near-)unit vectors, so the swap search
    # runs over the unselected rows; this also keeps ridge-regularized
    # degenerate blocks from ever selecting the same row twice.
    selected = np.zeros(n, dtype=bool)
    selected[picked] = True

    certified = False
    swaps = 0
    while True:
        abs_b = np.abs(b)
        abs_b[selected] = 0.0
        flat = int(np.argmax(abs_b))  # row-major: lowest row then column wins ties
        i, j = divmod(flat, r)
        if abs_b[i, j] <= 1.0 + tol:
            certified = True
            break
        if swaps >= max_iters:
            break
        # Swap row picked[j] -> i.  b[picked[j]] is the j-th unit vector, so
        # the update b += outer(b[:, j], b[old] - b[i]) / b[i, j] restores
        # B = A @ inv(A[picked]) for the new selection.
        b += np.outer(b[:, j], b[picked[j]] - b[i]) / b[i, j]
        selected[picked[j]] = False
        selected[i] = True
        picked[j] = i
        swaps += 1

    sel = sorted(picked)
    return RowSelection(picked=tuple(sel), volume=volume(m, sel), certified=certified)
