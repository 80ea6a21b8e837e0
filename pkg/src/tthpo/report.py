"""Shared evaluation bookkeeping for the optimizers.

Both optimizers route every objective call through an :class:`Evaluator`,
which owns the per-trial cache (keyed on full grid index tuples), the
distinct/total request counters, the running best record, and the evaluation
history.  The mapping protocol is deliberately dict-shaped so the block
evaluator can also be driven by a plain ``dict`` in tests.

Tie-breaking is everywhere "first seen wins": a new score replaces the best
only when strictly greater, and enumeration orders are fixed (lexicographic
for grid search, row-major block order for TT), so reports are bit-identical
across reruns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .space import GridPoint, SearchSpace, resolve


class ObjectiveFailure(RuntimeError):
    """The objective returned a non-finite score; carries the grid point."""

    def __init__(self, point: GridPoint, score: float):
        self.point = point
        self.score = score
        super().__init__(
            f"objective returned non-finite score {score!r} at indices "
            f"{point.indices} (values {point.values})"
        )


class BudgetExhausted(Exception):
    """Control-flow signal: the distinct-evaluation budget is spent.

    Not an error — optimizers catch it and return the best-so-far report.
    """


class HistoryEntry(NamedTuple):
    eval_index: int  # 1-based count of distinct evaluations so far
    score: float
    point: GridPoint


@dataclass(frozen=True)
class TrialReport:
    """Outcome of one optimizer trial."""

    best_point: GridPoint
    best_score: float
    distinct_evals: int
    total_requests: int
    history: tuple[HistoryEntry, ...]

    def __post_init__(self) -> None:
        if self.distinct_evals > self.total_requests:
            raise ValueError("distinct_evals cannot exceed total_requests")
        if self.history:
            hi = max(e.score for e in self.history)
            if self.best_score != hi:
                raise ValueError(
                    f"best_score {self.best_score} != max history score {hi}"
                )


class Evaluator:
    """Caching, counting, history-recording objective wrapper.

    Parameters
    ----------
    objective:
        Callable mapping a :class:`GridPoint` of ``space`` to a real score
        (the *maximization* orientation — callers negate minimization
        problems before handing them over).
    space:
        The canonical search space; all keys are index tuples in its axis
        order.
    eval_budget:
        Cap on distinct evaluations (cache misses).  A miss beyond the cap
        raises :class:`BudgetExhausted`; hits are always served.
    history_mode:
        ``"full"`` records every distinct evaluation, ``"improvements"``
        only those that raised the running best (for very large scans).
    """

    def __init__(
        self,
        objective: Callable[[GridPoint], float],
        space: SearchSpace,
        eval_budget: int | None = None,
        history_mode: str = "full",
    ):
        if history_mode not in ("full", "improvements"):
            raise ValueError(f"unknown history_mode {history_mode!r}")
        self.objective = objective
        self.space = space
        self.eval_budget = eval_budget
        self.history_mode = history_mode
        self.cache: dict[tuple[int, ...], float] = {}
        self.distinct_evals = 0
        self.total_requests = 0
        self.best_score: float | None = None
        self.best_point: GridPoint | None = None
        self.history: list[HistoryEntry] = []

    # -- dict protocol: `block[key]` / `block[key] = score` ---------------

    def __contains__(self, indices: tuple[int, ...]) -> bool:
        return indices in self.cache

    def __getitem__(self, indices: tuple[int, ...]) -> float:
        if indices in self.cache:
            self.total_requests += 1
            return self.cache[indices]
        if self.eval_budget is not None and self.distinct_evals >= self.eval_budget:
            # A denied request is neither a hit nor an evaluation: uncounted.
            raise BudgetExhausted(
                f"distinct-evaluation budget {self.eval_budget} spent"
            )
        self.total_requests += 1
        raise KeyError(indices)

    def __setitem__(self, indices: tuple[int, ...], score: float) -> None:
        score = float(score)
        point = resolve(self.space, indices)
        if not math.isfinite(score):
            raise ObjectiveFailure(point, score)
        self.cache[indices] = score
        self.distinct_evals += 1
        improved = self.best_score is None or score > self.best_score
        if improved:
            self.best_score = score
            self.best_point = point
        if self.history_mode == "full" or improved:
            self.history.append(HistoryEntry(self.distinct_evals, score, point))

    # -- convenience ------------------------------------------------------

    def evaluate(self, indices: tuple[int, ...]) -> float:
        """Request one grid point, evaluating on a cache miss."""
        indices = tuple(int(i) for i in indices)
        try:
            return self[indices]
        except KeyError:
            score = float(self.objective(resolve(self.space, indices)))
            self[indices] = score
            return score

    def absorb_batch(self, flat_start: int, scores: np.ndarray) -> None:
        """Account for a vectorized scan chunk.

        ``scores`` are the objective values of the lexicographic grid points
        ``flat_start .. flat_start+len(scores)`` (none previously seen — the
        batched path is only used for full scans without repeats).
        """
        if flat_start != self.distinct_evals:
            raise RuntimeError(
                "batched scans must be contiguous from a fresh evaluator"
            )
        scores = np.asarray(scores, dtype=np.float64)
        if scores.size == 0:
            return
        if not np.all(np.isfinite(scores)):
            bad = int(np.flatnonzero(~np.isfinite(scores))[0])
            indices = np.unravel_index(flat_start + bad, self.space.shape)
            point = resolve(self.space, tuple(int(i) for i in indices))
            raise ObjectiveFailure(point, float(scores[bad]))
        m = len(scores)
        prev = -math.inf if self.best_score is None else self.best_score
        running = np.maximum.accumulate(scores)
        rose = np.r_[True, running[1:] > running[:-1]] & (running > prev)
        record_all = self.history_mode == "full"
        positions = range(m) if record_all else [int(p) for p in np.flatnonzero(rose)]
        for pos in positions:
            flat = flat_start + int(pos)
            indices = tuple(
                int(i) for i in np.unravel_index(flat, self.space.shape)
            )
            point = resolve(self.space, indices)
            score = float(scores[pos])
            if rose[pos]:
                self.best_score = score
                self.best_point = point
            self.history.append(HistoryEntry(flat + 1, score, point))
        self.distinct_evals += m
        self.total_requests += m

    def report(self) -> TrialReport:
        if self.best_point is None or self.best_score is None:
            raise RuntimeError("no evaluations were performed")
        return TrialReport(
            best_point=self.best_point,
            best_score=self.best_score,
            distinct_evals=self.distinct_evals,
            total_requests=self.total_requests,
            history=tuple(self.history),
        )
