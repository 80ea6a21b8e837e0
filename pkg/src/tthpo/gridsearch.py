"""Exhaustive grid-search baseline.

Visits every grid point in lexicographic index order (first axis slowest),
tracking the running best with first-seen tie-breaking.  An optional budget
caps the number of evaluations, mirroring capped exhaustive scans.

If the objective object exposes ``evaluate_batch(values) -> scores`` the scan
runs vectorized in chunks (same order, same tie-breaking, same report); the
per-point path is the reference implementation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .report import BudgetExhausted, Evaluator, TrialReport
from .space import GridPoint, SearchSpace, grid_values, resolve

_BATCH_CHUNK = 131072


@dataclass(frozen=True)
class GsConfig:
    """Grid-search knobs; ``seed`` is unused and exists for report symmetry."""

    eval_budget: int | None = None
    traversal: str = "lexicographic"
    seed: int = 0
    history_mode: str = "full"

    def __post_init__(self) -> None:
        if self.eval_budget is not None and self.eval_budget < 1:
            raise ValueError(f"eval_budget must be >= 1, got {self.eval_budget}")
        if self.traversal != "lexicographic":
            raise ValueError(f"unsupported traversal {self.traversal!r}")


def grid_optimize(
    objective: Callable[[GridPoint], float],
    space: SearchSpace,
    cfg: GsConfig = GsConfig(),
) -> TrialReport:
    """Scan the grid; returns the best (maximization orientation) and counts.

    distinct_evals == min(prod(points), eval_budget).
    """
    ev = Evaluator(
        objective, space, eval_budget=cfg.eval_budget, history_mode=cfg.history_mode
    )
    batch_fn = getattr(objective, "evaluate_batch", None)
    if batch_fn is not None:
        _scan_batched(ev, batch_fn, space, cfg)
        return ev.report()

    try:
        for indices in itertools.product(*(range(a.points) for a in space.axes)):
            ev.evaluate(indices)
    except BudgetExhausted:
        pass
    return ev.report()


def _scan_batched(ev: Evaluator, batch_fn, space: SearchSpace, cfg: GsConfig) -> None:
    grids = [np.asarray(g, dtype=np.float64) for g in grid_values(space)]
    total = space.size()
    limit = total if cfg.eval_budget is None else min(total, cfg.eval_budget)
    shape = space.shape
    start = 0
    while start < limit:
        stop = min(start + _BATCH_CHUNK, limit)
        flat = np.arange(start, stop, dtype=np.int64)
        multi = np.unravel_index(flat, shape)  # C order == lexicographic
        values = np.column_stack([g[idx] for g, idx in zip(grids, multi)])
        scores = np.asarray(batch_fn(values), dtype=np.float64)
        if scores.shape != (stop - start,):
            raise ValueError(
                f"evaluate_batch returned shape {scores.shape}, "
                f"expected ({stop - start},)"
            )
        ev.absorb_batch(start, scores)
        start = stop
