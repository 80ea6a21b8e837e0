"""Tensor-train cross-approximation search over a discretized space.

The optimizer treats the objective as a d-dimensional tensor (one axis per
hyperparameter, n grid values each) and never materializes it.  Instead it
sweeps core by core: at core c it evaluates the block of scores indexed by
(fixed left combination, value of axis c) x (fixed right combination), asks
maxvol which rows to keep, and moves on.  After the last core the axis order
is reversed and the mirror half-sweep runs; right + left half-sweeps form one
full sweep, and the r combinations fixed at the end of each half-sweep seed
the next one, so randomness enters only through the initial right-hand draw.

The search MAXIMIZES its objective.  Minimization problems are negated by the
caller (see the harness), which keeps the best-record update a literal
"is this score greater" test.

Cost: each half-sweep requests n*r entries at the first core and n*r^2 at
each of the d-2 inner cores, so distinct evaluations are bounded by
sweeps * 2 * (n*r + (d-2)*n*r^2) — linear in d for fixed n, r — and the
cross-sweep cache usually keeps them well below that.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, MutableMapping

import numpy as np

from .maxvol import DEFAULT_MAX_ITERS, DEFAULT_TOL, RowSelection, ScoreMatrix, maxvol
from .report import BudgetExhausted, Evaluator, ObjectiveFailure, TrialReport
from .space import GridPoint, SearchSpace, resolve


class RankExceedsAxis(ValueError):
    """rank > points on some axis: maxvol cannot pick rank distinct rows."""


@dataclass(frozen=True)
class TtConfig:
    """Knobs of one TT run.

    ``rank`` is the number of index combinations carried between cores (r);
    ``sweeps`` the number of full (right+left) sweeps; ``seed`` feeds the
    initial random suffix draw; ``eval_budget`` optionally caps distinct
    objective evaluations; the maxvol pair is passed through to row
    selection.
    """

    rank: int = 2
    sweeps: int = 1
    seed: int = 0
    eval_budget: int | None = None
    maxvol_tol: float = DEFAULT_TOL
    maxvol_max_iters: int = DEFAULT_MAX_ITERS
    history_mode: str = "full"

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be >= 1, got {self.sweeps}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.eval_budget is not None and self.eval_budget < self.rank:
            raise ValueError(
                f"eval_budget ({self.eval_budget}) must be >= rank ({self.rank})"
            )


@dataclass
class TtState:
    """Sweep state between blocks.

    ``left_sets`` are the r index prefixes fixed over axes 1..core-1 (empty
    before the first core); ``right_sets`` the r index suffixes over axes
    core+1..d.  Both are expressed in the CURRENT axis order, which reverses
    after every half-sweep; ``direction`` says which orientation is live.
    The best record is kept in the original axis order throughout.
    """

    core: int
    direction: str  # "right" | "left"
    sweep_index: int
    half_sweep_index: int
    left_sets: list[tuple[int, ...]] = field(default_factory=list)
    right_sets: list[tuple[int, ...]] = field(default_factory=list)
    best_point: GridPoint | None = None
    best_score: float | None = None


def evaluate_core_block(
    state: TtState,
    space: SearchSpace,
    objective: Callable[[GridPoint], float],
    cache: MutableMapping[tuple[int, ...], float],
) -> ScoreMatrix:
    """Evaluate the score block at the current core.

    Rows are (left combination, axis-``core`` value) pairs in left-major
    order — n rows at the first core, n*r at inner cores; columns follow
    ``state.right_sets``.  Every entry is first looked up in ``cache`` and
    only evaluated (then stored) on a miss, so a repeated call is free.
    Row labels carry the full index prefix each row fixes (axes 1..core).

    ``objective`` and ``cache`` work in the coordinates of ``space``; the
    optimizer passes wrappers that translate to the original axis order
    during reversed half-sweeps.
    """
    n = space.axes[state.core - 1].points
    prefixes = state.left_sets if state.core > 1 else [()]
    suffixes = state.right_sets
    data = np.empty((len(prefixes) * n, len(suffixes)), dtype=np.float64)
    labels = []
    row = 0
    for prefix in prefixes:
        for i in range(n):
            head = prefix + (i,)
            labels.append(head)
            for j, suffix in enumerate(suffixes):
                key = head + suffix
                try:
                    value = cache[key]
                except KeyError:
                    value = float(objective(resolve(space, key)))
                    cache[key] = value
                data[row, j] = value
            row += 1
    return ScoreMatrix(data, row_labels=tuple(labels))


def reverse_axes(state: TtState, space: SearchSpace) -> tuple[TtState, SearchSpace]:
    """Flip the axis order at the end of a half-sweep.

    The r left combinations fixed by the final core become, read in the new
    axis order, the suffix sets over new axes 2..d, and the core pointer
    returns to 1.  Resolved hyperparameter values are unchanged — only the
    labeling moves — so the best record carries over untouched.
    """
    if state.core != space.d:
        raise ValueError(
            f"reverse_axes expects a finished half-sweep (core == d == {space.d}), "
            f"got core {state.core}"
        )
    new_right = [tuple(reversed(p)) for p in state.left_sets]
    if state.half_sweep_index == 1:
        half, sweep = 2, state.sweep_index
    else:
        half, sweep = 1, state.sweep_index + 1
    return (
        TtState(
            core=1,
            direction="left" if state.direction == "right" else "right",
            sweep_index=sweep,
            half_sweep_index=half,
            left_sets=[],
            right_sets=new_right,
            best_point=state.best_point,
            best_score=state.best_score,
        ),
        space.reversed_axes(),
    )


def _draw_suffixes(
    rng: np.random.Generator, space: SearchSpace, rank: int
) -> list[tuple[int, ...]]:
    # Uniform without replacement over index tuples of axes 2..d; collisions
    # are redrawn.  Guarded by the rank <= min(points) check, the suffix
    # space always holds at least `rank` distinct tuples.
    shape = [a.points for a in space.axes[1:]]
    seen: set[tuple[int, ...]] = set()
    out: list[tuple[int, ...]] = []
    while len(out) < rank:
        t = tuple(int(rng.integers(p)) for p in shape)
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out


def _retain_block_best(block: ScoreMatrix, picked: list[int]) -> list[int]:
    """Keep the row holding the block maximum in the fixed set.

    Volume-maximizing selection gravitates to large magnitudes, not large
    values, and on degenerate blocks (duplicate column values — common when
    restricted suffix sets collide or sum equally) its choice is arbitrary.
    Either way it can drop the row the best-record just came from, and since
    all randomness is spent on the initial draw, a dropped branch may never
    be revisited.  Substituting the block-best row for the least-promising
    pick (smallest row maximum, lowest index on ties) keeps the incumbent
    alive through every core, which is what makes separable landscapes exact
    at any rank.
    """
    best_row = int(np.argmax(block.data)) // block.cols
    if best_row not in picked:
        row_peak = block.data.max(axis=1)
        drop = min(range(len(picked)), key=lambda t: (row_peak[picked[t]], t))
        picked[drop] = best_row
    return picked


class _Flipped:
    """Cache/objective adapters translating reversed coordinates."""

    def __init__(self, ev: Evaluator, flipped: bool):
        self._ev = ev
        self._flipped = flipped

    def _canon(self, key: tuple[int, ...]) -> tuple[int, ...]:
        return key[::-1] if self._flipped else key

    def __getitem__(self, key: tuple[int, ...]) -> float:
        return self._ev[self._canon(key)]

    def __setitem__(self, key: tuple[int, ...], value: float) -> None:
        self._ev[self._canon(key)] = value

    def objective(self, point: GridPoint) -> float:
        # The evaluator's __setitem__ does the real scoring bookkeeping; the
        # user objective itself is invoked here, in original coordinates.
        return self._ev.objective(
            resolve(self._ev.space, self._canon(point.indices))
        )


def tt_optimize(
    objective: Callable[[GridPoint], float],
    space: SearchSpace,
    cfg: TtConfig,
) -> TrialReport:
    """Run the full TT cross-approximation search; returns the trial report.

    Raises
    ------
    RankExceedsAxis
        If ``cfg.rank`` exceeds the point count of some axis (d >= 2 only).
    ObjectiveFailure
        If the objective ever returns a non-finite score.
    """
    ev = Evaluator(
        objective, space, eval_budget=cfg.eval_budget, history_mode=cfg.history_mode
    )

    if space.d == 1:
        # Degenerate chain: exhaustive scan of the single axis.
        try:
            for i in range(space.axes[0].points):
                ev.evaluate((i,))
        except BudgetExhausted:
            pass
        return ev.report()

    min_points = min(a.points for a in space.axes)
    if cfg.rank > min_points:
        raise RankExceedsAxis(
            f"rank {cfg.rank} exceeds the smallest axis point count {min_points}"
        )

    rng = np.random.default_rng(cfg.seed)
    state = TtState(
        core=1,
        direction="right",
        sweep_index=1,
        half_sweep_index=1,
        left_sets=[],
        right_sets=_draw_suffixes(rng, space, cfg.rank),
    )
    current = space
    flipped = False
    try:
        for _ in range(2 * cfg.sweeps):
            view = _Flipped(ev, flipped)
            while state.core < current.d:
                block = evaluate_core_block(state, current, view.objective, view)
                selection = maxvol(block, cfg.maxvol_tol, cfg.maxvol_max_iters)
                picked = _retain_block_best(block, list(selection.picked))
                state.left_sets = [block.row_labels[i] for i in picked]
                state.right_sets = [s[1:] for s in state.right_sets]
                state.core += 1
                state.best_score = ev.best_score
                state.best_point = ev.best_point
            state, current = reverse_axes(state, current)
            flipped = not flipped
    except BudgetExhausted:
        # Entries already scored are in the record; stop gracefully.
        pass
    return ev.report()
