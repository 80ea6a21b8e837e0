"""TT optimizer tests.

The oracle for small spaces is exhaustive enumeration: materialize the full
score tensor and compare the optimizer's best against its true maximum.
"""

import itertools
import math

import numpy as np
import pytest

from tthpo.report import BudgetExhausted, ObjectiveFailure
from tthpo.space import AxisSpec, SearchSpace, resolve
from tthpo.ttopt import (
    RankExceedsAxis,
    TtConfig,
    TtState,
    evaluate_core_block,
    reverse_axes,
    tt_optimize,
)


def make_space(d, n, lower=0.0, upper=1.0):
    return SearchSpace([AxisSpec(f"h{i}", lower, upper, n) for i in range(d)])


def tensor_objective(space, seed):
    """A random dense tensor plus a counting wrapper."""
    rng = np.random.default_rng(seed)
    tensor = rng.normal(size=space.shape)
    calls = []

    def objective(point):
        calls.append(point.indices)
        return float(tensor[point.indices])

    return objective, tensor, calls


def full_maximum(tensor):
    return float(tensor.max())


def counting_bound(cfg, d, n):
    return cfg.sweeps * 2 * (n * cfg.rank + (d - 2) * n * cfg.rank**2)


# ---------------------------------------------------------------- tt_optimize


def test_constant_objective_first_block():
    space = make_space(2, 3)
    cfg = TtConfig(rank=1, sweeps=1, seed=0)
    report = tt_optimize(lambda p: 5.0, space, cfg)
    assert report.best_score == 5.0
    assert all(e.score == 5.0 for e in report.history)
    assert report.distinct_evals >= 1


def test_random_tensor_oracle_success_rate():
    # Full-rank random tensors are the method's worst case: after the initial
    # suffix draw the trajectory is deterministic, so coverage saturates (the
    # sweep state enters a cycle around half the 64 cells) and extra sweeps
    # stop helping.  Observed on this seed ladder: 44/100 at one sweep,
    # 56/100 near saturation at five.  The floors below freeze that
    # behaviour; structured landscapes (see the separable test) are the
    # actual target and stay exact.
    space = make_space(3, 4)
    hits = {1: 0, 5: 0}
    for sweeps in hits:
        for seed in range(100):
            objective, tensor, _ = tensor_objective(space, seed)
            cfg = TtConfig(rank=2, sweeps=sweeps, seed=seed)
            report = tt_optimize(objective, space, cfg)
            if report.best_score == full_maximum(tensor):
                hits[sweeps] += 1
    assert hits[1] >= 40, f"one-sweep exact-max rate collapsed: {hits[1]}/100"
    assert hits[5] >= 50, f"saturated exact-max rate collapsed: {hits[5]}/100"
    assert hits[5] >= hits[1], f"extra sweeps lost ground: {hits}"


def test_separable_exactness():
    # Separable objectives (sum of per-axis terms) must be solved exactly in
    # a single sweep, every seed.
    failures = []
    for trial in range(100):
        rng = np.random.default_rng(trial + 1000)
        d = int(rng.integers(2, 7))
        n = int(rng.integers(2, 9))
        tables = rng.normal(size=(d, n))
        space = make_space(d, n)

        def objective(point, tables=tables):
            return float(sum(t[i] for t, i in zip(tables, point.indices)))

        true_best = float(tables.max(axis=1).sum())
        cfg = TtConfig(rank=min(2, n), sweeps=1, seed=trial)
        report = tt_optimize(objective, space, cfg)
        if not math.isclose(report.best_score, true_best, rel_tol=0, abs_tol=1e-12):
            failures.append((trial, d, n, report.best_score, true_best))
    assert not failures, f"separable misses: {failures[:5]}"


def test_degenerate_equal_sum_columns_recover():
    # Symmetric per-axis tables (v[3] == -v[0], v[2] == -v[1]) make distinct
    # suffixes sum to the same score, so blocks grow duplicate *value*
    # columns even when the index tuples differ.  The volume-driven pick is
    # then arbitrary and used to strand the sweep on the negative branch for
    # good (all randomness is spent on the initial draw).  These seeds are
    # the ones that got stuck before the block-best row was pinned into the
    # fixed set.
    table = np.array([2.0, -1.0, 1.0, -2.0])
    space = make_space(6, 4)

    def objective(point):
        return float(sum(table[i] for i in point.indices))

    for seed in (6, 18, 27, 39, 58, 60, 66, 75):
        report = tt_optimize(objective, space, TtConfig(rank=2, sweeps=2, seed=seed))
        assert report.best_score == 12.0, (seed, report.best_score)


def test_budget_caps_distinct_exactly():
    # A 32-evaluation cap on the d=3, n=4, r=2 sweep still recovers the
    # separable optimum on every seed: the block-best retention keeps the
    # incumbent row in play, so truncation only trims the tail of the sweep.
    table = np.array([2.0, -1.0, 1.0, -2.0])
    space = make_space(3, 4)

    def objective(point):
        return float(sum(table[i] for i in point.indices))

    for seed in range(100):
        cfg = TtConfig(rank=2, sweeps=1, seed=seed, eval_budget=32)
        report = tt_optimize(objective, space, cfg)
        assert report.distinct_evals <= 32
        assert report.best_score == 6.0, (seed, report.best_score)


def test_counting_bound_and_cache_soundness():
    space = make_space(4, 5)
    for sweeps in (1, 2, 3):
        objective, _, calls = tensor_objective(space, seed=7)
        cfg = TtConfig(rank=2, sweeps=sweeps, seed=11)
        report = tt_optimize(objective, space, cfg)
        assert report.distinct_evals <= counting_bound(cfg, 4, 5)
        assert report.distinct_evals <= report.total_requests
        # cache soundness: the raw objective ran once per distinct point
        assert len(calls) == report.distinct_evals
        assert len(set(calls)) == len(calls)


def test_determinism_bit_identical():
    space = make_space(3, 4)
    objective, _, _ = tensor_objective(space, seed=3)
    cfg = TtConfig(rank=2, sweeps=2, seed=42)
    a = tt_optimize(objective, space, cfg)
    b = tt_optimize(objective, space, cfg)
    assert a == b


def test_seed_changes_trajectory():
    space = make_space(3, 4)
    objective, _, _ = tensor_objective(space, seed=3)
    reports = {
        tt_optimize(objective, space, TtConfig(rank=2, sweeps=1, seed=s)).history
        for s in range(6)
    }
    assert len(reports) > 1  # different suffix draws explore differently


def test_history_monotone_running_best():
    space = make_space(4, 4)
    objective, _, _ = tensor_objective(space, seed=9)
    report = tt_optimize(objective, space, TtConfig(rank=2, sweeps=2, seed=1))
    running = -math.inf
    for entry in report.history:
        running = max(running, entry.score)
    assert running == report.best_score
    assert [e.eval_index for e in report.history] == list(
        range(1, report.distinct_evals + 1)
    )


def test_budget_stops_gracefully():
    space = make_space(5, 4)
    objective, _, calls = tensor_objective(space, seed=5)
    cfg = TtConfig(rank=2, sweeps=3, seed=2, eval_budget=20)
    report = tt_optimize(objective, space, cfg)
    assert report.distinct_evals == 20
    assert len(calls) == 20
    assert report.best_score == max(e.score for e in report.history)


def test_rank_exceeds_axis():
    space = make_space(3, 2)
    with pytest.raises(RankExceedsAxis):
        tt_optimize(lambda p: 0.0, space, TtConfig(rank=3, seed=0))


def test_objective_failure_identifies_point():
    space = make_space(2, 3)

    def objective(point):
        if point.indices == (1, 1):
            return float("nan")
        return 1.0

    with pytest.raises(ObjectiveFailure) as err:
        # Scan enough of the space to hit (1, 1): use grid-like rank.
        tt_optimize(objective, space, TtConfig(rank=3, sweeps=2, seed=1))
    assert err.value.point.indices == (1, 1)


def test_d1_exhaustive_scan():
    space = make_space(1, 7)
    report = tt_optimize(lambda p: p.values[0], space, TtConfig(rank=2, seed=0))
    assert report.distinct_evals == 7
    assert report.best_point.indices == (6,)
    capped = tt_optimize(
        lambda p: p.values[0], space, TtConfig(rank=2, seed=0, eval_budget=3)
    )
    assert capped.distinct_evals == 3


def test_config_validation():
    with pytest.raises(ValueError):
        TtConfig(rank=0)
    with pytest.raises(ValueError):
        TtConfig(sweeps=0)
    with pytest.raises(ValueError):
        TtConfig(eval_budget=1, rank=2)
    with pytest.raises(ValueError):
        TtConfig(seed=-1)


# ------------------------------------------------- evaluate_core_block state


def test_core1_block_shape_and_requests():
    space = make_space(3, 4)
    state = TtState(
        core=1,
        direction="right",
        sweep_index=1,
        half_sweep_index=1,
        left_sets=[],
        right_sets=[(0, 0), (1, 2)],
    )
    calls = []
    cache = {}

    def objective(point):
        calls.append(point.indices)
        return float(sum(point.indices))

    block = evaluate_core_block(state, space, objective, cache)
    assert block.data.shape == (4, 2)
    assert len(calls) == 8
    assert block.row_labels == tuple((i,) for i in range(4))
    # Entry check: row i, column j is the objective at (i,) + suffix_j.
    assert block.data[2, 1] == 2 + 1 + 2


def test_inner_core_block_shape():
    space = make_space(3, 4)
    state = TtState(
        core=2,
        direction="right",
        sweep_index=1,
        half_sweep_index=1,
        left_sets=[(0,), (3,)],
        right_sets=[(1,), (2,)],
    )
    cache = {}
    block = evaluate_core_block(state, space, lambda p: 1.0, cache)
    assert block.data.shape == (8, 2)
    assert len(cache) == 16
    assert block.row_labels[0] == (0, 0)
    assert block.row_labels[-1] == (3, 3)


def test_repeated_block_is_free():
    space = make_space(3, 4)
    state = TtState(
        core=1,
        direction="right",
        sweep_index=1,
        half_sweep_index=1,
        left_sets=[],
        right_sets=[(0, 0), (1, 2)],
    )
    calls = []
    cache = {}

    def objective(point):
        calls.append(1)
        return 0.5

    first = evaluate_core_block(state, space, objective, cache)
    before = len(calls)
    second = evaluate_core_block(state, space, objective, cache)
    assert len(calls) == before  # all cache hits
    assert np.array_equal(first.data, second.data)


def test_reverse_axes_round_trip():
    space = make_space(3, 4)
    state = TtState(
        core=3,
        direction="right",
        sweep_index=1,
        half_sweep_index=1,
        left_sets=[(0, 2), (3, 1)],
        right_sets=[],
        best_score=0.7,
        best_point=resolve(space, (0, 2, 1)),
    )
    flipped, flipped_space = reverse_axes(state, space)
    assert flipped.core == 1
    assert flipped.direction == "left"
    assert flipped.half_sweep_index == 2
    assert flipped.right_sets == [(2, 0), (1, 3)]
    assert flipped.best_score == 0.7
    assert [a.name for a in flipped_space.axes] == ["h2", "h1", "h0"]

    # A point's resolved values are preserved under relabeling.
    pt = resolve(space, (0, 2, 1))
    pt_rev = resolve(flipped_space, (1, 2, 0))
    assert pt.values == tuple(reversed(pt_rev.values))

    # Completing the mirror half-sweep and reversing again restores order
    # and bumps the sweep counter.
    flipped.core = 3
    flipped.left_sets = [(1, 1), (0, 2)]
    back, back_space = reverse_axes(flipped, flipped_space)
    assert back_space == space
    assert back.direction == "right"
    assert back.sweep_index == 2
    assert back.half_sweep_index == 1


def test_reverse_axes_requires_finished_half_sweep():
    space = make_space(3, 4)
    state = TtState(
        core=2, direction="right", sweep_index=1, half_sweep_index=1
    )
    with pytest.raises(ValueError):
        reverse_axes(state, space)
