"""End-to-end acceptance gate: ten release checks, one test per check.

Each test prints one PASS line with its measured numbers (run with
``pytest tests/test_acceptance.py -v -s`` to see them); a failed assertion
turns that check's line red in the -v listing.  The checks:

  1.  grid search recovers the Schwefel grid optimum in exactly 4^3 evals
  2.  TT matches the grid-search optimum 100/100 at d in {3, 6, 10} and its
      worst-case evaluation count grows linearly, not exponentially
  3.  every TT run respects the sweep counting bound
  4.  grid-search best on the Vincent function is d-invariant
  5.  exhaustive search is never worse than TT on random Fletcher-Powell
      instances, and equals brute-force enumeration exactly
  6.  maxvol reaches the brute-force maximal volume and honors its
      dominance certificate
  7.  the statevector layer matches a dense-unitary oracle, parameter-shift
      matches finite differences, outputs and norms behave
  8.  parameter counts of the two model families are exact
  9.  TT tunes the hybrid classifier to within 0.02 of the exhaustive
      optimum at under 40% of the evaluation cost
  10. rerunning a suite reproduces its CSV byte for byte
"""

import itertools
import time

import numpy as np
import pytest

from test_quantum import dense_forward, finite_difference, seeded_config
from test_ttopt import counting_bound

from tthpo import quantum
from tthpo.data import synthetic_cars
from tthpo.gridsearch import GsConfig, grid_optimize
from tthpo.harness import ExperimentConfig, ModelOptions, run_suite
from tthpo.maxvol import ScoreMatrix, maxvol, volume
from tthpo.model import ModelSpec, build, make_accuracy_objective
from tthpo.objectives import make_benchmark
from tthpo.space import AxisSpec, SearchSpace, grid_values
from tthpo.ttopt import TtConfig, tt_optimize

GRID_POINTS = 4
DIMS = (3, 6, 10)
TRIALS = 100
FAST_SCAN = GsConfig(history_mode="improvements")


def _pass(num: int, detail: str) -> None:
    print(f"[{num:2d}/10] PASS {detail}")


def _suite(method, objective, d, trials, params, **kwargs):
    return run_suite(
        ExperimentConfig(
            method=method,
            objective=objective,
            space=make_benchmark(objective, d, seed=0).space(GRID_POINTS),
            method_params=params,
            trials=trials,
            **kwargs,
        )
    )


def _full_grid_chunks(space, chunk=131072):
    """The whole grid as (m, d) value blocks, lexicographic order."""
    grids = [np.asarray(g) for g in grid_values(space)]
    total = space.size()
    out = []
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        multi = np.unravel_index(np.arange(start, stop), space.shape)
        out.append(np.column_stack([g[i] for g, i in zip(grids, multi)]))
    return out


@pytest.fixture(scope="module")
def tt_benchmark_suites():
    """Rank-2 single-sweep TT suites on every benchmark at every dimension."""
    suites = {}
    elapsed = {}
    for objective in ("schwefel", "vincent", "fletcher_powell"):
        started = time.perf_counter()
        for d in DIMS:
            suites[objective, d] = _suite(
                "tt", objective, d, TRIALS, TtConfig(rank=2, sweeps=1)
            )
        elapsed[objective] = time.perf_counter() - started
    return suites, elapsed


def test_01_grid_search_recovers_schwefel_grid_optimum():
    started = time.perf_counter()
    report = _suite("gs", "schwefel", 3, 1, GsConfig())
    elapsed = time.perf_counter() - started
    best = report.rows[0].best_fitness
    assert best == pytest.approx(-541.76, abs=0.5)
    assert report.rows[0].distinct_evals == 64
    assert elapsed < 1.0
    _pass(1, f"schwefel d=3 best {best:.6f} in exactly 64 evals ({elapsed:.2f}s)")


def test_02_tt_matches_grid_search_everywhere_at_linear_cost(tt_benchmark_suites):
    suites, elapsed = tt_benchmark_suites
    started = time.perf_counter()
    gs_best = {}
    gs_evals = {}
    for d in DIMS:
        ref = _suite("gs", "schwefel", d, 1, FAST_SCAN)
        gs_best[d] = ref.rows[0].best_fitness
        gs_evals[d] = ref.rows[0].distinct_evals
    total_elapsed = (time.perf_counter() - started) + elapsed["schwefel"]

    er = {}
    for d in DIMS:
        suite = suites["schwefel", d]
        matches = sum(1 for row in suite.rows if row.best_fitness == gs_best[d])
        assert matches == TRIALS, f"d={d}: only {matches}/{TRIALS} matched GS"
        er[d] = suite.expected_runtime
        assert gs_evals[d] == GRID_POINTS**d  # exhaustive cost is exponential

    # Worst-case TT cost grows linearly: the per-dimension increments agree
    # to within a factor of two, and d=10 stays far below the full grid.
    slope_lo = (er[6] - er[3]) / 3
    slope_hi = (er[10] - er[6]) / 4
    assert slope_lo > 0 and slope_hi > 0
    assert 0.5 <= slope_hi / slope_lo <= 2.0
    assert er[10] < 0.05 * GRID_POINTS**10
    assert total_elapsed < 60.0
    _pass(
        2,
        f"TT==GS 100/100 at d=3,6,10; ER {er[3]}/{er[6]}/{er[10]} vs GS "
        f"64/4096/1048576 ({total_elapsed:.1f}s)",
    )


def test_03_every_tt_run_respects_the_counting_bound(tt_benchmark_suites):
    suites, _ = tt_benchmark_suites
    checked = 0
    cfg = TtConfig(rank=2, sweeps=1)
    for (objective, d), suite in suites.items():
        bound = counting_bound(cfg, d, GRID_POINTS)
        for row in suite.rows:
            assert row.distinct_evals <= bound, (
                f"{objective} d={d} seed={row.seed}: "
                f"{row.distinct_evals} > {bound}"
            )
            checked += 1
    # Spread over other rank/sweep settings too.
    for rank, sweeps in ((1, 1), (3, 1), (2, 2)):
        extra = TtConfig(rank=rank, sweeps=sweeps)
        suite = _suite("tt", "vincent", 6, 10, extra)
        bound = counting_bound(extra, 6, GRID_POINTS)
        for row in suite.rows:
            assert row.distinct_evals <= bound
            checked += 1
    _pass(3, f"{checked} TT runs all within the sweep counting bound")


def test_04_vincent_best_is_dimension_invariant():
    best = {}
    for d in DIMS:
        best[d] = _suite("gs", "vincent", d, 1, FAST_SCAN).rows[0].best_fitness
    spread = max(best.values()) - min(best.values())
    assert spread <= 1e-12
    value = best[3]
    delta = value - (-0.243)
    _pass(
        4,
        f"vincent best {value:.17g} at every d (spread {spread:.1e}); "
        f"delta from -0.243 is {delta:+.2e}",
    )


def test_05_exhaustive_search_bounds_tt_on_random_instances(tt_benchmark_suites):
    suites, _ = tt_benchmark_suites
    for d in DIMS:
        gs = _suite("gs", "fletcher_powell", d, TRIALS, FAST_SCAN)
        tt = suites["fletcher_powell", d]
        assert gs.mean_best <= tt.mean_best + 1e-12, (
            f"d={d}: exhaustive mean {gs.mean_best} worse than TT {tt.mean_best}"
        )
        # Every per-instance result equals independent brute-force enumeration.
        chunks = _full_grid_chunks(make_benchmark("fletcher_powell", d, 0).space(GRID_POINTS))
        for row in gs.rows:
            bench = make_benchmark("fletcher_powell", d, seed=row.seed)
            brute = min(float(bench.evaluate_batch(c).min()) for c in chunks)
            assert row.best_fitness == brute, (
                f"d={d} seed={row.seed}: GS {row.best_fitness} != brute {brute}"
            )
    _pass(5, f"GS mean <= TT mean and GS == brute force on {3 * TRIALS} instances")


def test_06_maxvol_matches_brute_force_and_keeps_its_certificate():
    started = time.perf_counter()
    rng = np.random.default_rng(2024)
    tol = 1e-6
    certified = 0
    optimal = 0
    for _ in range(200):
        cols = int(rng.integers(1, 4))
        rows = int(rng.integers(max(cols, 2), 11))
        data = rng.normal(size=(rows, cols))
        m = ScoreMatrix(data)
        selection = maxvol(m, tol=tol, max_iters=500)
        if not selection.certified:
            continue
        certified += 1
        # Dominance: no entry of A @ inv(A_sel) may exceed 1 + tol.
        coeff = np.linalg.solve(data[list(selection.picked)].T, data.T).T
        assert np.abs(coeff).max() <= 1.0 + tol + 1e-9
        best = max(
            volume(m, combo) for combo in itertools.combinations(range(rows), cols)
        )
        if selection.volume >= best * (1.0 - 1e-9):
            optimal += 1
    elapsed = time.perf_counter() - started
    assert certified > 0
    assert optimal / certified >= 0.99
    assert elapsed < 10.0
    _pass(
        6,
        f"{optimal}/{certified} certified selections hit the brute-force "
        f"max volume ({elapsed:.1f}s)",
    )


def test_07_quantum_layer_matches_oracles():
    worst_forward = 0.0
    worst_norm = 0.0
    worst_grad = 0.0
    for seed in range(50):
        spec, x, theta = seeded_config(seed)
        out = quantum.forward(spec, x, theta)
        worst_forward = max(worst_forward, np.abs(out - dense_forward(spec, x, theta)).max())
        assert np.all(np.abs(out) <= 1.0 + 1e-12)
        psi = quantum._run_circuit(spec, x[np.newaxis, :], theta)
        worst_norm = max(worst_norm, abs(float(np.linalg.norm(psi[0])) - 1.0))
        d_theta, d_x = quantum.gradient(spec, x, theta)
        fd_theta = finite_difference(lambda t: quantum.forward(spec, x, t), theta)
        fd_x = finite_difference(lambda v: quantum.forward(spec, v, theta), x)
        worst_grad = max(
            worst_grad,
            np.abs(d_theta - fd_theta).max(),
            np.abs(d_x - fd_x).max(),
        )
    assert worst_forward <= 1e-10
    assert worst_norm < 1e-10
    assert worst_grad <= 1e-6
    _pass(
        7,
        f"50 configs: |forward - oracle| <= {worst_forward:.1e}, "
        f"norm drift {worst_norm:.1e}, |shift - FD| <= {worst_grad:.1e}",
    )


def test_08_parameter_accounting_is_exact():
    hybrid = ModelSpec(variant="hybrid", n=13, q=4, classes=2, input_dim=512)
    assert hybrid.param_count == 6749
    assert hybrid.variational_count == 52
    assert build(hybrid, seed=0).param_count() == 6749
    classical = ModelSpec(variant="classical", n=16, m=80, classes=2, input_dim=512)
    assert classical.param_count == 9730
    assert build(classical, seed=0).param_count() == 9730
    _pass(8, "hybrid(13,4)->6749 weights/52 variational; classical(16,80)->9730")


def test_09_tt_tunes_the_hybrid_classifier_at_a_fraction_of_the_cost():
    started = time.perf_counter()
    train_data, test_data = synthetic_cars(seed=0)
    space = SearchSpace(
        [
            AxisSpec("n", 4, 6, 3, "integer"),
            AxisSpec("q", 1, 3, 3, "integer"),
            AxisSpec("alpha0", 5e-4, 2e-3, 3),
            AxisSpec("alpha_step", 2, 8, 3, "integer"),
            AxisSpec("alpha_factor", 0.1, 0.2, 3),
        ]
    )
    objective = make_accuracy_objective(
        "hybrid", space, train_data, test_data, epochs=10, batch_size=8
    )
    gs = grid_optimize(objective, space)
    assert gs.distinct_evals == space.size() == 243
    gaps = []
    for seed in (0, 1):
        tt = tt_optimize(objective, space, TtConfig(rank=2, sweeps=1, seed=seed))
        gaps.append(gs.best_score - tt.best_score)
        assert gaps[-1] <= 0.02, f"seed {seed}: accuracy gap {gaps[-1]:.4f}"
        assert tt.distinct_evals < 0.4 * gs.distinct_evals
    elapsed = time.perf_counter() - started
    _pass(
        9,
        f"GS best {gs.best_score:.4f} over 243 configs; TT gaps "
        f"{gaps[0]:.4f}/{gaps[1]:.4f} at <40% of the evals ({elapsed:.0f}s)",
    )


def test_10_suite_reruns_are_byte_identical(tmp_path):
    model_space = SearchSpace(
        [
            AxisSpec("n", 2, 4, 2, "integer"),
            AxisSpec("q", 1, 2, 2, "integer"),
            AxisSpec("alpha0", 5e-4, 2e-3, 2),
            AxisSpec("alpha_step", 2, 8, 2, "integer"),
            AxisSpec("alpha_factor", 0.1, 0.2, 2),
        ]
    )
    configs = {
        "schwefel_tt.csv": ExperimentConfig(
            method="tt",
            objective="schwefel",
            space=make_benchmark("schwefel", 3).space(4),
            method_params=TtConfig(rank=2, sweeps=1),
            trials=5,
        ),
        "fp_gs.csv": ExperimentConfig(
            method="gs",
            objective="fletcher_powell",
            space=make_benchmark("fletcher_powell", 3, 0).space(4),
            method_params=GsConfig(),
            trials=5,
        ),
        "hybrid_tt.csv": ExperimentConfig(
            method="tt",
            objective="model_hybrid",
            space=model_space,
            method_params=TtConfig(rank=1, sweeps=1),
            trials=1,
            model_options=ModelOptions(
                train_rows=32, test_rows=32, input_dim=64, epochs=3
            ),
        ),
    }
    from dataclasses import replace

    for name, cfg in configs.items():
        path = tmp_path / name
        cfg = replace(cfg, output_path=str(path))
        run_suite(cfg)
        first = path.read_bytes()
        run_suite(cfg)
        assert path.read_bytes() == first, f"{name}: rerun differs"
    _pass(10, f"{len(configs)} suites rerun byte-identical")
