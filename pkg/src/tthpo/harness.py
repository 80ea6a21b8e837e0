"""Experiment driver: seeded trial suites, CSV reports, comparisons.

A suite is ``trials`` independent runs of one (method, objective, space)
triple; trial ``t`` is seeded ``base_seed + t``.  Objectives with
randomized instances (Fletcher-Powell) are redrawn from the trial seed,
and the model objectives re-initialize their network from it, so every
row of a suite is reproducible in isolation.

The optimizers maximize.  The benchmark functions are minimization
problems, so they enter negated and their reported ``best_fitness`` is
negated back — reports keep every objective's native sign (benchmark
minima are negative numbers, model accuracies live in [0, 1]).

Reports are CSV with the fixed column set ``trial, seed, method,
objective, d, n, r, best_fitness, distinct_evals, total_requests,
wall_ms``, one row per trial plus a final ``summary`` row (mean fitness,
max distinct evaluations, summed request/wall counters).  Wall times are
only measured when ``record_wall_time`` is set; it defaults to off so
that rerunning a config is byte-identical.  Rows are flushed as they are
produced — an interrupted suite keeps its finished trials.
"""

from __future__ import annotations

import io
import math
import os
import time
from dataclasses import dataclass, replace
from statistics import median
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .data import Dataset, synthetic_cars
from .gridsearch import GsConfig, grid_optimize
from .model import CLASSICAL_AXES, HYBRID_AXES, make_accuracy_objective
from .objectives import BENCHMARK_KINDS, BenchmarkFn, make_benchmark
from .space import GridPoint, SearchSpace
from .ttopt import TtConfig, tt_optimize

CSV_COLUMNS = (
    "trial",
    "seed",
    "method",
    "objective",
    "d",
    "n",
    "r",
    "best_fitness",
    "distinct_evals",
    "total_requests",
    "wall_ms",
)

MODEL_OBJECTIVES = ("model_classical", "model_hybrid")
OBJECTIVES = tuple(sorted(BENCHMARK_KINDS)) + MODEL_OBJECTIVES

OUTPUT_DIR_ENV = "TTHPO_OUTPUT_DIR"


class ConfigInvalid(ValueError):
    """An experiment config failed validation; message names the field."""


class MismatchedExperiments(ValueError):
    """Comparison inputs disagree on objective, dimensions, or grids."""


@dataclass(frozen=True)
class ModelOptions:
    """Fixed (non-searched) settings of the model objectives."""

    data_seed: int = 0
    train_rows: int = 89
    test_rows: int = 88
    input_dim: int = 512
    separation: float = 6.0
    noise: float = 0.05
    epochs: int = 10
    batch_size: int = 8
    classes: int = 2

    def datasets(self) -> tuple[Dataset, Dataset]:
        return synthetic_cars(
            seed=self.data_seed,
            train_rows=self.train_rows,
            test_rows=self.test_rows,
            input_dim=self.input_dim,
            separation=self.separation,
            noise=self.noise,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    method: str
    objective: str
    space: SearchSpace
    method_params: TtConfig | GsConfig
    trials: int = 100
    base_seed: int = 0
    output_path: str | None = None
    record_wall_time: bool = False
    model_options: ModelOptions = ModelOptions()

    def __post_init__(self) -> None:
        if self.method not in ("tt", "gs"):
            raise ConfigInvalid(f"method: must be 'tt' or 'gs', got {self.method!r}")
        if self.objective not in OBJECTIVES:
            raise ConfigInvalid(
                f"objective: must be one of {', '.join(OBJECTIVES)}, "
                f"got {self.objective!r}"
            )
        if self.trials < 1:
            raise ConfigInvalid(f"trials: must be >= 1, got {self.trials}")
        expected = TtConfig if self.method == "tt" else GsConfig
        if not isinstance(self.method_params, expected):
            raise ConfigInvalid(
                f"method_params: {self.method} runs take {expected.__name__}, "
                f"got {type(self.method_params).__name__}"
            )
        if self.objective in BENCHMARK_KINDS:
            probe = make_benchmark(self.objective, self.space.d, seed=0)
            lower, upper = probe.domain
            for axis in self.space.axes:
                if axis.lower < lower or axis.upper > upper:
                    raise ConfigInvalid(
                        f"space: axis {axis.name!r} range [{axis.lower}, "
                        f"{axis.upper}] leaves the {self.objective} domain "
                        f"[{lower}, {upper}]"
                    )
        else:
            required = HYBRID_AXES if self.objective == "model_hybrid" else CLASSICAL_AXES
            names = {a.name for a in self.space.axes}
            if names != set(required):
                raise ConfigInvalid(
                    f"space: {self.objective} searches exactly the axes "
                    f"{', '.join(required)}; got {', '.join(sorted(names))}"
                )


class TrialRow(NamedTuple):
    trial: int
    seed: int
    method: str
    objective: str
    d: int
    n: int
    r: int
    best_fitness: float
    distinct_evals: int
    total_requests: int
    wall_ms: float


@dataclass
class SuiteReport:
    """All trial rows of one suite, with the Table-style aggregates."""

    method: str
    objective: str
    d: int
    n: int
    rank: int
    rows: list[TrialRow]

    @property
    def mean_best(self) -> float:
        return float(np.mean([r.best_fitness for r in self.rows]))

    @property
    def min_best(self) -> float:
        return min(r.best_fitness for r in self.rows)

    @property
    def median_best(self) -> float:
        return float(median(r.best_fitness for r in self.rows))

    @property
    def expected_runtime(self) -> int:
        """ER: the worst-case distinct-evaluation count over the suite."""
        return max(r.distinct_evals for r in self.rows)

    def summary_values(self) -> tuple:
        return (
            "summary",
            self.rows[0].seed if self.rows else 0,
            self.method,
            self.objective,
            self.d,
            self.n,
            self.rank,
            self.mean_best,
            self.expected_runtime,
            sum(r.total_requests for r in self.rows),
            sum(r.wall_ms for r in self.rows),
        )


class _MaximizedBenchmark:
    """Benchmark adapter: negates a minimization objective for the optimizers."""

    def __init__(self, fn: BenchmarkFn):
        self._fn = fn

    def __call__(self, point: GridPoint) -> float:
        return -self._fn(point.values)

    def evaluate_batch(self, values: np.ndarray) -> np.ndarray:
        return -self._fn.evaluate_batch(values)


def _uniform_points(space: SearchSpace) -> int:
    counts = {a.points for a in space.axes}
    return counts.pop() if len(counts) == 1 else 0


def _trial_objective(
    cfg: ExperimentConfig,
    trial_seed: int,
    datasets: tuple[Dataset, Dataset] | None,
) -> Callable[[GridPoint], float]:
    if cfg.objective in BENCHMARK_KINDS:
        seed = trial_seed if cfg.objective == "fletcher_powell" else None
        return _MaximizedBenchmark(make_benchmark(cfg.objective, cfg.space.d, seed))
    variant = "hybrid" if cfg.objective == "model_hybrid" else "classical"
    train_data, test_data = datasets
    return make_accuracy_objective(
        variant,
        cfg.space,
        train_data,
        test_data,
        epochs=cfg.model_options.epochs,
        classes=cfg.model_options.classes,
        build_seed=trial_seed,
        batch_size=cfg.model_options.batch_size,
    )


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _resolve_output_path(path: str | None) -> str | None:
    override = os.environ.get(OUTPUT_DIR_ENV)
    if path is None or not override:
        return path
    return os.path.join(override, os.path.basename(path))


def run_suite(cfg: ExperimentConfig) -> SuiteReport:
    """Run every trial; returns the report (and writes CSV when configured)."""
    datasets = (
        cfg.model_options.datasets() if cfg.objective in MODEL_OBJECTIVES else None
    )
    minimized = cfg.objective in BENCHMARK_KINDS
    rank = cfg.method_params.rank if isinstance(cfg.method_params, TtConfig) else 0
    report = SuiteReport(
        method=cfg.method,
        objective=cfg.objective,
        d=cfg.space.d,
        n=_uniform_points(cfg.space),
        rank=rank,
        rows=[],
    )

    path = _resolve_output_path(cfg.output_path)
    sink: io.TextIOBase | None = None
    if path is not None:
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        sink = open(path, "w", encoding="ascii", newline="\n")
        sink.write(",".join(CSV_COLUMNS) + "\n")
        sink.flush()
    try:
        for trial in range(cfg.trials):
            seed = cfg.base_seed + trial
            objective = _trial_objective(cfg, seed, datasets)
            params = replace(cfg.method_params, seed=seed)
            started = time.perf_counter()
            if cfg.method == "tt":
                trial_report = tt_optimize(objective, cfg.space, params)
            else:
                trial_report = grid_optimize(objective, cfg.space, params)
            elapsed_ms = (
                (time.perf_counter() - started) * 1000.0
                if cfg.record_wall_time
                else 0.0
            )
            best = -trial_report.best_score if minimized else trial_report.best_score
            row = TrialRow(
                trial=trial,
                seed=seed,
                method=cfg.method,
                objective=cfg.objective,
                d=report.d,
                n=report.n,
                r=rank,
                best_fitness=best,
                distinct_evals=trial_report.distinct_evals,
                total_requests=trial_report.total_requests,
                wall_ms=elapsed_ms,
            )
            report.rows.append(row)
            if sink is not None:
                sink.write(",".join(_format_cell(v) for v in row) + "\n")
                sink.flush()
        if sink is not None:
            sink.write(",".join(_format_cell(v) for v in report.summary_values()) + "\n")
    finally:
        if sink is not None:
            sink.close()
    return report


# ------------------------------------------------------------- CSV reload


def load_report_csv(path: str) -> list[SuiteReport]:
    """Parse a report file back into suites (grouped by method/objective/d)."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in (line.strip() for line in fh) if ln]
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise MismatchedExperiments(f"{path}: not a report file (bad header)")
    suites: dict[tuple, SuiteReport] = {}
    for line in lines[1:]:
        cells = line.split(",")
        if len(cells) != len(CSV_COLUMNS):
            raise MismatchedExperiments(f"{path}: malformed row {line!r}")
        if cells[0] == "summary":
            continue
        row = TrialRow(
            trial=int(cells[0]),
            seed=int(cells[1]),
            method=cells[2],
            objective=cells[3],
            d=int(cells[4]),
            n=int(cells[5]),
            r=int(cells[6]),
            best_fitness=float(cells[7]),
            distinct_evals=int(cells[8]),
            total_requests=int(cells[9]),
            wall_ms=float(cells[10]),
        )
        key = (row.method, row.objective, row.d, row.n, row.r)
        suite = suites.get(key)
        if suite is None:
            suite = SuiteReport(row.method, row.objective, row.d, row.n, row.r, [])
            suites[key] = suite
        suite.rows.append(row)
    if not suites:
        raise MismatchedExperiments(f"{path}: no trial rows")
    return list(suites.values())


# ------------------------------------------------------------- comparison


@dataclass(frozen=True)
class ComparisonRow:
    """Side-by-side aggregates of the two methods at one dimension."""

    d: int
    mean_a: float
    mean_b: float
    fitness_delta: float
    er_a: int
    er_b: int
    er_growth_a: float | None
    er_growth_b: float | None


def compare(
    reports_a: Sequence[SuiteReport] | SuiteReport,
    reports_b: Sequence[SuiteReport] | SuiteReport,
) -> list[ComparisonRow]:
    """Per-dimension mean fitness and ER of two report sets, with growth ratios.

    Both sides must cover the same objective on the same per-dimension
    grids; rows come out sorted by ascending ``d``.
    """
    side_a = [reports_a] if isinstance(reports_a, SuiteReport) else list(reports_a)
    side_b = [reports_b] if isinstance(reports_b, SuiteReport) else list(reports_b)
    if not side_a or not side_b:
        raise MismatchedExperiments("nothing to compare (empty report set)")
    objectives = {s.objective for s in side_a + side_b}
    if len(objectives) != 1:
        raise MismatchedExperiments(f"mixed objectives {sorted(objectives)}")
    by_d_a = {s.d: s for s in side_a}
    by_d_b = {s.d: s for s in side_b}
    if len(by_d_a) != len(side_a) or len(by_d_b) != len(side_b):
        raise MismatchedExperiments("duplicate dimension on one side")
    if by_d_a.keys() != by_d_b.keys():
        raise MismatchedExperiments(
            f"dimension sets differ: {sorted(by_d_a)} vs {sorted(by_d_b)}"
        )
    rows: list[ComparisonRow] = []
    previous: ComparisonRow | None = None
    for d in sorted(by_d_a):
        a, b = by_d_a[d], by_d_b[d]
        if a.n != b.n:
            raise MismatchedExperiments(f"d={d}: grids differ ({a.n} vs {b.n} points)")
        rows.append(
            ComparisonRow(
                d=d,
                mean_a=a.mean_best,
                mean_b=b.mean_best,
                fitness_delta=a.mean_best - b.mean_best,
                er_a=a.expected_runtime,
                er_b=b.expected_runtime,
                er_growth_a=(
                    a.expected_runtime / previous.er_a if previous else None
                ),
                er_growth_b=(
                    b.expected_runtime / previous.er_b if previous else None
                ),
            )
        )
        previous = rows[-1]
    return rows


def format_comparison(rows: Sequence[ComparisonRow]) -> str:
    header = (
        f"{'d':>4} {'mean_a':>14} {'mean_b':>14} {'delta':>12} "
        f"{'er_a':>8} {'er_b':>8} {'grow_a':>8} {'grow_b':>8}"
    )
    lines = [header]
    for row in rows:
        grow_a = f"{row.er_growth_a:.2f}" if row.er_growth_a is not None else "-"
        grow_b = f"{row.er_growth_b:.2f}" if row.er_growth_b is not None else "-"
        lines.append(
            f"{row.d:>4} {row.mean_a:>14.6g} {row.mean_b:>14.6g} "
            f"{row.fitness_delta:>12.3g} {row.er_a:>8} {row.er_b:>8} "
            f"{grow_a:>8} {grow_b:>8}"
        )
    return "\n".join(lines)


# --------------------------------------------------------------- selftest


def selftest() -> list[tuple[str, bool, str]]:
    """Quick oracle checks of every layer; returns (name, ok, detail) rows."""
    from . import quantum
    from .maxvol import ScoreMatrix
    from .maxvol import maxvol as select_rows
    from .space import AxisSpec

    results: list[tuple[str, bool, str]] = []

    def check(name: str, fn: Callable[[], str]) -> None:
        try:
            results.append((name, True, fn()))
        except Exception as exc:  # noqa: BLE001 - report, don't crash
            results.append((name, False, f"{type(exc).__name__}: {exc}"))

    def grid_minimum() -> str:
        bench = make_benchmark("schwefel", 3)
        report = grid_optimize(_MaximizedBenchmark(bench), bench.space(4))
        corner = bench((-500.0, -500.0, -500.0))
        if abs(-report.best_score - corner) > 1e-9:
            raise AssertionError(f"grid best {-report.best_score} != corner {corner}")
        if report.distinct_evals != 64:
            raise AssertionError(f"expected 64 evaluations, saw {report.distinct_evals}")
        return f"best {-report.best_score:.4f} in 64 evaluations"

    check("grid-search finds the separable minimum", grid_minimum)

    def vincent_floor() -> str:
        bench = make_benchmark("vincent", 6)
        minimizer = float(np.exp(np.pi / 20.0))
        value = bench((minimizer,) * 6)
        if abs(value - (-1.0)) > 1e-12:
            raise AssertionError(f"f(exp(pi/20)^6) = {value}, expected -1")
        return "global minimum value -1 reproduced"

    check("multimodal benchmark floor", vincent_floor)

    def maxvol_certificate() -> str:
        rng = np.random.default_rng(0)
        for _ in range(50):
            rows = int(rng.integers(3, 9))
            cols = int(rng.integers(1, min(rows, 4)))
            data = rng.normal(size=(rows, cols))
            selection = select_rows(ScoreMatrix(data))
            sub = data[list(selection.picked)]
            b = data @ np.linalg.solve(sub, np.eye(cols)) if cols > 1 else data / sub
            if selection.certified and np.abs(b).max() > 1.01 + 1e-9:
                raise AssertionError(f"certificate violated: {np.abs(b).max()}")
        return "50 seeded selections satisfy the dominance certificate"

    check("maxvol dominance certificate", maxvol_certificate)

    def parameter_shift() -> str:
        spec = quantum.QuantumLayerSpec(qubits=2, depth=2)
        rng = np.random.default_rng(1)
        x = rng.uniform(-np.pi, np.pi, 2)
        theta = rng.uniform(-np.pi, np.pi, 4)
        d_theta, _ = quantum.gradient(spec, x, theta)
        h = 1e-5
        for i in range(4):
            plus, minus = theta.copy(), theta.copy()
            plus[i] += h
            minus[i] -= h
            fd = (quantum.forward(spec, x, plus) - quantum.forward(spec, x, minus)) / (
                2 * h
            )
            if np.abs(d_theta[:, i] - fd).max() > 1e-6:
                raise AssertionError(f"parameter {i} off by {np.abs(d_theta[:, i] - fd).max()}")
        return "analytic Jacobian matches finite differences"

    check("parameter-shift gradients", parameter_shift)

    def tt_separable() -> str:
        space = SearchSpace(
            [AxisSpec(f"h{i}", 0.0, 1.0, 4) for i in range(4)]
        )
        table = np.array([0.3, -1.0, 2.0, 0.7])

        def objective(point: GridPoint) -> float:
            return float(sum(table[i] for i in point.indices))

        report = tt_optimize(objective, space, TtConfig(rank=2, sweeps=1, seed=0))
        if abs(report.best_score - 4 * 2.0) > 1e-12:
            raise AssertionError(f"best {report.best_score}, expected 8.0")
        return "rank-2 sweep recovers the separable maximum exactly"

    check("tensor-train exactness on separable scores", tt_separable)

    def backend_agreement() -> str:
        name = quantum.backend_name()
        spec = quantum.QuantumLayerSpec(qubits=3, depth=2)
        rng = np.random.default_rng(2)
        x = rng.uniform(-1, 1, size=(4, 3))
        theta = rng.uniform(-np.pi, np.pi, 6)
        fast = quantum.forward_batch(spec, x, theta)
        norms = np.abs(fast) <= 1.0 + 1e-12
        if not norms.all():
            raise AssertionError("expectation out of [-1, 1]")
        return f"active kernels: {name}; expectations bounded"

    check("statevector kernels", backend_agreement)

    return results


# ------------------------------------------------------------ kernel bench


def bench_kernels(
    qubits: int = 10, batch: int = 64, depth: int = 4, repeats: int = 3
) -> dict:
    """Time the same circuit workload on every available kernel backend."""
    from . import quantum

    backends = {}
    for name in ("compiled", "python"):
        try:
            backends[name] = quantum.load_backend(name)
        except ImportError:
            continue

    rng = np.random.default_rng(0)
    dim = 1 << qubits
    base = rng.normal(size=(batch, dim)) + 1j * rng.normal(size=(batch, dim))
    base /= np.linalg.norm(base, axis=1, keepdims=True)
    angles = rng.uniform(-np.pi, np.pi, size=(depth, qubits, batch))

    def workload(kernels) -> tuple[float, np.ndarray]:
        best = math.inf
        out = None
        for _ in range(repeats):
            psi = np.ascontiguousarray(base.copy())
            started = time.perf_counter()
            for w in range(qubits):
                kernels.apply_h(psi, w)
            for layer in range(depth):
                for w in range(qubits):
                    kernels.apply_cnot(psi, w, (w + 1) % qubits)
                for w in range(qubits):
                    kernels.apply_rot(psi, w, layer % 3, angles[layer, w])
            expectations = np.stack(
                [kernels.expect_x(psi, w) for w in range(qubits)], axis=1
            )
            best = min(best, time.perf_counter() - started)
            out = expectations
        return best, out

    timings: dict[str, float] = {}
    outputs: dict[str, np.ndarray] = {}
    for name, kernels in backends.items():
        timings[name], outputs[name] = workload(kernels)

    agree = True
    if len(outputs) == 2:
        agree = bool(
            np.allclose(outputs["compiled"], outputs["python"], atol=1e-10)
        )
    return {
        "qubits": qubits,
        "batch": batch,
        "depth": depth,
        "timings": timings,
        "agree": agree,
    }
