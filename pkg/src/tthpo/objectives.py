"""Benchmark objective functions for exercising the optimizers.

Three classic black-box minimization problems with very different texture:

* ``schwefel`` — separable, deceptive multimodal bowl on [-500, 500]^d;
* ``fletcher_powell`` — non-separable trigonometric landscape on [-pi, pi]^d
  whose coefficients are drawn per instance, so every seed is a fresh
  problem with a known global minimum at its ``alpha`` vector;
* ``vincent`` — separable sine-of-log lattice on [0.25, 10]^d, normalized by
  1/d so its value range is dimension-independent.

All three are plain minimization functions of a coordinate vector.  The
optimizers in this package maximize; the experiment harness negates scores
on the way in and restores the minimization sign in reports.  Vectorized
``*_batch`` variants evaluate an (m, d) array of rows at once and back the
grid scanner's batched path.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .space import AxisSpec, SearchSpace

SCHWEFEL_DOMAIN = (-500.0, 500.0)
FLETCHER_POWELL_DOMAIN = (-np.pi, np.pi)
VINCENT_DOMAIN = (0.25, 10.0)

BENCHMARK_KINDS = ("schwefel", "fletcher_powell", "vincent")


class DomainViolation(ValueError):
    """A coordinate fell outside the function's defined box."""


def _as_rows(x, lower: float, upper: float, name: str) -> np.ndarray:
    """Validate and reshape input to (m, d); scalars of abuse raise."""
    arr = np.asarray(x, dtype=np.float64)
    squeeze = arr.ndim == 1
    if squeeze:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise DomainViolation(f"{name} expects a coordinate vector or row block")
    if not np.all(np.isfinite(arr)):
        raise DomainViolation(f"{name}: non-finite coordinate")
    if np.any(arr < lower) or np.any(arr > upper):
        bad = arr[(arr < lower) | (arr > upper)].flat[0]
        raise DomainViolation(
            f"{name}: coordinate {bad} outside [{lower}, {upper}]"
        )
    return arr


def schwefel_batch(x) -> np.ndarray:
    """Row-wise Schwefel values for an (m, d) block."""
    arr = _as_rows(x, *SCHWEFEL_DOMAIN, "schwefel")
    return -np.sum(arr * np.sin(np.sqrt(np.abs(arr))), axis=1)


def schwefel(x) -> float:
    """f(x) = -sum_i x_i * sin(sqrt(|x_i|)) on [-500, 500]^d."""
    return float(schwefel_batch(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])


def vincent_batch(x) -> np.ndarray:
    """Row-wise Vincent values for an (m, d) block."""
    arr = _as_rows(x, *VINCENT_DOMAIN, "vincent")
    return -np.mean(np.sin(10.0 * np.log(arr)), axis=1)


def vincent(x) -> float:
    """f(x) = -(1/d) * sum_i sin(10 * ln x_i) on [0.25, 10]^d; minimum -1."""
    return float(vincent_batch(np.atleast_2d(np.asarray(x, dtype=np.float64)))[0])


@dataclass(frozen=True)
class FletcherPowellInstance:
    """One seeded draw of the Fletcher-Powell coefficients.

    ``a`` and ``b`` are dim x dim with entries uniform in [-100, 100];
    ``alpha`` is the global minimizer, uniform in [-pi, pi]^dim.  The arrays
    are frozen read-only so an instance can be shared across trials.
    """

    a: np.ndarray
    b: np.ndarray
    alpha: np.ndarray
    seed: int
    target: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        d = self.alpha.shape[0]
        if self.a.shape != (d, d) or self.b.shape != (d, d):
            raise ValueError(
                f"coefficient shapes {self.a.shape}/{self.b.shape} do not match "
                f"alpha length {d}"
            )
        for arr in (self.a, self.b, self.alpha):
            arr.setflags(write=False)
        # A_i = sum_j a_ij sin(alpha_j) + b_ij cos(alpha_j): the value the
        # landscape is pulled toward; f(alpha) == 0 by construction.
        target = self.a @ np.sin(self.alpha) + self.b @ np.cos(self.alpha)
        target.setflags(write=False)
        object.__setattr__(self, "target", target)

    @property
    def dim(self) -> int:
        return self.alpha.shape[0]

    @classmethod
    def from_seed(cls, seed: int, dim: int) -> "FletcherPowellInstance":
        """Regenerate the instance for ``seed``; same seed, same arrays."""
        if dim < 1:
            raise ValueError(f"dim must be >= 1, got {dim}")
        rng = np.random.default_rng(seed)
        a = rng.uniform(-100.0, 100.0, size=(dim, dim))
        b = rng.uniform(-100.0, 100.0, size=(dim, dim))
        alpha = rng.uniform(-np.pi, np.pi, size=dim)
        return cls(a=a, b=b, alpha=alpha, seed=int(seed))


def fletcher_powell_batch(x, inst: FletcherPowellInstance) -> np.ndarray:
    """Row-wise Fletcher-Powell values for an (m, d) block."""
    arr = _as_rows(x, *FLETCHER_POWELL_DOMAIN, "fletcher_powell")
    if arr.shape[1] != inst.dim:
        raise DomainViolation(
            f"fletcher_powell: {arr.shape[1]} coordinates for a dim-{inst.dim} instance"
        )
    # B rows: (m, d) = sin/cos features times the instance matrices.
    b_of_x = np.sin(arr) @ inst.a.T + np.cos(arr) @ inst.b.T
    return np.sum((inst.target - b_of_x) ** 2, axis=1)


def fletcher_powell(x, inst: FletcherPowellInstance) -> float:
    """f(x) = sum_i (A_i - B_i(x))^2 on [-pi, pi]^d; f(alpha) == 0."""
    return float(
        fletcher_powell_batch(np.atleast_2d(np.asarray(x, dtype=np.float64)), inst)[0]
    )


@dataclass(frozen=True)
class BenchmarkFn:
    """A benchmark bound to a dimension (and instance, where one applies).

    Callable on a coordinate vector; ``evaluate_batch`` accepts an (m, d)
    row block, which is what lets the grid scanner skip per-point Python
    dispatch on million-point sweeps.
    """

    kind: str
    dim: int
    instance: FletcherPowellInstance | None = None

    def __post_init__(self) -> None:
        if self.kind not in BENCHMARK_KINDS:
            raise ValueError(f"unknown benchmark kind {self.kind!r}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.kind == "fletcher_powell":
            if self.instance is None:
                raise ValueError("fletcher_powell requires a seeded instance")
            if self.instance.dim != self.dim:
                raise ValueError(
                    f"instance dim {self.instance.dim} != benchmark dim {self.dim}"
                )
        elif self.instance is not None:
            raise ValueError(f"{self.kind} takes no instance")

    @property
    def domain(self) -> tuple[float, float]:
        return {
            "schwefel": SCHWEFEL_DOMAIN,
            "fletcher_powell": FLETCHER_POWELL_DOMAIN,
            "vincent": VINCENT_DOMAIN,
        }[self.kind]

    def space(self, points: int) -> SearchSpace:
        """The d-axis grid this benchmark is searched on."""
        lower, upper = self.domain
        return SearchSpace(
            [AxisSpec(f"x{i}", lower, upper, points) for i in range(self.dim)]
        )

    def __call__(self, x) -> float:
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape != (self.dim,):
            raise DomainViolation(
                f"{self.kind}: expected {self.dim} coordinates, got shape {arr.shape}"
            )
        return float(self.evaluate_batch(arr[np.newaxis, :])[0])

    def evaluate_batch(self, values) -> np.ndarray:
        if self.kind == "schwefel":
            return schwefel_batch(values)
        if self.kind == "vincent":
            return vincent_batch(values)
        return fletcher_powell_batch(values, self.instance)


def make_benchmark(kind: str, dim: int, seed: int | None = None) -> BenchmarkFn:
    """Build a benchmark; ``seed`` is required (and only used) for the
    instance-randomized fletcher_powell."""
    if kind == "fletcher_powell":
        if seed is None:
            raise ValueError("fletcher_powell requires an instance seed")
        return BenchmarkFn(kind, dim, FletcherPowellInstance.from_seed(seed, dim))
    return BenchmarkFn(kind, dim)
