"""Discretized hyperparameter domains.

A search space is an ordered list of axes, each axis a closed interval
``[lower, upper]`` discretized into ``points`` values (endpoint-inclusive,
evenly spaced).  Integer axes round each grid value to the nearest whole
number and refuse grids where rounding makes two values collide, so that a
grid index always resolves to exactly one hyperparameter value.

The grid is the only currency the optimizers trade in: they see integer
index tuples, and :func:`value_at` is the bijection back to real values.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Sequence


class DuplicateGridValue(ValueError):
    """Integer rounding produced the same grid value twice on one axis."""


class IndexOutOfRange(IndexError):
    """A grid index fell outside ``[0, points)`` for its axis."""


@dataclass(frozen=True)
class AxisSpec:
    """One hyperparameter axis.

    Attributes
    ----------
    name:
        Unique identifier of the hyperparameter (e.g. ``"alpha0"``).
    lower, upper:
        Interval endpoints, ``lower < upper``.
    points:
        Number of grid values on this axis (``n``), at least 2.
    kind:
        ``"continuous"`` keeps the evenly spaced reals; ``"integer"``
        rounds every grid value to the nearest whole number.
    """

    name: str
    lower: float
    upper: float
    points: int
    kind: Literal["continuous", "integer"] = "continuous"

    def __post_init__(self) -> None:
        if not self.name:
            raise ValueError("axis name must be non-empty")
        if not (self.lower < self.upper):
            raise ValueError(
                f"axis {self.name!r}: lower ({self.lower}) must be < upper ({self.upper})"
            )
        if self.points < 2:
            raise ValueError(f"axis {self.name!r}: points must be >= 2, got {self.points}")
        if self.kind not in ("continuous", "integer"):
            raise ValueError(f"axis {self.name!r}: unknown kind {self.kind!r}")
        # Fail fast: a bad integer grid should be rejected at construction,
        # not on first use deep inside an optimizer sweep.
        discretize(self)


@dataclass(frozen=True)
class SearchSpace:
    """An ordered collection of axes; ``d = len(axes)``.

    Immutable after construction and safe to share across evaluators.
    """

    axes: tuple[AxisSpec, ...]

    def __init__(self, axes: Sequence[AxisSpec]) -> None:
        axes = tuple(axes)
        if len(axes) < 1:
            raise ValueError("a search space needs at least one axis")
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise ValueError(f"axis names must be unique, got {names}")
        object.__setattr__(self, "axes", axes)

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.points for a in self.axes)

    def size(self) -> int:
        """Total number of grid points (``prod n_i``)."""
        total = 1
        for a in self.axes:
            total *= a.points
        return total

    def reversed_axes(self) -> "SearchSpace":
        """The same space with axis order reversed (TT sweep relabeling)."""
        return SearchSpace(tuple(reversed(self.axes)))


@dataclass(frozen=True)
class GridPoint:
    """A resolved grid point: integer indices plus their hyperparameter values."""

    indices: tuple[int, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values must have equal length")

    def named(self, space: SearchSpace) -> dict[str, float]:
        """Map axis names to this point's values."""
        return {a.name: v for a, v in zip(space.axes, self.values)}


@lru_cache(maxsize=4096)
def _grid(axis: AxisSpec) -> tuple[float, ...]:
    n = axis.points
    step = (axis.upper - axis.lower) / (n - 1)
    values = [axis.lower + j * step for j in range(n)]
    values[-1] = axis.upper  # exact endpoint, no accumulated rounding
    if axis.kind == "integer":
        rounded = [float(round(v)) for v in values]
        if len(set(rounded)) != n:
            raise DuplicateGridValue(
                f"axis {axis.name!r}: rounding {values} to integers collides ({rounded})"
            )
        values = rounded
    return tuple(values)


def discretize(axis: AxisSpec) -> list[float]:
    """Return the axis's ``points`` grid values.

    Continuous axes get ``lower + j * (upper - lower) / (points - 1)`` for
    ``j = 0 .. points-1``; both endpoints are always included.  Integer axes
    round each value to the nearest whole number.

    Raises
    ------
    DuplicateGridValue
        If integer rounding maps two grid slots to the same value.
    """
    return list(_grid(axis))


def value_at(axis: AxisSpec, index: int) -> float:
    """The grid value at ``index`` on this axis; equals ``discretize(axis)[index]``.

    Raises
    ------
    IndexOutOfRange
        If ``index`` is not in ``[0, points)``.
    """
    if not (0 <= index < axis.points):
        raise IndexOutOfRange(
            f"axis {axis.name!r}: index {index} outside [0, {axis.points})"
        )
    return _grid(axis)[index]


def resolve(space: SearchSpace, indices: Sequence[int]) -> GridPoint:
    """Build the :class:`GridPoint` for a full index tuple."""
    if len(indices) != space.d:
        raise IndexOutOfRange(
            f"expected {space.d} indices, got {len(indices)}"
        )
    values = tuple(value_at(a, i) for a, i in zip(space.axes, indices))
    return GridPoint(indices=tuple(int(i) for i in indices), values=values)


def grid_values(space: SearchSpace) -> list[list[float]]:
    """Per-axis grid values for the whole space (axis order preserved)."""
    return [discretize(a) for a in space.axes]
