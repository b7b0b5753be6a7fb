"""Uniform periodic grids and centered finite differences.

Fields live on tensor-product grids over flat tori: axis ``i`` carries
``N_i`` equally spaced nodes on ``[0, L_i)`` with wraparound.  Node storage
is row-major (C order); that layout is the contract shared by every module
that exchanges node data.  All functions here are pure and treat grids and
fields as immutable.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

# Practical ceiling on total node count; desk-scale runs sit far below it.
_MAX_NODES = 2**28


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on a flat torus of dimension 1 to 3.

    Attributes:
        resolution: nodes per axis, each even and at least 8.
        period: box lengths per axis; defaults to 2*pi on every axis.
    """

    resolution: tuple[int, ...]
    period: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        res = tuple(operator.index(N) for N in self.resolution)
        object.__setattr__(self, "resolution", res)
        n = len(res)
        if not 1 <= n <= 3:
            raise ValueError(f"grid dimension must be between 1 and 3, got {n}")
        for N in res:
            if N < 8 or N % 2 != 0:
                raise ValueError(f"resolution entries must be even and >= 8, got {N}")
        if math.prod(res) > _MAX_NODES:
            raise ValueError(f"grid of {math.prod(res)} nodes exceeds the supported size")
        per = (TWO_PI,) * n if self.period is None else tuple(float(L) for L in self.period)
        if len(per) != n:
            raise ValueError(
                f"period has {len(per)} entries but resolution has {n}"
            )
        if any(not math.isfinite(L) or L <= 0.0 for L in per):
            raise ValueError(f"periods must be positive and finite, got {per}")
        object.__setattr__(self, "period", per)

    @property
    def n(self) -> int:
        return len(self.resolution)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / N for L, N in zip(self.period, self.resolution))

    @property
    def size(self) -> int:
        return math.prod(self.resolution)

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    def axes(self) -> tuple[np.ndarray, ...]:
        """1-d node coordinate arrays, one per axis."""
        return tuple(
            h * np.arange(N) for h, N in zip(self.spacing, self.resolution)
        )

    def mesh(self) -> np.ndarray:
        """Node coordinates stacked to shape ``(n, *resolution)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One real value per node, stored row-major on its grid."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != self.grid.resolution:
            raise ValueError(
                f"values shape {vals.shape} does not match grid resolution "
                f"{self.grid.resolution}"
            )
        if not np.isfinite(vals).all():
            raise ValueError("scalar field contains non-finite values")
        object.__setattr__(self, "values", vals)


def node_coordinates(grid: GridSpec, flat_index: int) -> tuple[float, ...]:
    """Coordinates of the node at a row-major flat index."""
    idx = operator.index(flat_index)
    if not 0 <= idx < grid.size:
        raise IndexError(f"flat index {idx} out of range for {grid.size} nodes")
    multi = np.unravel_index(idx, grid.resolution)
    return tuple(int(i) * h for i, h in zip(multi, grid.spacing))


def _check_axis(grid: GridSpec, axis: int) -> int:
    axis = operator.index(axis)
    if not 0 <= axis < grid.n:
        raise ValueError(f"axis {axis} out of range for a {grid.n}-d grid")
    return axis


def _shifted(values: np.ndarray, offset: int, axis: int) -> np.ndarray:
    # Sample at node index k + offset with periodic wraparound.
    return np.roll(values, -offset, axis=axis)


def _d1(values: np.ndarray, h: float, axis: int, order: int) -> np.ndarray:
    """Centered first difference along one axis of a raw node array."""
    if order == 2:
        return (_shifted(values, 1, axis) - _shifted(values, -1, axis)) / (2.0 * h)
    if order == 4:
        return (
            -_shifted(values, 2, axis)
            + 8.0 * _shifted(values, 1, axis)
            - 8.0 * _shifted(values, -1, axis)
            + _shifted(values, -2, axis)
        ) / (12.0 * h)
    raise ValueError(f"stencil order must be 2 or 4, got {order}")


def _d2_pure(values: np.ndarray, h: float, axis: int, order: int) -> np.ndarray:
    """Centered second difference along one axis of a raw node array."""
    if order == 2:
        return (
            _shifted(values, 1, axis) - 2.0 * values + _shifted(values, -1, axis)
        ) / (h * h)
    if order == 4:
        return (
            -_shifted(values, 2, axis)
            + 16.0 * _shifted(values, 1, axis)
            - 30.0 * values
            + 16.0 * _shifted(values, -1, axis)
            - _shifted(values, -2, axis)
        ) / (12.0 * h * h)
    raise ValueError(f"stencil order must be 2 or 4, got {order}")


def diff1(field: ScalarField, axis: int, order: int = 2) -> ScalarField:
    """Periodic centered first derivative along ``axis``.

    Order 2 uses ``(f[k+1] - f[k-1]) / (2 h)``; order 4 uses
    ``(-f[k+2] + 8 f[k+1] - 8 f[k-1] + f[k-2]) / (12 h)``.
    """
    axis = _check_axis(field.grid, axis)
    h = field.grid.spacing[axis]
    return ScalarField(field.grid, _d1(field.values, h, axis, order))


def diff2(field: ScalarField, axis_i: int, axis_j: int, order: int = 2) -> ScalarField:
    """Periodic centered second derivative.

    Pure derivatives (``axis_i == axis_j``) use the standard centered
    stencil of the requested order.  Mixed derivatives are composed first
    differences, applied in a canonical axis order so the result is
    bitwise symmetric in ``(axis_i, axis_j)``.
    """
    ai = _check_axis(field.grid, axis_i)
    aj = _check_axis(field.grid, axis_j)
    h = field.grid.spacing
    if ai == aj:
        return ScalarField(field.grid, _d2_pure(field.values, h[ai], ai, order))
    lo, hi = min(ai, aj), max(ai, aj)
    inner = _d1(field.values, h[hi], hi, order)
    return ScalarField(field.grid, _d1(inner, h[lo], lo, order))


def integrate(field: ScalarField) -> float:
    """Rectangle-rule integral over the torus.

    On a uniform periodic grid this is the trapezoid rule as well, and is
    exact for trigonometric polynomials resolved by the grid.
    """
    return float(field.values.sum() * field.grid.cell_volume)
