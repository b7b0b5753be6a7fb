"""Discrete graph maps between flat tori and Euclidean space.

A map is stored as an integer-free winding matrix plus a periodic part
sampled at the grid nodes: ``f(x) = W x + u(x)``.  The winding matrix
carries the homotopy class and never changes along a flow; only ``u``
evolves.  Constructors sample the closed-form families from
:mod:`gmcf.analytic`, so discrete initial data and the oracle agree at the
nodes by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import analytic
from .grid import GridSpec

TARGET_KINDS = ("euclidean", "torus")

# Tolerance for the winding compatibility check on torus targets.  The
# check is arithmetic on a handful of matrix entries, so anything beyond
# roundoff means a genuinely incompatible homotopy class.
_WINDING_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MapField:
    """Graph map ``f(x) = winding @ x + periodic_part(x)`` on a grid.

    Attributes:
        grid: domain grid.
        winding: ``(m, n)`` matrix sending domain periods into the target.
        periodic_part: node samples of ``u``, shape ``(m, *resolution)``.
        target_kind: ``"euclidean"`` or ``"torus"``.
        target_period: target box lengths, required for torus targets.
    """

    grid: GridSpec
    winding: np.ndarray
    periodic_part: np.ndarray
    target_kind: str = "euclidean"
    target_period: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        W = np.ascontiguousarray(self.winding, dtype=float)
        u = np.ascontiguousarray(self.periodic_part, dtype=float)
        n = self.grid.n
        if W.ndim != 2 or W.shape[1] != n:
            raise ValueError(f"winding shape {W.shape} incompatible with a {n}-d grid")
        m = W.shape[0]
        if m < 1 or m > 3:
            raise ValueError(f"target dimension must be between 1 and 3, got {m}")
        if u.shape != (m,) + self.grid.resolution:
            raise ValueError(
                f"periodic part shape {u.shape}, expected {(m,) + self.grid.resolution}"
            )
        if not np.isfinite(W).all():
            raise ValueError("winding matrix contains non-finite values")
        if not np.isfinite(u).all():
            raise ValueError("periodic part contains non-finite values")
        if self.target_kind not in TARGET_KINDS:
            raise ValueError(
                f"invalid target kind {self.target_kind!r} (valid: euclidean, torus)"
            )
        if self.target_kind == "torus":
            if self.target_period is None:
                per = self.grid.period if m == n else None
                if per is None:
                    raise ValueError("torus target requires target_period")
            else:
                per = tuple(float(L) for L in self.target_period)
            if len(per) != m or any(L <= 0 for L in per):
                raise ValueError(f"target_period must be {m} positive lengths, got {per}")
            _check_winding_compatible(W, self.grid.period, per)
            object.__setattr__(self, "target_period", per)
        else:
            object.__setattr__(self, "target_period", None)
        object.__setattr__(self, "winding", W)
        object.__setattr__(self, "periodic_part", u)

    @property
    def m(self) -> int:
        return self.winding.shape[0]


def _check_winding_compatible(W, domain_period, target_period) -> None:
    # Each domain period vector L_i e_i must land on the target lattice:
    # L_i W[a, i] / P_a integral for every a, i.
    ratios = W * np.asarray(domain_period) / np.asarray(target_period)[:, None]
    if np.abs(ratios - np.round(ratios)).max() > _WINDING_TOL:
        raise ValueError(
            "winding matrix does not map the domain lattice into the target lattice"
        )


def _sample(amap: analytic.AnalyticMap, grid: GridSpec) -> np.ndarray:
    return amap.periodic_part(grid.mesh())


def make_identity(grid: GridSpec) -> MapField:
    """Identity map of the domain torus onto itself."""
    amap = analytic.identity_map(grid.period)
    return MapField(grid, amap.winding, _sample(amap, grid), "torus", grid.period)


def make_linear(
    grid: GridSpec,
    winding,
    target_kind: str = "euclidean",
    target_period: tuple[float, ...] | None = None,
) -> MapField:
    """Purely linear map with the given winding matrix."""
    amap = analytic.linear_map(winding, grid.n)
    return MapField(grid, amap.winding, _sample(amap, grid), target_kind, target_period)


def make_shear_composition(
    grid: GridSpec, eps: float, delta: float, k1: int = 1, k2: int = 1
) -> MapField:
    """Composition of two shears of the square torus; det of df is one.

    The winding is the identity and the target torus matches the domain.
    """
    if grid.n != 2:
        raise ValueError("shear composition requires a 2-d grid")
    amap = analytic.shear_composition_map(eps, delta, k1, k2, grid.period)
    return MapField(grid, amap.winding, _sample(amap, grid), "torus", grid.period)


def make_product_sine(
    grid: GridSpec, m: int, amplitudes, wavevectors, phases=None
) -> MapField:
    """Null-homotopic map with one sinusoidal mode per component."""
    if len(amplitudes) != m:
        raise ValueError(f"expected {m} amplitudes, got {len(amplitudes)}")
    amap = analytic.product_sine_map(amplitudes, wavevectors, phases, grid.period)
    if amap.n != grid.n:
        raise ValueError(f"wavevectors are {amap.n}-d but the grid is {grid.n}-d")
    return MapField(grid, amap.winding, _sample(amap, grid), "euclidean", None)


def make_scalar_bump(grid: GridSpec, amplitude: float, wavevector, phases=None) -> MapField:
    """Scalar graph built from a product of sines over the active axes."""
    amap = analytic.scalar_bump_map(amplitude, wavevector, phases, grid.period)
    if amap.n != grid.n:
        raise ValueError(f"wavevector is {amap.n}-d but the grid is {grid.n}-d")
    return MapField(grid, amap.winding, _sample(amap, grid), "euclidean", None)


@dataclass(frozen=True)
class ParamSpec:
    """One family parameter as it appears in config files."""

    name: str
    kind: str  # "float" | "int" | "floats" | "ints"
    required: bool
    doc: str


@dataclass(frozen=True, eq=False)
class Family:
    """Initial-data family: discrete builder plus analytic oracle."""

    name: str
    summary: str
    params: tuple[ParamSpec, ...]
    default_target_kind: str
    build: Callable[..., MapField]
    make_analytic: Callable[..., analytic.AnalyticMap]
    target_dim: Callable[[GridSpec, dict[str, Any]], int]


def _build_identity(grid, params, target_kind, target_dim, target_period):
    if target_kind not in (None, "torus"):
        raise ValueError("identity map requires a torus target")
    return make_identity(grid)


def _build_linear(grid, params, target_kind, target_dim, target_period):
    flat = np.asarray(params["winding"], dtype=float)
    if flat.ndim == 1:
        if flat.size % grid.n != 0:
            raise ValueError(
                f"winding has {flat.size} entries, not a multiple of n = {grid.n}"
            )
        m = flat.size // grid.n if target_dim is None else target_dim
        W = flat.reshape(m, grid.n)
    else:
        W = flat
    kind = "euclidean" if target_kind is None else target_kind
    return make_linear(grid, W, kind, target_period)


def _build_shear(grid, params, target_kind, target_dim, target_period):
    if target_kind not in (None, "torus"):
        raise ValueError("shear composition requires a torus target")
    return make_shear_composition(
        grid, params["eps"], params["delta"], params.get("k1", 1), params.get("k2", 1)
    )


def _build_product_sine(grid, params, target_kind, target_dim, target_period):
    if target_kind not in (None, "euclidean"):
        raise ValueError("product sine maps into Euclidean space")
    amps = np.asarray(params["amplitudes"], dtype=float)
    wv = np.asarray(params["wavevectors"])
    if wv.ndim == 1:
        wv = wv.reshape(amps.size, grid.n)
    return make_product_sine(grid, amps.size, amps, wv, params.get("phases"))


def _build_scalar_bump(grid, params, target_kind, target_dim, target_period):
    if target_kind not in (None, "euclidean"):
        raise ValueError("scalar bump maps into Euclidean space")
    return make_scalar_bump(
        grid, params["amplitude"], params["wavevector"], params.get("phases")
    )


def _analytic_identity(grid, params):
    return analytic.identity_map(grid.period)


def _analytic_linear(grid, params):
    flat = np.asarray(params["winding"], dtype=float)
    if flat.ndim == 1:
        flat = flat.reshape(-1, grid.n)
    return analytic.linear_map(flat, grid.n)


def _analytic_shear(grid, params):
    return analytic.shear_composition_map(
        params["eps"], params["delta"], params.get("k1", 1), params.get("k2", 1), grid.period
    )


def _analytic_product_sine(grid, params):
    amps = np.asarray(params["amplitudes"], dtype=float)
    wv = np.asarray(params["wavevectors"])
    if wv.ndim == 1:
        wv = wv.reshape(amps.size, grid.n)
    return analytic.product_sine_map(amps, wv, params.get("phases"), grid.period)


def _analytic_scalar_bump(grid, params):
    return analytic.scalar_bump_map(
        params["amplitude"], params["wavevector"], params.get("phases"), grid.period
    )


FAMILIES: dict[str, Family] = {
    "identity": Family(
        name="identity",
        summary="identity of the domain torus (winding I, zero periodic part)",
        params=(),
        default_target_kind="torus",
        build=_build_identity,
        make_analytic=_analytic_identity,
        target_dim=lambda grid, params: grid.n,
    ),
    "linear": Family(
        name="linear",
        summary="purely linear map x -> W x",
        params=(
            ParamSpec("winding", "floats", True, "m*n entries of W, row-major"),
        ),
        default_target_kind="euclidean",
        build=_build_linear,
        make_analytic=_analytic_linear,
        target_dim=lambda grid, params: len(np.ravel(params["winding"])) // grid.n,
    ),
    "shear_composition": Family(
        name="shear_composition",
        summary="composition of two shears of the square torus (det df = 1)",
        params=(
            ParamSpec("eps", "float", True, "amplitude of the inner shear"),
            ParamSpec("delta", "float", True, "amplitude of the outer shear"),
            ParamSpec("k1", "int", False, "outer mode index (default 1)"),
            ParamSpec("k2", "int", False, "inner mode index (default 1)"),
        ),
        default_target_kind="torus",
        build=_build_shear,
        make_analytic=_analytic_shear,
        target_dim=lambda grid, params: 2,
    ),
    "product_sine": Family(
        name="product_sine",
        summary="one sinusoidal mode per component, null-homotopic",
        params=(
            ParamSpec("amplitudes", "floats", True, "m amplitudes"),
            ParamSpec("wavevectors", "ints", True, "m*n integer mode indices, row-major"),
            ParamSpec("phases", "floats", False, "m phases (default all zero)"),
        ),
        default_target_kind="euclidean",
        build=_build_product_sine,
        make_analytic=_analytic_product_sine,
        target_dim=lambda grid, params: len(np.ravel(params["amplitudes"])),
    ),
    "scalar_bump": Family(
        name="scalar_bump",
        summary="scalar graph A * prod_i sin(k_i x_i) over the active axes",
        params=(
            ParamSpec("amplitude", "float", True, "bump amplitude"),
            ParamSpec("wavevector", "ints", True, "n integer mode indices"),
            ParamSpec("phases", "floats", False, "n phases (default all zero)"),
        ),
        default_target_kind="euclidean",
        build=_build_scalar_bump,
        make_analytic=_analytic_scalar_bump,
        target_dim=lambda grid, params: 1,
    ),
}


def build_family_map(
    family: str,
    grid: GridSpec,
    params: dict[str, Any],
    target_kind: str | None = None,
    target_dim: int | None = None,
    target_period: tuple[float, ...] | None = None,
) -> MapField:
    """Build initial data by family name; raises on unknown families."""
    try:
        fam = FAMILIES[family]
    except KeyError:
        raise ValueError(
            f"unknown family {family!r} (valid: {', '.join(sorted(FAMILIES))})"
        ) from None
    return fam.build(grid, params, target_kind, target_dim, target_period)


def family_analytic(family: str, grid: GridSpec, params: dict[str, Any]) -> analytic.AnalyticMap:
    """Analytic counterpart of :func:`build_family_map`."""
    try:
        fam = FAMILIES[family]
    except KeyError:
        raise ValueError(
            f"unknown family {family!r} (valid: {', '.join(sorted(FAMILIES))})"
        ) from None
    return fam.make_analytic(grid, params)
