"""Pointwise geometry of graph maps.

Everything derives from the node jets of a map: the induced metric
``g = I + (df)^T df``, its determinant and inverse in closed form (the
domain dimension never exceeds 3), singular values of ``df`` from the
eigenvalues of ``(df)^T df``, and the flow velocity ``g^{ij} d_i d_j f``.
Component axes lead, grid axes trail, so every kernel broadcasts over the
nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .grid import GridSpec, ScalarField, _d1, _d2_pure
from .maps import MapField


@dataclass(frozen=True, eq=False)
class JetField:
    """First and second derivatives of a map at every node.

    ``first`` has shape ``(m, n, *resolution)`` and includes the winding
    contribution; ``second`` has shape ``(m, n, n, *resolution)`` and is
    symmetric in the two derivative slots at every node.
    """

    grid: GridSpec
    first: np.ndarray
    second: np.ndarray

    def __post_init__(self) -> None:
        n = self.grid.n
        m = self.first.shape[0]
        if self.first.shape != (m, n) + self.grid.resolution:
            raise ValueError(f"first derivative has shape {self.first.shape}")
        if self.second.shape != (m, n, n) + self.grid.resolution:
            raise ValueError(f"second derivative has shape {self.second.shape}")

    @property
    def m(self) -> int:
        return self.first.shape[0]


@dataclass(frozen=True, eq=False)
class MetricField:
    """Induced metric data at every node.

    ``sigma`` holds the ``min(n, m)`` singular values of ``df`` per node in
    non-increasing order; ``sqrt_det`` is the area element ``sqrt(det g)``.
    """

    grid: GridSpec
    g: np.ndarray
    ginv: np.ndarray
    sqrt_det: np.ndarray
    sigma: np.ndarray


def jet(field_map: MapField, order: int = 2) -> JetField:
    """Node jets of a map by periodic centered differences.

    Mixed second derivatives are composed first differences taken in a
    canonical axis order, so ``second[a, i, j]`` and ``second[a, j, i]``
    are equal bitwise.
    """
    grid = field_map.grid
    u = field_map.periodic_part
    W = field_map.winding
    n = grid.n
    m = field_map.m
    h = grid.spacing
    first = np.empty((m, n) + grid.resolution)
    second = np.empty((m, n, n) + grid.resolution)
    for a in range(m):
        ua = u[a]
        for i in range(n):
            first[a, i] = _d1(ua, h[i], i, order)
            first[a, i] += W[a, i]
            second[a, i, i] = _d2_pure(ua, h[i], i, order)
            for j in range(i + 1, n):
                mixed = _d1(_d1(ua, h[j], j, order), h[i], i, order)
                second[a, i, j] = mixed
                second[a, j, i] = mixed
    return JetField(grid, first, second)


def _det_sym(g: np.ndarray, n: int) -> np.ndarray:
    if n == 1:
        return g[0, 0].copy()
    if n == 2:
        return g[0, 0] * g[1, 1] - g[0, 1] * g[0, 1]
    return (
        g[0, 0] * (g[1, 1] * g[2, 2] - g[1, 2] * g[1, 2])
        - g[0, 1] * (g[0, 1] * g[2, 2] - g[1, 2] * g[0, 2])
        + g[0, 2] * (g[0, 1] * g[1, 2] - g[1, 1] * g[0, 2])
    )


def _inv_sym(g: np.ndarray, det: np.ndarray, n: int) -> np.ndarray:
    inv = np.empty_like(g)
    if n == 1:
        inv[0, 0] = 1.0 / det
        return inv
    if n == 2:
        inv[0, 0] = g[1, 1] / det
        inv[1, 1] = g[0, 0] / det
        inv[0, 1] = inv[1, 0] = -g[0, 1] / det
        return inv
    # Adjugate of a symmetric 3x3, six distinct cofactors.
    inv[0, 0] = (g[1, 1] * g[2, 2] - g[1, 2] * g[1, 2]) / det
    inv[1, 1] = (g[0, 0] * g[2, 2] - g[0, 2] * g[0, 2]) / det
    inv[2, 2] = (g[0, 0] * g[1, 1] - g[0, 1] * g[0, 1]) / det
    inv[0, 1] = inv[1, 0] = (g[0, 2] * g[1, 2] - g[0, 1] * g[2, 2]) / det
    inv[0, 2] = inv[2, 0] = (g[0, 1] * g[1, 2] - g[0, 2] * g[1, 1]) / det
    inv[1, 2] = inv[2, 1] = (g[0, 1] * g[0, 2] - g[0, 0] * g[1, 2]) / det
    return inv


def _eigvals_sym_desc(C: np.ndarray, n: int) -> np.ndarray:
    """Eigenvalues of a symmetric matrix field, non-increasing, closed form."""
    if n == 1:
        return C[0, 0][None].copy()
    if n == 2:
        mean = 0.5 * (C[0, 0] + C[1, 1])
        disc = np.sqrt((0.5 * (C[0, 0] - C[1, 1])) ** 2 + C[0, 1] ** 2)
        return np.stack([mean + disc, mean - disc])
    # Trigonometric form for symmetric 3x3 eigenvalues.
    c00, c11, c22 = C[0, 0], C[1, 1], C[2, 2]
    c01, c02, c12 = C[0, 1], C[0, 2], C[1, 2]
    q = (c00 + c11 + c22) / 3.0
    p1 = c01**2 + c02**2 + c12**2
    p2 = (c00 - q) ** 2 + (c11 - q) ** 2 + (c22 - q) ** 2 + 2.0 * p1
    p = np.sqrt(p2 / 6.0)
    # Guard the isotropic case C = q I, where the normalized matrix is 0/0.
    safe_p = np.where(p > 0.0, p, 1.0)
    b00 = (c00 - q) / safe_p
    b11 = (c11 - q) / safe_p
    b22 = (c22 - q) / safe_p
    b01 = c01 / safe_p
    b02 = c02 / safe_p
    b12 = c12 / safe_p
    half_det = 0.5 * (
        b00 * (b11 * b22 - b12 * b12)
        - b01 * (b01 * b22 - b12 * b02)
        + b02 * (b01 * b12 - b11 * b02)
    )
    r = np.clip(half_det, -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    e1 = q + 2.0 * p * np.cos(phi)
    e3 = q + 2.0 * p * np.cos(phi + 2.0 * math.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    return np.stack([e1, e2, e3])


def induced_metric(jetf: JetField) -> MetricField:
    """Metric ``g = I + (df)^T df`` with inverse, area element, singular values."""
    grid = jetf.grid
    n = grid.n
    m = jetf.m
    D = jetf.first
    C = np.einsum("ai...,aj...->ij...", D, D)
    g = C.copy()
    for i in range(n):
        g[i, i] += 1.0
    det = _det_sym(g, n)
    ginv = _inv_sym(g, det, n)
    sqrt_det = np.sqrt(det)
    eigs = _eigvals_sym_desc(C, n)
    k = min(n, m)
    # Tiny negative eigenvalues are roundoff from the closed forms.
    sigma = np.sqrt(np.clip(eigs[:k], 0.0, None))
    return MetricField(grid, g, ginv, sqrt_det, sigma)


def area(metric: MetricField) -> float:
    """Graph volume ``integral of sqrt(det g)`` by the rectangle rule."""
    return float(metric.sqrt_det.sum() * metric.grid.cell_volume)


def projection_jacobian(metric: MetricField) -> ScalarField:
    """Jacobian ``1 / sqrt(det g)`` of the projection to the domain torus."""
    return ScalarField(metric.grid, 1.0 / metric.sqrt_det)


def jacobian2(jetf: JetField) -> ScalarField:
    """Determinant of ``df`` for maps between surfaces (n = m = 2)."""
    if jetf.grid.n != 2 or jetf.m != 2:
        raise ValueError("map jacobian requires n = m = 2")
    D = jetf.first
    return ScalarField(jetf.grid, D[0, 0] * D[1, 1] - D[0, 1] * D[1, 0])


def two_dilation(metric: MetricField) -> ScalarField:
    """Product of the two largest singular values, zero when min(n, m) < 2."""
    if metric.sigma.shape[0] < 2:
        return ScalarField(metric.grid, np.zeros(metric.grid.resolution))
    return ScalarField(metric.grid, metric.sigma[0] * metric.sigma[1])


def velocity(jetf: JetField, metric: MetricField) -> np.ndarray:
    """Flow velocity ``v^a = g^{ij} d_i d_j f^a`` per node, shape ``(m, *resolution)``."""
    if jetf.grid is not metric.grid and jetf.grid != metric.grid:
        raise ValueError("jet and metric come from different grids")
    return np.einsum("ij...,aij...->a...", metric.ginv, jetf.second)


def mss_residual(field_map: MapField, order: int = 2) -> float:
    """Sup-norm of the flow velocity; zero exactly on discrete minimal graphs."""
    jf = jet(field_map, order)
    return float(np.abs(velocity(jf, induced_metric(jf))).max())


def j1_field(jetf: JetField) -> ScalarField:
    """Projection Jacobian ``1 / sqrt(1 + |grad f|^2)`` of a scalar graph."""
    if jetf.m != 1:
        raise ValueError("scalar graph jacobian requires m = 1")
    D = jetf.first[0]
    return ScalarField(jetf.grid, 1.0 / np.sqrt(1.0 + (D**2).sum(axis=0)))


def div_form_residual(field_map: MapField, order: int = 2) -> ScalarField:
    """Divergence-form residual ``sum_i d_i ( f_i / sqrt(1 + |grad f|^2) )``.

    Defined for scalar graphs; the flux is formed from the discrete jet and
    differentiated with the same centered stencils.
    """
    if field_map.m != 1:
        raise ValueError("divergence form requires a scalar graph (m = 1)")
    grid = field_map.grid
    jf = jet(field_map, order)
    D = jf.first[0]
    slope = np.sqrt(1.0 + (D**2).sum(axis=0))
    res = np.zeros(grid.resolution)
    for i in range(grid.n):
        res += _d1(D[i] / slope, grid.spacing[i], i, order)
    return ScalarField(grid, res)
