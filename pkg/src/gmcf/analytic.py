"""Closed-form map families and their exact jets.

These evaluators are the reference side of every discretization check: the
values, first derivatives, and second derivatives come from hand-derived
chain-rule formulas, never from finite differences.  Reference geometry
built on top of them (metric inverse, eigenvalues) goes through
``numpy.linalg`` so that the closed-form kernels in :mod:`gmcf.geometry`
are checked against an independent route.

Point arguments have shape ``(n,)`` or ``(n, *batch)``; results carry the
same trailing batch shape.  Evaluators are pure and periodic, so points
outside the fundamental box are wrapped implicitly by the trigonometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, eq=False)
class AnalyticMap:
    """A map family member with exact periodic part and derivatives.

    The full map is ``f(x) = winding @ x + u(x)`` where ``u`` is periodic.
    ``_u``, ``_du``, ``_d2u`` evaluate ``u`` and its first and second
    derivatives at points of shape ``(n, *batch)``.
    """

    family: str
    n: int
    m: int
    winding: np.ndarray
    _u: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _du: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    _d2u: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def periodic_part(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self._u(x)

    def value(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lin = np.einsum("an,n...->a...", self.winding, x)
        return lin + self._u(x)

    def jet(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Value, first derivative ``(m, n, ...)``, second derivative ``(m, n, n, ...)``."""
        x = np.asarray(x, dtype=float)
        batch = x.shape[1:]
        du = self._du(x)
        D = du + self.winding.reshape((self.m, self.n) + (1,) * len(batch))
        return self.value(x), D, self._d2u(x)


def _point(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[:1] != (n,):
        raise ValueError(f"point has leading dimension {x.shape[:1]}, expected ({n},)")
    return x


def analytic_jet(amap: AnalyticMap, point) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact value and derivatives of a family member at a point."""
    return amap.jet(_point(point, amap.n))


def reference_velocity(amap: AnalyticMap, point) -> np.ndarray:
    """Exact flow velocity ``g^{ij} d_i d_j f`` at a point.

    The metric inverse is taken with ``numpy.linalg.inv`` on purpose: this
    keeps the oracle independent of the closed-form inverse used by the
    solver path.
    """
    x = _point(point, amap.n)
    _, D, D2 = amap.jet(x)
    n = amap.n
    C = np.einsum("ai...,aj...->ij...", D, D)
    g = C.copy()
    for i in range(n):
        g[i, i] += 1.0
    gmat = np.moveaxis(g, (0, 1), (-2, -1))
    ginv = np.linalg.inv(gmat)
    ginv = np.moveaxis(ginv, (-2, -1), (0, 1))
    return np.einsum("ij...,aij...->a...", ginv, D2)


def reference_divergence_form(amap: AnalyticMap, point) -> np.ndarray:
    """Exact divergence-form residual of a scalar graph at a point.

    For ``m = 1`` expands ``sum_i d_i ( f_i / sqrt(1 + |grad f|^2) )`` by the
    chain rule:  ``sum_i [ f_ii / W - f_i (sum_j f_j f_ji) / W^3 ]`` with
    ``W = sqrt(1 + |grad f|^2)``.
    """
    if amap.m != 1:
        raise ValueError("divergence form is defined for scalar graphs (m = 1)")
    x = _point(point, amap.n)
    _, D, D2 = amap.jet(x)
    grad = D[0]
    hess = D2[0]
    W = np.sqrt(1.0 + (grad**2).sum(axis=0))
    div = np.zeros(W.shape)
    for i in range(amap.n):
        cross = sum(grad[j] * hess[j, i] for j in range(amap.n))
        div = div + hess[i, i] / W - grad[i] * cross / W**3
    return div


def _zero_periodic(n: int, m: int):
    def u(x):
        return np.zeros((m,) + x.shape[1:])

    def du(x):
        return np.zeros((m, n) + x.shape[1:])

    def d2u(x):
        return np.zeros((m, n, n) + x.shape[1:])

    return u, du, d2u


def identity_map(period) -> AnalyticMap:
    """Identity of the torus with the given periods."""
    per = tuple(float(L) for L in period)
    n = len(per)
    u, du, d2u = _zero_periodic(n, n)
    return AnalyticMap("identity", n, n, np.eye(n), u, du, d2u)


def linear_map(winding, n: int | None = None) -> AnalyticMap:
    """Purely linear map ``x -> W x`` with zero periodic part."""
    W = np.asarray(winding, dtype=float)
    if W.ndim != 2:
        raise ValueError(f"winding must be a matrix, got shape {W.shape}")
    m, ncols = W.shape
    if n is not None and n != ncols:
        raise ValueError(f"winding has {ncols} columns, expected {n}")
    u, du, d2u = _zero_periodic(ncols, m)
    return AnalyticMap("linear", ncols, m, W.copy(), u, du, d2u)


def shear_composition_map(
    eps: float, delta: float, k1: int = 1, k2: int = 1, period=(TWO_PI, TWO_PI)
) -> AnalyticMap:
    """Composition of two torus shears; its differential has determinant one.

    ``f(x, y) = (x + a(y), y + b(x + a(y)))`` with ``a(y) = eps sin(w2 y)``
    and ``b(s) = delta sin(w1 s)``, where ``w_i = 2 pi k_i / L_i``.
    """
    per = tuple(float(L) for L in period)
    if len(per) != 2:
        raise ValueError("shear composition is a 2-d family")
    k1 = int(k1)
    k2 = int(k2)
    if k1 < 1 or k2 < 1:
        raise ValueError(f"shear frequencies must be positive integers, got {k1}, {k2}")
    eps = float(eps)
    delta = float(delta)
    w1 = TWO_PI * k1 / per[0]
    w2 = TWO_PI * k2 / per[1]

    def parts(x):
        a = eps * np.sin(w2 * x[1])
        ap = eps * w2 * np.cos(w2 * x[1])
        app = -eps * w2 * w2 * np.sin(w2 * x[1])
        s = x[0] + a
        b = delta * np.sin(w1 * s)
        bp = delta * w1 * np.cos(w1 * s)
        bpp = -delta * w1 * w1 * np.sin(w1 * s)
        return a, ap, app, b, bp, bpp

    def u(x):
        a, _, _, b, _, _ = parts(x)
        return np.stack([a, b])

    def du(x):
        _, ap, _, _, bp, _ = parts(x)
        zero = np.zeros(x.shape[1:])
        return np.stack(
            [
                np.stack([zero, ap]),
                np.stack([bp, bp * ap]),
            ]
        )

    def d2u(x):
        _, ap, app, _, bp, bpp = parts(x)
        zero = np.zeros(x.shape[1:])
        # Component 1: u1 = a(y), so only the yy entry survives.
        r1 = np.stack([np.stack([zero, zero]), np.stack([zero, app])])
        # Component 2: u2 = b(x + a(y)); chain rule in both slots.
        uxx = bpp
        uxy = bpp * ap
        uyy = bpp * ap * ap + bp * app
        r2 = np.stack([np.stack([uxx, uxy]), np.stack([uxy, uyy])])
        return np.stack([r1, r2])

    return AnalyticMap("shear_composition", 2, 2, np.eye(2), u, du, d2u)


def product_sine_map(amplitudes, wavevectors, phases=None, period=None) -> AnalyticMap:
    """Null-homotopic map with one sinusoid per component.

    Component ``a`` is ``A_a sin(sum_i w_ai x_i + phi_a)`` with angular
    frequencies ``w_ai = 2 pi k_ai / L_i`` for integer mode vectors ``k_a``.
    """
    A = np.asarray(amplitudes, dtype=float)
    if A.ndim != 1 or A.size == 0:
        raise ValueError("amplitudes must be a non-empty vector")
    m = A.size
    K = np.asarray(wavevectors)
    if K.ndim != 2 or K.shape[0] != m:
        raise ValueError(f"wavevectors must have shape ({m}, n), got {K.shape}")
    if not np.equal(np.asarray(K, dtype=float), np.round(np.asarray(K, dtype=float))).all():
        raise ValueError("wavevectors must be integer vectors")
    K = np.asarray(K, dtype=float)
    n = K.shape[1]
    per = (TWO_PI,) * n if period is None else tuple(float(L) for L in period)
    if len(per) != n:
        raise ValueError(f"period has {len(per)} entries, expected {n}")
    phi = np.zeros(m) if phases is None else np.asarray(phases, dtype=float)
    if phi.shape != (m,):
        raise ValueError(f"phases must have shape ({m},), got {phi.shape}")
    # Angular frequencies per component and axis.
    w = K * (TWO_PI / np.asarray(per))

    def theta(x):
        return np.tensordot(w, x, axes=(1, 0)) + phi.reshape((m,) + (1,) * (x.ndim - 1))

    def u(x):
        return A.reshape((m,) + (1,) * (x.ndim - 1)) * np.sin(theta(x))

    def du(x):
        c = np.cos(theta(x))
        Ar = A.reshape((m,) + (1,) * (x.ndim - 1))
        return np.einsum("ai,a...->ai...", w, Ar * c)

    def d2u(x):
        s = np.sin(theta(x))
        Ar = A.reshape((m,) + (1,) * (x.ndim - 1))
        return np.einsum("ai,aj,a...->aij...", w, w, -Ar * s)

    return AnalyticMap("product_sine", n, m, np.zeros((m, n)), u, du, d2u)


def scalar_bump_map(amplitude: float, wavevector, phases=None, period=None) -> AnalyticMap:
    """Scalar graph ``A * prod_i sin(w_i x_i + phi_i)`` over the active axes.

    Axes with a zero mode index do not contribute a factor; with every
    index zero the map is the constant ``A``.
    """
    k = np.asarray(wavevector)
    if k.ndim != 1 or k.size == 0:
        raise ValueError("wavevector must be a non-empty integer vector")
    if not np.equal(np.asarray(k, dtype=float), np.round(np.asarray(k, dtype=float))).all():
        raise ValueError("wavevector must be an integer vector")
    k = np.asarray(k, dtype=float)
    n = k.size
    amplitude = float(amplitude)
    per = (TWO_PI,) * n if period is None else tuple(float(L) for L in period)
    if len(per) != n:
        raise ValueError(f"period has {len(per)} entries, expected {n}")
    phi = np.zeros(n) if phases is None else np.asarray(phases, dtype=float)
    if phi.shape != (n,):
        raise ValueError(f"phases must have shape ({n},), got {phi.shape}")
    w = k * (TWO_PI / np.asarray(per))
    active = [i for i in range(n) if k[i] != 0.0]

    def factors(x):
        s = [np.sin(w[i] * x[i] + phi[i]) if i in active else None for i in range(n)]
        c = [np.cos(w[i] * x[i] + phi[i]) if i in active else None for i in range(n)]
        return s, c

    def prod_except(s, shape, skip=()):
        out = np.ones(shape)
        for i in active:
            if i not in skip:
                out = out * s[i]
        return out

    def u(x):
        s, _ = factors(x)
        return (amplitude * prod_except(s, x.shape[1:]))[None]

    def du(x):
        s, c = factors(x)
        out = np.zeros((1, n) + x.shape[1:])
        for i in active:
            out[0, i] = amplitude * w[i] * c[i] * prod_except(s, x.shape[1:], skip=(i,))
        return out

    def d2u(x):
        s, c = factors(x)
        out = np.zeros((1, n, n) + x.shape[1:])
        for i in active:
            out[0, i, i] = -amplitude * w[i] * w[i] * s[i] * prod_except(
                s, x.shape[1:], skip=(i,)
            )
            for j in active:
                if j > i:
                    mixed = (
                        amplitude
                        * w[i]
                        * w[j]
                        * c[i]
                        * c[j]
                        * prod_except(s, x.shape[1:], skip=(i, j))
                    )
                    out[0, i, j] = mixed
                    out[0, j, i] = mixed
        return out

    return AnalyticMap("scalar_bump", n, 1, np.zeros((1, n)), u, du, d2u)
