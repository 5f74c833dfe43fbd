"""Coordinate charts, differentiable fields, metrics and TM curvature.

Everything lives on open boxes.  Fields are plain callables evaluated
through dual numbers, so first and second derivatives are exact; central
finite differences are available separately as a cross-check oracle.

Curvature convention used throughout:

    R(U, V)W = nabla_U nabla_V W - nabla_V nabla_U W - nabla_{[U,V]} W

Under this convention the round unit sphere fits scalar factor s = +1 and
the hyperbolic plane s = -1 in ``scalar_form_fit``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import dual
from .dual import value

INTERIOR_MARGIN = 1e-9


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class Chart:
    """Open box in R^n; bounds may be infinite."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(x) for x in self.lower)
        hi = tuple(float(x) for x in self.upper)
        if len(lo) != len(hi):
            raise GeometryError("lower/upper must have equal length")
        if not all(a < b for a, b in zip(lo, hi)):
            raise GeometryError("need lower < upper on every axis")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def contains(self, m, margin: float = INTERIOR_MARGIN) -> bool:
        m = value(np.asarray(m, dtype=object))
        return all(lo + margin <= x <= hi - margin
                   for x, lo, hi in zip(m, self.lower, self.upper))

    def require_interior(self, m, margin: float = INTERIOR_MARGIN):
        if not self.contains(m, margin):
            raise GeometryError(f"point {value(np.asarray(m, dtype=object))} outside chart interior")

    def boundary_distance(self, m) -> float:
        m = value(np.asarray(m, dtype=object))
        d = np.inf
        for x, lo, hi in zip(m, self.lower, self.upper):
            if np.isfinite(lo):
                d = min(d, x - lo)
            if np.isfinite(hi):
                d = min(d, hi - x)
        return float(d)

    def sample_box(self, clip: float = 2.0) -> tuple[np.ndarray, np.ndarray]:
        """Bounded box used for sampling; infinite axes are clipped."""
        lo = np.array([max(a, -clip) for a in self.lower])
        hi = np.array([min(b, clip) for b in self.upper])
        return lo, hi

    def sample_points(self, rng: np.random.Generator, count: int,
                      shrink: float = 0.05, clip: float = 2.0) -> np.ndarray:
        lo, hi = self.sample_box(clip)
        pad = shrink * (hi - lo)
        return rng.uniform(lo + pad, hi - pad, size=(count, self.dim))

    def halton_points(self, count: int, shrink: float = 0.02, clip: float = 2.0) -> np.ndarray:
        """Deterministic low-discrepancy samples in the (clipped) box."""
        lo, hi = self.sample_box(clip)
        pad = shrink * (hi - lo)
        pts = _halton(count, self.dim)
        return (lo + pad) + pts * ((hi - pad) - (lo + pad))

    def intersect(self, other: "Chart") -> "Chart | None":
        lo = tuple(max(a, b) for a, b in zip(self.lower, other.lower))
        hi = tuple(min(a, b) for a, b in zip(self.upper, other.upper))
        if not all(a < b for a, b in zip(lo, hi)):
            return None
        return Chart(lo, hi)


def _halton(count: int, dim: int) -> np.ndarray:
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    out = np.zeros((count, dim))
    for d in range(dim):
        b = primes[d % len(primes)]
        for i in range(count):
            f, r, n = 1.0, 0.0, i + 1
            while n > 0:
                f /= b
                r += f * (n % b)
                n //= b
            out[i, d] = r
    return out


@dataclass(frozen=True)
class SmoothField:
    """Point-to-value assignment on a chart, dual-number evaluable.

    ``shape`` is the output shape: () scalar, (n,) tangent vector, (r,)
    fiber vector, (n, n) bilinear form, and so on.
    """

    chart: Chart
    shape: tuple[int, ...]
    fn: Callable
    name: str = ""

    def __call__(self, m):
        return self.fn(m)

    @staticmethod
    def constant(chart: Chart, val, name: str = "") -> "SmoothField":
        arr = np.asarray(val, dtype=float)
        return SmoothField(chart, arr.shape, lambda m, _a=arr: _a.copy(), name=name)


def as_point(m) -> np.ndarray:
    m = np.asarray(m)
    if m.dtype != object:
        m = m.astype(float).astype(object)
    return m


def vector_field(chart: Chart, fn, name: str = "") -> SmoothField:
    return SmoothField(chart, (chart.dim,), fn, name=name)


def lie_bracket_vf(V, W, m):
    """Jacobi-Lie bracket [V, W](m) = (DW)V - (DV)W."""
    m = as_point(m)
    vm = np.asarray(V(m), dtype=object)
    wm = np.asarray(W(m), dtype=object)
    dw = dual.jacobian(lambda p: np.asarray(W(p), dtype=object), m)
    dv = dual.jacobian(lambda p: np.asarray(V(p), dtype=object), m)
    return dw @ vm - dv @ wm


@dataclass(frozen=True)
class TMConnection:
    """Linear connection on the tangent bundle of a chart.

    ``christoffel(m)`` returns shape (n, n, n) with layout [k, i, j] for
    Gamma^k_{ij}: (nabla_U V)^k = U^i d_i V^k + Gamma^k_{ij} U^i V^j.
    """

    chart: Chart
    christoffel: Callable

    def covariant_vec(self, V, W, m):
        """nabla_V W at m for vector-field callables V, W."""
        m = as_point(m)
        vm = np.asarray(V(m), dtype=object)
        gm = np.asarray(self.christoffel(m), dtype=object)
        dw = dual.jacobian(lambda p: np.asarray(W(p), dtype=object), m)
        wm = np.asarray(W(m), dtype=object)
        return dw @ vm + np.einsum("kij,i,j->k", gm, vm, wm)


def flat_connection(chart: Chart) -> TMConnection:
    n = chart.dim
    zeros = np.zeros((n, n, n))
    return TMConnection(chart, lambda m: zeros)


def frame_connection(chart: Chart, frame: Callable) -> TMConnection:
    """Connection whose parallel fields are the columns of ``frame(m)``.

    Gamma^k_{ij} = -(d_i E)^k_a (E^{-1})^a_j so that nabla E_a = 0.
    """
    def christoffel(m):
        m = as_point(m)
        E = np.asarray(frame(m), dtype=object)
        dE = dual.jacobian(lambda p: np.asarray(frame(p), dtype=object), m)  # (n, n, n)=(k, a, i)
        Einv = dual.inv(E)
        return -np.einsum("kai,aj->kij", dE, Einv)
    return TMConnection(chart, christoffel)


def levi_civita(metric: SmoothField) -> TMConnection:
    """Torsion-free metric connection from the Koszul formula."""
    chart = metric.chart

    def christoffel(m):
        m = as_point(m)
        g = np.asarray(metric(m), dtype=object)
        if np.min(np.linalg.eigvalsh(value(g))) <= 0:
            raise GeometryError("metric not positive definite at sample point")
        dg = dual.jacobian(lambda p: np.asarray(metric(p), dtype=object), m)  # (i, j, l)
        ginv = dual.inv(g)
        # Gamma_{l i j} = (d_i g_{jl} + d_j g_{il} - d_l g_{ij}) / 2
        lower = 0.5 * (np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg)
                       - np.einsum("ijl->lij", dg))
        return np.einsum("kl,lij->kij", ginv, lower)

    return TMConnection(chart, christoffel)


def curvature_tm(conn: TMConnection, m, U, V, W, check_interior: bool = True):
    """R(U, V)W at m for constant-coefficient U, V, W."""
    m = as_point(m)
    if check_interior:
        conn.chart.require_interior(m)
    U = np.asarray(U, dtype=object)
    V = np.asarray(V, dtype=object)
    W = np.asarray(W, dtype=object)
    G = np.asarray(conn.christoffel(m), dtype=object)
    dG = dual.jacobian(lambda p: np.asarray(conn.christoffel(p), dtype=object), m)  # (k, i, j, d)
    # R(U,V)W^k = U^i V^j (d_i G^k_{jb} - d_j G^k_{ib}
    #             + G^k_{im} G^m_{jb} - G^k_{jm} G^m_{ib}) W^b
    term = (np.einsum("kjbi,i,j,b->k", dG, U, V, W)
            - np.einsum("kibj,i,j,b->k", dG, U, V, W))
    quad = (np.einsum("kim,mjb,i,j,b->k", G, G, U, V, W)
            - np.einsum("kjm,mib,i,j,b->k", G, G, U, V, W))
    return term + quad


def curvature_tensor(conn: TMConnection, m) -> np.ndarray:
    """Full R[l, k, i, j] = (R(e_i, e_j) e_k)^l at m, as floats."""
    return value(curvature_tensor_obj(conn, m))


def curvature_tensor_obj(conn: TMConnection, m, check_interior: bool = False) -> np.ndarray:
    """Curvature tensor preserving dual layers of the evaluation point.

    Interior checking is off by default: this is evaluation plumbing for
    derived fields, which integrators probe right up to chart edges.
    """
    m = as_point(m)
    n = conn.chart.dim
    eye = np.eye(n)
    out = np.zeros((n, n, n, n), dtype=object)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(n):
                r = np.asarray(curvature_tm(conn, m, eye[i], eye[j], eye[k],
                                            check_interior=check_interior), dtype=object)
                out[:, k, i, j] = r
                out[:, k, j, i] = -r
    return out


@dataclass(frozen=True)
class ScalarFormFit:
    s: float
    residual: float


def scalar_form_fit(conn: TMConnection, metric: SmoothField, m) -> ScalarFormFit:
    """Least-squares fit of R(U,V)W to s (sigma(V,W) U - sigma(U,W) V)."""
    m = as_point(m)
    conn.chart.require_interior(m)
    n = conn.chart.dim
    R = curvature_tensor(conn, m)
    g = value(np.asarray(metric(m), dtype=object))
    eye = np.eye(n)
    B = (np.einsum("jk,li->lkij", g, eye) - np.einsum("ik,lj->lkij", g, eye))
    denom = float(np.sum(B * B))
    if denom == 0.0:
        return ScalarFormFit(0.0, float(np.linalg.norm(R)))
    s = float(np.sum(R * B) / denom)
    return ScalarFormFit(s, float(np.linalg.norm(R - s * B)))


# -- finite-difference oracles ------------------------------------------------

def fd_jacobian(f, m, h: float = 1e-5) -> np.ndarray:
    """Central-difference Jacobian; cross-check only, never load-bearing."""
    m = np.asarray(m, dtype=float)
    n = len(m)
    cols = []
    for k in range(n):
        dp = np.zeros(n)
        dp[k] = h
        cols.append((np.asarray(f(m + dp), dtype=float)
                     - np.asarray(f(m - dp), dtype=float)) / (2 * h))
    return np.stack(cols, axis=-1)


# -- bundled metric catalog ---------------------------------------------------

def euclidean_metric(n: int) -> SmoothField:
    chart = Chart((-np.inf,) * n, (np.inf,) * n)
    return SmoothField.constant(chart, np.eye(n), name=f"euclidean({n})")


def sphere_metric(n: int = 2) -> SmoothField:
    """Round unit sphere in polar coordinates.

    For n = 2: coordinates (theta, phi), sigma = diag(1, sin^2 theta) on
    theta in (0.2, pi - 0.2).  Higher n uses iterated polar angles.
    """
    lo = [0.2] * (n - 1) + [-3.0]
    hi = [np.pi - 0.2] * (n - 1) + [3.0]
    chart = Chart(tuple(lo), tuple(hi))

    def fn(m):
        m = as_point(m)
        g = np.zeros((n, n), dtype=object)
        g[0, 0] = 1.0
        acc = 1.0
        for k in range(1, n):
            s = dual.sin(m[k - 1])
            acc = acc * s * s
            g[k, k] = acc
        return g

    return SmoothField(chart, (n, n), fn, name=f"sphere({n})")


def hyperbolic_metric(n: int = 2) -> SmoothField:
    """Upper half-space metric (sum dx_i^2) / x_n^2 with x_n > 0."""
    lo = [-3.0] * (n - 1) + [0.3]
    hi = [3.0] * (n - 1) + [3.0]
    chart = Chart(tuple(lo), tuple(hi))

    def fn(m):
        m = as_point(m)
        y = m[n - 1]
        inv2 = 1.0 / (y * y)
        g = np.zeros((n, n), dtype=object)
        for k in range(n):
            g[k, k] = inv2
        return g

    return SmoothField(chart, (n, n), fn, name=f"hyperbolic({n})")


def ellipsoid_metric(c: float = 1.3) -> SmoothField:
    """Induced metric on an ellipsoid with axes (1, 1, c); non-constant
    curvature when c != 1."""
    chart = Chart((0.3, -3.0), (np.pi - 0.3, 3.0))

    def fn(m):
        m = as_point(m)
        th = m[0]
        ct, st = dual.cos(th), dual.sin(th)
        g = np.zeros((2, 2), dtype=object)
        g[0, 0] = ct * ct + (c * c) * st * st
        g[1, 1] = st * st
        return g

    return SmoothField(chart, (2, 2), fn, name="ellipsoid")


METRIC_CATALOG = {
    "euclidean": euclidean_metric,
    "sphere": sphere_metric,
    "hyperbolic": hyperbolic_metric,
}


def metric_by_name(name: str) -> SmoothField:
    """Resolve names like ``euclidean(2)`` or ``sphere(2)``."""
    name = name.strip()
    if "(" in name and name.endswith(")"):
        base, arg = name[:-1].split("(", 1)
        if base not in METRIC_CATALOG:
            raise GeometryError(f"unknown metric family {base!r}")
        return METRIC_CATALOG[base](int(arg))
    if name == "ellipsoid":
        return ellipsoid_metric()
    raise GeometryError(f"unknown metric name {name!r}")
