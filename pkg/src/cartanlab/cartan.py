"""Associated connections, torsion, cocurvature and certification.

The two associated fiber-direction connections of a chart connection are

    nabla_bar_X V = #(nabla_V X) + [#X, V]          (on tangent vectors)
    nabla_bar_X Y = nabla_{#Y} X + [X, Y]           (on fiber sections)

and the torsion of the latter recovers the stored torsion field.  A
connection is certified Cartan through the vanishing of its cocurvature

    c(X, Y)V = nabla_V [X,Y] - [nabla_V X, Y] - [X, nabla_V Y]
               + nabla_{nabla_bar_X V} Y - nabla_{nabla_bar_Y V} X

and flat through the vanishing of its ordinary curvature.  Cocurvature is
tensorial, so it is evaluated on constant-in-trivialization extensions;
a finite-difference cross-check of extension independence lives in the
test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dual
from .dual import value
from .algebra import LieAlgebra
from .algebroid import AlgebroidChart
from .geometry import as_point, lie_bracket_vf


@dataclass(frozen=True)
class TensorReport:
    op: str
    max_residual: float
    tol: float
    per_point: tuple[float, ...] = ()
    sample_points: tuple = ()
    details: dict = field(default_factory=dict)

    @property
    def verdict(self) -> bool:
        return self.max_residual <= self.tol

    def __str__(self):
        word = "pass" if self.verdict else "FAIL"
        return f"{self.op}: max residual {self.max_residual:.3e} (tol {self.tol:.1e}) {word}"


def nabla_bar_tm(C: AlgebroidChart, X, V, m):
    """Associated fiber-direction derivative of a tangent field."""
    m = as_point(m)
    C.base.require_interior(m)
    X = C.section(X)
    V = C.vector(V)
    first = np.asarray(C.anchor(m), dtype=object) @ C.conn(V, X, m)
    second = lie_bracket_vf(C.anchor_of(X), V, m)
    return first + second


def nabla_bar_g(C: AlgebroidChart, X, Y, m):
    """Associated fiber-direction derivative of a fiber section."""
    m = as_point(m)
    C.base.require_interior(m)
    X = C.section(X)
    Y = C.section(Y)
    return C.conn(C.anchor_of(Y), X, m) + C.bracket(X, Y)(m)


def torsion_bar(C: AlgebroidChart, x, y, m):
    """Torsion of the associated connection on constant extensions.

    Equals the stored torsion field by construction of the derived
    bracket; kept as an explicit consistency probe.
    """
    m = as_point(m)
    C.base.require_interior(m)
    X, Y = C.section(x), C.section(y)
    return (C.conn(C.anchor_of(Y), X, m) - C.conn(C.anchor_of(X), Y, m)
            + C.bracket(X, Y)(m))


def cocurvature(C: AlgebroidChart, x, y, v, m):
    """Cocurvature on constant extensions of x, y (fiber) and v (tangent)."""
    m = as_point(m)
    C.base.require_interior(m)
    X, Y = C.section(x), C.section(y)
    V = C.vector(v)
    bXY = C.bracket(X, Y)
    t1 = C.conn(V, bXY, m)
    nVX = lambda p: C.conn(V, X, as_point(p))
    nVY = lambda p: C.conn(V, Y, as_point(p))
    t2 = C.bracket(nVX, Y)(m)
    t3 = C.bracket(X, nVY)(m)
    barXV = lambda p: (np.asarray(C.anchor(as_point(p)), dtype=object) @ C.conn(V, X, as_point(p))
                       + lie_bracket_vf(C.anchor_of(X), V, as_point(p)))
    barYV = lambda p: (np.asarray(C.anchor(as_point(p)), dtype=object) @ C.conn(V, Y, as_point(p))
                       + lie_bracket_vf(C.anchor_of(Y), V, as_point(p)))
    t4 = C.conn(barXV, Y, m)
    t5 = C.conn(barYV, X, m)
    return t1 - t2 - t3 + t4 - t5


def curvature_conn(C: AlgebroidChart, u, v, x, m):
    """Curvature of the chart connection: R(u,v)x with constant u, v, x."""
    m = as_point(m)
    C.base.require_interior(m)
    u = np.asarray(u, dtype=object)
    v = np.asarray(v, dtype=object)
    x = np.asarray(x, dtype=object)
    g = np.asarray(C.gamma(m), dtype=object)
    dg = dual.jacobian(lambda p: np.asarray(C.gamma(as_point(p)), dtype=object), m)  # (i,a,b,k)
    curl = np.einsum("jabi,i,j->ab", dg, u, v) - np.einsum("iabj,i,j->ab", dg, u, v)
    gi = np.einsum("iab,i->ab", g, u)
    gj = np.einsum("iab,i->ab", g, v)
    return (curl + gi @ gj - gj @ gi) @ x


def _sample_set(C: AlgebroidChart, samples, seed=42):
    if samples is None:
        return C.base.sample_points(np.random.default_rng(seed), 50)
    if isinstance(samples, int):
        return C.base.sample_points(np.random.default_rng(seed), samples)
    return np.asarray(samples, dtype=float)


def is_cartan(C: AlgebroidChart, samples=None, tol: float = 1e-7, seed: int = 42) -> TensorReport:
    """Max cocurvature residual over samples and frame combinations."""
    pts = _sample_set(C, samples, seed)
    r, n = C.rank, C.base.dim
    eyer, eyen = np.eye(r), np.eye(n)
    per = []
    for m in pts:
        worst = 0.0
        for a in range(r):
            for b in range(a + 1, r):
                for k in range(n):
                    c = cocurvature(C, eyer[a], eyer[b], eyen[k], m)
                    worst = max(worst, float(np.max(np.abs(value(np.asarray(c, dtype=object))))))
        per.append(worst)
    mx = max(per) if per else 0.0
    return TensorReport("is_cartan", mx, tol, tuple(per), tuple(map(tuple, pts)))


def is_flat(C: AlgebroidChart, samples=None, tol: float = 1e-7, seed: int = 42) -> TensorReport:
    """Max curvature residual of the chart connection over samples."""
    pts = _sample_set(C, samples, seed)
    r, n = C.rank, C.base.dim
    eyer, eyen = np.eye(r), np.eye(n)
    per = []
    for m in pts:
        worst = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                for a in range(r):
                    c = curvature_conn(C, eyen[i], eyen[j], eyer[a], m)
                    worst = max(worst, float(np.max(np.abs(value(np.asarray(c, dtype=object))))))
        per.append(worst)
    mx = max(per) if per else 0.0
    return TensorReport("is_flat", mx, tol, tuple(per), tuple(map(tuple, pts)))


def fiber_bracket_at(C: AlgebroidChart, m0, jacobi_tol: float = 1e-6) -> LieAlgebra:
    """Lie algebra read off the torsion at a point of a flat Cartan chart.

    Raises if the extracted table fails the Jacobi identity, which signals
    a violated flatness/Cartan precondition.
    """
    m0 = as_point(m0)
    C.base.require_interior(m0)
    t = value(np.asarray(C.torsion(m0), dtype=object))
    c = np.einsum("cab->abc", t)
    return LieAlgebra(c, tol=jacobi_tol)


def check_morphism(C1: AlgebroidChart, C2: AlgebroidChart, Phi, phi,
                   tol: float = 1e-7, samples=None, seed: int = 42) -> TensorReport:
    """Morphism conditions for a connection-preserving bundle map.

    Phi(m) is the fiber matrix (rank2 x rank1), phi the base map.  Checks
    anchor intertwining and torsion intertwining; connection preservation
    is the caller's obligation and is spot-checked by the pointwise
    intertwining of the connection coefficient matrices.
    """
    pts = _sample_set(C1, samples if samples is not None else 7, seed)
    if callable(Phi):
        phi_mat = Phi
    else:
        const = np.asarray(Phi, dtype=float)
        phi_mat = lambda m: const
    res_anchor = 0.0
    res_torsion = 0.0
    res_conn = 0.0
    n1 = C1.base.dim
    for m in pts:
        m = as_point(m)
        pm = phi(m)
        if not C2.base.contains(pm):
            raise ValueError("base map image escapes target chart")
        P = np.asarray(phi_mat(m), dtype=object)
        dphi = dual.jacobian(lambda p: np.asarray(phi(as_point(p)), dtype=object), m)
        a1 = value(np.asarray(C1.anchor(m), dtype=object))
        a2 = value(np.asarray(C2.anchor(as_point(pm)), dtype=object))
        res_anchor = max(res_anchor, float(np.max(np.abs(
            a2 @ value(P) - value(dphi) @ a1))))
        t1 = value(np.asarray(C1.torsion(m), dtype=object))
        t2 = value(np.asarray(C2.torsion(as_point(pm)), dtype=object))
        Pv = value(P)
        lhs = np.einsum("cd,dab->cab", Pv, t1)
        rhs = np.einsum("cde,da,eb->cab", t2, Pv, Pv)
        res_torsion = max(res_torsion, float(np.max(np.abs(lhs - rhs))))
        # connection preservation: P Gamma1(v) - d_v P = Gamma2(Dphi v) P
        g1 = value(np.asarray(C1.gamma(m), dtype=object))
        g2 = value(np.asarray(C2.gamma(as_point(pm)), dtype=object))
        dP = value(dual.jacobian(lambda p: np.asarray(phi_mat(as_point(p)), dtype=object), m))
        for k in range(n1):
            v = np.eye(n1)[k]
            w = value(dphi) @ v
            lhs_c = Pv @ np.einsum("iab,i->ab", g1, v) - dP[:, :, k]
            rhs_c = np.einsum("iab,i->ab", g2, w) @ Pv
            res_conn = max(res_conn, float(np.max(np.abs(lhs_c - rhs_c))))
    mx = max(res_anchor, res_torsion, res_conn)
    return TensorReport("check_morphism", mx, tol,
                        details={"anchor": res_anchor, "torsion": res_torsion,
                                 "connection": res_conn})
