"""Development of transitive algebra actions into a homogeneous model.

Given a transitive action on a simply-connected chart and a matrix model
of the simply-connected group integrating the algebra, a base path from
the anchor point is lifted through the anchor's minimum-norm right
inverse and integrated as a right-logarithmic matrix ODE

    dg/dt = (sum_i xi_i(t) G_i) g,    g(0) = I.

The endpoint coset g(1) H0 is the developed image of the path's end.
Equivariant base maps with an algebra twist induce affine maps of the
coset space, and the reconstruction of a locally homogeneous atlas
composes developments with patch lifts and verifies the transitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np
import scipy.linalg

from . import dual
from .dual import value
from .algebra import (AlgebraMap, LieAlgebra, MatrixRealization, Subalgebra,
                      exp_matrix, log_matrix)
from .algebroid import ActionAlgebroid
from .cartan import TensorReport
from .geometry import Chart, as_point
from .ode import integrate
from .transport import BasePath, line_path


class DevelopmentError(RuntimeError):
    pass


@dataclass(frozen=True)
class HomogeneousModel:
    """Matrix model of the simply-connected group with a chosen subgroup.

    ``closure`` records what is asserted about the connected subgroup
    integrating ``h0``: "asserted-closed", "asserted-nonclosed" or
    "unknown".  The realization fixes the global topology used; that
    choice is the scenario author's responsibility and is echoed in
    reports.
    """

    algebra: LieAlgebra
    realization: MatrixRealization
    h0: Subalgebra
    closure: str = "unknown"
    coset_tol: float = 1e-8

    def h0_matrix(self) -> np.ndarray:
        return self.h0.matrix()

    def h0_projector(self) -> np.ndarray:
        """Orthogonal projector onto the complement of span(h0) in
        coordinate space."""
        B = self.h0_matrix()
        n = self.algebra.dim
        if B.shape[1] == 0:
            return np.eye(n)
        q, _ = np.linalg.qr(B)
        return np.eye(n) - q @ q.T


@dataclass(frozen=True)
class Coset:
    g: np.ndarray
    model: HomogeneousModel

    def __post_init__(self):
        g = np.asarray(self.g, dtype=float)
        if abs(np.linalg.det(g)) < 1e-12:
            raise DevelopmentError("coset representative must be invertible")
        object.__setattr__(self, "g", g)


def coset_residual(c1: Coset, c2: Coset) -> float:
    """Distance of g1^-1 g2 from H0: norm of the log component orthogonal
    to span(h0), plus any off-algebra part of the log."""
    H = c1.model
    z = np.linalg.solve(c1.g, c2.g)
    lr = log_matrix(H.realization, z)
    if not lr.in_region:
        return np.inf
    P = H.h0_projector()
    return float(np.linalg.norm(P @ lr.coords) + lr.off_span_residual)


@dataclass(frozen=True)
class EquivariantMap:
    """Base map together with its algebra twist."""

    base_map: Callable
    twist: AlgebraMap

    def compose(self, other: "EquivariantMap") -> "EquivariantMap":
        return EquivariantMap(
            base_map=lambda m: self.base_map(other.base_map(m)),
            twist=self.twist.compose(other.twist),
        )

    @staticmethod
    def identity(g0: LieAlgebra) -> "EquivariantMap":
        return EquivariantMap(lambda m: m, AlgebraMap(g0, g0, np.eye(g0.dim)))


def check_equivariant_twist(A: ActionAlgebroid, E: EquivariantMap,
                            tol: float = 1e-8, samples=None,
                            seed: int = 42) -> TensorReport:
    """Residual of the pushforward identity Dphi(m) xi'(m) = (mu xi)'(phi m)."""
    g0 = A.algebra
    if samples is None:
        samples = A.chart.base.sample_points(np.random.default_rng(seed), 10)
    eye = np.eye(g0.dim)
    res = 0.0
    per = []
    for m in samples:
        m = as_point(m)
        pm = value(np.asarray(E.base_map(m), dtype=object))
        if not A.chart.base.contains(pm):
            raise DevelopmentError("equivariant map image escapes the chart")
        dphi = dual.jacobian(lambda p: np.asarray(E.base_map(as_point(p)), dtype=object), m)
        worst = 0.0
        for i in range(g0.dim):
            lhs = value(dphi @ np.asarray(A.action(eye[i], m), dtype=object))
            rhs = value(np.asarray(A.action(E.twist(eye[i]), as_point(pm)), dtype=object))
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        per.append(worst)
        res = max(res, worst)
    return TensorReport("check_equivariant_twist", res, tol, tuple(per))


# -- development --------------------------------------------------------------

def _chart_of(A):
    return A.chart if isinstance(A, ActionAlgebroid) else A


# keyed by id with a strong reference kept, so a collected chart's address
# can never alias a fresh one
_ORIENTATION_CACHE: dict[int, tuple[object, int]] = {}


def bracket_orientation(chart, tol: float = 1e-6) -> int:
    """Resolved sign of #[X,Y] = sign [#X, #Y] for the chart.

    Charts built from coordinate vector-field brackets come out +1; action
    algebroids over matrix-commutator structure constants come out -1.
    The sign is detected, never assumed, and cached per chart object.
    """
    from .algebroid import check_anchor_homomorphism
    key = id(chart)
    if key not in _ORIENTATION_CACHE:
        pts = chart.base.halton_points(3, shrink=0.2)
        minus = check_anchor_homomorphism(chart, tol=tol, sign=-1, samples=pts)
        if minus.passed:
            _ORIENTATION_CACHE[key] = (chart, -1)
        else:
            plus = check_anchor_homomorphism(chart, tol=tol, sign=1, samples=pts)
            if not plus.passed:
                raise DevelopmentError(
                    "anchor homomorphism fails with either sign; not a Lie algebroid chart")
            _ORIENTATION_CACHE[key] = (chart, 1)
    return _ORIENTATION_CACHE[key][1]


def _lift_fiber(chart, m, v, rank_tol: float = 1e-8):
    """Minimum-norm anchor lift of a tangent vector; errors when the
    anchor is rank-deficient there (transitivity violated)."""
    a = value(np.asarray(chart.anchor(as_point(m)), dtype=object))
    xi, *_ = np.linalg.lstsq(a, v, rcond=None)
    gap = np.max(np.abs(a @ xi - v))
    if gap > rank_tol * (1.0 + np.max(np.abs(v))):
        raise DevelopmentError(f"anchor not surjective along path (gap {gap:.3e})")
    return xi


def develop_point(A, H: HomogeneousModel, path: BasePath,
                  rtol: float = 1e-12, atol: float = 1e-13) -> Coset:
    """Integrate the anchor-lifted path in the model group.

    The lift is re-expressed in the parallel frame transported from the
    path start (for an action algebroid the frame stays the identity), so
    the fiber coordinates match the algebra basis of the model.  Charts
    whose anchor is a plain bracket homomorphism (orientation +1) have
    their lifts negated: left-action generator fields anti-commute, and
    the left-coset formulas downstream assume that picture.
    """
    chart = _chart_of(A)
    d = H.realization.matrix_dim
    r = chart.rank
    sign = -float(bracket_orientation(chart))
    gens = np.stack(H.realization.generators)
    state = np.concatenate([np.eye(r).reshape(-1), np.eye(d).reshape(-1)])
    for seg in path.segments:
        def rhs(t, y, _seg=seg):
            m = _seg.point(t)
            v = value(np.asarray(_seg.velocity(t), dtype=object))
            P = y[:r * r].reshape(r, r)
            G = y[r * r:].reshape(d, d)
            g = value(np.asarray(chart.gamma(as_point(m)), dtype=object))
            gv = np.einsum("iab,i->ab", g, v)
            dP = -gv @ P
            X = _lift_fiber(chart, m, v)
            xi = sign * np.linalg.solve(P, X)
            Xi = np.tensordot(xi, gens, axes=([0], [0]))
            return np.concatenate([dP.reshape(-1), (Xi @ G).reshape(-1)])

        out = integrate(rhs, (seg.t0, seg.t1), state, rtol=rtol, atol=atol)
        if out.status != "completed":
            raise DevelopmentError(f"development ODE failed: {out.status}")
        state = out.states[-1]
    return Coset(state[r * r:].reshape(d, d), H)


def develop_to(A, H: HomogeneousModel, m0, m, rtol: float = 1e-12) -> Coset:
    """Development along the straight segment m0 -> m."""
    return develop_point(A, H, line_path(np.asarray(m0, float), np.asarray(m, float)),
                         rtol=rtol)


def path_independence_check(A, H: HomogeneousModel,
                            path1: BasePath, path2: BasePath,
                            rtol: float = 1e-12) -> float:
    """Coset residual between developments of two homotopic paths with
    equal endpoints."""
    c1, m1 = path1.end
    c2, m2 = path2.end
    if np.max(np.abs(np.asarray(m1) - np.asarray(m2))) > 1e-9:
        raise DevelopmentError("paths must share endpoints")
    g1 = develop_point(A, H, path1, rtol=rtol)
    g2 = develop_point(A, H, path2, rtol=rtol)
    return coset_residual(g1, g2)


def development_jacobian(A, H: HomogeneousModel, m0, m,
                         h: float = 1e-5, rtol: float = 1e-10) -> np.ndarray:
    """Finite-difference Jacobian of the developed coset coordinates.

    Local coordinates around D(m): h0-orthogonal log components of
    D(m)^-1 D(m + dx).
    """
    base = develop_to(A, H, m0, m, rtol=rtol)
    P = H.h0_projector()
    keep = np.nonzero(np.linalg.norm(P, axis=1) > 1e-12)[0]
    n = len(np.asarray(m))

    def coords(p):
        c = develop_to(A, H, m0, p, rtol=rtol)
        z = np.linalg.solve(base.g, c.g)
        lr = log_matrix(H.realization, z)
        if not lr.in_region:
            raise DevelopmentError("development stepped outside log region")
        return (P @ lr.coords)[keep]

    m = np.asarray(m, dtype=float)
    cols = []
    for k in range(n):
        dp = np.zeros(n)
        dp[k] = h
        cols.append((coords(m + dp) - coords(m - dp)) / (2 * h))
    J = np.stack(cols, axis=1)
    if J.shape[0] != n:
        # transitive case: coset dimension equals base dimension
        raise DevelopmentError("coset coordinate count does not match base dimension")
    return J


# -- induced affine maps ------------------------------------------------------

def integrated_twist(H: HomogeneousModel, mu: AlgebraMap, g: np.ndarray,
                     depth: int = 0, span_tol: float = 1e-7) -> np.ndarray:
    """Group automorphism integrating the algebra twist, evaluated at g.

    Defined through exp and log; elements outside the log region are
    split by principal square roots.
    """
    lr = log_matrix(H.realization, g)
    if lr.in_region and lr.off_span_residual <= span_tol * (1 + np.linalg.norm(g)):
        return exp_matrix(H.realization, mu(lr.coords))
    if depth >= 12:
        raise DevelopmentError("could not split group element into log range")
    root = scipy.linalg.sqrtm(np.asarray(g, dtype=float)).real
    half = integrated_twist(H, mu, root, depth + 1, span_tol)
    return half @ half


@dataclass(frozen=True)
class AffineCosetMap:
    """Coset map g H0 -> mu_hat(g) q H0 induced by an equivariant map."""

    model: HomogeneousModel
    twist: AlgebraMap
    q: np.ndarray
    consistency_residual: float = 0.0

    def __call__(self, c: Coset) -> Coset:
        return Coset(integrated_twist(self.model, self.twist, c.g) @ self.q, self.model)

    def compose(self, other: "AffineCosetMap") -> "AffineCosetMap":
        # self after other: mu (mu'(g) q') q = (mu mu')(g) mu(q') q
        q = integrated_twist(self.model, self.twist, other.q) @ self.q
        return AffineCosetMap(self.model, self.twist.compose(other.twist), q,
                              max(self.consistency_residual, other.consistency_residual))


def induced_affine_map(E: EquivariantMap, H: HomogeneousModel, q_coset: Coset,
                       consistency_tol: float = 1e-6) -> AffineCosetMap:
    """Build the induced coset map and verify its subgroup consistency:
    the twist must carry H0 onto q H0 q^-1 (checked on h0 generators)."""
    res = 0.0
    for b in H.h0.basis_vectors:
        for t in (0.05, -0.08):
            elt = exp_matrix(H.realization, t * b)
            im = integrated_twist(H, E.twist, elt)
            back = np.linalg.solve(q_coset.g, im @ q_coset.g)
            lr = log_matrix(H.realization, back)
            if not lr.in_region:
                res = np.inf
                continue
            P = H.h0_projector()
            res = max(res, float(np.linalg.norm(P @ lr.coords) + lr.off_span_residual))
    if res > consistency_tol:
        raise DevelopmentError(
            f"twist does not normalize the subgroup through q (residual {res:.3e})")
    return AffineCosetMap(H, E.twist, q_coset.g, res)


def check_lemma_diagram(A: ActionAlgebroid, H: HomogeneousModel, E: EquivariantMap,
                        path: BasePath) -> float:
    """Matrix residual of: develop the phi-image path = apply the
    integrated twist to the developed path."""
    g = develop_point(A, H, path)
    segs = []
    for s in path.segments:
        segs.append(type(s)(s.chart, lambda t, _s=s: E.base_map(_s.curve(t)), s.t0, s.t1))
    g_img = develop_point(A, H, BasePath(tuple(segs)))
    lhs = g_img.g
    rhs = integrated_twist(H, E.twist, g.g)
    return float(np.max(np.abs(lhs - rhs)))


def equivariance_diagram_check(A: ActionAlgebroid, H: HomogeneousModel,
                               E: EquivariantMap, m0, sample_points,
                               tol: float = 1e-5) -> TensorReport:
    """Coset residual of D(phi(m)) against the induced map of D(m)."""
    q = develop_to(A, H, m0, value(np.asarray(E.base_map(as_point(np.asarray(m0, float))), dtype=object)))
    aff = induced_affine_map(E, H, q)
    per = []
    for m in sample_points:
        m = np.asarray(m, dtype=float)
        lhs = develop_to(A, H, m0, value(np.asarray(E.base_map(as_point(m)), dtype=object)))
        rhs = aff(develop_to(A, H, m0, m))
        per.append(coset_residual(lhs, rhs))
    mx = max(per) if per else 0.0
    return TensorReport("equivariance_diagram", mx, tol, tuple(per))


def fit_twist(chart, base_map: Callable, m0, samples, frame_steps: int = 64,
              verify_tol: float = 1e-6) -> AlgebraMap:
    """Least-squares twist of a base map on the parallel-section fields.

    Solves Dphi(m) a(m) P(m) = a(phi m) P(phi m) mu over the samples,
    where P is the parallel frame from m0, then verifies the fit.
    """
    from .cartan import fiber_bracket_at
    from .transport import _transport_line_dual
    r = chart.rank
    m0 = np.asarray(m0, dtype=float)

    def frame_at(m):
        cols = [value(np.asarray(_transport_line_dual(chart, m0, m, np.eye(r)[a], frame_steps),
                                 dtype=object)) for a in range(r)]
        return np.stack(cols, axis=1)

    rows_lhs = []
    rows_rhs = []
    for m in samples:
        m = as_point(np.asarray(m, dtype=float))
        pm = value(np.asarray(base_map(m), dtype=object))
        dphi = value(dual.jacobian(lambda p: np.asarray(base_map(as_point(p)), dtype=object), m))
        a_m = value(np.asarray(chart.anchor(m), dtype=object))
        a_p = value(np.asarray(chart.anchor(as_point(pm)), dtype=object))
        lhs = dphi @ a_m @ frame_at(value(np.asarray(m, dtype=object)))
        rhs = a_p @ frame_at(pm)
        rows_lhs.append(lhs)
        rows_rhs.append(rhs)
    L = np.vstack(rows_lhs)
    R = np.vstack(rows_rhs)
    mu, *_ = np.linalg.lstsq(R, L, rcond=None)
    resid = float(np.max(np.abs(R @ mu - L)))
    if resid > verify_tol:
        raise DevelopmentError(f"no algebra twist fits the base map (residual {resid:.3e})")
    g0 = fiber_bracket_at(chart, m0)
    return AlgebraMap(g0, g0, mu)


# -- geometric closure --------------------------------------------------------

@dataclass(frozen=True)
class ClosureReport:
    verdict: str          # "closed" | "nonclosed-witness" | "undecided"
    reason: str
    witness: tuple | None = None


def geometric_closure_probe(H: HomogeneousModel, precision: float = 1e-10,
                            denominator_bound: int = 10 ** 6) -> ClosureReport:
    """Decide closure of the connected subgroup integrating h0.

    Order of attack: honor an explicit assertion; the trivial subalgebra
    is closed; a single generator with an antisymmetric realization spans
    a torus one-parameter subgroup, where rationally dependent rotation
    frequencies give a circle (closed) and an irrational frequency ratio
    is a dense-winding witness.  Everything else is honestly undecided.
    """
    if H.closure == "asserted-closed":
        return ClosureReport("closed", "asserted by the model")
    if H.closure == "asserted-nonclosed":
        return ClosureReport("nonclosed-witness", "asserted by the model")
    if H.h0.dim == 0:
        return ClosureReport("closed", "trivial subalgebra")
    if H.h0.dim == 1:
        gen = H.realization.element(H.h0.basis_vectors[0])
        if np.max(np.abs(gen + gen.T)) < 1e-12:
            freqs = np.abs(np.imag(np.linalg.eigvals(gen)))
            freqs = np.unique(np.round(freqs[freqs > 1e-12], 12))
            if len(freqs) <= 1:
                return ClosureReport("closed", "single rotation frequency")
            base = freqs[0]
            for w in freqs[1:]:
                ratio = w / base
                frac = Fraction(ratio).limit_denominator(denominator_bound)
                err = abs(ratio - float(frac))
                # every real admits approximations with err ~ 1/q^2, so a
                # genuine rational must beat that scale decisively
                if err > precision or err * frac.denominator ** 2 > 1e-2:
                    return ClosureReport(
                        "nonclosed-witness",
                        "irrational frequency ratio winds densely in a torus",
                        witness=(float(base), float(w)))
            return ClosureReport("closed", "rationally dependent rotation frequencies")
    return ClosureReport("undecided", "no decision procedure applies to this subalgebra")


# -- atlas reconstruction -----------------------------------------------------

@dataclass(frozen=True)
class OverlapSpec:
    """One overlap component between patches i and j, described in the
    cover coordinates of patch i's lift, with the deck map relating the
    two lifts there."""

    i: int
    j: int
    region: Chart
    deck: EquivariantMap


@dataclass(frozen=True)
class CoverSpec:
    cover: ActionAlgebroid
    m0: np.ndarray
    patches: tuple[Chart, ...]
    overlaps: tuple[OverlapSpec, ...]


@dataclass
class TransitionRecord:
    i: int
    j: int
    residual: float
    twist_matrix: np.ndarray
    affine_matrix: np.ndarray | None
    affine_offset: np.ndarray | None
    fit_residual: float | None


@dataclass
class AtlasReport:
    chart_samples: list[np.ndarray]       # developed coordinates per patch
    jacobian_min_abs_det: float
    transitions: list[TransitionRecord]
    monodromy_residual: float | None = None
    notes: str = ""

    @property
    def passed(self) -> bool:
        ok = self.jacobian_min_abs_det >= 1e-6
        ok = ok and all(t.residual <= 1e-5 for t in self.transitions)
        return ok


def _coset_coords(H: HomogeneousModel, c: Coset) -> np.ndarray:
    lr = log_matrix(H.realization, c.g)
    if not lr.in_region:
        raise DevelopmentError("coset representative outside log region")
    P = H.h0_projector()
    keep = np.nonzero(np.linalg.norm(P, axis=1) > 1e-12)[0]
    return (P @ lr.coords)[keep]


def reconstruct_atlas(glued, H: HomogeneousModel, spec: CoverSpec,
                      samples_per_patch: int = 6,
                      monodromy_check: Callable | None = None) -> AtlasReport:
    """Build numeric charts by developing patch lifts and verify that the
    overlap transitions are the induced affine maps of their deck data.

    ``glued`` is the algebroid being reconstructed; its rank must match
    the model algebra, every deck twist must be an automorphism of the
    fiber bracket read off its charts, and a monodromy check callback
    (returning a residual) cross-checks twists against transported loops
    when supplied.
    """
    from .cartan import fiber_bracket_at
    closure = geometric_closure_probe(H)
    if closure.verdict == "nonclosed-witness":
        raise DevelopmentError("reconstruction requires geometric closure")
    charts = getattr(glued, "charts", (glued,))
    if charts[0].rank != H.algebra.dim:
        raise DevelopmentError(
            f"algebroid rank {charts[0].rank} does not match the model "
            f"algebra dimension {H.algebra.dim}")
    probe_chart = charts[0]
    probe_pt = probe_chart.base.halton_points(1, shrink=0.3)[0]
    fb = fiber_bracket_at(probe_chart, probe_pt)
    from .algebra import is_automorphism
    for ov in spec.overlaps:
        rep = is_automorphism(fb, AlgebraMap(fb, fb, ov.deck.twist.matrix), tol=1e-6)
        if not rep.passed:
            raise DevelopmentError(
                f"deck twist for patches {ov.i}/{ov.j} is not an automorphism "
                f"of the fiber bracket (residual {rep.residual:.3e})")
    A = spec.cover
    m0 = np.asarray(spec.m0, dtype=float)
    chart_samples = []
    min_det = np.inf
    for patch in spec.patches:
        pts = patch.halton_points(samples_per_patch, shrink=0.1)
        coords = np.stack([_coset_coords(H, develop_to(A, H, m0, p)) for p in pts])
        chart_samples.append(coords)
        J = development_jacobian(A, H, m0, pts[0])
        min_det = min(min_det, abs(float(np.linalg.det(J))))
    transitions = []
    for ov in spec.overlaps:
        pts = ov.region.halton_points(samples_per_patch, shrink=0.1)
        q = develop_to(A, H, m0, value(np.asarray(ov.deck.base_map(as_point(m0)), dtype=object)))
        aff = induced_affine_map(ov.deck, H, q)
        res = 0.0
        lhs_pts = []
        rhs_pts = []
        for p in pts:
            psi_i = develop_to(A, H, m0, p)
            pj = value(np.asarray(ov.deck.base_map(as_point(p)), dtype=object))
            psi_j = develop_to(A, H, m0, pj)
            res = max(res, coset_residual(psi_j, aff(psi_i)))
            lhs_pts.append(_coset_coords(H, psi_i))
            rhs_pts.append(_coset_coords(H, psi_j))
        X = np.stack(lhs_pts)
        Y = np.stack(rhs_pts)
        Amat, b, fit = _fit_affine(X, Y)
        transitions.append(TransitionRecord(ov.i, ov.j, res, ov.deck.twist.matrix,
                                            Amat, b, fit))
    mono_res = None
    if monodromy_check is not None:
        mono_res = monodromy_check()
    note = f"closure probe: {closure.verdict} ({closure.reason})"
    return AtlasReport(chart_samples, float(min_det), transitions, mono_res, note)


def _fit_affine(X: np.ndarray, Y: np.ndarray):
    """Least-squares affine fit Y = A X + b."""
    npts, n = X.shape
    M = np.hstack([X, np.ones((npts, 1))])
    sol, *_ = np.linalg.lstsq(M, Y, rcond=None)
    A = sol[:n].T
    b = sol[n]
    fit = float(np.max(np.abs(M @ sol - Y))) if npts > n else None
    return A, b, fit
