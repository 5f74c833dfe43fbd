import math

import numpy as np
import pytest
from scipy.integrate import quad

from cartanlab import algebra, development
from cartanlab.algebra import AlgebraMap, MatrixRealization, Subalgebra
from cartanlab.development import (DevelopmentError, EquivariantMap,
                                   HomogeneousModel, check_equivariant_twist,
                                   check_lemma_diagram, coset_residual,
                                   develop_point, develop_to,
                                   development_jacobian,
                                   equivariance_diagram_check, fit_twist,
                                   geometric_closure_probe,
                                   induced_affine_map, integrated_twist,
                                   path_independence_check, reconstruct_atlas)
from cartanlab.dual import value
from cartanlab.geometry import as_point
from cartanlab.transport import line_path, polyline_path

E2PI = math.exp(2 * math.pi)


def test_equivariant_twist_identity(circle):
    E = EquivariantMap.identity(circle.cover.algebra)
    rep = check_equivariant_twist(circle.cover, E)
    assert rep.verdict and rep.max_residual < 1e-12


def test_equivariant_twist_deck_map(circle, rng):
    rep = check_equivariant_twist(circle.cover, circle.deck,
                                  samples=rng.uniform(-1, 1, (8, 1)))
    assert rep.verdict


def test_equivariant_twist_rotation_needs_adjoint(so3_action, rng):
    R = algebra.exp_matrix(algebra.so3_realization(), [0, 0, 1], 0.8)
    good = EquivariantMap(lambda m: R.astype(object) @ as_point(m),
                          AlgebraMap(so3_action.algebra, so3_action.algebra, R))
    rep = check_equivariant_twist(so3_action, good, samples=rng.uniform(-1, 1, (6, 3)))
    assert rep.verdict
    bad = EquivariantMap(lambda m: R.astype(object) @ as_point(m),
                         AlgebraMap(so3_action.algebra, so3_action.algebra, np.eye(3)))
    rep2 = check_equivariant_twist(so3_action, bad, samples=rng.uniform(-1, 1, (6, 3)))
    assert not rep2.verdict


def test_develop_translations_gives_translation_part(torus):
    c = develop_to(torus.cover, torus.homog, [0.0, 0.0], [0.7, -0.4])
    assert np.allclose(c.g[:2, 2], [0.7, -0.4], atol=1e-10)
    ident = develop_point(torus.cover, torus.homog,
                          line_path([0.3, 0.3], [0.3, 0.3]))
    assert np.allclose(ident.g, np.eye(3), atol=1e-12)


def test_develop_counterexample_quadrature_oracle(circle):
    # lift of a straight path 0 -> theta is xi(t) = e^{theta(t)} dtheta/dt;
    # integrate it independently by quadrature
    theta = 1.3
    expected, _ = quad(lambda t: math.exp(t * theta) * theta, 0.0, 1.0)
    c = develop_to(circle.cover, circle.homog, [0.0], [theta])
    assert abs(c.g[0, 1] - expected) < 1e-9
    assert abs(expected - (math.exp(theta) - 1.0)) < 1e-10


def test_develop_rejects_rank_deficient_anchor(so3_action):
    # the rotation action is not transitive on R^3: radial motion cannot
    # be lifted through the anchor
    H = HomogeneousModel(so3_action.algebra, algebra.so3_realization(),
                         Subalgebra(so3_action.algebra, ()))
    with pytest.raises(DevelopmentError):
        develop_point(so3_action, H, line_path([1.0, 0.0, 0.0], [2.0, 0.0, 0.0]))


def test_path_independence_counterexample(circle):
    p1 = line_path([0.0], [1.3])
    p2 = polyline_path([[0.0], [0.52], [1.3]])
    assert path_independence_check(circle.cover, circle.homog, p1, p2) < 1e-9


def test_path_independence_requires_matching_endpoints(circle):
    with pytest.raises(DevelopmentError):
        path_independence_check(circle.cover, circle.homog,
                                line_path([0.0], [1.0]), line_path([0.0], [1.1]))


def test_path_independence_sphere_mod_isotropy(sphere):
    m0 = sphere.m0
    p1 = line_path(m0, m0 + [0.25, 0.2])
    p2 = polyline_path([m0, m0 + [0.0, 0.2], m0 + [0.25, 0.2]])
    res = path_independence_check(sphere.rc.chart, sphere.homog, p1, p2)
    assert res < 1e-9
    # the full group elements genuinely differ by an isotropy element
    g1 = develop_point(sphere.rc.chart, sphere.homog, p1)
    g2 = develop_point(sphere.rc.chart, sphere.homog, p2)
    assert np.max(np.abs(g1.g - g2.g)) > 1e-3


def test_development_jacobian_counterexample(circle):
    J = development_jacobian(circle.cover, circle.homog, [0.0], [0.8])
    assert abs(J[0, 0] - math.exp(0.8)) < 1e-5


def test_integrated_twist_matches_exp_conjugation(circle):
    H = circle.homog
    mu = circle.deck.twist
    g = algebra.exp_matrix(H.realization, [0.3])
    out = integrated_twist(H, mu, g)
    want = algebra.exp_matrix(H.realization, mu([0.3]))
    assert np.max(np.abs(out - want)) < 1e-12


def test_integrated_twist_splits_large_elements(sphere):
    H = sphere.homog
    mu = AlgebraMap(H.algebra, H.algebra, np.eye(3))
    g = algebra.exp_matrix(H.realization, [0.0, 2.4, 0.0])
    out = integrated_twist(H, mu, g)
    assert np.max(np.abs(out - g)) < 1e-9


def test_induced_affine_map_identity(circle):
    H = circle.homog
    E = EquivariantMap.identity(circle.cover.algebra)
    q = develop_to(circle.cover, H, [0.0], [0.0])
    aff = induced_affine_map(E, H, q)
    c = develop_to(circle.cover, H, [0.0], [0.9])
    assert coset_residual(aff(c), c) < 1e-10


def test_induced_affine_map_counterexample_formula(circle):
    # x -> e^{2 pi} x + (e^{2 pi} - 1) on the developed line
    H = circle.homog
    q = develop_to(circle.cover, H, [0.0], [2 * math.pi])
    aff = induced_affine_map(circle.deck, H, q)
    for x in (0.0, -0.3, 2.0):
        c = develop_to(circle.cover, H, [0.0], [math.log(1 + x)])
        img = aff(c)
        want = E2PI * x + (E2PI - 1.0)
        assert abs(img.g[0, 1] - want) < 1e-6 * max(1.0, abs(want))


def test_induced_affine_map_composition_law(circle):
    # map of the composition equals composition of the maps
    H = circle.homog
    A = circle.cover
    deck = circle.deck
    deck2 = deck.compose(deck)
    q1 = develop_to(A, H, [0.0], value(np.asarray(deck.base_map([0.0]), dtype=object)))
    aff1 = induced_affine_map(deck, H, q1)
    q2 = develop_to(A, H, [0.0], value(np.asarray(deck2.base_map([0.0]), dtype=object)))
    aff2 = induced_affine_map(deck2, H, q2)
    composed = aff1.compose(aff1)
    for x in (-0.2, 0.5):
        c = develop_to(A, H, [0.0], [x])
        assert coset_residual(aff2(c), composed(c)) < 1e-6


def test_induced_affine_map_group_equivariance(circle):
    # phi(g . x) = mu_hat(g) . phi(x) for g near the identity
    H = circle.homog
    q = develop_to(circle.cover, H, [0.0], [2 * math.pi])
    aff = induced_affine_map(circle.deck, H, q)
    for s in (0.07, -0.11):
        g = algebra.exp_matrix(H.realization, [s])
        x = develop_to(circle.cover, H, [0.0], [0.4])
        lhs = aff(development.Coset(g @ x.g, H))
        rhs = development.Coset(
            integrated_twist(H, circle.deck.twist, g) @ aff(x).g, H)
        assert coset_residual(lhs, rhs) < 1e-8


def test_lemma_b_guard_rejects_inconsistent_inputs(sphere):
    # a twist that does not normalize the isotropy through q must be refused
    H = sphere.homog
    bad_twist = AlgebraMap(H.algebra, H.algebra,
                           np.array([[1.0, 0.2, 0.0], [0.0, 1.0, 0.0],
                                     [0.0, 0.0, 1.0]]))
    E = EquivariantMap(lambda m: m, bad_twist)
    q = development.Coset(algebra.exp_matrix(H.realization, [0.9, 0.0, 0.0]), H)
    with pytest.raises(DevelopmentError):
        induced_affine_map(E, H, q)


def test_lemma_diagram_counterexample_matrix_level(circle):
    res = check_lemma_diagram(circle.cover, circle.homog, circle.deck,
                              line_path([0.0], [1.1]))
    assert res < 1e-6


def test_lemma_diagram_torus(torus):
    res = check_lemma_diagram(torus.cover, torus.homog, torus.decks[1],
                              line_path([0.0, 0.0], [0.4, 0.3]))
    assert res < 1e-9


def test_equivariance_diagram_counterexample(circle, rng):
    pts = rng.uniform(-0.5, 1.5, (10, 1))
    rep = equivariance_diagram_check(circle.cover, circle.homog, circle.deck,
                                     [0.0], pts)
    assert rep.verdict and rep.max_residual < 1e-5


def test_equivariance_diagram_torus(torus, rng):
    pts = rng.uniform(-0.5, 0.5, (10, 2))
    for deck in torus.decks:
        rep = equivariance_diagram_check(torus.cover, torus.homog, deck,
                                         [0.0, 0.0], pts)
        assert rep.verdict


def test_equivariance_diagram_identity_map(torus, rng):
    E = EquivariantMap.identity(torus.cover.algebra)
    rep = equivariance_diagram_check(torus.cover, torus.homog, E, [0.0, 0.0],
                                     rng.uniform(-0.4, 0.4, (4, 2)))
    assert rep.max_residual < 1e-12


def test_equivariance_diagram_sphere_rotation(sphere):
    C, H, m0 = sphere.rc.chart, sphere.homog, sphere.m0
    rot = lambda m: np.array([m[0], m[1] + 0.25], dtype=object)
    samples = np.stack([m0 + [0.1, -0.1], m0 + [-0.12, 0.08]])
    tw = fit_twist(C, rot, m0, samples)
    assert algebra.is_automorphism(tw.source, tw, tol=1e-8).passed
    rep = equivariance_diagram_check(C, H, EquivariantMap(rot, tw), m0, samples)
    assert rep.verdict and rep.max_residual < 1e-5


def test_closure_probe_trivial_and_asserted(circle):
    rep = geometric_closure_probe(circle.homog)
    assert rep.verdict == "closed"
    H_unasserted = HomogeneousModel(circle.homog.algebra, circle.homog.realization,
                                    circle.homog.h0)
    assert geometric_closure_probe(H_unasserted).verdict == "closed"


def test_closure_probe_irrational_winding():
    ab2 = algebra.abelian(2)

    def rot(wa, wb):
        g = np.zeros((4, 4))
        g[0, 1], g[1, 0] = -wa, wa
        g[2, 3], g[3, 2] = -wb, wb
        return g

    real = MatrixRealization(ab2, (rot(1.0, 0.0), rot(0.0, 1.0)))
    bad = HomogeneousModel(ab2, real,
                           Subalgebra(ab2, (np.array([1.0, math.sqrt(2.0)]),)))
    rep = geometric_closure_probe(bad)
    assert rep.verdict == "nonclosed-witness"
    assert rep.witness is not None
    good = HomogeneousModel(ab2, real,
                            Subalgebra(ab2, (np.array([2.0, 3.0]),)))
    assert geometric_closure_probe(good).verdict == "closed"


def test_closure_probe_sphere_isotropy_via_frequencies(sphere):
    H = HomogeneousModel(sphere.homog.algebra, sphere.homog.realization,
                         sphere.homog.h0, closure="unknown")
    rep = geometric_closure_probe(H)
    assert rep.verdict == "closed"


def test_closure_probe_undecided_for_nonskew():
    aff = algebra.affine_line()
    gens = (np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([[0.0, 1.0], [0.0, 0.0]]))
    real = MatrixRealization(aff, gens)
    H = HomogeneousModel(aff, real, Subalgebra(aff, (np.array([1.0, 0.0]),)))
    assert geometric_closure_probe(H).verdict == "undecided"


def test_reconstruct_circle_atlas(circle):
    atlas = reconstruct_atlas(circle.glued, circle.homog, circle.atlas_spec)
    assert atlas.passed
    assert atlas.jacobian_min_abs_det >= 1e-6
    mults = [float(np.max(np.abs(t.affine_matrix))) for t in atlas.transitions]
    assert any(abs(m - 1.0) < 1e-9 for m in mults)
    twisted = max(mults)
    assert abs(twisted - E2PI) / E2PI < 1e-6
    offsets = {round(float(t.affine_offset[0]), 4) for t in atlas.transitions}
    assert round(E2PI - 1.0, 4) in offsets


def test_reconstruct_torus_atlas(torus):
    atlas = reconstruct_atlas(torus.glued, torus.homog, torus.atlas_spec)
    assert atlas.passed
    for t in atlas.transitions:
        assert np.max(np.abs(t.affine_matrix - np.eye(2))) < 1e-8
    shifts = sorted(round(float(np.max(np.abs(t.affine_offset))), 6)
                    for t in atlas.transitions)
    assert shifts == [0.0, 0.0, 1.0, 1.0]


def test_reconstruct_single_chart_trivial(torus):
    spec = development.CoverSpec(torus.cover, np.zeros(2),
                                 (torus.atlas_spec.patches[0],), ())
    atlas = reconstruct_atlas(torus.glued, torus.homog, spec)
    assert atlas.passed and not atlas.transitions


def test_reconstruct_refuses_nonclosed(circle):
    H = HomogeneousModel(circle.homog.algebra, circle.homog.realization,
                         circle.homog.h0, closure="asserted-nonclosed")
    with pytest.raises(DevelopmentError):
        reconstruct_atlas(circle.glued, H, circle.atlas_spec)


def test_reconstruct_refuses_rank_mismatch(circle, torus):
    with pytest.raises(DevelopmentError):
        reconstruct_atlas(torus.glued, circle.homog, circle.atlas_spec)
