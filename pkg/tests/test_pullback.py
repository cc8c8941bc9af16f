"""Chart presentations, transported inner products, connection and holonomy."""

import json

import numpy as np
import pytest

from berezin import geometry, hilbert, operators, pullback, quadrature
from berezin.errors import (DimensionMismatch, OddLevel, OutOfDomain,
                            PathTooCoarse)


def interior_grid(n):
    """n^2 parameter rows strictly inside the unit square."""
    u = (np.arange(n) + 0.5) / n
    U, V = np.meshgrid(u, u, indexing="ij")
    return np.stack([U.ravel(), V.ravel()], axis=1)


def test_chart_roundtrips(rng):
    charts = [pullback.identity_chart(1), pullback.identity_chart(2),
              pullback.rotation_chart(0.7), pullback.scaling_chart(2.0),
              pullback.torus_chart()]
    for chart in charts:
        p = chart.sample(rng, 50)
        z = chart.forward(p)
        assert np.max(np.abs(chart.inverse(z) - p)) <= 1e-10, chart.name
        assert np.all(chart.jacobian_det(p) > 0.0), chart.name


def test_torus_chart_specifics():
    tc = pullback.torus_chart()
    center = tc.forward(np.array([[0.5, 0.5]]))
    assert abs(center[0, 0]) <= 1e-15

    p = interior_grid(10)
    z = tc.forward(p)
    assert np.max(np.abs(tc.inverse(z) - p)) <= 1e-10

    x = np.tan(np.pi * p[:, 0] - np.pi / 2)
    y = np.tan(np.pi * p[:, 1] - np.pi / 2)
    want = np.pi ** 2 * (1 + x ** 2) * (1 + y ** 2)
    assert np.allclose(tc.jacobian_det(p), want, rtol=1e-12)

    with pytest.raises(OutOfDomain):
        tc.forward(np.array([[0.0, 0.5]]))
    with pytest.raises(OutOfDomain):
        tc.forward(np.array([[1.2, 0.5]]))
    with pytest.raises(DimensionMismatch):
        tc.forward(np.array([[0.5, 0.5, 0.5]]))


def test_numeric_jacobian_fallback():
    tc = pullback.torus_chart()
    bare = pullback.DiffeoChart(name="torus-fd", d=1, forward_fn=tc.forward_fn,
                                inverse_fn=tc.inverse_fn, jacobian_fn=None,
                                in_domain_fn=tc.in_domain_fn)
    p = interior_grid(5)
    got = bare.jacobian_det(p)
    want = tc.jacobian_det(p)
    assert np.max(np.abs(got - want) / want) <= 1e-6


def test_measure_factor_change_of_variables():
    # parameter-side integral of F(tau(p)) h(p) must match the chart moment
    tc = pullback.torus_chart()
    x, w = np.polynomial.legendre.leggauss(60)
    u = 0.5 * (x + 1.0)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wu, wu).ravel()
    P = np.stack([U.ravel(), V.ravel()], axis=1)
    z = tc.forward(P)[:, 0]
    F = (1.0 + np.abs(z) ** 2) ** (-2.0)
    got = np.sum(W * F * pullback.measure_factor(tc, P))
    assert got == pytest.approx(quadrature.moment(0, 2, 1), rel=1e-12)


def test_pull_section_values(basis):
    spec = basis(1, 4)
    tc = pullback.torus_chart()
    e0 = np.eye(spec.N)[0]
    # the lowest mode is the constant section
    assert pullback.pull_section(spec, tc, e0, [0.3, 0.8]) == pytest.approx(1.0)

    e1 = np.eye(spec.N)[1]
    p = np.array([0.3, 0.8])
    zval = np.tan(np.pi * p[0] - np.pi / 2) + 1j * np.tan(np.pi * p[1] - np.pi / 2)
    want = zval / np.sqrt(spec.D[1])
    got = pullback.pull_section(spec, tc, e1, p)
    assert isinstance(got, complex)
    assert got == pytest.approx(want, rel=1e-13)

    batch = pullback.pull_section(spec, tc, e1, interior_grid(3))
    assert batch.shape == (9,)


def test_pulled_operator_composition(basis, rng):
    spec = basis(1, 5)
    tc = pullback.torus_chart()
    mat = rng.normal(size=(spec.N, spec.N)) + 1j * rng.normal(size=(spec.N, spec.N))
    op = pullback.PulledOperator(operators.OperatorMatrix(spec, mat), tc)
    v = rng.normal(size=spec.N) + 1j * rng.normal(size=spec.N)
    p = tc.sample(rng, 6)
    got = pullback.pulled_apply(op, v, p)
    want = hilbert.section_eval(spec, mat @ v, tc.forward(p))
    assert np.allclose(got, want, rtol=1e-14)

    with pytest.raises(DimensionMismatch):
        pullback.PulledOperator(operators.OperatorMatrix(basis(2, 3),
                                                         np.eye(10)), tc)


def test_pulled_apply_rank_one_annihilates(basis):
    spec = basis(1, 4)
    tc = pullback.torus_chart()
    mat = np.zeros((spec.N, spec.N))
    mat[0, 0] = 1.0  # orthogonal projection onto the lowest mode
    op = pullback.PulledOperator(operators.OperatorMatrix(spec, mat), tc)
    e1 = np.eye(spec.N)[1]
    vals = pullback.pulled_apply(op, e1, interior_grid(4))
    assert np.max(np.abs(vals)) <= 1e-12


def test_pulled_symbol_and_star_delegate(basis, rng):
    spec = basis(1, 6)
    tc = pullback.torus_chart()
    mk = lambda: operators.OperatorMatrix(
        spec, rng.normal(size=(spec.N, spec.N)) + 1j * rng.normal(size=(spec.N, spec.N)))
    op1 = pullback.PulledOperator(mk(), tc)
    op2 = pullback.PulledOperator(mk(), tc)
    pa, pb = tc.sample(rng, 2)
    za = tc.forward(pa)[0]
    zb = tc.forward(pb)[0]
    assert pullback.pulled_symbol(op1, pa, pb) == operators.symbol_eval(op1.base, za, zb)
    assert pullback.pulled_star(op1, op2, pa) == operators.star_product(
        op1.base, op2.base, za)

    other = pullback.PulledOperator(op2.base, pullback.torus_chart())
    with pytest.raises(DimensionMismatch):
        pullback.pulled_star(op1, other, pa)


def test_manifold_inner_product_orthonormality(basis):
    spec = basis(1, 6)
    for chart in (pullback.identity_chart(1), pullback.torus_chart()):
        eye = np.eye(spec.N)
        dev = 0.0
        for i in range(spec.N):
            for j in range(spec.N):
                got = pullback.inner_product_on_manifold(spec, chart, eye[i], eye[j])
                dev = max(dev, abs(got - (1.0 if i == j else 0.0)))
        assert dev <= 1e-8, chart.name


def test_manifold_inner_product_general(basis, rng):
    spec = basis(1, 5)
    chart = pullback.torus_chart()
    v1 = rng.normal(size=spec.N) + 1j * rng.normal(size=spec.N)
    v2 = rng.normal(size=spec.N) + 1j * rng.normal(size=spec.N)
    got = pullback.inner_product_on_manifold(spec, chart, v1, v2)
    assert got == pytest.approx(complex(np.vdot(v1, v2)), rel=1e-8)

    explicit = pullback.inner_product_on_manifold(
        spec, chart, v1, v2, h=lambda p: pullback.measure_factor(chart, p))
    assert explicit == got

    zero = pullback.inner_product_on_manifold(spec, chart, np.zeros(spec.N), v2)
    assert zero == 0.0


def test_equivalence_accepts_isometric_presentations(basis, rng):
    spec = basis(1, 6)
    ident = pullback.identity_chart(1)
    rep = pullback.equivalence_check(spec, ident, ident, rng=rng)
    assert rep.equivalent
    assert rep.inner_product_deviation <= 1e-10
    assert rep.kernel_deviation <= 1e-10

    rot = pullback.rotation_chart(0.9)
    rep = pullback.equivalence_check(spec, ident, rot, rng=rng)
    assert rep.equivalent
    assert rep.pairs_used == 64


def test_equivalence_via_parameter_self_map(basis, rng):
    spec = basis(1, 4)
    ident = pullback.identity_chart(1)
    th = 0.6
    rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    rep = pullback.equivalence_check(spec, ident, ident, psi=lambda p: p @ rot.T,
                                     rng=rng)
    assert rep.equivalent


def test_equivalence_rejects_rescaling(basis, rng):
    spec = basis(1, 6)
    rep = pullback.equivalence_check(spec, pullback.identity_chart(1),
                                     pullback.scaling_chart(2.0), rng=rng)
    assert not rep.equivalent
    assert rep.kernel_deviation > 1e-2

    with pytest.raises(DimensionMismatch):
        pullback.equivalence_check(basis(2, 2), pullback.identity_chart(1),
                                   pullback.identity_chart(1), rng=rng)


def test_connection_constant_path_is_zero():
    val = pullback.connection_integral(lambda t: np.array([0.3 + 0.4j]), 2)
    assert val == 0.0


def test_connection_equator_and_quarter_arc():
    val = pullback.connection_integral(pullback.equator_path(), 2)
    assert val == pytest.approx(2.0 * np.pi, abs=1e-9)
    assert pullback.holonomy(pullback.equator_path(), 2) == pytest.approx(1.0, abs=1e-8)
    quarter = pullback.connection_integral(pullback.quarter_arc(), 4)
    assert quarter == pytest.approx(np.pi, abs=1e-9)


def test_connection_half_loop_relation():
    m = 2
    first = pullback.connection_integral(lambda t: np.array([np.exp(1j * np.pi * t)]), m)
    second_rev = pullback.connection_integral(
        lambda t: np.array([np.exp(1j * np.pi * (2.0 - t))]), m)
    lhs = np.exp(-1j * first)
    rhs = np.exp(-1j * second_rev)
    assert lhs == pytest.approx(rhs, abs=1e-8)


def test_connection_polyline_and_refinement():
    t = np.linspace(0.0, 1.0, 4097)
    verts = np.exp(2j * np.pi * t).reshape(-1, 1)
    val = pullback.connection_integral(verts, 2)
    assert val == pytest.approx(2.0 * np.pi, abs=1e-9)

    a = pullback.connection_integral(pullback.equator_path(), 2, segments=4096)
    b = pullback.connection_integral(pullback.equator_path(), 2, segments=8192)
    assert abs(a - b) <= 1e-8


def test_connection_coarse_paths_rejected():
    t9 = np.linspace(0.0, 1.0, 9)
    with pytest.raises(PathTooCoarse):
        pullback.connection_integral(np.exp(2j * np.pi * t9).reshape(-1, 1), 2)
    with pytest.raises(PathTooCoarse):
        pullback.connection_integral(np.ones((4, 1), dtype=complex), 2)
    with pytest.raises(PathTooCoarse):
        pullback.connection_integral(np.ones((6, 1), dtype=complex), 2)
    with pytest.raises(PathTooCoarse):
        pullback.connection_integral(pullback.equator_path(), 2, segments=8)


def test_odd_levels_rejected():
    with pytest.raises(OddLevel):
        pullback.connection_integral(pullback.equator_path(), 3)
    with pytest.raises(OddLevel):
        pullback.torus_holonomy(1, 0, 5)


def test_curvature_matches_boundary_integral():
    center, radius = 0.3 + 0.1j, 0.7
    boundary = pullback.connection_integral(pullback.circle_path(center, radius), 2) / 2.0
    surface = pullback.curvature_disk_integral(center, radius)
    assert abs(boundary - surface) <= 1e-6


def test_torus_holonomy_identities():
    assert pullback.torus_holonomy(0, 0, 4) == 1.0 + 0.0j
    # center-line cycles carry no connection integral by angular parity
    assert pullback.torus_holonomy(3, -2, 4) == pytest.approx(1.0, abs=1e-12)

    base = (0.25, 0.25)
    for k1, k2, m in ((1, 0, 2), (0, 1, 2), (2, -1, 4), (-3, 2, 6)):
        got = pullback.torus_holonomy(k1, k2, m, base=base)
        want = np.exp(-1j * m * (k1 - k2) * np.pi / np.sqrt(2.0))
        assert got == pytest.approx(want, abs=1e-9), (k1, k2, m)

    h = pullback.torus_holonomy(2, 1, 4, base=base)
    hinv = pullback.torus_holonomy(-2, -1, 4, base=base)
    assert abs(h * hinv - 1.0) <= 1e-10
    prod = (pullback.torus_holonomy(1, 1, 4, base=base)
            * pullback.torus_holonomy(-1, -1, 4, base=base))
    assert abs(prod - 1.0) <= 1e-8


def test_torus_holonomy_refinement_stability():
    base = (0.25, 0.25)
    a = pullback.torus_holonomy(1, -1, 4, base=base, segments=4096)
    b = pullback.torus_holonomy(1, -1, 4, base=base, segments=8192)
    assert abs(a - b) <= 1e-8


def test_torus_holonomy_with_tail():
    base = (0.25, 0.25)
    tail = pullback.circle_path(2.0, 0.5)
    plain = pullback.torus_holonomy(1, -1, 4, base=base)
    with_tail = pullback.torus_holonomy(1, -1, 4, tail=tail, base=base)
    ci = pullback.connection_integral(tail, 4)
    assert with_tail == pytest.approx(plain * np.exp(-1j * ci), abs=1e-12)
    # contractible tail: its phase is the enclosed curvature
    disk = pullback.curvature_disk_integral(2.0, 0.5)
    assert np.exp(-1j * ci) == pytest.approx(np.exp(-4j * disk), abs=1e-6)


def test_chart_to_json_deterministic():
    tc = pullback.torus_chart()
    text = pullback.chart_to_json(tc)
    assert text == pullback.chart_to_json(pullback.torus_chart())
    data = json.loads(text)
    assert data["name"] == "torus"
    assert data["d"] == 1


def test_geometry_of_connection_density():
    # the curvature density in the disk integral is the chart volume form
    z = np.array([0.4 - 0.2j])
    dens = 2.0 / (1.0 + np.abs(z[0]) ** 2) ** 2
    assert dens == pytest.approx(geometry.lebesgue_volume_density(z), rel=1e-14)
