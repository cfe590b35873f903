import math

import numpy as np
import pytest

from stretched_gasket import (
    Poly2,
    PolyParseError,
    affine,
    base_vertices,
    corner_values,
    parse,
    sup_bounds,
    vanishes_at_corners,
    vanishing_at_ABC,
    vanishing_cubic,
)
from stretched_gasket.scalarfield import (
    compose_with_segment,
    eval_full,
    grad_batch,
    hess_batch,
    poly1_derivative,
    poly1_eval,
    to_string,
)

from conftest import random_poly


def test_arithmetic_and_degree():
    x = Poly2.variable("x")
    y = Poly2.variable("y")
    p = (x + y) ** 2 - x * x - y * y
    assert p == 2.0 * x * y
    assert p.degree == 2
    assert Poly2.zero().degree == -1
    assert Poly2.const(3.0).degree == 0


def test_parser_round_trip(rng):
    for _ in range(20):
        p = random_poly(rng, 4)
        q = parse(to_string(p))
        pt = rng.uniform(-1, 1, size=2)
        assert q.value(*pt) == pytest.approx(p.value(*pt), rel=1e-12, abs=1e-12)


def test_parser_accepts_common_expression_forms():
    samples = {
        "x^2": lambda x, y: x * x,
        "x*y + y^2": lambda x, y: x * y + y * y,
        "1 - 2*x + 3*y": lambda x, y: 1 - 2 * x + 3 * y,
        "-x^3*y": lambda x, y: -(x**3) * y,
        "(x + y)^2": lambda x, y: (x + y) ** 2,
        "2": lambda x, y: 2.0,
        "0.5*x - .25": lambda x, y: 0.5 * x - 0.25,
    }
    for text, ref in samples.items():
        p = parse(text)
        for pt in ((0.3, -0.7), (1.1, 0.2)):
            assert p.value(*pt) == pytest.approx(ref(*pt), rel=1e-14, abs=1e-14)


def test_parser_error_positions():
    with pytest.raises(PolyParseError) as e:
        parse("x + * y")
    assert e.value.position == 4
    with pytest.raises(PolyParseError):
        parse("x + (y")
    with pytest.raises(PolyParseError):
        parse("z + 1")
    with pytest.raises(PolyParseError):
        parse("x^-2")
    with pytest.raises(PolyParseError):
        parse("")


def test_gradient_and_hessian_match_finite_differences(rng):
    # Central differences: gradient step 1e-5, Hessian step 1e-4.
    for _ in range(50):
        p = random_poly(rng, 4)
        x0, y0 = rng.uniform(-1, 1, size=2)
        ev = eval_full(p, np.array([x0, y0]))
        h = 1e-5
        fd_gx = (p.value(x0 + h, y0) - p.value(x0 - h, y0)) / (2 * h)
        fd_gy = (p.value(x0, y0 + h) - p.value(x0, y0 - h)) / (2 * h)
        scale_g = max(1.0, abs(ev.gradient[0]), abs(ev.gradient[1]))
        assert abs(ev.gradient[0] - fd_gx) <= 1e-6 * scale_g
        assert abs(ev.gradient[1] - fd_gy) <= 1e-6 * scale_g
        h = 1e-4
        fd_xx = (p.value(x0 + h, y0) - 2 * p.value(x0, y0) + p.value(x0 - h, y0)) / h**2
        fd_yy = (p.value(x0, y0 + h) - 2 * p.value(x0, y0) + p.value(x0, y0 - h)) / h**2
        fd_xy = (
            p.value(x0 + h, y0 + h)
            - p.value(x0 + h, y0 - h)
            - p.value(x0 - h, y0 + h)
            + p.value(x0 - h, y0 - h)
        ) / (4 * h**2)
        hess = ev.hessian
        scale_h = max(1.0, np.max(np.abs(hess)))
        assert abs(hess[0, 0] - fd_xx) <= 1e-6 * scale_h
        assert abs(hess[1, 1] - fd_yy) <= 1e-6 * scale_h
        assert abs(hess[0, 1] - fd_xy) <= 1e-6 * scale_h
        assert hess[0, 1] == hess[1, 0]


def test_batched_evaluation_matches_scalar(rng):
    p = random_poly(rng, 4)
    xs = rng.uniform(-1, 1, size=(3, 5))
    ys = rng.uniform(-1, 1, size=(3, 5))
    vals = p.eval_batch(xs, ys)
    gx, gy = grad_batch(p, xs, ys)
    hxx, hxy, hyy = hess_batch(p, xs, ys)
    px, py = p.grad()
    pxx, pxy, pyy = p.hess()
    for i in range(3):
        for j in range(5):
            assert vals[i, j] == pytest.approx(p.value(xs[i, j], ys[i, j]), rel=1e-13)
            assert gx[i, j] == pytest.approx(px.value(xs[i, j], ys[i, j]), rel=1e-13)
            assert hxy[i, j] == pytest.approx(pxy.value(xs[i, j], ys[i, j]), rel=1e-13)


def test_segment_composition_is_exact_1d_polynomial(rng):
    from stretched_gasket import AffineMap2, Segment

    p = random_poly(rng, 3)
    amap = AffineMap2(np.array([[0.3, 0.1], [0.1, 0.4]]), np.array([0.2, -0.1]))
    seg = Segment(np.array([0.1, 0.2]), np.array([0.8, -0.3]))
    coeffs = compose_with_segment(p, amap, seg)
    for t in (0.0, 0.31, 0.77, 1.0):
        direct = p.value(*amap(seg.point(t)))
        assert poly1_eval(coeffs, np.array([t]))[0] == pytest.approx(direct, rel=1e-13, abs=1e-15)
    d = poly1_derivative(coeffs)
    h = 1e-6
    fd = (poly1_eval(coeffs, np.array([0.5 + h]))[0] - poly1_eval(coeffs, np.array([0.5 - h]))[0]) / (2 * h)
    assert poly1_eval(d, np.array([0.5]))[0] == pytest.approx(fd, rel=1e-8)


def test_affine_helper():
    p = affine(1.0, 2.0, -3.0)
    assert p.value(0.5, 0.5) == 1.0 + 1.0 - 1.5
    assert p.degree == 1


def test_vanishing_cubic_at_corners():
    v = vanishing_cubic()
    assert v.degree == 3
    assert vanishes_at_corners(v)
    cv = corner_values(v)
    assert cv[0] == 0.0
    assert max(abs(c) for c in cv) <= 1e-14
    # It is not identically zero on the triangle.
    assert abs(v.value(*base_vertices()[0] * 0.0 + np.array([0.4, 0.0]))) > 1e-6


def test_vanishing_multiples_are_admissible(rng):
    for _ in range(5):
        q = random_poly(rng, 2)
        v = vanishing_at_ABC(q)
        assert v.degree <= 5
        assert vanishes_at_corners(v)


def test_non_vanishing_rejected():
    assert not vanishes_at_corners(parse("x*y"))
    assert not vanishes_at_corners(parse("1"))
    assert not vanishes_at_corners(parse("x"))


def test_sup_bounds_dominate_samples(rng):
    p = random_poly(rng, 4)
    g_bound, h_bound = sup_bounds(p)
    xs = rng.uniform(0.0, math.sqrt(3) / 2, size=200)
    ys = rng.uniform(-0.5, 0.5, size=200)
    gx, gy = grad_batch(p, xs, ys)
    hxx, hxy, hyy = hess_batch(p, xs, ys)
    assert np.max(np.hypot(gx, gy)) <= g_bound + 1e-12
    assert max(np.max(np.abs(h)) for h in (hxx, hxy, hyy)) <= h_bound + 1e-12
