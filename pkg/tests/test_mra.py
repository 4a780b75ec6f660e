from fractions import Fraction

import numpy as np
import pytest

from alpert.basis import build_alpert, haar
from alpert.grid import interval_at
from alpert.measure import Measure, lebesgue, point_masses
from alpert.mra import (PiecewiseFunction, check_telescoping, delta_agreement, delta_projection,
                        e_projection, expand, inner, norm2, parseval_defect, reconstruct)

from _gen import random_measure

ROOT = (0, 1)
R = interval_at(ROOT, 0, 0)


def poly(coeffs, depth=0):
    return PiecewiseFunction.from_polynomial(ROOT, coeffs, depth)


def test_e_projection_mean():
    np.testing.assert_allclose(e_projection(poly([0, 1]), lebesgue(), R, 1), [0.5])


def test_e_projection_reproduces_linear():
    # x = 1/2 + t in the local frame of [0, 1)
    np.testing.assert_allclose(e_projection(poly([0, 1]), lebesgue(), R, 2), [0.5, 1.0])


def test_e_projection_of_square():
    # best linear fit to x² is x - 1/6, i.e. 1/3 + t locally
    np.testing.assert_allclose(e_projection(poly([0, 0, 1]), lebesgue(), R, 2), [1 / 3, 1.0],
                               atol=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_delta_kills_low_degree(k):
    m = Measure([(Fraction(1, 3), 1)], [(0, 1, [1])])
    f = poly(list(range(1, k + 1)))
    lc, rc = delta_projection(f, m, R, k)
    np.testing.assert_allclose(lc, 0, atol=1e-12)
    np.testing.assert_allclose(rc, 0, atol=1e-12)


def test_delta_two_ways_agree():
    assert delta_agreement(poly([0, 0, 1]), lebesgue(), R, 2) < 1e-12
    m = random_measure(np.random.default_rng(3))
    assert delta_agreement(poly([1, -2, 0, 3]), m, R, 2) < 1e-9


def test_inner_products():
    assert norm2(poly([0, 1]), lebesgue()) == pytest.approx(1 / 3)
    m = point_masses([Fraction(1, 2)], [2])
    assert inner(poly([1]), poly([0, 1]), m) == pytest.approx(1.0)


def test_expand_constant_is_coarse_only():
    e = expand(poly([1]), lebesgue(), ROOT, 3, 2)
    assert e.energy() < 1e-24
    np.testing.assert_allclose(e.coarse_coeffs, [1, 0], atol=1e-14)


def test_expand_single_detail_function():
    funcs, _ = build_alpert(lebesgue(), R, 2)
    a = funcs[1]
    f = PiecewiseFunction(ROOT, 1, [np.asarray(reframe_row(a.left, -1)), np.asarray(reframe_row(a.right, 1))])
    e = expand(f, lebesgue(), ROOT, 3, 2)
    np.testing.assert_allclose(e.details[R], [0, 1], atol=1e-12)
    assert e.energy() == pytest.approx(1.0)


def reframe_row(coeffs, side):
    from alpert.mra import reframe
    C = R.children()[0 if side < 0 else 1]
    return reframe(coeffs, R.frame, C.frame)


def test_k1_coefficients_are_haar():
    m = Measure([(Fraction(1, 5), 1)], [(0, 1, [1])])
    f = poly([0, 0, 1], depth=3)
    e = expand(f, m, ROOT, 3, 1)
    for Q, coefs in e.details.items():
        h = haar(m, Q)
        if h is None:
            assert len(coefs) == 0
        else:
            np.testing.assert_allclose(coefs, [inner(f, _as_function(h, 3), m)], atol=1e-12)


def _as_function(h, depth):
    rows = [[float(h(Fraction(2 * j + 1, 2 ** (depth + 1))))] for j in range(2 ** depth)]
    return PiecewiseFunction(ROOT, depth, rows)


@pytest.mark.parametrize("seed", range(5))
def test_round_trip_and_parseval(seed):
    rng = np.random.default_rng(seed)
    m = random_measure(rng)
    f = PiecewiseFunction(ROOT, 4, rng.normal(size=(16, 2)))
    e = expand(f, m, ROOT, 4, 2)
    rec = reconstruct(e, m)
    assert abs(parseval_defect(f, m, e)) <= 1e-9 * max(norm2(f, m), 1)
    assert norm2(f - rec, m) <= 1e-18 * max(norm2(f, m), 1) + 1e-20


def test_round_trip_lebesgue_piecewise_linear():
    rng = np.random.default_rng(7)
    f = PiecewiseFunction(ROOT, 4, rng.normal(size=(16, 2)))
    rec = reconstruct(expand(f, lebesgue(), ROOT, 4, 2))
    np.testing.assert_allclose(rec.coeffs, f.coeffs, atol=1e-10)


def test_telescoping_single_step():
    K = interval_at(ROOT, 1, 0)
    assert check_telescoping(poly([0, 0, 0, 1]), lebesgue(), K, R, 2) <= 1e-10


def test_telescoping_depth_gap_five():
    K = interval_at(ROOT, 5, 13)
    assert check_telescoping(poly([0, 0, 0, 1]), lebesgue(), K, R, 2) <= 1e-9


def test_telescoping_with_uncharged_cells():
    m = point_masses([Fraction(1, 7), Fraction(3, 7), Fraction(5, 9)])
    K = interval_at(ROOT, 4, 2)
    assert check_telescoping(poly([1, 2, -1, 1]), m, K, R, 2) <= 1e-9


def test_telescoping_requires_descendant():
    with pytest.raises(ValueError):
        check_telescoping(poly([1]), lebesgue(), R, R, 2)
