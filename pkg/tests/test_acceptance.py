"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the summary lines are printed
at the end of the session (or run this file directly).
"""

import math
from fractions import Fraction

import numpy as np
import pytest

from _gen import atomic_measure, random_measure
from _report import record
from alpert.basis import BASE_TOL, EXTRA_TOL, GRAM_TOL, build_alpert, haar, k2_special
from alpert.gram_oracle import BoxMeasure, gram_basis, lebesgue_box, projection_form
from alpert.grid import DyadicCube, cube_at, descendants, interval_at
from alpert.measure import EXACT, FLOAT, Measure, lebesgue
from alpert.moments import detail_dim_bound, dim_detail_space, exact_rank, moment_matrix
from alpert.mra import (PiecewiseFunction, check_telescoping, expand, norm2, parseval_defect,
                        reconstruct)
from alpert import twoweight as tw
from alpert.twoweight import (Kernel, dyadic_test_op, example_energy_table, example_pair,
                              op_coefficient, phi_psi, subgrid_check)

ROOT = (Fraction(0), Fraction(1))


def charged(m, Q):
    return m.mass((Q.left, Q.right)) > 0


# -- 1 ----------------------------------------------------------------------------------
def test_criterion_01_basis_correctness():
    rng = np.random.default_rng(1)
    failures, checked, worst = [], 0, {"gram": 0.0, "base": 0.0, "extra": 0.0}
    for trial in range(500):
        m = random_measure(rng)
        k = 1 + trial % 4
        depth = int(rng.integers(1, 7))
        for Q in descendants(ROOT, depth - 1):
            funcs, rep = build_alpert(m, Q, k)
            expected = dim_detail_space(m, Q, k)
            checked += 1
            for key in ("gram", "base"):
                worst[key] = max(worst[key], rep.residuals[key])
            if rep.nondegenerate:
                worst["extra"] = max(worst["extra"], rep.residuals["extra"])
            ok = (rep.residuals["gram"] <= GRAM_TOL and rep.residuals["base"] <= BASE_TOL
                  and (not rep.nondegenerate or rep.residuals["extra"] <= EXTRA_TOL)
                  and rep.count == expected)
            if not ok:
                failures.append((trial, Q.label(), k, rep))
    assert record(1, not failures,
                  f"{checked} intervals, {len(failures)} failures; worst gram {worst['gram']:.1e}, "
                  f"base {worst['base']:.1e}, extra {worst['extra']:.1e}"), failures[:3]


# -- 2 ----------------------------------------------------------------------------------
def _one_sided_measure(rng):
    """Point mass on one child of [0,1), a density (plus atoms) on the other."""
    x = Fraction(int(rng.integers(1, 128)), 256)
    pieces = [(Fraction(1, 2), Fraction(int(rng.integers(40, 65)), 64),
               [Fraction(int(rng.integers(1, 9)), 4)])]
    atoms = [(x, Fraction(int(rng.integers(1, 9)), 4)),
             (Fraction(int(rng.integers(128, 256)), 256), Fraction(int(rng.integers(1, 9)), 4))]
    m = Measure(atoms, pieces)
    if rng.random() < 0.5:  # mirror so the singular child is on the right
        m = Measure([(1 - a.x - Fraction(1, 1024), a.mass) for a in m.atoms],
                    [(1 - p.b, 1 - p.a, p.coeffs) for p in m.pieces])
    return m


def test_criterion_02_oracle_equivalence():
    rng = np.random.default_rng(2)
    nondeg = deg = 0
    worst = 0.0
    bad = []

    def compare(m, Q, k):
        nonlocal worst
        funcs, rep = build_alpert(m, Q, k)
        B1 = projection_form(m, funcs, Q, k)
        B2 = projection_form(m, gram_basis(m, Q, k, 1))
        err = float(np.linalg.norm(B1 - B2))
        worst = max(worst, err)
        if err > 1e-8:
            bad.append((Q.label(), k, rep.path, err))
        return rep

    while nondeg < 120:
        m = random_measure(rng)
        k = int(rng.integers(1, 5))
        for Q in descendants(ROOT, 2):
            if charged(m, Q):
                rep = compare(m, Q, k)
                nondeg += rep.nondegenerate
                deg += (not rep.nondegenerate) and rep.path != "gram"
    while deg < 30:
        m = _one_sided_measure(rng)
        rep = compare(m, interval_at(ROOT, 0, 0), int(rng.integers(2, 5)))
        deg += rep.path == "one-sided"
    assert record(2, not bad, f"{nondeg} nondegenerate + {deg} degenerate intervals, "
                              f"max Frobenius difference {worst:.1e}"), bad[:3]


# -- 3 ----------------------------------------------------------------------------------
def test_criterion_03_degeneracy():
    rng = np.random.default_rng(3)
    I = interval_at(ROOT, 0, 0)
    problems = []
    for _ in range(100):
        # uncharged right child: no Haar function
        m = Measure([(Fraction(int(rng.integers(0, 128)), 256), 1)],
                    [(0, Fraction(1, 4), [Fraction(int(rng.integers(1, 9)), 4)])])
        if haar(m, I) is not None or build_alpert(m, I, 1)[1].count != 0:
            problems.append("uncharged child gave a Haar function")
        # one point-mass child, k = 2: exactly one function; k2 membership holds
        m = _one_sided_measure(rng)
        funcs, rep = build_alpert(m, I, 2)
        diag = k2_special(m, I)
        if rep.count != 1 or not diag.applicable or not diag.membership:
            problems.append(f"one-sided: count {rep.count}, membership {diag.membership}")
        # a point mass on each child: no functions
        m = Measure([(Fraction(int(rng.integers(0, 128)), 256), int(rng.integers(1, 4))),
                     (Fraction(int(rng.integers(128, 256)), 256), int(rng.integers(1, 4)))])
        if build_alpert(m, I, 2)[1].count != 0:
            problems.append("two point-mass children gave a function")
    assert record(3, not problems, f"100 trials of each case; {len(problems)} problems"), problems[:3]


# -- 4 ----------------------------------------------------------------------------------
def _random_function(rng, depth, degree):
    return PiecewiseFunction(ROOT, depth, rng.standard_normal((2 ** depth, degree + 1)))


def test_criterion_04_telescoping_parseval():
    rng = np.random.default_rng(4)
    worst_tel = worst_par = worst_rec = 0.0
    for _ in range(100):
        m = random_measure(rng)
        k = int(rng.integers(1, 4))
        km = int(rng.integers(1, 7))
        K = interval_at(ROOT, km, int(rng.integers(0, 2 ** km)))
        L = K.ancestors()[int(rng.integers(0, km))]
        f = _random_function(rng, km + 1, k + 1)
        worst_tel = max(worst_tel, check_telescoping(f, m, K, L, k))
    for _ in range(200):
        m = random_measure(rng)
        k = int(rng.integers(1, 4))
        depth = int(rng.integers(1, 7))
        f = _random_function(rng, depth, k - 1)
        e = expand(f, m, ROOT, depth, k)
        nf = norm2(f, m)
        worst_par = max(worst_par, abs(parseval_defect(f, m, e)) / nf)
        worst_rec = max(worst_rec, math.sqrt(norm2(f - reconstruct(e, m), m) / nf))
    ok = worst_tel <= 1e-9 and worst_par <= 1e-9 and worst_rec <= 1e-10
    assert record(4, ok, f"telescoping {worst_tel:.1e} (≤1e-9), Parseval {worst_par:.1e} (≤1e-9), "
                         f"round trip {worst_rec:.1e} (≤1e-10)")


# -- 5 ----------------------------------------------------------------------------------
def _random_box_measure(rng):
    atoms = [((Fraction(int(rng.integers(0, 16)), 16), Fraction(int(rng.integers(0, 16)), 16)),
              Fraction(int(rng.integers(1, 5))))
             for _ in range(int(rng.integers(0, 4)))]
    boxes = [((0, 0), (1, 1), Fraction(int(rng.integers(0, 3))))]
    return BoxMeasure(atoms, boxes if boxes[0][2] > 0 or not atoms else [])


def test_criterion_05_dimension_bound():
    rng = np.random.default_rng(5)
    over, lebesgue_bad, trials = [], [], 0
    box = (ROOT, ROOT)
    for _ in range(60):
        m = _random_box_measure(rng)
        k = int(rng.integers(1, 4))
        for lvl in range(2):
            for idx in np.ndindex(*(2 ** lvl,) * 2):
                Q = cube_at(box, lvl, idx)
                c = gram_basis(m, Q, k).count
                trials += 1
                if c > detail_dim_bound(2, k):
                    over.append((idx, k, c))
    for _ in range(100):
        m = random_measure(rng)
        k = int(rng.integers(1, 5))
        Q = interval_at(ROOT, 1, int(rng.integers(0, 2)))
        c = build_alpert(m, Q, k)[1].count
        trials += 1
        if c > detail_dim_bound(1, k):
            over.append((Q.label(), k, c))
    for n, ks in ((1, range(1, 6)), (2, range(1, 4)), (3, range(1, 3))):
        for k in ks:
            Q = cube_at(tuple([ROOT] * n), 0, (0,) * n)
            c = gram_basis(lebesgue_box(n), Q, k).count
            if c != detail_dim_bound(n, k):
                lebesgue_bad.append((n, k, c))
    for k in range(1, 6):
        c = build_alpert(lebesgue(), interval_at(ROOT, 0, 0), k)[1].count
        if c != detail_dim_bound(1, k):
            lebesgue_bad.append((1, k, c))
    assert record(5, not over and not lebesgue_bad,
                  f"{trials} trials, {len(over)} above the bound; Lebesgue equality failures "
                  f"{lebesgue_bad}"), (over[:3], lebesgue_bad)


# -- 6 ----------------------------------------------------------------------------------
def test_criterion_06_atomic_rank():
    rng = np.random.default_rng(6)
    bad = []
    J = interval_at(ROOT, 0, 0)
    for _ in range(50):
        a = int(rng.integers(1, 6))
        k = int(rng.integers(1, 7))
        m = atomic_measure(rng, a)
        r = exact_rank(moment_matrix(m, J, k))
        if r != min(a, k):
            bad.append((a, k, r))
    assert record(6, not bad, f"50 atomic measures, {len(bad)} mismatches of rank vs min(a, k)"), bad


# -- 7 ----------------------------------------------------------------------------------
def test_criterion_07_worked_example():
    eps = 0.1
    t1 = example_energy_table(eps, 40, 1)
    t2 = example_energy_table(eps, 40, 2)
    a2_err = max(abs(r["a2_ratio"] - r["j"] ** -eps) / r["j"] ** -eps for r in t1)
    ok_a = a2_err <= 1e-12

    S1 = {r["j"]: r["partial1"] for r in t1}
    H = {J: sum(1 / j for j in range(2, J + 1)) for J in range(2, 41)}
    band = [S1[J] / H[J] for J in range(10, 41)]
    growth = S1[40] / S1[20]
    ok_b = 0.3 <= min(band) and max(band) <= 3 and growth >= 1.15

    S2 = {r["j"]: r["partialk"] for r in t2}
    tail = (S2[40] - S2[20]) / S2[20]
    scaled = [r["termk"] * r["j"] ** 1.2 for r in t2]
    spread = max(scaled) / min(scaled)
    ok_c = tail <= 0.5 and spread <= 3
    ok = ok_a and ok_b and ok_c
    assert record(
        7, ok,
        f"(a) A2 rel err {a2_err:.1e} [{'ok' if ok_a else 'fail'}]; "
        f"(b) S_J/(H_J-1) in [{min(band):.3f}, {max(band):.3f}], S40/S20 = {growth:.4f} "
        f"(need ≥1.15) [{'ok' if ok_b else 'fail'}]; "
        f"(c) (S40-S20)/S20 = {tail:.4f}, term_j·j^1.2 spread {spread:.2f} over j=2..40 "
        f"(need ≤3) [{'ok' if ok_c else 'fail'}]")


# -- 8 ----------------------------------------------------------------------------------
def test_criterion_08_taylor_remainder_bound():
    rng = np.random.default_rng(8)
    kernel = Kernel(0.5, "riesz", 0.5)
    J = interval_at(ROOT, 0, 0)
    ds = np.geomspace(4, 4096, 9)
    C = 0.0
    slopes = []
    for cfg in range(50):
        k = 1 + cfg % 2
        atoms = [(Fraction(int(rng.integers(1, 64)), 64), float(rng.uniform(0.2, 2)))
                 for _ in range(int(rng.integers(0, 4)))]
        pieces = [(0, 1, [float(rng.uniform(0.5, 2)), float(rng.uniform(-0.4, 0.4))])]
        omega = Measure(atoms, pieces, mode=FLOAT)
        funcs, _ = build_alpert(omega, J, k)
        side = 1 if rng.random() < 0.5 else -1
        logs = []
        for d in ds:
            nu = Measure([(float(0.5 + side * d), 1.0)], [], mode=FLOAT)
            pp = phi_psi(J, nu, omega, kernel, k, funcs)
            direct = math.fsum(op_coefficient(kernel, nu, a, omega) ** 2 for a in funcs)
            C = max(C, abs(direct - pp.Phi ** 2) / (pp.Phi * pp.Psi + pp.Psi ** 2))
            logs.append(math.log(pp.Psi / pp.Phi / pp.norm_ratio))
        slopes.append(np.polyfit(np.log(ds), logs, 1)[0])
    lo, hi = min(slopes), max(slopes)
    ok = C <= 100 and -0.6 <= lo and hi <= -0.4
    assert record(8, ok, f"fitted C = {C:.3f} (≤100); per-configuration log-log slopes in "
                         f"[{lo:.3f}, {hi:.3f}] (need -0.5±0.1)")


# -- 9 ----------------------------------------------------------------------------------
def _testing_failures(sigma, omega, rng, depth=8):
    T = dyadic_test_op(sigma, omega, ROOT, depth, k=2)
    fails, worst = 0, 0.0
    for Q in descendants(ROOT, depth):
        for _ in range(10):
            lhs, rhs, ok = tw.testing_check(T, Q, rng.standard_normal(2))
            fails += not ok
            if rhs > 0:
                worst = max(worst, lhs / rhs)
    return fails, worst


def test_criterion_09_testing_operator():
    rng = np.random.default_rng(9)
    sigma, omega = example_pair(0.1, 40)
    fails, worst = _testing_failures(sigma, omega, rng)
    rfails, rworst = 0, 0.0
    for _ in range(10):
        f, w = _testing_failures(random_measure(rng), random_measure(rng), rng)
        rfails += f
        rworst = max(rworst, w)
    family = [(Fraction(0), Fraction(1, 4 ** j)) for j in range(1, 6)]
    accepts_family = subgrid_check(family)[0]
    rejects_siblings = not subgrid_check([(Fraction(0), Fraction(1, 2)),
                                          (Fraction(1, 2), Fraction(1))])[0]
    ok = fails == 0 and rfails == 0 and accepts_family and rejects_siblings
    assert record(
        9, ok,
        f"worked-example pair: {fails}/5110 checks fail (max lhs/rhs {worst:.2f}); "
        f"10 random pairs: {rfails}/51100 fail (max {rworst:.2f}); "
        f"{{[0,4^-j)}} accepted: {accepts_family}; siblings rejected: {rejects_siblings}")


# -- 10 ---------------------------------------------------------------------------------
def test_criterion_10_haar_closed_form():
    rng = np.random.default_rng(10)
    worst, n = 0.0, 0
    while n < 100:
        m = random_measure(rng)
        mdepth = int(rng.integers(0, 4))
        Q = interval_at(ROOT, mdepth, int(rng.integers(0, 2 ** mdepth)))
        ref = haar(m, Q)
        if ref is None:
            continue
        (a,), _ = build_alpert(m, Q, 1)
        worst = max(worst, float(np.max(np.abs(np.r_[a.left - ref.left, a.right - ref.right]))))
        n += 1
    assert record(10, worst <= 1e-12, f"100 charged measures, max coefficient difference {worst:.1e}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
