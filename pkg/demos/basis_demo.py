"""Alpert functions of a measure with an atom and a linear density.

Builds the order-k functions on every interval of a shallow grid, prints the
construction path and the verification residuals, and shows how the function
count drops where a child carries only a point mass or nothing at all.
"""

from fractions import Fraction

from alpert import Measure, build_alpert, descendants

m = Measure(atoms=[(Fraction(3, 8), 2), (Fraction(13, 16), 1), (Fraction(15, 16), 1)],
            pieces=[(0, Fraction(1, 4), [1, 2]), (Fraction(1, 2), Fraction(3, 4), [1])])
k = 2
print(f"{'interval':>14} {'path':>14} {'count':>5} {'gram':>9} {'base':>9} {'extra':>9}")
for Q in descendants((0, 1), 3):
    funcs, rep = build_alpert(m, Q, k)
    r = rep.residuals
    print(f"{str(Q):>14} {rep.path:>14} {rep.count:>5} "
          f"{r['gram']:9.1e} {r['base']:9.1e} {r['extra']:9.1e}")
