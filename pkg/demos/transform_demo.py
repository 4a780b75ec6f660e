"""Wavelet transform round trip in L²(μ).

Expands a random piecewise-linear function, reconstructs it, and checks that
the coefficient energy accounts for the whole norm (Parseval).
"""

from fractions import Fraction

import numpy as np

from alpert import Measure, PiecewiseFunction, expand, norm2, parseval_defect, reconstruct

rng = np.random.default_rng(0)
m = Measure(atoms=[(Fraction(1, 3), 1), (Fraction(5, 7), Fraction(1, 2))],
            pieces=[(0, 1, [1, Fraction(1, 2)])])
f = PiecewiseFunction((0, 1), 5, rng.standard_normal((32, 2)))
e = expand(f, m, (0, 1), 5, k=2)
rec = reconstruct(e, m)
print(f"‖f‖²              = {norm2(f, m):.15f}")
coarse = norm2(f, m) - e.energy() - parseval_defect(f, m, e)
print(f"coarse energy      = {coarse:.15f}")
print(f"detail energy      = {e.energy():.15f}")
print(f"Parseval defect    = {parseval_defect(f, m, e):.2e}")
print(f"‖f - rec‖²         = {norm2(f - rec, m):.2e}")
print(f"nonzero detail coefficients: {sum(abs(v) > 1e-14 for v in np.concatenate(list(e.details.values())))}")
