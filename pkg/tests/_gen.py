"""Seeded random measures shared by the test modules."""

from fractions import Fraction

import numpy as np

from alpert.measure import EXACT, Measure


def _rational(rng, lo, hi, den=16):
    """A random rational in [lo, hi] with denominator ``den``."""
    return Fraction(int(rng.integers(int(lo * den), int(hi * den) + 1)), den)


def random_measure(rng, max_atoms=5, max_pieces=3, max_degree=2, mode=EXACT):
    """≤ max_atoms atoms plus ≤ max_pieces polynomial pieces on [0, 1).

    Atom locations mix dyadic and non-dyadic rationals so that deep intervals
    see both isolated atoms and clusters.  Piece densities c0 + c1 x + c2 x²
    satisfy |c1| + |c2| ≤ c0 / 2 and are therefore positive on [0, 1].
    """
    while True:
        na = int(rng.integers(0, max_atoms + 1))
        npc = int(rng.integers(0, max_pieces + 1))
        if na + npc:
            break
    atoms = {}
    for _ in range(na):
        if rng.random() < 0.5:
            x = Fraction(int(rng.integers(0, 256)), 256)
        else:
            q = int(rng.integers(3, 98))
            x = Fraction(int(rng.integers(0, q)), q)
        atoms[x] = _rational(rng, 0.0625, 4)
    cuts = sorted(rng.choice(np.arange(65), size=2 * npc, replace=False))
    pieces = []
    for a, b in zip(cuts[::2], cuts[1::2]):
        deg = int(rng.integers(0, max_degree + 1))
        c0 = _rational(rng, 1, 4)
        coeffs = [c0]
        budget = c0 / 2
        for _ in range(deg):
            c = _rational(rng, -1, 1) * budget / 2
            coeffs.append(c)
        pieces.append((Fraction(int(a), 64), Fraction(int(b), 64), coeffs))
    return Measure(list(atoms.items()), pieces, mode=mode)


def atomic_measure(rng, n_atoms, lo=Fraction(0), hi=Fraction(1), mode=EXACT):
    """n_atoms distinct atoms with rational locations in [lo, hi)."""
    xs = set()
    while len(xs) < n_atoms:
        xs.add(lo + (hi - lo) * Fraction(int(rng.integers(0, 1000)), 1000))
    return Measure([(x, _rational(rng, 0.25, 3)) for x in sorted(xs)], [], mode=mode)
