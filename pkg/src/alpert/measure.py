"""Measures on the line given by finitely many atoms plus polynomial densities.

A :class:`Measure` stores atom locations and piece endpoints as exact
``Fraction`` values.  Masses and density coefficients are ``Fraction`` in
exact mode and ``float`` in float mode.  Moments are computed from closed
form antiderivatives; in float mode the individual contributions are summed
with :func:`math.fsum`.
"""

import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._poly import compose_affine, evaluate, power_integral

EXACT = "exact"
FLOAT = "float"
DEFAULT_BIT_BUDGET = 4096


class MeasureFormatError(ValueError):
    """Raised when a measure description cannot be parsed."""


class BitBudgetWarning(RuntimeWarning):
    """Exact rational arithmetic exceeded the configured bit budget."""


def to_fraction(value):
    """Convert an int, float, decimal string or {num, den} mapping to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise MeasureFormatError(f"not a number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise MeasureFormatError(f"non-finite number: {value!r}")
        # repr gives the shortest decimal that round-trips, so 0.1 -> 1/10
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise MeasureFormatError(f"bad number {value!r}") from exc
    if isinstance(value, dict):
        if set(value) != {"num", "den"}:
            raise MeasureFormatError(f"rational must have keys num, den: {value!r}")
        try:
            return Fraction(int(value["num"]), int(value["den"]))
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise MeasureFormatError(f"bad rational {value!r}") from exc
    raise MeasureFormatError(f"not a number: {value!r}")


def bounds(J):
    """Return (left, right) of an interval given as a pair or an interval object."""
    if hasattr(J, "left") and hasattr(J, "right"):
        return J.left, J.right
    a, b = J
    return to_fraction(a), to_fraction(b)


@dataclass(frozen=True)
class Atom:
    x: Fraction
    mass: object


@dataclass(frozen=True)
class Piece:
    a: Fraction
    b: Fraction
    coeffs: tuple

    def density(self, x):
        return evaluate(self.coeffs, x)


class Measure:
    """Atoms plus piecewise-polynomial densities on half-open pieces [a, b)."""

    def __init__(self, atoms=(), pieces=(), mode=EXACT, bit_budget=DEFAULT_BIT_BUDGET):
        if mode not in (EXACT, FLOAT):
            raise ValueError(f"unknown arithmetic mode {mode!r}")
        self.mode = mode
        self.bit_budget = bit_budget
        conv = to_fraction if mode == EXACT else _to_float
        self.atoms = tuple(
            sorted((Atom(to_fraction(x), conv(w)) for x, w in atoms), key=lambda a: a.x)
        )
        self.pieces = tuple(
            sorted(
                (
                    Piece(to_fraction(a), to_fraction(b), tuple(conv(c) for c in coeffs) or (conv(0),))
                    for a, b, coeffs in pieces
                ),
                key=lambda p: p.a,
            )
        )
        self._atom_x = np.array([float(a.x) for a in self.atoms])
        self._piece_a = np.array([float(p.a) for p in self.pieces])
        self._piece_b = np.array([float(p.b) for p in self.pieces])

    # -- construction helpers -------------------------------------------------
    @property
    def exact(self):
        return self.mode == EXACT

    def with_mode(self, mode):
        return Measure(
            [(a.x, a.mass) for a in self.atoms],
            [(p.a, p.b, p.coeffs) for p in self.pieces],
            mode=mode,
            bit_budget=self.bit_budget,
        )

    def atomic_part(self):
        return Measure([(a.x, a.mass) for a in self.atoms], [], mode=self.mode)

    def continuous_part(self):
        return Measure([], [(p.a, p.b, p.coeffs) for p in self.pieces], mode=self.mode)

    def __add__(self, other):
        mode = EXACT if (self.exact and other.exact) else FLOAT
        return Measure(
            [(a.x, a.mass) for a in self.atoms + other.atoms],
            [(p.a, p.b, p.coeffs) for p in self.pieces + other.pieces],
            mode=mode,
        )

    def __repr__(self):
        return f"Measure({len(self.atoms)} atoms, {len(self.pieces)} pieces, mode={self.mode})"

    # -- moments -------------------------------------------------------------
    def _zero(self):
        return Fraction(0) if self.exact else 0.0

    def _candidates(self, lo, hi):
        """Indices of atoms and pieces that may meet [lo, hi)."""
        flo, fhi = float(lo), float(hi)
        ia = np.nonzero((self._atom_x >= flo - abs(flo) * 1e-15 - 1e-300)
                        & (self._atom_x <= fhi + abs(fhi) * 1e-15 + 1e-300))[0]
        ip = np.nonzero((self._piece_b >= flo - abs(flo) * 1e-15 - 1e-300)
                        & (self._piece_a <= fhi + abs(fhi) * 1e-15 + 1e-300))[0]
        return ia, ip

    def local_moments(self, J, imax, frame=None):
        """Return [∫_J t^i dμ for i = 0..imax] with t = (x - c)/h.

        ``frame`` is (c, h); the default is the center and length of J, which
        puts J at t ∈ [-1/2, 1/2).
        """
        lo, hi = bounds(J)
        if frame is None:
            c, h = (lo + hi) / 2, hi - lo
        else:
            c, h = to_fraction(frame[0]), to_fraction(frame[1])
        if h <= 0:
            raise ValueError("frame length must be positive")
        n = imax + 1
        terms = [[] for _ in range(n)]
        if hi <= lo:
            return [self._zero() for _ in range(n)]
        ia, ip = self._candidates(lo, hi)
        for idx in ia:
            atom = self.atoms[idx]
            if lo <= atom.x < hi:
                t = (atom.x - c) / h
                if not self.exact:
                    t = float(t)
                w = atom.mass
                for i in range(n):
                    terms[i].append(w)
                    w = w * t
        for idx in ip:
            piece = self.pieces[idx]
            a, b = max(piece.a, lo), min(piece.b, hi)
            if b <= a:
                continue
            tlo, thi = (a - c) / h, (b - c) / h
            if self.exact:
                q = compose_affine(piece.coeffs, c, h)
                scale = h
                width = None
            else:
                width = float(thi - tlo)  # exact difference, rounded once
                tlo, thi = float(tlo), float(thi)
                q = compose_affine(piece.coeffs, float(c), float(h))
                scale = float(h)
            for i in range(n):
                for r, qr in enumerate(q):
                    if qr:
                        terms[i].append(qr * scale * power_integral(tlo, thi, i + r, width))
        if self.exact:
            out = [sum(ts, Fraction(0)) for ts in terms]
            return [self._check_budget(v) for v in out]
        return [math.fsum(ts) for ts in terms]

    def local_moment(self, J, i, frame=None):
        """∫_J t^i dμ in the local coordinate t = (x - c_J)/|J| (or ``frame``)."""
        return self.local_moments(J, i, frame)[i]

    def moment(self, J, i):
        """∫_J x^i dμ (raw coordinates)."""
        return self.local_moments(J, i, frame=(0, 1))[i]

    def mass(self, J):
        return self.local_moments(J, 0, frame=(0, 1))[0]

    def charged(self, J):
        return self.mass(J) > 0

    def _check_budget(self, v):
        bits = max(v.numerator.bit_length(), v.denominator.bit_length())
        if bits > self.bit_budget:
            warnings.warn(
                f"exact moment needs {bits} bits (budget {self.bit_budget}); "
                "falling back to float",
                BitBudgetWarning,
                stacklevel=3,
            )
            return float(v)
        return v

    # -- other operations ------------------------------------------------------
    def restrict(self, J):
        """The measure 1_J μ."""
        lo, hi = bounds(J)
        atoms = [(a.x, a.mass) for a in self.atoms if lo <= a.x < hi]
        pieces = []
        for p in self.pieces:
            a, b = max(p.a, lo), min(p.b, hi)
            if a < b:
                pieces.append((a, b, p.coeffs))
        return Measure(atoms, pieces, mode=self.mode, bit_budget=self.bit_budget)

    def support_points(self, J, nodes_per_piece=4):
        """Points of J carrying μ-mass: atoms plus Chebyshev nodes inside pieces."""
        lo, hi = bounds(J)
        pts = [float(a.x) for a in self.atoms if lo <= a.x < hi]
        cheb = np.cos((2 * np.arange(nodes_per_piece) + 1) * np.pi / (2 * nodes_per_piece))
        for p in self.pieces:
            a, b = max(p.a, lo), min(p.b, hi)
            if a < b:
                fa, fb = float(a), float(b)
                xs = 0.5 * (fa + fb) + 0.5 * (fb - fa) * cheb
                dens = np.array([float(evaluate(p.coeffs, x)) for x in xs])
                pts.extend(xs[dens > 0].tolist())
        return np.array(sorted(pts))

    def to_dict(self):
        def enc(v):
            if isinstance(v, Fraction):
                return {"num": v.numerator, "den": v.denominator}
            return repr(float(v))

        return {
            "atoms": [{"x": enc(a.x), "mass": enc(a.mass)} for a in self.atoms],
            "pieces": [
                {"a": enc(p.a), "b": enc(p.b), "coeffs": [enc(c) for c in p.coeffs]}
                for p in self.pieces
            ],
            "mode": self.mode,
        }


def _to_float(value):
    return float(to_fraction(value)) if not isinstance(value, float) else value


def validate(m):
    """Return a list of human-readable invariant violations (empty if valid)."""
    problems = []
    for n, atom in enumerate(m.atoms):
        if not atom.mass > 0:
            problems.append(f"atom {n} at x={atom.x}: nonpositive mass")
    for n, piece in enumerate(m.pieces):
        if not piece.a < piece.b:
            problems.append(f"piece {n}: empty interval [{piece.a}, {piece.b})")
            continue
        lo = _poly_min(piece.coeffs, float(piece.a), float(piece.b))
        scale = max(abs(float(c)) * max(abs(float(piece.a)), abs(float(piece.b)), 1.0) ** r
                    for r, c in enumerate(piece.coeffs))
        if lo < -1e-12 * max(scale, 1e-300):
            problems.append(f"piece {n} [{piece.a}, {piece.b}): density negative on piece")
    for n in range(1, len(m.pieces)):
        if m.pieces[n].a < m.pieces[n - 1].b:
            problems.append(f"pieces {n - 1} and {n}: overlapping interiors")
    return problems


def _poly_min(coeffs, a, b):
    """Minimum of a polynomial over [a, b] by derivative root isolation."""
    p = np.polynomial.Polynomial([float(c) for c in coeffs])
    cands = [a, b]
    if p.degree() >= 2:
        for r in p.deriv().roots():
            if abs(r.imag) < 1e-12 * max(1.0, abs(r.real)) and a < r.real < b:
                cands.append(r.real)
    return min(p(x) for x in cands)


# -- convenience constructors ----------------------------------------------------
def lebesgue(a=0, b=1, mode=EXACT):
    return Measure([], [(a, b, [1])], mode=mode)


def point_masses(locations, masses=None, mode=EXACT):
    if masses is None:
        masses = [1] * len(locations)
    return Measure(list(zip(locations, masses)), [], mode=mode)


def from_dict(data, mode=None):
    """Build a measure from the JSON-style dictionary description."""
    if not isinstance(data, dict):
        raise MeasureFormatError("measure description must be an object")
    unknown = set(data) - {"atoms", "pieces", "mode"}
    if unknown:
        raise MeasureFormatError(f"unknown keys {sorted(unknown)}")
    mode = mode or data.get("mode", EXACT)
    if mode not in (EXACT, FLOAT):
        raise MeasureFormatError(f"mode must be 'exact' or 'float', got {mode!r}")
    try:
        atoms = [(to_fraction(a["x"]), to_fraction(a["mass"])) for a in data.get("atoms", [])]
        pieces = [
            (to_fraction(p["a"]), to_fraction(p["b"]), [to_fraction(c) for c in p["coeffs"]])
            for p in data.get("pieces", [])
        ]
    except (KeyError, TypeError) as exc:
        raise MeasureFormatError(f"malformed atom or piece: {exc}") from exc
    return Measure(atoms, pieces, mode=mode)


def loads(text, mode=None):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MeasureFormatError(f"invalid JSON: {exc}") from exc
    return from_dict(data, mode=mode)


def load(path, mode=None):
    with open(path) as fh:
        return loads(fh.read(), mode=mode)
