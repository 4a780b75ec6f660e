"""Multiresolution projections, expansions and their identities.

Functions are piecewise polynomials on the cells of a dyadic grid of fixed
depth, with optional explicit values at atoms (a function and its value table
may differ on μ-null sets, and at atoms that difference matters).
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

from ._poly import compose_affine, evaluate, reframe_matrix
from .basis import build_alpert
from .grid import DyadicInterval, descendants, interval_at
from .measure import to_fraction
from .moments import RANK_TOL, moment_matrix


def _affine(src_frame, dst_frame):
    """(a, b) with t_src = a + b t_dst for two (center, length) frames."""
    cs, hs = src_frame
    cd, hd = dst_frame
    return float((Fraction(cd) - Fraction(cs)) / Fraction(hs)), float(Fraction(hd) / Fraction(hs))


def reframe(coeffs, src_frame, dst_frame):
    """Re-express a polynomial given in src-local coordinates in dst-local ones."""
    coeffs = np.asarray(coeffs, float)
    a, b = _affine(src_frame, dst_frame)
    return reframe_matrix(a, b, len(coeffs)) @ coeffs


class PiecewiseFunction:
    """Polynomials on the 2^depth cells of ``root`` plus optional atom values.

    ``coeffs[j]`` holds ascending coefficients of the polynomial on cell j in
    that cell's local coordinate.
    """

    def __init__(self, root, depth, coeffs, atom_values=None):
        self.root = tuple(to_fraction(v) for v in root)
        self.depth = depth
        self.coeffs = np.atleast_2d(np.asarray(coeffs, dtype=float))
        if self.coeffs.shape[0] != 2 ** depth:
            raise ValueError(f"expected {2 ** depth} cells, got {self.coeffs.shape[0]}")
        self.atom_values = {to_fraction(x): float(v) for x, v in (atom_values or {}).items()}

    @classmethod
    def from_polynomial(cls, root, coeffs, depth=0):
        """A global polynomial in the raw variable x, cut into cells."""
        root = tuple(to_fraction(v) for v in root)
        cells = [interval_at(root, depth, j) for j in range(2 ** depth)]
        rows = [[float(v) for v in compose_affine([Fraction(c) for c in coeffs], C.center, C.length)]
                for C in cells]
        return cls(root, depth, rows)

    @classmethod
    def zero(cls, root, depth=0, degree=0):
        return cls(root, depth, np.zeros((2 ** depth, degree + 1)))

    @property
    def degree(self):
        return self.coeffs.shape[1] - 1

    def cell(self, j):
        return DyadicInterval(self.root, self.depth, j)

    def cell_index(self, x):
        x = to_fraction(x)
        a, b = self.root
        if not a <= x < b:
            return None
        return int((x - a) / (b - a) * 2 ** self.depth)

    def poly_value(self, x):
        j = self.cell_index(x)
        if j is None:
            return 0.0
        C = self.cell(j)
        return float(evaluate(self.coeffs[j], float((to_fraction(x) - C.center) / C.length)))

    def __call__(self, x):
        x = to_fraction(x)
        if x in self.atom_values:
            return self.atom_values[x]
        return self.poly_value(x)

    def values(self, xs):
        return np.array([self(float(x)) for x in xs])

    def refine(self, depth):
        if depth < self.depth:
            raise ValueError("can only refine to a deeper grid")
        out = self
        while out.depth < depth:
            T_left = reframe_matrix(-0.25, 0.5, out.coeffs.shape[1])
            T_right = reframe_matrix(0.25, 0.5, out.coeffs.shape[1])
            rows = np.empty((2 * out.coeffs.shape[0], out.coeffs.shape[1]))
            rows[0::2] = out.coeffs @ T_left.T
            rows[1::2] = out.coeffs @ T_right.T
            out = PiecewiseFunction(out.root, out.depth + 1, rows, out.atom_values)
        return out

    def pad(self, degree):
        if degree <= self.degree:
            return self
        rows = np.zeros((self.coeffs.shape[0], degree + 1))
        rows[:, : self.coeffs.shape[1]] = self.coeffs
        return PiecewiseFunction(self.root, self.depth, rows, self.atom_values)

    def _aligned(self, other):
        d = max(self.depth, other.depth)
        g = max(self.degree, other.degree)
        return self.refine(d).pad(g), other.refine(d).pad(g)

    def __add__(self, other):
        a, b = self._aligned(other)
        keys = set(a.atom_values) | set(b.atom_values)
        return PiecewiseFunction(a.root, a.depth, a.coeffs + b.coeffs,
                                 {x: a(x) + b(x) for x in keys})

    def __neg__(self):
        return PiecewiseFunction(self.root, self.depth, -self.coeffs,
                                 {x: -v for x, v in self.atom_values.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s):
        return PiecewiseFunction(self.root, self.depth, s * self.coeffs,
                                 {x: s * v for x, v in self.atom_values.items()})

    def to_dict(self):
        return {
            "root": [str(self.root[0]), str(self.root[1])],
            "depth": self.depth,
            "coeffs": self.coeffs.tolist(),
            "atom_values": [{"x": str(x), "value": v} for x, v in sorted(self.atom_values.items())],
        }

    @classmethod
    def from_dict(cls, data):
        """Parse {"root", "depth", "coeffs" | "poly", "atom_values"}."""
        if not isinstance(data, dict) or "root" not in data:
            raise ValueError("function description needs a root")
        root = tuple(to_fraction(v) for v in data["root"])
        atoms = {to_fraction(a["x"]): float(to_fraction(a["value"]))
                 for a in data.get("atom_values", [])}
        if "poly" in data:
            f = cls.from_polynomial(root, [to_fraction(c) for c in data["poly"]],
                                    int(data.get("depth", 0)))
            return cls(f.root, f.depth, f.coeffs, atoms)
        coeffs = [[float(to_fraction(c)) for c in row] for row in data["coeffs"]]
        return cls(root, int(data["depth"]), coeffs, atoms)


def as_piecewise(func, root, depth):
    """An AlpertFunction as a PiecewiseFunction on cells of the given depth."""
    I = func.interval
    if depth <= I.m:
        raise ValueError("depth must exceed the interval depth")
    rows = np.zeros((2 ** depth, func.k))
    shift = depth - I.m
    for j in range(I.j << shift, (I.j + 1) << shift):
        C = DyadicInterval(I.root, depth, j)
        side = I.side_of(C)
        rows[j] = reframe(func.right if side else func.left, I.frame, C.frame)
    return PiecewiseFunction(root, depth, rows)


# -- integration against a measure ------------------------------------------------
class _CellMoments:
    """Cached moments of μ's continuous part on the cells of a fixed depth."""

    def __init__(self, m, root, depth, nmax):
        self.cont = m.continuous_part()
        self.atoms = m.atoms
        self.depth = depth
        self.nmax = nmax
        self.root = root
        self.table = {}

    def get(self, j):
        if j not in self.table:
            C = DyadicInterval(self.root, self.depth, j)
            self.table[j] = np.array([float(v) for v in self.cont.local_moments(C, self.nmax)])
        return self.table[j]


_cache = {}


def _cell_moments(m, root, depth, nmax):
    key = (id(m), root, depth)
    cm = _cache.get(key)
    if cm is None or cm.nmax < nmax or cm.atoms is not m.atoms:
        cm = _CellMoments(m, root, depth, nmax)
        if len(_cache) > 64:
            _cache.clear()
        _cache[key] = cm
    return cm


def f_moments(f, m, J, frame, n):
    """[∫_J f t^i dμ for i < n] with t = (x - c)/h for frame (c, h)."""
    if J.m > f.depth:
        f = f.refine(J.m)
    cm = _cell_moments(m, f.root, f.depth, f.degree + n)
    out = np.zeros(n)
    shift = f.depth - J.m
    for j in range(J.j << shift, (J.j + 1) << shift):
        mu = cm.get(j)
        C = DyadicInterval(f.root, f.depth, j)
        a, b = _affine(frame, C.frame)
        T = reframe_matrix(a, b, n)  # t^i = Σ_r T[r, i] s^r
        p = f.coeffs[j]
        fs = np.array([p @ mu[r: r + len(p)] for r in range(n)])
        out += fs @ T
    c, h = Fraction(frame[0]), Fraction(frame[1])
    for atom in m.atoms:
        if J.left <= atom.x < J.right:
            t = float((atom.x - c) / h)
            out += float(atom.mass) * f(atom.x) * t ** np.arange(n)
    return out


def inner(f, g, m):
    """⟨f, g⟩ in L²(μ) for two PiecewiseFunctions on the same root."""
    f, g = f._aligned(g)
    cm = _cell_moments(m, f.root, f.depth, 2 * f.degree)
    total = 0.0
    for j in range(2 ** f.depth):
        mu = cm.get(j)
        p, q = f.coeffs[j], g.coeffs[j]
        total += float(np.convolve(p, q) @ mu[: 2 * f.degree + 1])
    for atom in m.atoms:
        if f.root[0] <= atom.x < f.root[1]:
            total += float(atom.mass) * f(atom.x) * g(atom.x)
    return total


def norm2(f, m):
    return inner(f, f, m)


# -- projections ----------------------------------------------------------------------
def e_projection(f, m, Q, k, tol=RANK_TOL):
    """Coefficients (in Q's local frame) of the best degree ≤ k-1 fit to f on Q."""
    M = moment_matrix(m, Q, k).to_float()
    if M[0, 0] <= 0:
        return np.zeros(k)
    v = f_moments(f, m, Q, Q.frame, k)
    return np.linalg.pinv(M, rcond=tol, hermitian=True) @ v


def delta_projection(f, m, Q, k, method="basis", funcs=None, tol=RANK_TOL):
    """Δ_Q f as (left coefficients, right coefficients) in Q's local frame.

    ``method="basis"`` sums ⟨f, a⟩ a over the constructed basis;
    ``method="difference"`` uses E_{left} f + E_{right} f - E_Q f.
    """
    left, right = Q.children()
    if method == "basis":
        if funcs is None:
            funcs, _ = build_alpert(m, Q, k, tol)
        lc, rc = np.zeros(k), np.zeros(k)
        vl = f_moments(f, m, left, Q.frame, k)
        vr = f_moments(f, m, right, Q.frame, k)
        for a in funcs:
            coef = a.left @ vl + a.right @ vr
            lc += coef * a.left
            rc += coef * a.right
        return lc, rc
    if method == "difference":
        eq = e_projection(f, m, Q, k, tol)
        el = reframe(e_projection(f, m, left, k, tol), left.frame, Q.frame)
        er = reframe(e_projection(f, m, right, k, tol), right.frame, Q.frame)
        return el - eq, er - eq
    raise ValueError(f"unknown method {method!r}")


def detail_norm2(m, Q, k, lc, rc):
    """μ-norm squared of a child-piecewise polynomial given in Q's frame."""
    from .gram_oracle import child_blocks

    _, _, (BL, BR) = child_blocks(m, Q, k)
    return float(lc @ BL @ lc + rc @ BR @ rc)


def delta_agreement(f, m, Q, k, tol=RANK_TOL):
    """L²(μ) distance between the two computations of Δ_Q f."""
    a = delta_projection(f, m, Q, k, "basis", tol=tol)
    b = delta_projection(f, m, Q, k, "difference", tol=tol)
    return np.sqrt(max(detail_norm2(m, Q, k, a[0] - b[0], a[1] - b[1]), 0.0))


# -- expansions -------------------------------------------------------------------------
@dataclass
class WaveletExpansion:
    root: tuple
    k: int
    depth: int
    coarse_coeffs: np.ndarray
    details: dict = field(default_factory=dict)
    bases: dict = field(default_factory=dict)

    def coefficient_rows(self):
        """(m, j, ℓ, value) for every detail coefficient."""
        rows = []
        for Q in sorted(self.details, key=lambda q: (q.m, q.j)):
            for a, v in zip(self.bases[Q], self.details[Q]):
                rows.append((Q.m, Q.j, a.index, float(v)))
        return rows

    def energy(self):
        return float(sum(np.sum(np.asarray(v) ** 2) for v in self.details.values()))


def expand(f, m, root, depth, k, tol=RANK_TOL, basis="explicit"):
    """Coarse projection on the root plus detail coefficients for depth < ``depth``."""
    root = tuple(to_fraction(v) for v in root)
    if f.depth > depth:
        raise ValueError("function is finer than the expansion depth")
    f = f.refine(depth)
    R = interval_at(root, 0, 0)
    e = WaveletExpansion(root, k, depth, e_projection(f, m, R, k, tol))
    for Q in descendants(root, depth - 1) if depth > 0 else []:
        if basis == "explicit":
            funcs, _ = build_alpert(m, Q, k, tol)
        else:
            funcs = _gram_functions(m, Q, k, tol)
        left, right = Q.children()
        vl = f_moments(f, m, left, Q.frame, k)
        vr = f_moments(f, m, right, Q.frame, k)
        e.bases[Q] = funcs
        e.details[Q] = np.array([a.left @ vl + a.right @ vr for a in funcs])
    return e


def _gram_functions(m, Q, k, tol):
    from .basis import AlpertFunction
    from .gram_oracle import gram_basis

    B = gram_basis(m, Q, k, 1, tol)
    return [AlpertFunction(Q, k, q + 1, col[:k], col[k:])
            for q, col in enumerate(B.coefficient_columns())]


def reconstruct(e, m=None):
    """Sum the coarse polynomial and all detail terms into a PiecewiseFunction."""
    R = interval_at(e.root, 0, 0)
    D = e.depth
    rows = np.zeros((2 ** D, e.k))
    for j in range(2 ** D):
        C = DyadicInterval(R.root, D, j)
        rows[j] = reframe(e.coarse_coeffs, R.frame, C.frame)
    for Q, coefs in e.details.items():
        shift = D - Q.m
        for a, v in zip(e.bases[Q], coefs):
            if v == 0:
                continue
            for j in range(Q.j << shift, (Q.j + 1) << shift):
                C = DyadicInterval(R.root, D, j)
                side = (j >> (shift - 1)) & 1
                rows[j] += v * reframe(a.right if side else a.left, Q.frame, C.frame)
    return PiecewiseFunction(e.root, D, rows)


def parseval_defect(f, m, e):
    """‖f‖² - ‖E_root f‖² - Σ |coefficients|²."""
    R = interval_at(e.root, 0, 0)
    M = moment_matrix(m, R, e.k).to_float()
    coarse = float(e.coarse_coeffs @ M @ e.coarse_coeffs)
    return norm2(f, m) - coarse - e.energy()


def check_telescoping(f, m, K, Lc, k, tol=RANK_TOL, nodes=4):
    """max over μ-support points of K of |Σ_{K⊊I⊆L} Δ_I f - (E_K f - E_L f)|."""
    if not (Lc.contains(K) and K.m > Lc.m):
        raise ValueError("K must be a strict descendant of L")
    depth = max(f.depth, K.m + 1)
    f = f.refine(depth)
    shift = depth - K.m
    pts = []
    for j in range(K.j << shift, (K.j + 1) << shift):
        pts.extend(m.support_points(DyadicInterval(K.root, depth, j), nodes).tolist())
    pts = np.array(sorted(set(pts)))
    if pts.size == 0:
        return 0.0
    lhs = np.zeros_like(pts)
    chain = [K.parent()]
    while chain[-1] != Lc:
        chain.append(chain[-1].parent())
    for I in chain:
        lc, rc = delta_projection(f, m, I, k, "basis", tol=tol)
        t = (pts - float(I.center)) / float(I.length)
        lhs += np.where(t < 0, evaluate(lc, t), evaluate(rc, t))
    eK = e_projection(f, m, K, k, tol)
    eL = e_projection(f, m, Lc, k, tol)
    rhs = (evaluate(eK, (pts - float(K.center)) / float(K.length))
           - evaluate(eL, (pts - float(Lc.center)) / float(Lc.length)))
    return float(np.max(np.abs(lhs - rhs)))
