"""Detail spaces built directly from the definition, in dimension n ≤ 3.

The detail space of a cube Q is spanned by child-indicator × monomial
generators, projected onto the orthogonal complement of the polynomials of
degree ≤ k-1 on Q.  For float measures an orthonormal basis comes from a
symmetric eigen-decomposition of the projected Gram matrix; exact measures are
handled in rational arithmetic.  The same code builds the bases for
n > 1 and serves as the independent reference for the explicit 1-D
construction in :mod:`alpert.basis`.
"""

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from .measure import EXACT, FLOAT, to_fraction
from .moments import RANK_TOL


def multi_indices(n, k):
    """Multi-indices α ∈ N^n with |α| ≤ k-1, ordered by degree then lexicographically."""
    idx = [a for a in product(range(k), repeat=n) if sum(a) <= k - 1]
    return sorted(idx, key=lambda a: (sum(a), tuple(-v for v in a)))


class BoxMeasure:
    """Atoms plus constant-density boxes in R^n (half-open boxes)."""

    def __init__(self, atoms=(), boxes=(), mode=EXACT):
        conv = to_fraction if mode == EXACT else (lambda v: float(to_fraction(v)))
        self.mode = mode
        self.atoms = [(tuple(to_fraction(v) for v in x), conv(w)) for x, w in atoms]
        self.boxes = [(tuple(to_fraction(v) for v in lo), tuple(to_fraction(v) for v in hi), conv(d))
                      for lo, hi, d in boxes]
        dims = {len(x) for x, _ in self.atoms} | {len(lo) for lo, _, _ in self.boxes}
        if len(dims) > 1:
            raise ValueError("inconsistent dimensions")
        self.n = dims.pop() if dims else None

    @property
    def exact(self):
        return self.mode == EXACT

    def moment_table(self, C, maxdeg, frame):
        """{γ: ∫_C t^γ dμ} for |γ|_∞ ≤ maxdeg, t = (x - center)/side."""
        center, side = frame
        n = len(C.axes)
        zero = Fraction(0) if self.exact else 0.0
        gammas = list(product(range(maxdeg + 1), repeat=n))
        table = {g: zero for g in gammas}
        for x, w in self.atoms:
            if all(ax.left <= xi < ax.right for ax, xi in zip(C.axes, x)):
                t = [(xi - ci) / side for xi, ci in zip(x, center)]
                if not self.exact:
                    t = [float(v) for v in t]
                for g in gammas:
                    v = w
                    for td, gd in zip(t, g):
                        v = v * td ** gd
                    table[g] += v
        for lo, hi, d in self.boxes:
            per_axis = []
            for ax, a, b, ci in zip(C.axes, lo, hi, center):
                a2, b2 = max(a, ax.left), min(b, ax.right)
                if a2 >= b2:
                    break
                ta, tb = (a2 - ci) / side, (b2 - ci) / side
                if not self.exact:
                    ta, tb = float(ta), float(tb)
                s = side if self.exact else float(side)
                per_axis.append([s * (tb ** (p + 1) - ta ** (p + 1)) / (p + 1)
                                 for p in range(maxdeg + 1)])
            else:
                for g in gammas:
                    v = d
                    for ax_i, gd in enumerate(g):
                        v = v * per_axis[ax_i][gd]
                    table[g] += v
        return table

    def mass(self, C):
        center = tuple(ax.center for ax in C.axes)
        return self.moment_table(C, 0, (center, C.side))[(0,) * len(C.axes)]


def lebesgue_box(n, mode=EXACT):
    return BoxMeasure([], [((0,) * n, (1,) * n, 1)], mode=mode)


def _frame(Q):
    if hasattr(Q, "axes"):
        return tuple(ax.center for ax in Q.axes), Q.side
    return Q.frame


def child_blocks(m, Q, k, exact=False):
    """Per-child Gram blocks ∫_{Q'} t^{α+β} dμ over |α|, |β| ≤ k-1 in Q's frame.

    Blocks are float arrays, or lists of Fraction rows when ``exact``.
    """
    children = Q.children()
    frame = _frame(Q)
    conv = (lambda v: v) if exact else float
    pack = (lambda rows: rows) if exact else np.array
    blocks = []
    if hasattr(Q, "axes"):
        mis = multi_indices(Q.n, k)
        for C in children:
            tab = m.moment_table(C, 2 * k - 2, frame)
            blocks.append(pack([[conv(tab[tuple(a + b for a, b in zip(al, be))])
                                 for be in mis] for al in mis]))
        return children, mis, blocks
    mis = multi_indices(1, k)
    for C in children:
        moms = [conv(v) for v in m.local_moments(C, 2 * k - 2, frame=frame)]
        blocks.append(pack([[moms[i + j] for j in range(k)] for i in range(k)]))
    return children, mis, blocks


def generators(m, Q, k, n=None):
    """(child index, multi-index) labels of the generators on charged children."""
    children, mis, blocks = child_blocks(m, Q, k)
    return [(c, a) for c, B in enumerate(blocks) if B[0, 0] > 0 for a in mis]


@dataclass
class DetailSpaceBasis:
    cube: object
    k: int
    n: int
    multi_indices: list
    coeffs: np.ndarray  # (#children · #multi-indices) × count, child-major
    gram_rank_cutoff: float

    @property
    def count(self):
        return self.coeffs.shape[1]

    def coefficient_columns(self):
        return [self.coeffs[:, q] for q in range(self.count)]

    @property
    def functions(self):
        """Each function as {child index: coefficient vector over multi_indices}."""
        A = len(self.multi_indices)
        nch = self.coeffs.shape[0] // A
        return [{c: self.coeffs[c * A:(c + 1) * A, q] for c in range(nch)}
                for q in range(self.count)]


def _block_diag(blocks):
    A = blocks[0].shape[0]
    G = np.zeros((A * len(blocks), A * len(blocks)))
    for c, B in enumerate(blocks):
        G[c * A:(c + 1) * A, c * A:(c + 1) * A] = B
    return G


def _exact_columns(m, Q, k):
    """Detail-space basis in rational arithmetic, orthonormal up to final scaling.

    Generators are projected against a pivot-selected independent set of the
    polynomials on Q; the exact column space of the projected Gram matrix gives
    the dimension, and Gram-Schmidt in the μ inner product orthogonalises it.
    """
    children, mis, blocks = child_blocks(m, Q, k, exact=True)
    A, nch = len(mis), len(children)
    size = A * nch
    rows = [[QQ(0)] * size for _ in range(size)]
    for c, B in enumerate(blocks):
        for i in range(A):
            for j in range(A):
                v = Fraction(B[i][j])
                rows[c * A + i][c * A + j] = QQ(v.numerator, v.denominator)
    Gb = DomainMatrix(rows, (size, size), QQ)
    E = DomainMatrix([[QQ(int(r % A == q)) for q in range(A)] for r in range(size)], (size, A), QQ)
    M = E.transpose() * Gb * E
    _, piv = M.rref()
    if not piv:
        return mis, []
    P = E.extract(list(range(size)), list(piv))
    Pi = DomainMatrix.eye(size, QQ) - P * (P.transpose() * Gb * P).inv() * P.transpose() * Gb
    Gp = Pi.transpose() * Gb * Pi
    _, piv = Gp.rref()
    N = Pi.extract(list(range(size)), list(piv))
    GN = [[_to_frac(x) for x in row] for row in (N.transpose() * Gb * N).to_list()]
    r = len(GN)
    # Gram-Schmidt in coefficient space: column i of C gives u_i = N c_i
    cs, ds = [], []
    for i in range(r):
        c = [Fraction(int(q == i)) for q in range(r)]
        for cj, dj in zip(cs, ds):
            coef = sum((GN[i][b] * cj[b] for b in range(r)), Fraction(0)) / dj
            c = [ci - coef * cjq for ci, cjq in zip(c, cj)]
        cs.append(c)
        ds.append(sum((c[a] * GN[a][b] * c[b] for a in range(r) for b in range(r)), Fraction(0)))
    Nf = [[_to_frac(x) for x in row] for row in N.to_list()]
    out = []
    for c, d in zip(cs, ds):
        u = [sum((Nf[a][b] * c[b] for b in range(r)), Fraction(0)) for a in range(size)]
        top = max(abs(x) for x in u)
        out.append(np.array([float(x / top) for x in u]) / math.sqrt(float(d / top ** 2)))
    return mis, out


def _to_frac(x):
    return Fraction(int(x.numerator), int(x.denominator))


def gram_basis(m, Q, k, n=None, tol=RANK_TOL):
    """Orthonormal basis of the detail space of Q.

    Exact measures are handled in rational arithmetic (exact dimension,
    Gram-Schmidt); float measures use a symmetric eigen-decomposition of the
    projected Gram matrix, keeping eigenvalues above ``tol`` times the largest
    eigenvalue of the generator Gram matrix.
    """
    dim = Q.n if hasattr(Q, "axes") else 1
    if getattr(m, "exact", False):
        mis, cols = _exact_columns(m, Q, k)
        nrows = len(mis) * len(Q.children())
        F = np.array(cols).T if cols else np.zeros((nrows, 0))
        A = len(mis)
        for c, C in enumerate(Q.children()):
            if not m.mass(C) > 0:
                F[c * A:(c + 1) * A, :] = 0.0
        return DetailSpaceBasis(Q, k, dim, mis, F, 0.0)
    children, mis, blocks = child_blocks(m, Q, k)
    A = len(mis)
    nch = len(children)
    Gb = _block_diag(blocks)
    E = np.vstack([np.eye(A)] * nch)
    M = E.T @ Gb @ E
    Mp = np.linalg.pinv(M, rcond=tol, hermitian=True)
    Pi = np.eye(A * nch) - E @ Mp @ E.T @ Gb
    Gp = Pi.T @ Gb @ Pi
    Gp = (Gp + Gp.T) / 2
    lam, V = np.linalg.eigh(Gp)
    # the cutoff is relative to the unprojected Gram matrix: when the detail
    # space is {0}, Gp is pure rounding noise and its own λ_max means nothing
    scale = np.linalg.eigvalsh(Gb)[-1] if Gb.size else 0.0
    keep = lam > tol * scale if scale > 0 else np.zeros_like(lam, dtype=bool)
    F = Pi @ V[:, keep] / np.sqrt(lam[keep])
    F = F[:, ::-1]  # largest eigenvalue first
    for c, B in enumerate(blocks):
        if B[0, 0] <= 0:
            F[c * A:(c + 1) * A, :] = 0.0
    return DetailSpaceBasis(Q, k, dim, mis, F, tol)


def projection_form(m, basis, Q=None, k=None):
    """Matrix of the orthogonal projection onto span(basis) in generator coordinates.

    ``basis`` is a DetailSpaceBasis or a list of AlpertFunction (then pass Q and
    k if the list may be empty).  The result B = G F Fᵀ G does not depend on
    which orthonormal basis of the space is used.
    """
    if isinstance(basis, DetailSpaceBasis):
        Q, k, F = basis.cube, basis.k, basis.coeffs
    else:
        funcs = list(basis)
        if funcs:
            Q, k = funcs[0].interval, funcs[0].k
        F = np.array([f.coeffs for f in funcs]).T if funcs else np.zeros((2 * k, 0))
    _, _, blocks = child_blocks(m, Q, k)
    Gb = _block_diag(blocks)
    GF = Gb @ F
    return GF @ GF.T


__all__ = ["BoxMeasure", "DetailSpaceBasis", "child_blocks", "generators", "gram_basis",
           "lebesgue_box", "multi_indices", "projection_form", "EXACT", "FLOAT"]
