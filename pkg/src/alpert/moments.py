"""Hankel moment matrices, their ranks, and detail-space dimensions."""

from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from ._poly import reframe_matrix
from .measure import bounds, to_fraction

RANK_TOL = 1e-10
ANGLE_TOL = 1e-8


class NotSemidefiniteError(ArithmeticError):
    """A moment matrix had a clearly negative eigenvalue (numerical corruption)."""


@dataclass(frozen=True)
class MomentMatrix:
    """k×k Hankel matrix of local moments ∫_J t^{i+j} dμ, t = (x - c)/h."""

    k: int
    interval: object
    hankel: tuple  # moments of order 0..2k-2
    frame: tuple  # (c, h)

    @property
    def exact(self):
        return all(isinstance(v, Fraction) for v in self.hankel)

    def entry(self, i, j):
        return self.hankel[i + j]

    def rows(self):
        return [[self.hankel[i + j] for j in range(self.k)] for i in range(self.k)]

    def to_float(self):
        return np.array([[float(v) for v in row] for row in self.rows()])

    def to_domain(self):
        return DomainMatrix([[QQ(to_fraction(v).numerator, to_fraction(v).denominator)
                              for v in row] for row in self.rows()], (self.k, self.k), QQ)

    def __add__(self, other):
        if self.k != other.k or self.frame != other.frame:
            raise ValueError("moment matrices must share order and coordinate frame")
        return MomentMatrix(self.k, None, tuple(a + b for a, b in zip(self.hankel, other.hankel)),
                            self.frame)


@dataclass(frozen=True)
class RankReport:
    rank: int
    is_positive_definite: bool
    eigenvalues: tuple
    tolerance: float


def vandermonde_dyad(x, k):
    """V_k(x) V_k(x)^T with V_k(x) = (1, x, ..., x^{k-1})."""
    v = [x ** i for i in range(k)]
    if isinstance(x, Fraction):
        return [[a * b for b in v] for a in v]
    return np.outer(np.asarray(v, dtype=float), np.asarray(v, dtype=float))


def moment_matrix(m, J, k, frame=None):
    """Moment matrix of μ over J in the local frame of J (or ``frame``)."""
    if k < 1:
        raise ValueError("k must be ≥ 1")
    lo, hi = bounds(J)
    if frame is None:
        frame = ((lo + hi) / 2, hi - lo)
    hankel = m.local_moments(J, 2 * k - 2, frame=frame)
    return MomentMatrix(k, J, tuple(hankel), tuple(frame))


def child_matrices(m, Q, k):
    """(L, R) for the children of Q, both in Q's local frame, so L + R = M_Q."""
    left, right = Q.children()
    frame = Q.frame
    L = moment_matrix(m, left, k, frame=frame)
    R = moment_matrix(m, right, k, frame=frame)
    return L, R


def rank_pd(M, tol=RANK_TOL):
    """Eigenvalue rank of a moment matrix with relative cutoff ``tol``."""
    A = M.to_float() if isinstance(M, MomentMatrix) else np.asarray(M, dtype=float)
    k = A.shape[0]
    ev = np.linalg.eigvalsh((A + A.T) / 2)
    lmax = ev[-1] if ev.size else 0.0
    if lmax <= 0:
        return RankReport(0, False, tuple(ev), tol)
    if ev[0] < -tol * lmax:
        raise NotSemidefiniteError(f"moment matrix has eigenvalue {ev[0]:.3e} (max {lmax:.3e})")
    rank = int(np.sum(ev > tol * lmax))
    return RankReport(rank, rank == k, tuple(ev), tol)


def exact_rank(M):
    """Rank computed in exact rational arithmetic."""
    return M.to_domain().rank()


def own_frame_rank(m, J, k, tol=RANK_TOL):
    """Rank of J's moment matrix in J's own local frame (best conditioned).

    Exact measures get the exact rational rank, so an interval that is
    positive definite but badly conditioned is never mistaken for a
    degenerate one; float measures use :func:`rank_pd` with cutoff ``tol``.
    """
    M = moment_matrix(m, J, k)
    rep = rank_pd(M, tol)
    if not M.exact:
        return rep
    r = exact_rank(M)
    return RankReport(r, r == k, rep.eigenvalues, 0.0)


def _range_basis(m, child, parent_frame, k, tol):
    """Orthonormal basis of Range(M_child) expressed in the parent's frame.

    The range is computed in the child's own frame and then mapped through the
    change-of-coordinates matrix; ranges transform as V(t_parent) = A V(t_child).
    """
    own = moment_matrix(m, child, k)
    rep = rank_pd(own, tol)
    if rep.rank == 0:
        return np.zeros((k, 0))
    A_own = own.to_float()
    w, V = np.linalg.eigh((A_own + A_own.T) / 2)
    U = V[:, ::-1][:, : rep.rank]
    cc, hc = own.frame
    cp, hp = parent_frame
    # t_parent = a + b t_child; column q of A holds the coefficients of t_parent^q
    a = float((cc - to_fraction(cp)) / to_fraction(hp))
    b = float(hc / to_fraction(hp))
    A = reframe_matrix(a, b, k)
    B = A.T @ U
    Qb, _ = np.linalg.qr(B)
    return Qb


def dim_detail_space(m, Q, k, tol=RANK_TOL, angle_tol=ANGLE_TOL):
    """dim(Range L ∩ Range R).

    Exact measures use rank L + rank R - rank [L | R] in rational arithmetic;
    float measures count principal angles between the two numerical ranges.
    """
    if getattr(m, "exact", False):
        L, R = child_matrices(m, Q, k)
        joined = L.to_domain().hstack(R.to_domain())
        return exact_rank(L) + exact_rank(R) - joined.rank()
    left, right = Q.children()
    UL = _range_basis(m, left, Q.frame, k, tol)
    UR = _range_basis(m, right, Q.frame, k, tol)
    if UL.shape[1] == 0 or UR.shape[1] == 0:
        return 0
    s = np.linalg.svd(UL.T @ UR, compute_uv=False)
    return int(np.sum(s > 1 - angle_tol))


def poly_count(n, k):
    """Number of monomials x^α with |α| ≤ k-1 in n variables."""
    return comb(n + k - 1, n)


def detail_dim_bound(n, k):
    """Upper bound (2^n - 1)·poly_count(n, k) on any detail-space dimension."""
    return (2 ** n - 1) * poly_count(n, k)
