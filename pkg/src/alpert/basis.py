"""Explicit one-dimensional weighted Haar and Alpert functions.

Every function lives on a dyadic interval I and is a polynomial of degree
≤ k-1 on each child, written in the local coordinate t = (x - c_I)/|I|.

In the nondegenerate case (both child moment matrices positive definite) the
left coefficients are eliminated through α = -L⁻¹Rβ and the right
coefficients β are chosen one at a time, from ℓ = k down to ℓ = 1, in the
inner product ⟨β, β'⟩_X = βᵀXβ' with X = R L⁻¹ R + R.  The function a^ℓ
also satisfies the extra moment conditions ∫ a^ℓ t^i dμ = 0 for
k ≤ i ≤ k+ℓ-2.  With an exact measure all of this is done in rational
arithmetic, and only the final normalisation uses a square root.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, sqrt

import numpy as np
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

from ._poly import evaluate
from .moments import RANK_TOL, child_matrices, own_frame_rank

COND_GUARD = 1e12
GRAM_TOL = 1e-8
BASE_TOL = 1e-10
EXTRA_TOL = 1e-9


@dataclass
class AlpertFunction:
    interval: object
    k: int
    index: int
    left: np.ndarray
    right: np.ndarray
    mu_norm: float = 1.0

    @property
    def coeffs(self):
        """Left coefficients followed by right coefficients."""
        return np.concatenate([self.left, self.right])

    def local(self, t):
        """Value at local coordinate t ∈ [-1/2, 1/2)."""
        t = np.asarray(t, dtype=float)
        out = np.where(t < 0, evaluate(self.left, t), evaluate(self.right, t))
        return np.where((t >= -0.5) & (t < 0.5), out, 0.0)

    def __call__(self, x):
        c, h = self.interval.frame
        if isinstance(x, (Fraction, int)):
            return float(self.local(float((Fraction(x) - c) / h)))
        return self.local((np.asarray(x, dtype=float) - float(c)) / float(h))


@dataclass
class ConstructionReport:
    count: int
    nondegenerate: bool
    extra_moments_satisfied: bool
    residuals: dict = field(default_factory=dict)
    path: str = ""

    @property
    def ok(self):
        return (self.residuals.get("gram", 0.0) <= GRAM_TOL
                and self.residuals.get("base", 0.0) <= BASE_TOL)


# -- exact helpers -----------------------------------------------------------------
def _q(v):
    v = Fraction(v)
    return QQ(v.numerator, v.denominator)


def _frac(e):
    return Fraction(int(e.numerator), int(e.denominator))


def _dm(rows):
    rows = [[_q(v) for v in r] for r in rows]
    return DomainMatrix(rows, (len(rows), len(rows[0]) if rows else 0), QQ)


def _col(vec):
    return DomainMatrix([[_q(v)] for v in vec], (len(vec), 1), QQ)


def _flat(M):
    return [_frac(e) for row in M.to_list() for e in row]


def _hankel(moms, k, start=0):
    return [[moms[start + i + j] for j in range(k)] for i in range(k)]


# -- Haar -------------------------------------------------------------------------
def haar(m, I):
    """Closed-form weighted Haar function, or None if a child is uncharged."""
    left, right = I.children()
    mL, mR = m.mass(left), m.mass(right)
    if not (mL > 0 and mR > 0):
        return None
    mI = mL + mR
    alpha = sqrt(float(Fraction(mR) / (Fraction(mI) * Fraction(mL))))
    beta = sqrt(float(Fraction(mL) / (Fraction(mI) * Fraction(mR))))
    return AlpertFunction(I, 1, 1, np.array([-alpha]), np.array([beta]))


# -- the X-system ---------------------------------------------------------------------
def alpert_system(L, R):
    """Return (alpha_solver, X) with alpha_solver(β) = -L⁻¹Rβ and X = R L⁻¹ R + R.

    Exact inputs give Fraction-valued results; otherwise floats.
    """
    if L.exact and R.exact:
        Ld, Rd = L.to_domain(), R.to_domain()
        if Ld.rank() < L.k:
            raise np.linalg.LinAlgError("L singular")
        S = Ld.inv() * Rd
        X = Rd * S + Rd
        Xa = np.array([[_frac(e) for e in row] for row in X.to_list()], dtype=object)

        def alpha_solver(beta):
            return np.array(_flat(-(S * _col(beta))), dtype=object)

        return alpha_solver, Xa
    Lf, Rf = L.to_float(), R.to_float()
    if np.linalg.matrix_rank(Lf) < L.k:
        raise np.linalg.LinAlgError("L singular")
    S = np.linalg.solve(Lf, Rf)
    X = Rf @ S + Rf
    X = (X + X.T) / 2

    def alpha_solver(beta):
        return -S @ np.asarray(beta, dtype=float)

    return alpha_solver, X


def _w_vectors(lm, rm, S_rows, k, exact):
    """Rows w^i = -v_left^i L⁻¹R + v_right^i for i = k..2k-2."""
    out = []
    for i in range(k, 2 * k - 1):
        vl = lm[i: i + k]
        vr = rm[i: i + k]
        if exact:
            w = [vr[c] - sum((vl[r] * S_rows[r][c] for r in range(k)), Fraction(0))
                 for c in range(k)]
        else:
            w = np.asarray(vr, float) - np.asarray(vl, float) @ S_rows
        out.append((i, w))
    return out


def extra_moment_vectors(m, I, k):
    """List of (i, w^i, u^i) with u^i = X⁻¹ (w^i)ᵀ, for k ≤ i ≤ 2k-2 (floats)."""
    lm = m.local_moments(I.children()[0], 3 * k - 3, frame=I.frame)
    rm = m.local_moments(I.children()[1], 3 * k - 3, frame=I.frame)
    exact = m.exact
    if exact:
        Ld, Rd = _dm(_hankel(lm, k)), _dm(_hankel(rm, k))
        S = Ld.inv() * Rd
        X = Rd * S + Rd
        S_rows = [[_frac(e) for e in row] for row in S.to_list()]
        Xinv = X.inv()
        out = []
        for i, w in _w_vectors(lm, rm, S_rows, k, True):
            u = _flat(Xinv * _col(w))
            out.append((i, np.array([float(v) for v in w]), np.array([float(v) for v in u])))
        return out
    Lf, Rf = np.array(_hankel(lm, k), float), np.array(_hankel(rm, k), float)
    S = np.linalg.solve(Lf, Rf)
    X = Rf @ S + Rf
    return [(i, w, np.linalg.solve(X, w)) for i, w in _w_vectors(lm, rm, S, k, False)]


def _sign_fix(right, left):
    """Make the first nonzero right coefficient positive (left if right is zero)."""
    for v in list(right) + list(left):
        if v != 0:
            return -1 if v < 0 else 1
    return 1


def _unit_max(v):
    """Scale exactly so the largest entry has modulus one (keeps floats in range)."""
    top = max(abs(x) for x in v)
    return [x / top for x in v]


def _select_exact(rows, Xd, k):
    """A vector orthogonal to ``rows``; ties broken by X-projecting e_1, e_2, ..."""
    N = _dm(rows).nullspace() if rows else DomainMatrix.eye(k, QQ)
    d = N.shape[0]
    if d == 1:
        return _unit_max(_flat(N))
    G = N * Xd * N.transpose()
    Ginv = G.inv()
    for q in range(k):
        e = [Fraction(int(r == q)) for r in range(k)]
        v = _flat(N.transpose() * (Ginv * (N * (Xd * _col(e)))))
        if any(v):
            return _unit_max(v)
    raise ArithmeticError("no admissible direction")


def _select_float(rows, X, k, tol=1e-10):
    if not rows:
        N = np.eye(k)
    else:
        A = np.array(rows, float)
        A = A / np.maximum(np.linalg.norm(A, axis=1, keepdims=True), 1e-300)
        _, s, Vt = np.linalg.svd(A)
        rank = int(np.sum(s > tol * max(s[0], 1e-300)))
        N = Vt[rank:]
    if N.shape[0] == 1:
        return N[0]
    G = N @ X @ N.T
    for q in range(k):
        e = np.zeros(k)
        e[q] = 1.0
        v = N.T @ np.linalg.solve(G, N @ (X @ e))
        if np.linalg.norm(v) > 1e-12:
            return v
    raise ArithmeticError("no admissible direction")


def _nondegenerate_exact(lm, rm, k):
    Ld, Rd = _dm(_hankel(lm, k)), _dm(_hankel(rm, k))
    S = Ld.inv() * Rd
    X = Rd * S + Rd
    S_rows = [[_frac(e) for e in row] for row in S.to_list()]
    X_rows = [[_frac(e) for e in row] for row in X.to_list()]
    ws = [w for _, w in _w_vectors(lm, rm, S_rows, k, True)]
    betas = {}
    for ell in range(k, 0, -1):
        rows = list(ws[: ell - 1])
        for lp in range(ell + 1, k + 1):
            b = betas[lp]
            rows.append([sum((X_rows[r][c] * b[c] for c in range(k)), Fraction(0))
                         for r in range(k)])
        betas[ell] = _select_exact(rows, X, k)
    out = []
    for ell in range(1, k + 1):
        beta = betas[ell]
        alpha = [-sum((S_rows[r][c] * beta[c] for c in range(k)), Fraction(0)) for r in range(k)]
        nrm2 = sum((beta[r] * X_rows[r][c] * beta[c] for r in range(k) for c in range(k)),
                   Fraction(0))
        scale = _sign_fix(beta, alpha) / sqrt(float(nrm2))
        out.append((np.array([float(a) for a in alpha]) * scale,
                    np.array([float(b) for b in beta]) * scale))
    return out


def _nondegenerate_float(lm, rm, k):
    Lf = np.array(_hankel(lm, k), float)
    Rf = np.array(_hankel(rm, k), float)
    if np.linalg.cond(Lf) > COND_GUARD:
        return _nondegenerate_exact([Fraction(float(v)) for v in lm],
                                    [Fraction(float(v)) for v in rm], k)
    S = np.linalg.solve(Lf, Rf)
    X = Rf @ S + Rf
    X = (X + X.T) / 2
    ws = [w for _, w in _w_vectors(lm, rm, S, k, False)]
    betas = {}
    for ell in range(k, 0, -1):
        rows = list(ws[: ell - 1]) + [X @ betas[lp] for lp in range(ell + 1, k + 1)]
        betas[ell] = _select_float(rows, X, k)
    pairs = {}
    for ell in range(1, k + 1):
        beta = betas[ell]
        alpha = -S @ beta
        scale = _sign_fix(beta, alpha) / sqrt(beta @ X @ beta)
        pairs[ell] = (alpha * scale, beta * scale)
    # one sweep of Gram-Schmidt in the child-block inner product, from a_k down:
    # a_ℓ only absorbs functions satisfying a superset of its moment conditions
    for ell in range(k, 0, -1):
        a, b = pairs[ell]
        for lp in range(k, ell, -1):
            a2, b2 = pairs[lp]
            c = a @ Lf @ a2 + b @ Rf @ b2
            a, b = a - c * a2, b - c * b2
        nrm = sqrt(a @ Lf @ a + b @ Rf @ b)
        pairs[ell] = (a / nrm, b / nrm)
    return [pairs[ell] for ell in range(1, k + 1)]


def _one_sided(P_moms, Sg_moms, k, r, exact):
    """Functions when one child matrix P is PD and the other, Sg, is singular.

    Returns coefficient pairs (solved side, free side); the free side runs over
    Range(Sg), which has dimension r.
    """
    if exact:
        Pd, Sd = _dm(_hankel(P_moms, k)), _dm(_hankel(Sg_moms, k))
        C = Sd.columnspace()
        if C.shape[1] == r:
            T = Pd.inv() * Sd
            X = Sd * T + Sd
            Xr = [[_frac(e) for e in row] for row in X.to_list()]
            cols = [[_frac(e) for e in row] for row in C.transpose().to_list()]

            def ip(u, v):
                return sum((u[a] * Xr[a][b] * v[b] for a in range(k) for b in range(k)),
                           Fraction(0))

            vs = []
            for c in cols:
                v = list(c)
                for u in vs:
                    coef = ip(u, c) / ip(u, u)
                    v = [vi - coef * ui for vi, ui in zip(v, u)]
                vs.append(_unit_max(v))
            Tr = [[_frac(e) for e in row] for row in T.to_list()]
            out = []
            for g in vs:
                solved = [-sum((Tr[a][b] * g[b] for b in range(k)), Fraction(0)) for a in range(k)]
                scale = 1 / sqrt(float(ip(g, g)))
                out.append((np.array([float(s) for s in solved]) * scale,
                            np.array([float(v) for v in g]) * scale))
            return out
    Pf = np.array(_hankel(P_moms, k), float)
    Sf = np.array(_hankel(Sg_moms, k), float)
    T = np.linalg.solve(Pf, Sf)
    X = Sf @ T + Sf
    X = (X + X.T) / 2
    w, V = np.linalg.eigh((Sf + Sf.T) / 2)
    U = V[:, ::-1][:, :r]
    lam, W = np.linalg.eigh(U.T @ X @ U)
    G = U @ W / np.sqrt(lam)
    return [(-T @ G[:, q], G[:, q]) for q in range(r)]


def build_alpert(m, I, k, tol=RANK_TOL):
    """Construct the Alpert functions of order k on I and verify them.

    Returns (functions, ConstructionReport).
    """
    if k < 1:
        raise ValueError("k must be ≥ 1")
    left, right = I.children()
    rl = own_frame_rank(m, left, k, tol).rank
    rr = own_frame_rank(m, right, k, tol).rank
    nmom = 3 * k - 2 if (rl == k and rr == k) else 2 * k - 1
    lm = m.local_moments(left, nmom - 1, frame=I.frame)
    rm = m.local_moments(right, nmom - 1, frame=I.frame)
    funcs = []
    nondeg = False
    if rl == 0 or rr == 0:
        path = "trivial"
    elif rl == k and rr == k:
        path, nondeg = "nondegenerate", True
        pairs = (_nondegenerate_exact(lm, rm, k) if m.exact else _nondegenerate_float(lm, rm, k))
        funcs = [AlpertFunction(I, k, ell + 1, a, b) for ell, (a, b) in enumerate(pairs)]
    elif rl == k or rr == k:
        path = "one-sided"
        if rl == k:
            pairs = _one_sided(lm, rm, k, rr, m.exact)
            sides = [(solved, free) for solved, free in pairs]
        else:
            pairs = _one_sided(rm, lm, k, rl, m.exact)
            sides = [(free, solved) for solved, free in pairs]
        for ell, (a, b) in enumerate(sides):
            s = _sign_fix(b, a)
            funcs.append(AlpertFunction(I, k, ell + 1, a * s, b * s))
    else:
        from .gram_oracle import gram_basis

        path = "gram"
        basis = gram_basis(m, I, k, 1, tol)
        for ell, col in enumerate(basis.coefficient_columns()):
            a, b = col[:k], col[k:]
            s = _sign_fix(b, a)
            funcs.append(AlpertFunction(I, k, ell + 1, a * s, b * s))
    report = verify_basis(m, I, funcs, k, nondegenerate=nondeg)
    report.path = path
    return funcs, report


# -- independent verification by quadrature -----------------------------------------
def _quadrature_rule(m, I, degree):
    """Nodes t, side flags and weights integrating μ on I exactly up to ``degree``.

    Density pieces use Gauss-Legendre nodes (in the local variable t, so no
    moment formulas are reused); atoms contribute their masses.
    """
    c, h = I.frame
    lo, hi = I.left, I.right
    ts, ws = [], []
    for atom in m.atoms:
        if lo <= atom.x < hi:
            ts.append(float((atom.x - c) / h))
            ws.append(float(atom.mass))
    for piece in m.pieces:
        dd = len(piece.coeffs) - 1
        npts = ceil((degree + dd + 1) / 2) + 1
        xg, wg = np.polynomial.legendre.leggauss(npts)
        for a, b in ((max(piece.a, lo), min(piece.b, I.center)),
                     (max(piece.a, I.center), min(piece.b, hi))):
            if a >= b:
                continue
            ta, tb = float((a - c) / h), float((b - c) / h)
            tq = 0.5 * (ta + tb) + 0.5 * (tb - ta) * xg
            dens = evaluate([float(v) for v in piece.coeffs], float(c) + float(h) * tq)
            ts.extend(tq.tolist())
            ws.extend((0.5 * (tb - ta) * wg * dens * float(h)).tolist())
    return np.array(ts), np.array(ws)


def verify_basis(m, I, funcs, k, nondegenerate=None):
    """Recompute Gram matrix and moment residuals by quadrature."""
    t, w = _quadrature_rule(m, I, 4 * k)
    res = {"gram": 0.0, "base": 0.0, "extra": 0.0}
    if nondegenerate is None:
        left, right = I.children()
        nondegenerate = (own_frame_rank(m, left, k).is_positive_definite
                         and own_frame_rank(m, right, k).is_positive_definite)
    if not funcs:
        return ConstructionReport(0, nondegenerate, True, res)
    F = np.array([f.local(t) for f in funcs])
    G = (F * w) @ F.T
    res["gram"] = float(np.max(np.abs(G - np.eye(len(funcs)))))
    norms = np.sqrt(np.diag(G))
    base = 0.0
    for i in range(k):
        p = t ** i
        pn = sqrt(max(float(w @ p ** 2), 1e-300))
        base = max(base, float(np.max(np.abs((F * w) @ p) / (norms * pn))))
    res["base"] = base
    extra = 0.0
    if nondegenerate:
        for f, nf in zip(funcs, norms):
            for i in range(k, k + f.index - 1):
                p = t ** i
                pn = sqrt(max(float(w @ p ** 2), 1e-300))
                extra = max(extra, abs(float((f.local(t) * w) @ p)) / (nf * pn))
    else:
        # only the k = 2 condition (C) is ever considered in degenerate cases
        if k == 2 and len(funcs) == 1:
            p = t ** 2
            pn = sqrt(max(float(w @ p ** 2), 1e-300))
            extra = abs(float((funcs[0].local(t) * w) @ p)) / (norms[0] * pn)
    res["extra"] = float(extra)
    return ConstructionReport(len(funcs), bool(nondegenerate), bool(extra <= EXTRA_TOL), res)


# -- the k = 2 degenerate analysis ----------------------------------------------------
@dataclass
class K2Diagnostic:
    applicable: bool
    singular_side: str | None
    membership: bool | None
    membership_residual: float
    function_count: int
    condition_c_residual: float | None


def k2_special(m, I, tol=RANK_TOL):
    """Analyse the k = 2 case with one point-mass child and one PD child.

    Checks whether the second and third moments of the singular child lie in
    the range of its moment matrix, which is the solvability condition for the
    additional moment condition, and reports the residual of that condition on
    the single Alpert function.
    """
    left, right = I.children()
    rl = own_frame_rank(m, left, 2, tol).rank
    rr = own_frame_rank(m, right, 2, tol).rank
    funcs, report = build_alpert(m, I, 2, tol)
    if rl == 2 and rr == 2:
        return K2Diagnostic(False, None, None, 0.0, len(funcs), None)
    if not ((rl == 2 and rr == 1) or (rr == 2 and rl == 1)):
        return K2Diagnostic(False, None, None, 0.0, len(funcs), None)
    side, child = ("right", right) if rl == 2 else ("left", left)
    moms = m.local_moments(child, 3, frame=I.frame)
    S = np.array([[float(moms[0]), float(moms[1])], [float(moms[1]), float(moms[2])]])
    v = np.array([float(moms[2]), float(moms[3])])
    _, V = np.linalg.eigh(S)
    u = V[:, -1]
    resid = np.linalg.norm(v - u * (u @ v))
    rel = float(resid / np.linalg.norm(v)) if np.linalg.norm(v) > 0 else 0.0
    return K2Diagnostic(True, side, bool(rel <= 1e-10), rel, len(funcs),
                        float(report.residuals["extra"]))
