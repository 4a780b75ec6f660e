"""Two-weight diagnostics: Poisson integrals, k-energy, A2, Φ/Ψ bounds and a
dyadic operator built from two Alpert bases.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import integrate

from ._poly import evaluate, reframe_matrix
from .basis import build_alpert
from .grid import DyadicInterval, descendants, interval_at
from .measure import FLOAT, Measure, bounds, to_fraction
from .moments import moment_matrix
from .mra import PiecewiseFunction, f_moments, reframe


# -- kernels ---------------------------------------------------------------------------
def falling(s, r):
    """Falling factorial s (s-1) ... (s-r+1)."""
    out = 1.0
    for q in range(r):
        out *= s - q
    return out


@dataclass(frozen=True)
class Kernel:
    """|x-y|^{α-1} ("riesz") or sign(x-y)|x-y|^{α-1} ("hilbert")."""

    alpha: float
    variant: str = "riesz"
    delta: float = 0.5

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")
        if self.variant not in ("riesz", "hilbert"):
            raise ValueError(f"unknown kernel variant {self.variant!r}")

    def __call__(self, x, y):
        return self.dx(0, x, y)

    def dx(self, r, x, y):
        """r-th derivative in x, valid for x ≠ y."""
        u = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        s = self.alpha - 1
        sgn = np.sign(u)
        power = r + (1 if self.variant == "hilbert" else 0)
        return falling(s, r) * np.abs(u) ** (s - r) * sgn ** power


# -- Poisson integrals -------------------------------------------------------------------
def _segment_integral(L, u1, du, p):
    """∫_{u1}^{u1+du} (L + u)^{-p} du in a cancellation-free form."""
    base = L + u1
    ratio = du / base
    if p == 1:
        return math.log1p(ratio)
    return base ** (1 - p) * (-math.expm1((1 - p) * math.log1p(ratio))) / (p - 1)


def poisson(m_order, alpha, J, mu, epsrel=1e-10):
    """P_m^α(J, μ) = ∫ |J|^m / (|J| + |y - c_J|)^{m+1-α} dμ(y)."""
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    lo, hi = bounds(J)
    c = (lo + hi) / 2
    L = float(hi - lo)
    p = m_order + 1 - alpha
    total = []
    for atom in mu.atoms:
        total.append(float(atom.mass) * L ** m_order / (L + abs(float(atom.x - c))) ** p)
    for piece in mu.pieces:
        segments = []
        if piece.a < c:
            segments.append((piece.a, min(piece.b, c), -1))
        if piece.b > c:
            segments.append((max(piece.a, c), piece.b, 1))
        for a, b, side in segments:
            if a >= b:
                continue
            if len(piece.coeffs) == 1:
                # distances u = |y - c| run over [u1, u1 + du]
                u1 = float(a - c) if side > 0 else float(c - b)
                du = float(b - a)
                val = _segment_integral(L, u1, du, p) * L ** m_order
                total.append(float(piece.coeffs[0]) * val)
            else:
                coeffs = [float(v) for v in piece.coeffs]
                fc = float(c)

                def integrand(y):
                    return evaluate(coeffs, y) * L ** m_order / (L + abs(y - fc)) ** p

                val, err = integrate.quad(integrand, float(a), float(b), epsrel=epsrel,
                                          epsabs=0, limit=200)
                if err > max(1e-8 * abs(val), 1e-300):
                    raise ArithmeticError("Poisson quadrature did not converge")
                total.append(val)
    return math.fsum(total)


# -- centers and moment norms ---------------------------------------------------------------
def best_center(omega, J, k):
    """Minimiser over c in the closure of J of ∫_J (x - c)^{2k} dω."""
    lo, hi = bounds(J)
    if not omega.mass((lo, hi)) > 0:
        raise ValueError("best_center needs |J|_ω > 0")
    # s ↦ ∫ (t - s)^{2k} dω is convex, so its minimiser on [-1/2, 1/2] is the
    # zero of the decreasing function g(s) = ∫ (t - s)^{2k-1} dω, clipped to the
    # interval.  Bisection (in exact arithmetic for exact measures) avoids the
    # inaccuracy of polynomial root-finding at the multiple roots produced by atoms.
    mu = omega.local_moments((lo, hi), 2 * k - 1)
    exact = all(isinstance(v, Fraction) for v in mu)
    n = 2 * k - 1
    binom = [math.comb(n, q) for q in range(n + 1)]

    def g(s):
        return sum(binom[q] * mu[q] * (-s) ** (n - q) for q in range(n + 1))

    a, b = (Fraction(-1, 2), Fraction(1, 2)) if exact else (-0.5, 0.5)
    if g(a) <= 0:
        s = a
    elif g(b) >= 0:
        s = b
    else:
        for _ in range(60):
            mid = (a + b) / 2
            if g(mid) > 0:
                a = mid
            else:
                b = mid
        s = (a + b) / 2
    return float((lo + hi) / 2 + (hi - lo) * Fraction(s)) if exact else \
        float((lo + hi) / 2) + float(hi - lo) * s


def center_norm2(omega, J, k, c=None):
    """∫_J ((x - c)/|J|)^{2k} dω (default c = best_center)."""
    lo, hi = bounds(J)
    if c is None:
        c = best_center(omega, J, k)
    return float(omega.local_moments((lo, hi), 2 * k, frame=(Fraction(c), hi - lo))[2 * k])


# -- energy and A2 ----------------------------------------------------------------------
@dataclass
class EnergyTerm:
    interval: tuple
    poisson: float
    moment_norm2: float  # ∫ ((x - m)/|I_r|)^{2k} dω
    term: float


@dataclass
class EnergyReport:
    k: int
    alpha: float
    terms: list
    sigma_mass: float
    partition: str
    raw_sum: float = 0.0
    total: float = 0.0


def energy_term(sigma_I, omega, alpha, k, Ir):
    lo, hi = bounds(Ir)
    if not omega.mass((lo, hi)) > 0:
        return EnergyTerm((lo, hi), 0.0, 0.0, 0.0)
    P = poisson(k, alpha, (lo, hi), sigma_I)
    nrm = center_norm2(omega, (lo, hi), k)
    return EnergyTerm((lo, hi), P, nrm, P * P * nrm)


def k_energy(sigma, omega, alpha, k, I, partition=None, depth=None):
    """Evaluate the k-energy sum for a partition of I, or maximise over dyadic ones.

    With ``partition`` (a list of intervals) the bracketed sum is evaluated for
    it.  With ``depth`` the sum is maximised over all partitions of the dyadic
    interval I into dyadic cells of depth ≤ ``depth`` below I.  Both give lower
    bounds for the supremum over arbitrary partitions.
    """
    lo, hi = bounds(I)
    sigma_I = sigma.restrict((lo, hi))
    s_mass = float(sigma.mass((lo, hi)))
    if partition is not None:
        terms = [energy_term(sigma_I, omega, alpha, k, Ir) for Ir in partition]
        desc = f"user partition ({len(terms)} cells)"
    else:
        if depth is None:
            raise ValueError("give a partition or a dyadic depth")
        root = I.root if isinstance(I, DyadicInterval) else (lo, hi)
        base = I if isinstance(I, DyadicInterval) else interval_at(root, 0, 0)
        best = {}
        for dm in range(depth, -1, -1):
            m = base.m + dm
            shift = dm
            for j in range(base.j << shift, (base.j + 1) << shift):
                Q = DyadicInterval(base.root, m, j)
                own = energy_term(sigma_I, omega, alpha, k, Q)
                if dm == depth:
                    best[Q] = (own.term, [own])
                    continue
                l, r = Q.children()
                split = best.pop(l), best.pop(r)
                sval = split[0][0] + split[1][0]
                best[Q] = (own.term, [own]) if own.term >= sval else (sval, split[0][1] + split[1][1])
        terms = best[base][1]
        desc = f"best dyadic partition to depth {depth} ({len(terms)} cells)"
    raw = math.fsum(t.term for t in terms)
    return EnergyReport(k, alpha, terms, s_mass, desc, raw, raw / s_mass if s_mass > 0 else math.inf)


def a2_ratio(sigma, omega, alpha, J):
    lo, hi = bounds(J)
    ell = float(hi - lo)
    return float(sigma.mass((lo, hi))) * float(omega.mass((lo, hi))) / ell ** (2 * (1 - alpha))


@dataclass
class A2Report:
    value: float
    interval: object
    count: int


def a2(sigma, omega, alpha, root, depth):
    """Supremum of the A2 ratio over dyadic intervals of depth ≤ ``depth``."""
    best, arg, n = -1.0, None, 0
    for Q in descendants(root, depth):
        val = a2_ratio(sigma, omega, alpha, Q)
        n += 1
        if val > best:
            best, arg = val, Q
    return A2Report(best, arg, n)


# -- Taylor-term and remainder bounds ---------------------------------------------------------
def _check_separated(J, nu):
    lo, hi = bounds(J)
    L = hi - lo
    a2_, b2_ = lo - L / 2, hi + L / 2
    for atom in nu.atoms:
        if a2_ <= atom.x < b2_:
            raise ValueError("support of ν meets 2J")
    for p in nu.pieces:
        if p.a < b2_ and p.b > a2_:
            raise ValueError("support of ν meets 2J")


def kernel_moment(kernel, r, x0, nu, epsrel=1e-10):
    """∫ ∂_x^r K(x0, y) dν(y)."""
    vals = [float(a.mass) * float(kernel.dx(r, x0, float(a.x))) for a in nu.atoms]
    for p in nu.pieces:
        coeffs = [float(v) for v in p.coeffs]
        val, _ = integrate.quad(lambda y: evaluate(coeffs, y) * float(kernel.dx(r, x0, y)),
                                float(p.a), float(p.b), epsrel=epsrel, epsabs=0, limit=200)
        vals.append(val)
    return math.fsum(vals)


@dataclass
class PhiPsi:
    Phi: float
    Psi: float
    center: float
    delta_norm: float  # ‖Δ_J^ω x^k‖
    center_norm: float  # ‖(x - m_J^k)^k‖_{L²(1_J ω)}
    basis: list = field(default_factory=list)

    @property
    def norm_ratio(self):
        return self.center_norm / self.delta_norm if self.delta_norm > 0 else math.inf


def delta_xk_norm(omega, J, k, funcs):
    """‖Δ_J^ω x^k‖ from the basis: |J|^k (Σ_a ⟨t^k, a⟩²)^{1/2}."""
    left, right = J.children()
    ml = np.array([float(v) for v in omega.local_moments(left, 2 * k - 1, frame=J.frame)])
    mr = np.array([float(v) for v in omega.local_moments(right, 2 * k - 1, frame=J.frame)])
    s = 0.0
    for a in funcs:
        s += (a.left @ ml[k: 2 * k] + a.right @ mr[k: 2 * k]) ** 2
    return float(J.length) ** k * math.sqrt(s)


def phi_psi(J, nu, omega, kernel, k, funcs=None):
    """Leading Taylor term Φ and remainder bound Ψ of ⟨T ν, Δ_J⟩ for ν supported away from 2J."""
    _check_separated(J, nu)
    if funcs is None:
        funcs, _ = build_alpert(omega, J, k)
    m = best_center(omega, J, k)
    L = float(J.length)
    dnorm = delta_xk_norm(omega, J, k, funcs)
    phi = abs(kernel_moment(kernel, k, m, nu)) / math.factorial(k) * dnorm
    cnorm = L ** k * math.sqrt(center_norm2(omega, J, k, m))
    psi = poisson(k + kernel.delta, kernel.alpha, J, nu) / L ** k * cnorm
    return PhiPsi(phi, psi, m, dnorm, cnorm, funcs)


def op_coefficient(kernel, mu, h, omega, method="auto", epsrel=1e-10):
    """⟨T μ, h⟩_ω = ∫∫ K(x, y) h(x) dω(x) dμ(y) for μ supported away from supp h.

    Atoms of μ that are far from the interval of h use the Taylor series of the
    kernel in x about the interval's center, integrated term by term against h
    and the exact moments of ω.  Other contributions use adaptive quadrature.
    """
    J = h.interval
    c, Lf = J.center, J.length
    L = float(Lf)
    left, right = J.children()
    total = []
    for atom in mu.atoms:
        y = float(atom.x)
        dist = abs(float(atom.x - c))
        rho = (L / 2) / dist if dist > 0 else math.inf
        if method == "series" or (method == "auto" and rho <= 0.25):
            total.append(float(atom.mass) * _series_inner(kernel, y, h, omega, rho))
        else:
            total.append(float(atom.mass) * _quad_inner(kernel, y, h, omega, epsrel))
    for p in mu.pieces:
        coeffs = [float(v) for v in p.coeffs]
        val, _ = integrate.quad(
            lambda y: evaluate(coeffs, y) * _quad_inner(kernel, y, h, omega, epsrel),
            float(p.a), float(p.b), epsrel=epsrel, epsabs=0, limit=100)
        total.append(val)
    return math.fsum(total)


def _series_inner(kernel, y, h, omega, rho):
    """∫ K(x, y) h(x) dω(x) by the x-Taylor series of K about c_J."""
    J = h.interval
    c = float(J.center)
    L = float(J.length)
    nterms = int(math.ceil(math.log(1e-18) / math.log(max(rho, 1e-300)))) + h.k + 2
    nterms = min(max(nterms, h.k + 2), 400)
    left, right = J.children()
    ml = np.array([float(v) for v in omega.local_moments(left, nterms + h.k, frame=J.frame)])
    mr = np.array([float(v) for v in omega.local_moments(right, nterms + h.k, frame=J.frame)])
    # q_r = ∫ t^r h dω, t the local coordinate of J
    q = np.array([h.left @ ml[r: r + h.k] + h.right @ mr[r: r + h.k] for r in range(nterms + 1)])
    terms = []
    for r in range(nterms + 1):
        coef = float(kernel.dx(r, c, y)) / math.factorial(r) * L ** r
        terms.append(coef * q[r])
    return math.fsum(terms)


def _quad_inner(kernel, y, h, omega, epsrel):
    J = h.interval
    lo, hi = J.left, J.right
    vals = []
    for atom in omega.atoms:
        if lo <= atom.x < hi:
            vals.append(float(atom.mass) * float(kernel(float(atom.x), y)) * float(h(atom.x)))
    for p in omega.pieces:
        coeffs = [float(v) for v in p.coeffs]
        for a, b, side in ((max(p.a, lo), min(p.b, J.center), 0), (max(p.a, J.center), min(p.b, hi), 1)):
            if a >= b:
                continue
            poly = h.right if side else h.left
            cf, Lf = float(J.center), float(J.length)
            val, _ = integrate.quad(
                lambda x: evaluate(coeffs, x) * float(kernel(x, y)) * evaluate(poly, (x - cf) / Lf),
                float(a), float(b), epsrel=epsrel, epsabs=0, limit=200)
            vals.append(val)
    return math.fsum(vals)


# -- the worked example ------------------------------------------------------------------
def example_intervals(j_max):
    """I_j = [4^-j - 4^-j/√j, 4^-j) for j = 2..j_max (float endpoints)."""
    return [(j, 4.0 ** -j - 4.0 ** -j / math.sqrt(j), 4.0 ** -j) for j in range(2, j_max + 1)]


def example_pair(eps, j_max):
    """σ = δ_0 + Σ 4^j j^{-1/2-ε} 1_{I_j}, ω = Σ j^{1/2} 4^{-j} 1_{I_j} (float mode)."""
    ivs = example_intervals(j_max)
    sigma = Measure([(0, 1)], [(a, b, [4.0 ** j / j ** (0.5 + eps)]) for j, a, b in ivs], mode=FLOAT)
    omega = Measure([], [(a, b, [j ** 0.5 / 4.0 ** j]) for j, a, b in ivs], mode=FLOAT)
    return sigma, omega


EXAMPLE_COLUMNS = ["j", "length", "sigma_mass", "omega_mass", "a2_ratio", "P1", "Pk",
                   "term1", "termk", "partial1", "partialk", "sigma_I"]


def example_energy_table(eps, j_max, k):
    """Per-j rows for the worked example, with raw energy partial sums.

    Partial sums are Σ_{i ≤ j} term_i without the 1/|I|_σ normalisation;
    ``sigma_I`` = |[0, 1)|_σ is reported so the normalised energy can be formed.
    """
    if eps <= 0 or j_max < 3:
        raise ValueError("need eps > 0 and j_max ≥ 3")
    sigma, omega = example_pair(eps, j_max)
    sigma_I = sigma.restrict((0, 1))
    s_mass = float(sigma_I.mass((0, 1)))
    rows = []
    p1 = pk = 0.0
    acc1, acck = [], []
    for j, a, b in example_intervals(j_max):
        J = (to_fraction(a), to_fraction(b))
        t1 = energy_term(sigma_I, omega, 0.0, 1, J)
        tk = energy_term(sigma_I, omega, 0.0, k, J)
        acc1.append(t1.term)
        acck.append(tk.term)
        rows.append({
            "j": j,
            "length": float(J[1] - J[0]),
            "sigma_mass": float(sigma.mass(J)),
            "omega_mass": float(omega.mass(J)),
            "a2_ratio": a2_ratio(sigma, omega, 0.0, J),
            "P1": t1.poisson,
            "Pk": tk.poisson,
            "term1": t1.term,
            "termk": tk.term,
            "partial1": math.fsum(acc1),
            "partialk": math.fsum(acck),
            "sigma_I": s_mass,
        })
    return rows


# -- dyadic operator built from two Alpert bases ---------------------------------------------
@dataclass
class TestOperatorHandle:
    root: tuple
    depth: int
    k: int
    sigma: Measure
    omega: Measure
    bases_sigma: dict
    bases_omega: dict
    _restrictions: dict = field(default_factory=dict, repr=False)

    def apply(self, f):
        """T f = Σ_I Σ_{i,j} ⟨f, a_I^{σ,i}⟩ a_I^{ω,j} as a PiecewiseFunction."""
        k, D = self.k, self.depth
        f = f.refine(max(f.depth, D))
        D = f.depth
        rows = np.zeros((2 ** D, k))
        for I, fs in self.bases_sigma.items():
            if not fs or not self.bases_omega[I]:
                continue
            l, r = I.children()
            vl = f_moments(f, self.sigma, l, I.frame, k)
            vr = f_moments(f, self.sigma, r, I.frame, k)
            c = sum(a.left @ vl + a.right @ vr for a in fs)
            shift = D - I.m
            for j in range(I.j << shift, (I.j + 1) << shift):
                C = DyadicInterval(I.root, D, j)
                side = (j >> (shift - 1)) & 1
                for b in self.bases_omega[I]:
                    rows[j] += c * reframe(b.right if side else b.left, I.frame, C.frame)
        return PiecewiseFunction(self.root, D, rows)

    def restriction(self, Q):
        """(M_σ(Q), M_ω(Q), W) with T(1_Q p) = W p on Q, all in Q's local frame."""
        if Q not in self._restrictions:
            k = self.k
            Ms = moment_matrix(self.sigma, Q, k).to_float()
            Mo = moment_matrix(self.omega, Q, k).to_float()
            W = np.zeros((k, k))
            for I in Q.ancestors():
                if I not in self.bases_sigma:
                    continue
                out = sum((_restricted_poly(b, I, Q) for b in self.bases_omega[I]), np.zeros(k))
                into = sum((Ms @ _restricted_poly(a, I, Q) for a in self.bases_sigma[I]),
                           np.zeros(k))
                W += np.outer(out, into)
            self._restrictions[Q] = (Ms, Mo, W)
        return self._restrictions[Q]


def dyadic_test_op(sigma, omega, root, depth, k=2):
    """Bases for every interval of depth < ``depth`` for both measures."""
    root = tuple(to_fraction(v) for v in root)
    bs, bo = {}, {}
    for I in descendants(root, depth - 1) if depth > 0 else []:
        bs[I] = build_alpert(sigma, I, k)[0]
        bo[I] = build_alpert(omega, I, k)[0]
    return TestOperatorHandle(root, depth, k, sigma, omega, bs, bo)


def _restricted_poly(a, I, Q):
    """The polynomial of Alpert function a (on I ⊋ Q) restricted to Q, in Q's frame."""
    side = I.side_of(Q)
    return reframe(a.right if side else a.left, I.frame, Q.frame)


def testing_check(T, Q, p, rel=1e-10):
    """(lhs, rhs, pass) for lhs = ∫_Q |T(1_Q p)|² dω and rhs = ∫_Q |p|² dσ.

    ``p`` holds coefficients of a polynomial of degree ≤ k-1 in Q's local
    coordinate.  Only intervals strictly containing Q contribute, and on Q
    every Alpert function involved is a polynomial, so T(1_Q p) restricted to
    Q is W p for a k×k matrix W that is computed once per Q and cached.
    """
    k = T.k
    p = np.zeros(k) + np.pad(np.asarray(p, float), (0, max(0, k - len(p))))[:k]
    Ms, Mo, W = T.restriction(Q)
    rhs = float(p @ Ms @ p)
    u = W @ p
    lhs = float(u @ Mo @ u)
    return lhs, rhs, bool(lhs <= rhs + rel * rhs)


def subgrid_check(intervals):
    """Verify: |I| ≤ |J| and (11/9)I ∩ (11/9)J ≠ ∅ imply (10/9)I ⊂ J.

    Intervals are pairs (a, b) or DyadicIntervals; dilations are about the
    center and intervals are half-open.  Returns (ok, violating pairs).
    """
    ivs = [bounds(I) for I in intervals]

    def dilate(iv, f):
        a, b = iv
        c, half = (a + b) / 2, (b - a) / 2 * f
        return c - half, c + half

    bad = []
    for n, I in enumerate(ivs):
        for m_, J in enumerate(ivs):
            if n == m_ or I == J:
                continue
            if I[1] - I[0] > J[1] - J[0]:
                continue
            a1, b1 = dilate(I, Fraction(11, 9))
            a2, b2 = dilate(J, Fraction(11, 9))
            if a1 < b2 and a2 < b1:
                c1, d1 = dilate(I, Fraction(10, 9))
                if not (J[0] <= c1 and d1 <= J[1]):
                    bad.append((intervals[n], intervals[m_]))
    return not bad, bad
