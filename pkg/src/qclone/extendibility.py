"""Isotropic extendibility on the complete graph K_N.

p(N, d) is the largest p such that some state on N qudits has every pair
marginal equal to p·omega + (1 - p)·I.  This module holds the closed formula,
the perfect-matching primal states, the scalar dual min_x lambda_max(H(x)),
its affine lower envelope from Brauer-algebra labels, and the explicit
optimal state for N = d = 3.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np
import scipy.sparse
from scipy.optimize import minimize_scalar

from .diagrams import Diagram, Family, enumerate_family, from_permutation, is_member, partial_transpose_rows
from .errors import CapExceeded, InputError, VerificationError
from .operators import (
    check_cap,
    haar_orthogonal,
    lambda_max,
    partial_trace,
    perm_rep,
    sym_rep,
    tensor_power,
    tensor_rep,
)
from .young import (
    IrrepLabelBrauer,
    Partition,
    as_partition,
    conjugate,
    content,
    irr_brauer,
    isotypic_projector,
    odd_row_count,
    partitions,
)

MATCHING_CAP = 12
SPARSE_ABOVE = 512


def _check_instance(N: int, d: int) -> None:
    if N < 2 or d < 2:
        raise InputError("need N >= 2 and d >= 2")


def p_closed(N: int, d: int) -> Fraction:
    """Exact p(N, d)."""
    _check_instance(N, d)
    if d > N or d % 2 == 0 or N % 2 == 0:
        return Fraction(1, N + N % 2 - 1)
    return min(Fraction(2 * d + 1, 2 * d * N + 1), Fraction(1, N - 1))


def p_table(nmax: int = 9, dmax: int = 9) -> dict[tuple[int, int], Fraction]:
    return {(N, d): p_closed(N, d) for d in range(2, dmax + 1) for N in range(2, nmax + 1)}


# perfect matchings and primal states ---------------------------------------------

Edge = tuple[int, int]


def perfect_matchings(N: int, vertices: tuple[int, ...] | None = None) -> list[tuple[Edge, ...]]:
    """All perfect matchings of the complete graph on ``vertices`` (default 0..N-1)."""
    if N > MATCHING_CAP:
        raise CapExceeded(f"matching enumeration capped at N <= {MATCHING_CAP}")
    verts = tuple(range(N)) if vertices is None else tuple(vertices)
    if len(verts) % 2:
        return []

    def rec(rest: tuple[int, ...]):
        if not rest:
            yield ()
            return
        a = rest[0]
        for j in range(1, len(rest)):
            for tail in rec(rest[1:j] + rest[j + 1 :]):
                yield ((a, rest[j]),) + tail

    return list(rec(verts))


def edges(N: int) -> list[Edge]:
    return list(itertools.combinations(range(N), 2))


def _matching_diagram(N: int, matching: tuple[Edge, ...]) -> Diagram:
    """Brauer diagram whose psi is ⊗_e (d·omega_e) ⊗ I on unmatched vertices."""
    blocks = []
    used = set()
    for u, w in matching:
        blocks += [(u + 1, w + 1), (N + u + 1, N + w + 1)]
        used |= {u, w}
    blocks += [(v + 1, N + v + 1) for v in range(N) if v not in used]
    return Diagram(N, tuple(blocks))


@dataclass(frozen=True)
class RationalOperator:
    """Operator stored as an integer matrix times an exact rational scale."""

    numer: np.ndarray
    scale: Fraction
    d: int
    n: int

    def dense(self) -> np.ndarray:
        return self.numer * float(self.scale)

    def trace(self) -> Fraction:
        return Fraction(int(np.trace(self.numer))) * self.scale

    def partial_trace(self, keep: tuple[int, ...]) -> RationalOperator:
        drop = [i for i in range(self.n) if i not in keep]
        reduced = partial_trace(self.numer, drop, self.d, self.n)
        return RationalOperator(np.rint(reduced).astype(np.int64), self.scale, self.d, len(keep))


def matching_state(N: int, d: int) -> RationalOperator:
    """Uniform average of maximally entangled states over perfect matchings.

    Odd N: each vertex in turn is left maximally mixed and the rest is matched.
    """
    _check_instance(N, d)
    check_cap(d**N)
    acc = np.zeros((d**N, d**N), dtype=np.int64)
    count = 0
    if N % 2 == 0:
        for m in perfect_matchings(N):
            acc += np.rint(tensor_rep(_matching_diagram(N, m), d)).astype(np.int64)
            count += 1
        scale = Fraction(1, count * d ** (N // 2))
    else:
        for v in range(N):
            rest = tuple(u for u in range(N) if u != v)
            for m in perfect_matchings(N, rest):
                acc += np.rint(tensor_rep(_matching_diagram(N, m), d)).astype(np.int64)
                count += 1
        scale = Fraction(1, count * d ** ((N - 1) // 2) * d)
    return RationalOperator(acc, scale, d, N)


def matching_value(N: int) -> Fraction:
    return Fraction(1, N - 1) if N % 2 == 0 else Fraction(1, N)


# isotropic fit -----------------------------------------------------------------------

@dataclass(frozen=True)
class IsotropicFit:
    p: float
    residual: float
    exact: Fraction | None = None

    def as_dict(self) -> dict:
        out = {"p": self.p, "residual": self.residual}
        if self.exact is not None:
            out["exact"] = {"numerator": self.exact.numerator, "denominator": self.exact.denominator}
        return out


def _omega(d: int) -> np.ndarray:
    v = np.zeros(d * d)
    v[[i * d + i for i in range(d)]] = 1
    return np.outer(v, v) / d


def isotropic_fit(rho_pair, d: int) -> IsotropicFit:
    """Least-squares fit rho ≈ p·omega + (1-p)·I; exact when given a RationalOperator."""
    if isinstance(rho_pair, RationalOperator):
        M, s = rho_pair.numer, rho_pair.scale
        if M.shape != (d * d, d * d):
            raise InputError("pair state must be d² x d²")
        # p·omega has entry p/d at (00, 11); the mixed part is zero there
        p = Fraction(int(M[0, d + 1])) * s * d
        # compare d²·target against d²·rho exactly
        target_diag = (p / d + (1 - p) / d**2)
        ok = True
        for r in range(d * d):
            for c in range(d * d):
                val = Fraction(int(M[r, c])) * s
                diag_pair = r % (d + 1) == 0 and c % (d + 1) == 0
                if r == c:
                    expect = target_diag if diag_pair else (1 - p) / d**2
                else:
                    expect = p / d if diag_pair else Fraction(0)
                if val != expect:
                    ok = False
        dense = rho_pair.dense()
        resid = float(np.linalg.norm(dense - (float(p) * _omega(d) + (1 - float(p)) * np.eye(d * d) / d**2)))
        return IsotropicFit(float(p), 0.0 if ok else max(resid, 1e-300), p)
    rho = np.asarray(rho_pair)
    if rho.shape != (d * d, d * d):
        raise InputError("pair state must be d² x d²")
    mixed = np.eye(d * d) / d**2
    basis = _omega(d) - mixed
    target = rho - mixed
    p = float(np.real(np.vdot(basis, target)) / np.real(np.vdot(basis, basis)))
    resid = float(np.linalg.norm(rho - (p * _omega(d) + (1 - p) * mixed)))
    return IsotropicFit(p, resid)


def pair_marginals(rho: RationalOperator) -> dict[Edge, RationalOperator]:
    return {e: rho.partial_trace(e) for e in edges(rho.n)}


# dual: H(x) ------------------------------------------------------------------------------

def x_tilde(N: int, d: int) -> Fraction:
    return Fraction(2, N * (N - 1) * (1 - d))


@lru_cache(maxsize=16)
def _h_parts(N: int, d: int):
    """Σ_e (I - d·SWAP_e) and Σ_e (SWAP_e - d·omega_e) as sparse matrices."""
    check_cap(d**N)
    dim = d**N
    ident = scipy.sparse.identity(dim, format="csr")
    A = scipy.sparse.csr_array((dim, dim))
    B = scipy.sparse.csr_array((dim, dim))
    for u, w in edges(N):
        swap_perm = list(range(1, N + 1))
        swap_perm[u], swap_perm[w] = w + 1, u + 1
        swap = tensor_rep(from_permutation(swap_perm), d, sparse=True).tocsr()
        dom = tensor_rep(_matching_diagram(N, ((u, w),)), d, sparse=True).tocsr()
        A = A + ident - d * swap
        B = B + swap - dom
    return A.tocsr(), B.tocsr()


def h_operator(x: float, N: int, d: int, sparse: bool = False):
    """H(x) = Σ_e [(x̃ - x)(d²·I_e - d·(d·F_e)) + x((d·F_e) - (d·omega_e))] ⊗ I."""
    _check_instance(N, d)
    A, B = _h_parts(N, d)
    H = (float(x_tilde(N, d)) - x) * A + x * B
    return H if sparse else H.toarray()


def f_dual(x: float, N: int, d: int) -> float:
    H = h_operator(x, N, d, sparse=True)
    cap = SPARSE_ABOVE if d**N > SPARSE_ABOVE else None
    return lambda_max(H, cap=cap)


@dataclass(frozen=True)
class DualResult:
    value: float
    x: float
    evaluations: int
    bracket: tuple[float, float, float]


def dual_numeric(N: int, d: int, tol: float = 1e-10, max_expand: int = 60) -> DualResult:
    """min_x lambda_max(H(x)) by bracket expansion and golden-section search."""
    _check_instance(N, d)
    check_cap(d**N)
    xt = float(x_tilde(N, d))
    width = 10 * abs(xt)
    cache: dict[float, float] = {}

    def f(x: float) -> float:
        if x not in cache:
            cache[x] = f_dual(x, N, d)
        return cache[x]

    lo, mid, hi = xt - width / 2, xt, xt + width / 2
    for _ in range(max_expand):
        if f(mid) <= f(lo) and f(mid) <= f(hi):
            break
        if f(lo) < f(mid):
            lo, mid, hi = lo - (hi - lo), lo, mid
        else:
            lo, mid, hi = mid, hi, hi + (hi - lo)
    else:
        raise VerificationError("could not bracket the dual minimum")
    res = minimize_scalar(f, bracket=(lo, mid, hi), method="golden", tol=tol)
    if not res.success:
        raise VerificationError(f"golden section did not converge: {res.message}")
    return DualResult(float(res.fun), float(res.x), len(cache), (lo, mid, hi))


# affine family ------------------------------------------------------------------------------

@dataclass(frozen=True)
class AffineFn:
    slope: Fraction
    offset: Fraction
    tag: tuple

    def __call__(self, x: Fraction | float):
        return self.offset + self.slope * x

    def intersect(self, other: AffineFn) -> Fraction:
        if self.slope == other.slope:
            raise InputError("parallel affine functions")
        return (other.offset - self.offset) / (self.slope - other.slope)


def h_value(lam: Partition, d: int) -> Fraction:
    """h(lam) = ½ Σ_i lam'_i (d - lam'_i + 2(i-1)), i from 1."""
    cols = conjugate(as_partition(lam))
    return Fraction(sum(c * (d - c + 2 * i) for i, c in enumerate(cols)), 2)


def g_value(lam: Partition, N: int, d: int) -> Fraction:
    return Fraction(1, N - 1) + x_tilde(N, d) * h_value(lam, d)


def a_value(mu: Partition, N: int, d: int) -> Fraction:
    return (Fraction(2 * d * content(mu), N * (N - 1)) - 1) / (d - 1)


def affine_fn(lam: Partition, mu: Partition, N: int, d: int) -> AffineFn:
    """f_{lam,mu}(x) with k = (N - |lam|)/2."""
    lam, mu = as_partition(lam), as_partition(mu)
    if sum(mu) != N or (N - sum(lam)) % 2 or sum(lam) > N:
        raise InputError("need mu ⊢ N and lam ⊢ N - 2k")
    k = (N - sum(lam)) // 2
    slope = Fraction(content(lam) + d * content(mu) - k * (d - 1)) - Fraction(N * (N - 1), 2)
    return AffineFn(slope, a_value(mu, N, d), (lam, mu, k))


@dataclass(frozen=True)
class SpecialPartitions:
    lam1: Partition
    lam2: Partition
    mu1: Partition
    mu2: Partition
    mu3: Partition
    k: int
    m: int


def special_partitions(N: int, d: int) -> SpecialPartitions:
    if N < d or N % 2 == 0 or d % 2 == 0:
        raise InputError("special partitions need N >= d with N and d odd")
    half = (N - d) // 2
    k, m = half // d, half % d
    mu3_conj = (d,) * (2 * k + 1) + ((m, m) if m else ())
    return SpecialPartitions(
        lam1=(1,) * d,
        lam2=(1,),
        mu1=(N,),
        mu2=(N - d + 1,) + (1,) * (d - 1),
        mu3=conjugate(mu3_conj),
        k=k,
        m=m,
    )


def gamma_membership(lam: Partition, mu: Partition, d: int) -> bool:
    lam, mu = as_partition(lam), as_partition(mu)
    m = len(lam)
    return 1 <= m <= d and all(part == 1 for part in lam) and odd_row_count(mu) == m


@dataclass(frozen=True)
class DualCertificate:
    value: Fraction
    x: Fraction
    regime: str
    functions: tuple[AffineFn, ...]


def dual_closed(N: int, d: int) -> DualCertificate:
    """Closed-form dual value for odd N >= d, odd d."""
    sp = special_partitions(N, d)
    if N >= 2 * d + 3:
        xt = x_tilde(N, d)
        f1 = affine_fn(sp.lam1, sp.mu2, N, d)
        value = f1(xt)
        if value != g_value(sp.lam1, N, d) or value != Fraction(1, N - 1):
            raise VerificationError("flat-regime certificate inconsistent")
        return DualCertificate(value, xt, "flat", (f1,))
    f_a = affine_fn(sp.lam2, sp.mu1, N, d)
    f_b = affine_fn(sp.lam1, sp.mu2, N, d)
    x_star = f_a.intersect(f_b)
    value = f_a(x_star)
    # the crossing lies on the same (negative) side as x_tilde
    if x_star != -Fraction(4 * d, (d - 1) * (N - 1) * (2 * d * N + 1)):
        raise VerificationError(f"intersection {x_star} disagrees with the closed form")
    if value != Fraction(2 * d + 1, 2 * d * N + 1):
        raise VerificationError(f"intersection value {value} disagrees with the closed form")
    return DualCertificate(value, x_star, "crossing", (f_a, f_b))


# explicit optimal state for N = d = 3 ---------------------------------------------------------

def optimal_state_3_3() -> RationalOperator:
    """(1/57)[Σ non-permutation Brauer diagrams + 2(id + 3-cycles - transpositions)] on (C^3)^{⊗3}."""
    d, n = 3, 3
    brauer = enumerate_family(Family.brauer(), n)
    non_perm = [p for p in brauer if not is_member(p, Family.symmetric())]
    if len(non_perm) != 9:
        raise VerificationError("expected nine non-permutation diagrams")
    M = np.zeros((d**n, d**n), dtype=np.int64)
    for p in non_perm:
        M += np.rint(tensor_rep(p, d)).astype(np.int64)
    for sigma in itertools.permutations(range(n)):
        is_transposition = sum(sigma[i] != i for i in range(n)) == 2
        M += (-2 if is_transposition else 2) * np.rint(perm_rep(sigma, d)).astype(np.int64)
    rho = RationalOperator(M, Fraction(1, 57), d, n)
    if rho.trace() != 1:
        raise VerificationError(f"trace is {rho.trace()}")
    min_eig = float(np.linalg.eigvalsh(rho.dense())[0])
    if min_eig < -1e-10:
        raise VerificationError(f"state not PSD, min eig {min_eig}")
    for e, marg in pair_marginals(rho).items():
        fit = isotropic_fit(marg, d)
        if fit.exact != Fraction(7, 19) or fit.residual != 0.0:
            raise VerificationError(f"marginal {e} is not (7/19)-isotropic")
    return rho


# central elements -------------------------------------------------------------------------------

@dataclass(frozen=True)
class ComponentCheck:
    label: str
    expected: float
    residual: float
    dimension: int

    def as_dict(self) -> dict:
        return {"label": self.label, "expected": self.expected, "residual": self.residual, "dimension": self.dimension}


@dataclass(frozen=True)
class CentralReport:
    n: int
    d: int
    algebra: str
    components: tuple[ComponentCheck, ...]
    spectrum_ok: bool

    @property
    def ok(self) -> bool:
        return self.spectrum_ok and all(c.residual < 1e-9 for c in self.components)


def _transposition(n: int, i: int, j: int) -> Diagram:
    perm = list(range(1, n + 1))
    perm[i], perm[j] = j + 1, i + 1
    return from_permutation(perm)


def central_element(n: int, d: int, algebra: str = "symmetric") -> np.ndarray:
    """J = Σ_{i<j} psi((i j)) [- psi((i j)^Γ) for the Brauer version]."""
    check_cap(d**n)
    J = np.zeros((d**n, d**n))
    for i, j in itertools.combinations(range(n), 2):
        t = _transposition(n, i, j)
        J += tensor_rep(t, d)
        if algebra == "brauer":
            J -= tensor_rep(partial_transpose_rows(t, [i + 1]), d)
        elif algebra != "symmetric":
            raise InputError(f"unknown algebra {algebra!r}")
    return J


def _range_basis(P: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    w, v = np.linalg.eigh((P + P.T) / 2)
    return v[:, w > 0.5]


def central_element_check(n: int, d: int, algebra: str = "symmetric") -> CentralReport:
    """Verify the eigenvalue of J on each isotypic component.

    Symmetric: J acts as c(lam) on the range of psi(phi_lam).
    Brauer: J's spectrum equals {c(lam) - k(d-1)} over the Brauer labels, and on
    the traceless part of each S_n-isotypic range (killed by every contraction)
    it acts as c(lam) for the k = 0 label.
    """
    if n > 5:
        raise CapExceeded("central element check capped at n <= 5")
    check_cap(d**n)
    J = central_element(n, d, algebra)
    comps = []
    if algebra == "symmetric":
        for lam in partitions(n):
            Phi = sym_rep(isotypic_projector(lam), d)
            c = content(lam)
            resid = float(np.max(np.abs(J @ Phi - c * Phi)))
            dim = int(round(np.trace(Phi)))
            comps.append(ComponentCheck(str(lam), float(c), resid, dim))
        eigs = np.linalg.eigvalsh(J)
        allowed = {content(lam) for lam in partitions(n) if len(lam) <= d}
        spectrum_ok = all(min(abs(e - a) for a in allowed) < 1e-9 for e in eigs)
        return CentralReport(n, d, algebra, tuple(comps), spectrum_ok)

    labels = irr_brauer(n, d)
    predicted = {lab: content(lab.lam) - lab.k * (d - 1) for lab in labels}
    eigs = np.linalg.eigvalsh(J)
    values = set(predicted.values())
    spectrum_ok = all(min(abs(e - v) for v in values) < 1e-9 for e in eigs) and all(
        np.min(np.abs(eigs - v)) < 1e-9 for v in values
    )
    # contractions e_ij = psi((i j)^Γ); their common kernel is the traceless subspace
    contractions = [
        tensor_rep(partial_transpose_rows(_transposition(n, i, j), [i + 1]), d)
        for i, j in itertools.combinations(range(n), 2)
    ]
    for lab in labels:
        if lab.k:
            continue
        Phi = sym_rep(isotypic_projector(lab.lam), d)
        basis = _range_basis(Phi)
        if basis.shape[1] == 0:
            continue
        stack = np.vstack([E @ basis for E in contractions]) if contractions else np.zeros((0, basis.shape[1]))
        if stack.shape[0]:
            _, s, vt = np.linalg.svd(stack)
            null = vt[np.sum(s > 1e-9) :].T
            sub = basis @ null
        else:
            sub = basis
        if sub.shape[1] == 0:
            continue
        c = predicted[lab]
        resid = float(np.max(np.abs(J @ sub - c * sub)))
        comps.append(ComponentCheck(f"{lab.lam},k=0", float(c), resid, sub.shape[1]))
    # k > 0 labels are checked through the spectrum
    for lab in labels:
        if lab.k:
            c = predicted[lab]
            comps.append(ComponentCheck(f"{lab.lam},k={lab.k}", float(c), float(np.min(np.abs(eigs - c))), 0))
    return CentralReport(n, d, algebra, tuple(comps), spectrum_ok)


def orthogonal_invariance_residual(rho: np.ndarray, N: int, d: int, samples: int = 5, seed: int = 0) -> float:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for s in rng.integers(0, 2**63, size=samples):
        O = tensor_power(haar_orthogonal(d, int(s)), N)
        worst = max(worst, float(np.max(np.abs(O @ rho @ O.T - rho))))
    return worst
