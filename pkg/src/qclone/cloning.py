"""Universal 1 -> N cloning: bounds, the Q-norm, achievable regions and optimal channels.

Factor 0 is the input system, factors 1..N the clones.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from math import factorial, hypot, sqrt
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import minimize_scalar

from .errors import InputError, VerificationError
from .operators import (
    apply_choi,
    check_cap,
    choi_of_map,
    cptp_check,
    diagonal_unitary_permutation,
    embed,
    haar_pure_state,
    haar_unitary,
    lambda_max,
    omega_vector,
    partial_trace,
    partial_transpose,
    perm_rep,
    tensor_power,
    top_eigenspace,
)

REGION_TOL = 1e-7


# S_a, R_a and the Q-norm -----------------------------------------------------------

def _as_vector(x: Sequence[float]) -> np.ndarray:
    v = np.asarray(x, dtype=float).ravel()
    if v.size == 0:
        raise InputError("empty vector")
    if not np.all(np.isfinite(v)):
        raise InputError("vector entries must be finite")
    return v


def _as_direction(a: Sequence[float]) -> np.ndarray:
    v = _as_vector(a)
    if np.any(v < 0) or np.any(v > 1) or abs(v.sum() - 1) > 1e-9:
        raise InputError(f"direction vector must lie in [0,1]^N and sum to 1, got {v.tolist()}")
    return v


def _d_omega(d: int) -> np.ndarray:
    om = omega_vector(d)
    return d * np.outer(om, om)


def s_matrix(x: Sequence[float], d: int) -> np.ndarray:
    """S_x = Σ_i |x_i| (d·omega)_{(0,i)} ⊗ I on factors 0..N."""
    x = np.abs(_as_vector(x))
    N = len(x)
    check_cap(d ** (N + 1))
    dw = _d_omega(d)
    out = np.zeros((d ** (N + 1),) * 2)
    for i, xi in enumerate(x, start=1):
        if xi:
            out += xi * embed(dw, [0, i], N + 1, d)
    return out


def r_matrix(a: Sequence[float], d: int, mode: str = "universal") -> np.ndarray:
    """Σ_i a_i (d²·I + d·omega [- d·X])_{(0,i)} ⊗ I, where d²·I is the identity."""
    a = _as_direction(a)
    N = len(a)
    R = s_matrix(a, d) + a.sum() * np.eye(d ** (N + 1))
    if mode == "universal":
        return R
    if mode != "equatorial":
        raise InputError(f"unknown mode {mode!r}")
    X = np.diag([1.0 if i // d == i % d else 0.0 for i in range(d * d)])  # d·X
    for i, ai in enumerate(a, start=1):
        if ai:
            R -= ai * embed(X, [0, i], N + 1, d)
    return R


def gram(N: int, d: int) -> np.ndarray:
    """Gram matrix of the vectors sqrt(d)|Omega>_{(0,i)} ⊗ |v>, v symmetric: (d-1)I + J."""
    return (d - 1) * np.eye(N) + np.ones((N, N))


def reduced_lambda_max(x: Sequence[float], d: int) -> float:
    """lambda_max(S_x) from the N x N matrix diag(sqrt|x|) G diag(sqrt|x|)."""
    x = np.abs(_as_vector(x))
    r = np.sqrt(x)
    M = r[:, None] * gram(len(x), d) * r[None, :]
    return float(np.linalg.eigvalsh(M)[-1])


def q_norm(x: Sequence[float], d: int, method: str = "dense") -> float:
    """(d·lambda_max(S_x) - ||x||_1) / (d² - 1)."""
    x = _as_vector(x)
    if method == "dense":
        lam = lambda_max(s_matrix(x, d))
    elif method == "reduced":
        lam = reduced_lambda_max(x, d)
    else:
        raise InputError(f"unknown method {method!r}")
    return (d * lam - np.abs(x).sum()) / (d * d - 1)


def upper_bound(a: Sequence[float], d: int, mode: str = "universal") -> float:
    """Bound on Σ a_i f_i; universal uses the Q-norm form, equatorial lambda_max(R_a)/d."""
    a = _as_direction(a)
    if mode == "universal":
        return a.sum() / d + (1 - 1 / d) * q_norm(a, d)
    if mode == "equatorial":
        return lambda_max(r_matrix(a, d, "equatorial")) / d
    raise InputError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class BCoefficients:
    N: int
    d: int
    b: np.ndarray
    lambda_max: float
    degenerate: bool = False

    @property
    def overlaps(self) -> np.ndarray:
        """(d-1) b_i + Σ b_j for each i."""
        return (self.d - 1) * self.b + self.b.sum()

    @property
    def fidelities(self) -> np.ndarray:
        return (1 + self.overlaps**2) / (self.d + 1)

    @property
    def shrink_factors(self) -> np.ndarray:
        f = self.fidelities
        return (self.d * f - 1) / (self.d - 1)

    def constraint_residual(self) -> float:
        return float((self.d - 1) * np.sum(self.b**2) + self.b.sum() ** 2 - 1)


def b_from_direction(a: Sequence[float], d: int, dense: bool = True) -> BCoefficients:
    """Coefficients b_i of the top eigenvector Σ b_i sqrt(d)|Omega>_{(0,i)} ⊗ |v> of S_a.

    The b's solve max b^T G A G b subject to b^T G b = 1 (A = diag(a)); that
    generalised problem has a simple top eigenvalue even when S_a itself is
    degenerate.  With ``dense`` the value is checked against full
    diagonalisation of S_a and the degeneracy of its top eigenspace is flagged.
    """
    a = _as_direction(a)
    N = len(a)
    G = gram(N, d)
    M = G @ np.diag(a) @ G
    w, v = scipy.linalg.eigh(M, G)
    b = v[:, -1]
    if b.sum() < 0:
        b = -b
    b = b / sqrt((d - 1) * np.sum(b**2) + b.sum() ** 2)
    b = np.where(np.abs(b) < 1e-14, 0.0, b)
    lam = float(np.dot(a, ((d - 1) * b + b.sum()) ** 2))
    degenerate = False
    if dense:
        lam_dense, space = top_eigenspace(s_matrix(a, d))
        degenerate = space.shape[1] > 1
        if abs(lam_dense - lam) > 1e-9 * max(1.0, lam_dense):
            raise VerificationError(f"reduced lambda_max {lam} disagrees with dense {lam_dense}")
        lam = lam_dense
    if np.any(b < -1e-12):
        raise VerificationError(f"negative b coefficients {b}")
    return BCoefficients(N, d, np.clip(b, 0, None), lam, degenerate)


def overlaps_from_eigvec(chi: np.ndarray, N: int, d: int) -> np.ndarray:
    """<chi|(d·omega)_{(0,i)} ⊗ I|chi> for i = 1..N."""
    dw = _d_omega(d)
    return np.array([np.real(np.vdot(chi, embed(dw, [0, i], N + 1, d) @ chi)) for i in range(1, N + 1)])


# optimal channels ---------------------------------------------------------------------

def symmetric_projector(N: int, d: int) -> np.ndarray:
    check_cap(d**N)
    P = np.zeros((d**N, d**N))
    for sigma in itertools.permutations(range(N)):
        P += perm_rep(sigma, d)
    return P / factorial(N)


def _input_padding(X: np.ndarray, N: int, d: int) -> np.ndarray:
    return np.kron(X, np.eye(d ** (N - 1)))


def optimal_symmetric_channel(N: int, d: int) -> np.ndarray:
    """Choi of rho -> (d / Tr P+) P+ (rho ⊗ I^{N-1}) P+."""
    if N < 1 or d < 2:
        raise InputError("need N >= 1 and d >= 2")
    check_cap(d ** (N + 1))
    P = symmetric_projector(N, d)
    scale = d / np.trace(P)
    C = choi_of_map(lambda X: scale * P @ _input_padding(X, N, d) @ P, d)
    report = cptp_check(C, d, d**N)
    if not report.ok:
        raise VerificationError(f"symmetric cloner failed CPTP check: {report}")
    return C


def p_opt(N: int, d: int) -> float:
    return (d + N) / (N * (d + 1))


def asymmetric_operator(b: np.ndarray, d: int) -> np.ndarray:
    """P^a = (1/N!) Σ_sigma b_{sigma(0)+1} psi(sigma) over permutations of the N output factors."""
    N = len(b)
    P = np.zeros((d**N, d**N))
    for sigma in itertools.permutations(range(N)):
        P += b[sigma[0]] * perm_rep(sigma, d)
    return P / factorial(N)


def optimal_asymmetric_channel(a: Sequence[float], d: int) -> np.ndarray:
    """Choi of rho -> dN(N+d-1)/Tr P+ · P^a (rho ⊗ I) (P^a)*, checked CPTP."""
    a = _as_direction(a)
    N = len(a)
    check_cap(d ** (N + 1))
    coeffs = b_from_direction(a, d)
    Pa = asymmetric_operator(coeffs.b, d)
    scale = d * N * (N + d - 1) / np.trace(symmetric_projector(N, d))
    C = choi_of_map(lambda X: scale * Pa @ _input_padding(X, N, d) @ Pa.conj().T, d)
    report = cptp_check(C, d, d**N)
    if not report.ok:
        raise VerificationError(f"asymmetric cloner failed CPTP check: {report}")
    return C


# marginals -------------------------------------------------------------------------------

@dataclass(frozen=True)
class FidelityPoint:
    d: int
    p: np.ndarray
    residual: float = 0.0

    @property
    def N(self) -> int:
        return len(self.p)

    @property
    def f(self) -> np.ndarray:
        return self.p + (1 - self.p) / self.d

    def as_dict(self) -> dict:
        return {"d": self.d, "p": self.p.tolist(), "f": self.f.tolist(), "fitResidual": self.residual}


def marginal_choi(C: np.ndarray, i: int, N: int, d: int) -> np.ndarray:
    """Choi of the i-th marginal channel (i in 1..N)."""
    return partial_trace(C, [j for j in range(1, N + 1) if j != i], d, N + 1)


def marginal_report(C: np.ndarray, N: int, d: int, trials: int = 8, seed: int = 0) -> FidelityPoint:
    """Fit Phi_i(rho) ≈ p_i rho + (1 - p_i) I/d over Haar-random pure inputs."""
    C = np.asarray(C)
    if C.shape != (d ** (N + 1),) * 2:
        raise InputError("Choi shape does not match N and d")
    rng = np.random.default_rng(seed)
    states = [haar_pure_state(d, int(s)) for s in rng.integers(0, 2**63, size=trials)]
    ps, worst = [], 0.0
    mixed = np.eye(d) / d
    for i in range(1, N + 1):
        Ci = marginal_choi(C, i, N, d)
        num = den = 0.0
        outs = []
        for psi in states:
            rho = np.outer(psi, psi.conj())
            out = apply_choi(Ci, rho, d)
            outs.append((rho, out))
            num += np.real(np.vdot(rho - mixed, out - mixed))
            den += np.real(np.vdot(rho - mixed, rho - mixed))
        p = num / den
        for rho, out in outs:
            worst = max(worst, float(np.max(np.abs(out - (p * rho + (1 - p) * mixed)))))
        ps.append(p)
    return FidelityPoint(d, np.array(ps), worst)


def twirl_estimate(C: np.ndarray, N: int, d: int, group: str = "unitary", samples: int = 1000, seed: int = 0) -> np.ndarray:
    """Monte-Carlo twirl: average of (M^T ⊗ (M*)^{⊗N}) C (conj(M) ⊗ M^{⊗N})."""
    check_cap(d ** (N + 1))
    if group == "unitary":
        draw = lambda s: haar_unitary(d, s)  # noqa: E731
    elif group in ("diagonalUnitaryTimesPermutation", "equatorial"):
        draw = lambda s: diagonal_unitary_permutation(d, s)  # noqa: E731
    else:
        raise InputError(f"unknown group {group!r}")
    rng = np.random.default_rng(seed)
    acc = np.zeros_like(C, dtype=complex)
    for s in rng.integers(0, 2**63, size=samples):
        M = draw(int(s))
        K = np.kron(M.T, tensor_power(M.conj().T, N))
        acc += K @ C @ K.conj().T
    return acc / samples


# 1 -> N region --------------------------------------------------------------------------

@dataclass(frozen=True)
class Membership:
    inside: bool
    margin: float
    witness: np.ndarray
    status: str
    trace: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "inside": self.inside,
            "status": self.status,
            "margin": self.margin,
            "witness": self.witness.tolist(),
        }


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, len(v) + 1)
    rho = np.nonzero(u * ks > css - 1)[0][-1]
    theta = (css[rho] - 1) / (rho + 1)
    return np.maximum(v - theta, 0)


def _simplex_grid(N: int, resolution: int) -> np.ndarray:
    pts = []
    for combo in itertools.combinations(range(resolution + N - 1), N - 1):
        parts, prev = [], -1
        for c in combo:
            parts.append(c - prev - 1)
            prev = c
        parts.append(resolution + N - 2 - prev)
        pts.append(np.array(parts) / resolution)
    return np.array(pts)


def _q_value_and_grad(a: np.ndarray, d: int) -> tuple[float, np.ndarray]:
    """Q-norm and a subgradient, from the reduced eigenproblem."""
    N = len(a)
    G = gram(N, d)
    M = G @ np.diag(a) @ G
    w, v = scipy.linalg.eigh(M, G)
    b = v[:, -1]
    b = b / sqrt(b @ G @ b)
    g = (G @ b) ** 2  # d lambda_max / d a_i
    q = (d * w[-1] - a.sum()) / (d * d - 1)
    return float(q), (d * g - 1) / (d * d - 1)


def region_membership_N(
    p: Sequence[float],
    d: int,
    resolution: int = 20,
    restarts: int = 8,
    seed: int = 0,
    iterations: int = 400,
    tol: float = REGION_TOL,
) -> Membership:
    """Decide sup_{a in simplex} <p,a> - ||a||_Q <= 0 by grid search plus projected supergradient ascent."""
    p = _as_vector(p)
    if np.any(p < 0) or np.any(p > 1):
        raise InputError("p must lie in [0,1]^N")
    N = len(p)

    def objective(a: np.ndarray) -> tuple[float, np.ndarray]:
        q, g = _q_value_and_grad(a, d)
        return float(p @ a - q), p - g

    grid = _simplex_grid(N, resolution)
    values = np.array([objective(a)[0] for a in grid])
    rng = np.random.default_rng(seed)
    starts = [grid[i] for i in np.argsort(values)[::-1][:restarts]]
    starts += [rng.dirichlet(np.ones(N)) for _ in range(restarts)]
    best_val, best_a = -np.inf, starts[0]
    trace = []
    for a in starts:
        val, g = objective(a)
        local_best, local_a = val, a
        for t in range(1, iterations + 1):
            a = _project_simplex(a + g / sqrt(t) * 0.5)
            val, g = objective(a)
            if val > local_best:
                local_best, local_a = val, a
        trace.append(local_best)
        if local_best > best_val:
            best_val, best_a = local_best, local_a
    status = "boundary" if abs(best_val) <= tol else ("inside" if best_val < 0 else "outside")
    return Membership(best_val <= tol, float(best_val), best_a, status, trace)


def necessary_condition_residual(p: Sequence[float], N: int | None, d: int) -> float:
    p = _as_vector(p)
    N = len(p) if N is None else N
    if len(p) != N:
        raise InputError("p length must equal N")
    inner = (d * d - 1) * p + 1
    if np.any(inner < -1e-12):
        raise InputError("need (d²-1) p_i + 1 >= 0")
    roots = np.sqrt(np.clip(inner, 0, None))
    return float(N + (d * d - 1) * p.sum() - d * (d - 1) - roots.sum() ** 2 / (N + d - 1))


# Σ_{a,b} ------------------------------------------------------------------------------------

def sigma_subsets(a_idx: int, b_idx: int, N: int) -> list[tuple[int, ...]]:
    """{sigma in S_{N+1} on 0..N : sigma(0) = a, sigma^{-1}(0) = b}."""
    if not (1 <= a_idx <= N and 1 <= b_idx <= N):
        raise InputError("indices must lie in 1..N")
    if N > 6:
        raise InputError("N <= 6 for explicit enumeration")
    return [s for s in itertools.permutations(range(N + 1)) if s[0] == a_idx and s[b_idx] == 0]


@dataclass(frozen=True)
class SigmaTraceReport:
    a: int
    b: int
    N: int
    d: int
    size: int
    residual: float
    expected_scalar: float

    @property
    def ok(self) -> bool:
        return self.residual < 1e-10 * max(1.0, self.expected_scalar)


def sigma_partial_trace_check(a_idx: int, b_idx: int, N: int, d: int) -> SigmaTraceReport:
    """Tr_out Σ_{Σ_{a,b}} psi(sigma)^Γ against Σ_{S_{N-1}} Tr psi(sigma) (times 1/d if a != b)."""
    check_cap(d ** (N + 1))
    perms = sigma_subsets(a_idx, b_idx, N)
    total = np.zeros((d ** (N + 1),) * 2)
    for s in perms:
        total += perm_rep(s, d)
    reduced = partial_trace(partial_transpose(total, [0], d, N + 1), list(range(1, N + 1)), d, N + 1)
    trace_sum = sum(np.trace(perm_rep(s, d)) for s in itertools.permutations(range(N - 1))) if N > 1 else 1.0
    scalar = trace_sum / d if a_idx != b_idx else trace_sum
    residual = float(np.max(np.abs(reduced - scalar * np.eye(d))))
    return SigmaTraceReport(a_idx, b_idx, N, d, len(perms), residual, float(scalar))


# 1 -> 2 region ---------------------------------------------------------------------------------

@dataclass(frozen=True)
class EllipseParams:
    lam: float
    d: int

    @property
    def a(self) -> float:
        return self.lam / sqrt(self.d**2 - 1)

    @property
    def b(self) -> float:
        return self.lam / (self.d**2 - 1)

    @property
    def c(self) -> float:
        return (self.lam * self.d - 2) / (self.d**2 - 1)

    def as_dict(self) -> dict:
        return {"lambda": self.lam, "a": self.a, "b": self.b, "c": self.c}


def ellipse_family(d: int, samples: int = 16) -> list[EllipseParams]:
    """Evenly spaced lambda in (0, d], ending at the optimal ellipse lambda = d."""
    return [EllipseParams(d * (j + 1) / samples, d) for j in range(samples)]


def ellipse_lhs(p1: float, p2: float, lam: float, d: int) -> float:
    """(d²-1)x² + ((d²-1)y - lam·d + 2)² - lam²; <= 0 inside ellipse lam."""
    x, y = p1 - p2, p1 + p2
    return (d * d - 1) * x * x + ((d * d - 1) * y - lam * d + 2) ** 2 - lam * lam


@dataclass(frozen=True)
class Region12:
    inside: bool
    lam: float | None
    margin: float

    def as_dict(self) -> dict:
        return {"inside": self.inside, "lambdaWitness": self.lam, "margin": self.margin}


def region_1to2(p1: float, p2: float, d: int, tol: float = 1e-12) -> Region12:
    """Exact membership in the union of ellipses over lambda in (0, d].

    The ellipse inequality is the convex quadratic
    (d²-1) lam² - 2 d Y lam + Y² + (d²-1) x² <= 0 with Y = (d²-1) y + 2.
    ``margin`` is its minimum over (0, d], attained at the clipped vertex;
    the witness is the feasible lam closest to d.
    """
    lo_p = -1 / (d * d - 1)
    for v in (p1, p2):
        if not lo_p - 1e-12 <= v <= 1 + 1e-12:
            raise InputError(f"p values must lie in [{lo_p}, 1]")
    x, y = p1 - p2, p1 + p2
    D = d * d - 1
    Y = D * y + 2
    vertex = min(max(d * Y / D, 0.0), float(d))
    margin = ellipse_lhs(p1, p2, vertex, d)
    if margin > tol or (vertex == 0.0 and margin >= -tol):
        return Region12(False, None, margin)
    disc = Y * Y - D * D * x * x
    lam_hi = (d * Y + sqrt(max(disc, 0.0))) / D
    return Region12(True, min(lam_hi, float(d)), margin)


def region_1to2_distance(p1: float, p2: float, d: int) -> float:
    """Signed first-order distance to the region boundary (positive outside).

    margin / |grad_p margin| at the vertex lambda; exact up to curvature terms.
    """
    r = region_1to2(p1, p2, d, tol=0.0)
    D = d * d - 1
    x, y = p1 - p2, p1 + p2
    Y = D * y + 2
    lam = min(max(d * Y / D, 0.0), float(d))
    gx = 2 * D * x
    gy = 2 * D * (D * y - lam * d + 2)
    norm = hypot(gx + gy, gy - gx)
    if norm == 0.0:
        return float("inf") if r.margin > 0 else float("-inf")
    return r.margin / norm


def restricted_region_check(p1: float, p2: float, d: int) -> bool:
    return (1 - p1) * (1 - p2) / d**2 >= ((p1 + p2 - 1) / 2) ** 2 - 1e-15


@dataclass(frozen=True)
class Choi1to2Coeffs:
    alpha: float
    beta: float
    gamma: complex
    eps1: float
    eps2: float
    d: int

    def trace_condition(self) -> float:
        d = self.d
        return d * (self.alpha + self.beta) + 2 * self.gamma.real + d * d * self.eps1 + d * self.eps2

    @property
    def p1(self) -> float:
        return self.d * self.alpha + 2 * self.gamma.real

    @property
    def p2(self) -> float:
        return self.d * self.beta + 2 * self.gamma.real

    @classmethod
    def from_lambda(cls, p1: float, p2: float, lam: float, eps2: float, d: int) -> Choi1to2Coeffs:
        """Coefficients with the given marginals, lam = -d((d²-2) eps1 + d eps2 - 1), Im gamma = 0."""
        eps1 = ((d - lam) / d - d * eps2) / (d * d - 2) if d * d != 2 else 0.0
        re_gamma = (p1 + p2 + d * d * eps1 + d * eps2 - 1) / 2
        return cls((p1 - 2 * re_gamma) / d, (p2 - 2 * re_gamma) / d, complex(re_gamma, 0.0), eps1, eps2, d)


_ID3, _T01, _T02, _T12, _C012, _C021 = (0, 1, 2), (1, 0, 2), (2, 1, 0), (0, 2, 1), (1, 2, 0), (2, 0, 1)


@lru_cache(maxsize=None)
def _transposed_s3(d: int) -> tuple[np.ndarray, ...]:
    return tuple(partial_transpose(perm_rep(s, d), [0], d, 3) for s in (_ID3, _T01, _T02, _T12, _C012, _C021))


def assemble_choi_1to2(c: Choi1to2Coeffs) -> np.ndarray:
    """Σ coefficient · psi(sigma)^Γ over S_3 on factors (0, 1, 2), transpose on the input factor."""
    coeffs = (c.eps1, c.alpha, c.beta, c.eps2, c.gamma, np.conj(c.gamma))
    mats = _transposed_s3(c.d)
    if c.gamma.imag == 0:
        return sum(float(np.real(k)) * m for k, m in zip(coeffs, mats))
    return sum(k * m for k, m in zip(coeffs, mats))


@dataclass(frozen=True)
class Blocks1to2:
    block: np.ndarray
    copies: int
    scalars: dict

    def spectrum(self) -> np.ndarray:
        vals = list(np.linalg.eigvalsh(self.block)) * self.copies
        for value, mult in self.scalars.items():
            vals += [value] * mult
        return np.sort(np.array(vals))

    @property
    def psd(self) -> bool:
        tol = 1e-12
        return bool(np.linalg.eigvalsh(self.block)[0] >= -tol and all(v >= -tol for v, m in self.scalars.items() if m))


def choi_1to2_blocks(c: Choi1to2Coeffs, tol: float = 1e-12) -> Blocks1to2:
    """Block form of the twirled 1 -> 2 Choi matrix.

    On span{w+, w-} ⊗ |i> (w± from sqrt(d)|Omega>_{01}|i> ± sqrt(d)|Omega>_{02}|i>)
    the matrix is the same 2 x 2 hermitian block for every i; the orthogonal
    complement carries eps1 ± eps2 according to the symmetry of factors 1, 2.
    """
    d = c.d
    if abs(c.trace_condition() - 1) > tol:
        raise InputError(f"trace condition violated: {c.trace_condition()}")
    s = c.alpha + c.beta
    g = 2 * c.gamma.real
    off = sqrt(d * d - 1) * ((c.alpha - c.beta) / 2 - 1j * c.gamma.imag)
    block = np.array(
        [
            [(d + 1) * (s + g) / 2 + c.eps1 + c.eps2, off],
            [np.conj(off), (d - 1) * (s - g) / 2 + c.eps1 - c.eps2],
        ]
    )
    scalars = {
        c.eps1 + c.eps2: d * d * (d + 1) // 2 - d,
        c.eps1 - c.eps2: d * d * (d - 1) // 2 - d,
    }
    if c.eps2 == 0:
        scalars = {c.eps1: d**3 - 2 * d}
    return Blocks1to2(block, d, scalars)


class _Found(Exception):
    pass


def lambda_feasibility(p1: float, p2: float, d: int, stop_at: float | None = 0.0) -> tuple[float, float, float]:
    """Numerical PSD feasibility of the lambda-parameterised Choi matrix.

    Maximises the smallest eigenvalue of the assembled d³ x d³ Choi matrix over
    lam in (0, d] and the free eps2 (Im gamma = 0).  Both nested problems are
    concave, so bounded scalar searches suffice.  The search stops early once
    the value reaches ``stop_at`` (pass None for the full maximum).  Returns
    (best min-eig, lam, eps2).
    """
    best = [-np.inf, float(d), 0.0]

    def min_eig_at(lam: float, eps2: float) -> float:
        C = assemble_choi_1to2(Choi1to2Coeffs.from_lambda(p1, p2, lam, eps2, d))
        val = float(np.linalg.eigvalsh(C)[0])
        if val > best[0]:
            best[:] = [val, lam, eps2]
            if stop_at is not None and val >= stop_at:
                raise _Found
        return val

    def inner(lam: float) -> float:
        res = minimize_scalar(lambda e: -min_eig_at(lam, e), bounds=(-1.0, 1.0), method="bounded", options={"xatol": 1e-9})
        return -float(res.fun)

    try:
        inner(float(d))
        minimize_scalar(lambda lam: -inner(lam), bounds=(1e-9, float(d)), method="bounded", options={"xatol": 1e-8})
    except _Found:
        pass
    return best[0], best[1], best[2]
