"""Dense linear algebra on (C^d)^{⊗n}.

Basis order is big-endian: factor 0 is the leftmost tensor factor.  Operators
are plain numpy arrays (or scipy sparse arrays where noted); the local
dimension and factor count are passed explicitly.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.stats import ortho_group, unitary_group

from . import config
from .diagrams import (
    Diagram,
    DiagramAlgebraElement,
    Family,
    Kind,
    closure_loop_count,
    enumerate_family,
    from_permutation,
)
from .errors import CapExceeded, DimensionError, InputError
from .young import SymAlgebraElement

PSD_TOL = 1e-9
LANCZOS_TOL = 1e-10
LANCZOS_MAXITER = 100_000


def check_cap(dim: int, cap: int | None = None) -> None:
    limit = config.dense_cap() if cap is None else cap
    if dim > limit:
        raise CapExceeded(f"dimension {dim} exceeds dense cap {limit}")


# tensor representation ----------------------------------------------------------

def _rep_entries(p: Diagram, d: int) -> tuple[np.ndarray, np.ndarray]:
    k = p.k
    nblocks = len(p.blocks)
    values = np.array(list(itertools.product(range(d), repeat=nblocks)), dtype=np.int64).reshape(-1, nblocks)
    rows = np.zeros(len(values), dtype=np.int64)
    cols = np.zeros(len(values), dtype=np.int64)
    for b_idx, block in enumerate(p.blocks):
        for v in block:
            if v > k:
                rows += values[:, b_idx] * d ** (k - (v - k))
            else:
                cols += values[:, b_idx] * d ** (k - v)
    return rows, cols


def tensor_rep(p: Diagram, d: int, sparse: bool = False, cap: int | None = None):
    """psi(p): entry (rows=left column, cols=right column) is 1 iff indices agree in every block."""
    if d < 1:
        raise InputError("d must be positive")
    dim = d**p.k
    check_cap(dim, cap)
    rows, cols = _rep_entries(p, d)
    data = np.ones(len(rows))
    mat = scipy.sparse.coo_array((data, (rows, cols)), shape=(dim, dim))
    if sparse:
        mat.sum_duplicates()
        return mat
    return mat.toarray()


def trace_rep(p: Diagram, d: int) -> int:
    return d ** closure_loop_count(p)


def perm_rep(sigma: Sequence[int], d: int) -> np.ndarray:
    """psi of a 0-based one-line permutation; sends factor i to slot sigma[i]."""
    return tensor_rep(from_permutation([s + 1 for s in sigma]), d)


def sym_rep(x: SymAlgebraElement, d: int) -> np.ndarray:
    dim = d**x.n
    check_cap(dim)
    out = np.zeros((dim, dim))
    for perm, c in x.terms.items():
        out += float(c) * perm_rep(perm, d)
    return out


def algebra_rep(x: DiagramAlgebraElement, d: int) -> np.ndarray:
    """psi extended linearly, with delta specialised to d."""
    dim = d**x.k
    check_cap(dim)
    complex_coeffs = any(isinstance(c, complex) for c in x.terms.values())
    out = np.zeros((dim, dim), dtype=complex if complex_coeffs else float)
    for (diag, power), c in x.terms.items():
        weight = (x.delta if x.delta is not None else Fraction(d)) ** power
        coef = complex(c) if complex_coeffs else float(c)
        out += coef * float(weight) * tensor_rep(diag, d)
    return out


# factor manipulation --------------------------------------------------------------

def _dims(dims: int | Sequence[int], n: int | None = None) -> list[int]:
    if isinstance(dims, (int, np.integer)):
        if n is None:
            raise InputError("give n when dims is a single local dimension")
        return [int(dims)] * n
    return [int(x) for x in dims]


def _num_factors(A: np.ndarray, d: int) -> int:
    n = round(np.log(A.shape[0]) / np.log(d))
    if d**n != A.shape[0] or A.shape[0] != A.shape[1]:
        raise DimensionError(f"shape {A.shape} is not square on (C^{d})^n")
    return n


def partial_trace(A: np.ndarray, subset: Iterable[int], dims: int | Sequence[int], n: int | None = None) -> np.ndarray:
    """Trace out the factors in ``subset`` (0-based)."""
    A = np.asarray(A)
    if isinstance(dims, (int, np.integer)) and n is None:
        n = _num_factors(A, int(dims))
    ds = _dims(dims, n)
    subset = sorted(set(subset))
    if any(i < 0 or i >= len(ds) for i in subset):
        raise InputError(f"bad subset {subset} for {len(ds)} factors")
    total = int(np.prod(ds))
    if A.shape != (total, total):
        raise DimensionError(f"operator shape {A.shape} does not match dims {ds}")
    if not subset:
        return A.copy()
    m = len(ds)
    t = A.reshape(ds + ds)
    for count, i in enumerate(subset):
        axis = i - count
        t = np.trace(t, axis1=axis, axis2=axis + m - count)
    keep = [ds[i] for i in range(m) if i not in subset]
    size = int(np.prod(keep)) if keep else 1
    return t.reshape(size, size)


def partial_transpose(A: np.ndarray, subset: Iterable[int], dims: int | Sequence[int], n: int | None = None) -> np.ndarray:
    A = np.asarray(A)
    if isinstance(dims, (int, np.integer)) and n is None:
        n = _num_factors(A, int(dims))
    ds = _dims(dims, n)
    subset = sorted(set(subset))
    if any(i < 0 or i >= len(ds) for i in subset):
        raise InputError(f"bad subset {subset} for {len(ds)} factors")
    m = len(ds)
    t = A.reshape(ds + ds)
    axes = list(range(2 * m))
    for i in subset:
        axes[i], axes[m + i] = axes[m + i], axes[i]
    total = int(np.prod(ds))
    return t.transpose(axes).reshape(total, total)


def embed(op: np.ndarray, factors: Sequence[int], n: int, d: int) -> np.ndarray:
    """Place ``op`` (acting on len(factors) factors, in that order) into n factors."""
    factors = list(factors)
    m = len(factors)
    if len(set(factors)) != m or any(f < 0 or f >= n for f in factors):
        raise InputError(f"bad factor list {factors} for n={n}")
    check_cap(d**n)
    rest = [i for i in range(n) if i not in factors]
    full = np.kron(op, np.eye(d ** len(rest)))
    order = factors + rest  # current axis j holds factor order[j]
    inv = np.argsort(order)
    t = full.reshape([d] * (2 * n))
    t = t.transpose(list(inv) + [n + i for i in inv])
    return t.reshape(d**n, d**n)


def permute_factors(A: np.ndarray, perm: Sequence[int], d: int) -> np.ndarray:
    """psi(perm) A psi(perm)^T, i.e. factor i of A moved to slot perm[i]."""
    P = perm_rep(perm, d)
    return P @ A @ P.T


# special states --------------------------------------------------------------------

def omega_vector(d: int) -> np.ndarray:
    v = np.zeros(d * d)
    v[[i * d + i for i in range(d)]] = 1 / np.sqrt(d)
    return v


def special_state(kind: str, d: int, lam: float | None = None) -> np.ndarray:
    """Trace-one two-qudit states: omega, mixed, flip, diagonal, isotropic, werner."""
    if d < 2:
        raise InputError("d must be >= 2")
    kind = kind.lower()
    omega = np.outer(omega_vector(d), omega_vector(d))
    mixed = np.eye(d * d) / d**2
    flip = partial_transpose(omega, [1], d, 2) / d
    if kind == "omega":
        return omega
    if kind == "mixed":
        return mixed
    if kind == "flip":
        return flip
    if kind == "diagonal":
        X = np.zeros((d * d, d * d))
        for i in range(d):
            X[i * d + i, i * d + i] = 1 / d
        return X
    if lam is None:
        raise InputError(f"{kind} state needs lam")
    if kind == "isotropic":
        if not -1 / (d * d - 1) - 1e-15 <= lam <= 1 + 1e-15:
            raise InputError(f"isotropic parameter {lam} outside [-1/(d^2-1), 1]")
        return lam * omega + (1 - lam) * mixed
    if kind == "werner":
        if not 1 / (1 - d) - 1e-15 <= lam <= 1 / (1 + d) + 1e-15:
            raise InputError(f"werner parameter {lam} outside [1/(1-d), 1/(1+d)]")
        return lam * flip + (1 - lam) * mixed
    raise InputError(f"unknown state kind {kind!r}")


# channels --------------------------------------------------------------------------

def choi_of_map(phi: Callable[[np.ndarray], np.ndarray], d_in: int) -> np.ndarray:
    """C = Σ_ij |i><j| ⊗ phi(|i><j|) = (id ⊗ phi)(d·omega); the input is factor 0."""
    blocks = []
    for i in range(d_in):
        row = []
        for j in range(d_in):
            E = np.zeros((d_in, d_in))
            E[i, j] = 1
            row.append(np.asarray(phi(E), dtype=complex))
        blocks.append(row)
    return np.block(blocks)


def apply_choi(C: np.ndarray, X: np.ndarray, d_in: int) -> np.ndarray:
    """phi(X) = Tr_in[C (X^T ⊗ I)]."""
    C = np.asarray(C)
    d_out = C.shape[0] // d_in
    if d_in * d_out != C.shape[0] or X.shape != (d_in, d_in):
        raise DimensionError("Choi and input dimensions disagree")
    t = C.reshape(d_in, d_out, d_in, d_out)
    return np.einsum("iajb,ji->ab", t, X.T)


@dataclass(frozen=True)
class CPTPReport:
    psd: bool
    min_eig: float
    trace_residual: float

    @property
    def ok(self) -> bool:
        return self.psd and self.trace_residual < 1e-10

    def as_dict(self) -> dict:
        return {"psd": self.psd, "minEig": self.min_eig, "traceCondResidual": self.trace_residual}


def cptp_check(C: np.ndarray, d_in: int, d_out: int, tol: float = PSD_TOL) -> CPTPReport:
    C = np.asarray(C)
    if C.shape != (d_in * d_out, d_in * d_out):
        raise DimensionError(f"Choi shape {C.shape} is not {d_in}·{d_out} square")
    H = (C + C.conj().T) / 2
    eigs = np.linalg.eigvalsh(H)
    scale = max(1.0, float(np.max(np.abs(eigs))))
    reduced = partial_trace(C, [1], [d_in, d_out])
    residual = float(np.max(np.abs(reduced - np.eye(d_in))))
    herm = float(np.max(np.abs(C - C.conj().T)))
    min_eig = float(eigs[0])
    return CPTPReport(psd=min_eig >= -tol * scale and herm <= tol * scale, min_eig=min_eig, trace_residual=residual)


def fidelity_pure(rho_pure: np.ndarray, sigma: np.ndarray) -> float:
    """Tr[rho sigma] for a rank-one state rho; a vector is taken as the pure state itself."""
    rho_pure = np.asarray(rho_pure)
    if rho_pure.ndim == 1:
        norm = np.vdot(rho_pure, rho_pure).real
        if abs(norm - 1) > 1e-9:
            raise InputError("pure state vector must be normalised")
        return float(np.real(np.vdot(rho_pure, sigma @ rho_pure)))
    tr = np.trace(rho_pure).real
    if abs(tr - 1) > 1e-9 or abs(np.trace(rho_pure @ rho_pure).real - 1) > 1e-8:
        raise InputError("first argument must be a rank-one trace-one state")
    return float(np.real(np.trace(rho_pure @ sigma)))


# spectra ------------------------------------------------------------------------------

def _require_hermitian(A) -> None:
    if scipy.sparse.issparse(A):
        diff = abs(A - A.conj().T).max()
        scale = abs(A).max()
    else:
        diff = np.max(np.abs(A - A.conj().T))
        scale = np.max(np.abs(A))
    if diff > 1e-12 * max(scale, 1.0) + 1e-14:
        raise InputError("operator is not hermitian")


def _top_pair(A, cap: int | None):
    _require_hermitian(A)
    dim = A.shape[0]
    limit = config.dense_cap() if cap is None else cap
    if dim <= limit:
        dense = A.toarray() if scipy.sparse.issparse(A) else np.asarray(A)
        w, v = scipy.linalg.eigh(dense, subset_by_index=[dim - 1, dim - 1])
        if w.size == 0:
            # the subset drivers can return nothing on heavily degenerate spectra
            w, v = scipy.linalg.eigh(dense)
            return float(w[-1]), v[:, -1]
        return float(w[0]), v[:, 0]
    w, v = scipy.sparse.linalg.eigsh(A, k=1, which="LA", tol=LANCZOS_TOL, maxiter=LANCZOS_MAXITER)
    return float(w[0]), v[:, 0]


def lambda_max(A, cap: int | None = None) -> float:
    """Largest eigenvalue: dense eigh up to the cap, Lanczos (ARPACK) above it."""
    return _top_pair(A, cap)[0]


def top_eigvec(A, cap: int | None = None) -> np.ndarray:
    return _top_pair(A, cap)[1]


def top_eigenspace(A: np.ndarray, rel_tol: float = 1e-9) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and an orthonormal basis of its eigenspace."""
    _require_hermitian(A)
    w, v = np.linalg.eigh(A)
    scale = max(1.0, abs(w[-1]))
    mask = w >= w[-1] - rel_tol * scale
    return float(w[-1]), v[:, mask]


def min_eig(A: np.ndarray) -> float:
    A = np.asarray(A)
    return float(np.linalg.eigvalsh((A + A.conj().T) / 2)[0])


# Haar sampling --------------------------------------------------------------------------

def haar_unitary(d: int, seed) -> np.ndarray:
    return unitary_group.rvs(d, random_state=np.random.default_rng(seed)) if d > 1 else np.exp(
        2j * np.pi * np.random.default_rng(seed).random()
    ).reshape(1, 1)


def haar_orthogonal(d: int, seed) -> np.ndarray:
    if d == 1:
        return np.array([[1.0 if np.random.default_rng(seed).random() < 0.5 else -1.0]])
    return ortho_group.rvs(d, random_state=np.random.default_rng(seed))


def haar_pure_state(d: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def diagonal_unitary_permutation(d: int, seed) -> np.ndarray:
    """Random element of the monomial unitary group (phases times a permutation)."""
    rng = np.random.default_rng(seed)
    phases = np.exp(2j * np.pi * rng.random(d))
    P = np.eye(d)[rng.permutation(d)]
    return P @ np.diag(phases)


def tensor_power(M: np.ndarray, n: int) -> np.ndarray:
    out = np.ones((1, 1), dtype=M.dtype)
    for _ in range(n):
        out = np.kron(out, M)
    return out


# Schur-Weyl commutant checks ------------------------------------------------------------

@dataclass(frozen=True)
class CommutantReport:
    family: str
    n: int
    d: int
    diagram_rank: int
    group_rank: int
    max_commutator: float
    samples: int

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "d": self.d,
            "diagramRank": self.diagram_rank,
            "groupRank": self.group_rank,
            "maxCommutator": self.max_commutator,
            "samples": self.samples,
        }


def _rank(vectors: list[np.ndarray]) -> int:
    if not vectors:
        return 0
    M = np.array([v.ravel() for v in vectors])
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > 1e-9 * max(1.0, s[0])))


def _dual_group_sampler(family: Family, d: int) -> tuple[Callable[[int], np.ndarray], list[np.ndarray] | None]:
    kind = family.kind
    if kind is Kind.SYMMETRIC:
        return (lambda s: haar_unitary(d, s)), None
    if kind is Kind.BRAUER:
        return (lambda s: haar_orthogonal(d, s)), None
    if kind is Kind.UNIFORM:
        return (lambda s: diagonal_unitary_permutation(d, s)), None
    if kind is Kind.PARTITION:
        mats = [np.eye(d)[list(p)] for p in itertools.permutations(range(d))]
        return (lambda s: mats[s % len(mats)]), mats
    raise InputError("commutant check covers symmetric, brauer, uniform and partition families")


def commutant_dimension(family: Family, n: int, d: int, samples: int | None = None, seed: int = 0) -> CommutantReport:
    """Ranks of span{psi(p)} and span{g^{⊗n}} plus the largest commutator norm.

    The group span is grown until the rank is stable over several batches when
    ``samples`` is None.
    """
    dim = d**n
    check_cap(dim * dim)
    diagrams = enumerate_family(family, n)
    reps = [tensor_rep(p, d) for p in diagrams]
    diagram_rank = _rank(reps)
    sampler, finite = _dual_group_sampler(family, d)
    rng = np.random.default_rng(seed)
    group: list[np.ndarray] = []
    if finite is not None:
        group = [tensor_power(g, n) for g in finite]
    elif samples is not None:
        group = [tensor_power(sampler(int(s)), n) for s in rng.integers(0, 2**63, size=samples)]
    else:
        rank, stable = 0, 0
        while stable < 3 and len(group) < 4 * dim * dim:
            batch = max(8, dim)
            group += [tensor_power(sampler(int(s)), n) for s in rng.integers(0, 2**63, size=batch)]
            new_rank = _rank(group)
            stable = stable + 1 if new_rank == rank else 0
            rank = new_rank
    group_rank = _rank(group)
    worst = 0.0
    for g in group[:20]:
        for r in reps:
            worst = max(worst, float(np.max(np.abs(r @ g - g @ r))))
    return CommutantReport(family.kind.value, n, d, diagram_rank, group_rank, worst, len(group))


# serialization ---------------------------------------------------------------------------

def _num(x: float):
    if float(x).is_integer():
        return int(x)
    return float(x)


def to_coo(A, d: int, n: int, tol: float = 0.0) -> dict:
    """JSON-ready coordinate form, entries sorted row-major."""
    if scipy.sparse.issparse(A):
        coo = scipy.sparse.coo_array(A)
        rows, cols, vals = coo.row, coo.col, coo.data
    else:
        A = np.asarray(A)
        rows, cols = np.nonzero(np.abs(A) > tol)
        vals = A[rows, cols]
    order = np.lexsort((cols, rows))
    entries = []
    for idx in order:
        v = complex(vals[idx])
        if abs(v) <= tol:
            continue
        entries.append([int(rows[idx]), int(cols[idx]), _num(v.real), _num(v.imag)])
    return {"d": d, "n": n, "format": "coo", "entries": entries}


def from_coo(obj: dict | str) -> np.ndarray:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if obj.get("format") != "coo":
        raise InputError("expected format 'coo'")
    dim = int(obj["d"]) ** int(obj["n"])
    A = np.zeros((dim, dim), dtype=complex)
    for r, c, re, im in obj["entries"]:
        A[r, c] += complex(re, im)
    return A
