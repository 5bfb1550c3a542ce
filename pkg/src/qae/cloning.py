"""Symmetric subspaces, Haar twirls, cloning complexity bounds and the
unevenness ``u(A) = ‖A†A‖ / Tr A†A`` of symmetric matrices."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .density import UniversalApprox, h_upper
from .entropy import small_subspace_upper_bounds
from .errors import ResourceError, ValidationError
from .hermitian import DEFAULT_TOL, HermitianOperator, eig
from .machine import decode, encode_proj, encode_uniform_sum

DEFAULT_DIM_CAP = 2**12


def _check_cap(n: int, m: int, cap: int):
    if n < 1 or m < 1:
        raise ValidationError("N and m must be positive")
    if n**m > cap:
        raise ResourceError(f"N^m = {n**m} exceeds the cap {cap}")


@dataclass(frozen=True, eq=False)
class SymmetricSubspace:
    n: int
    m: int
    projector: HermitianOperator
    dim: int


def permutation_operator(n: int, m: int, perm) -> np.ndarray:
    """Operator permuting the m tensor factors of ``H_N^{⊗m}``."""
    digits = np.array(list(itertools.product(range(n), repeat=m)))
    weights = n ** np.arange(m - 1, -1, -1)
    src = digits @ weights
    dst = digits[:, list(perm)] @ weights
    out = np.zeros((n**m, n**m))
    out[dst, src] = 1.0
    return out


def symmetric_projector(n: int, m: int, cap: int = DEFAULT_DIM_CAP) -> SymmetricSubspace:
    """``(1/m!) Σ_π W_π`` with dimension ``binom(m+N-1, m)``."""
    _check_cap(n, m, cap)
    total = np.zeros((n**m, n**m))
    for perm in itertools.permutations(range(m)):
        total += permutation_operator(n, m, perm)
    p = total / math.factorial(m)
    return SymmetricSubspace(n, m, HermitianOperator(p), math.comb(m + n - 1, m))


def haar_states(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Rows are Haar-uniform unit vectors in ``C^n``."""
    z = rng.standard_normal((size, n)) + 1j * rng.standard_normal((size, n))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def tensor_power(states: np.ndarray, m: int) -> np.ndarray:
    """Row-wise ``ψ^{⊗m}`` for a stack of states."""
    out = states
    for _ in range(m - 1):
        out = np.einsum("si,sj->sij", out, states).reshape(states.shape[0], -1)
    return out


@dataclass(frozen=True)
class TwirlResult:
    mean: np.ndarray
    stderr: np.ndarray
    samples: int


def twirl_average(n: int, m: int, samples: int, seed: int, cap: int = DEFAULT_DIM_CAP, batch: int = 4096) -> TwirlResult:
    """Monte-Carlo mean of ``|ψ><ψ|^{⊗m}`` over Haar ψ with per-entry
    standard errors."""
    _check_cap(n, m, cap)
    if samples < 2:
        raise ValidationError("need at least two samples")
    rng = np.random.default_rng(seed)
    d = n**m
    s1 = np.zeros((d, d), dtype=complex)
    s2 = np.zeros((d, d))
    done = 0
    while done < samples:
        k = min(batch, samples - done)
        v = tensor_power(haar_states(n, k, rng), m)
        outer = np.einsum("si,sj->sij", v, v.conj())
        s1 += outer.sum(axis=0)
        s2 += (np.abs(outer) ** 2).sum(axis=0)
        done += k
    mean = s1 / samples
    var = np.maximum(s2 / samples - np.abs(mean) ** 2, 0.0) * samples / (samples - 1)
    return TwirlResult(mean, np.sqrt(var / samples), samples)


def twirl_error_slope(n: int, m: int, sizes, seed: int) -> tuple[float, list[float]]:
    """Log-log slope of ``‖mean - P_S/dim‖_F`` against the sample count."""
    sym = symmetric_projector(n, m)
    target = sym.projector.matrix / sym.dim
    errs = []
    for i, k in enumerate(sizes):
        r = twirl_average(n, m, k, seed + i)
        errs.append(float(np.linalg.norm(r.mean - target)))
    slope = float(np.polyfit(np.log10(sizes), np.log10(errs), 1)[0])
    return slope, errs


def symmetric_projector_program(n: int, m: int) -> str:
    """PROJ over the unnormalized symmetrizations of every multiset of m
    basis indices: a program whose output is ``P_S``."""
    parts = []
    for combo in itertools.combinations_with_replacement(range(n), m):
        idx = sorted({sum(c * n ** (m - 1 - j) for j, c in enumerate(p)) + 1 for p in itertools.permutations(combo)})
        parts.append(encode_uniform_sum(idx))
    return encode_proj(parts)


@dataclass
class CloningReport:
    n: int
    m: int
    binom: int
    K_PS: int
    upper_bound: float
    upper_constant: float
    max_h_upper: float
    upper_ok: bool
    mean_mu: float
    stderr_mu: float
    lower_estimate: float
    max_h_lower: float
    lower_ok: bool


def cloning_bounds(ua: UniversalApprox, n: int, m: int, samples: int, seed: int, margin: float = 0.1) -> CloningReport:
    """Upper: ``H̄(ψ^{⊗m}) ≤ K_t(P_S) + log binom + c`` on sampled ψ.
    Lower: ``-log₂ E[<ψ^{⊗m}|μ|ψ^{⊗m}>] ≥ log binom - margin``, the mean
    taken three standard errors high."""
    if ua.dim != n**m:
        raise ValidationError(f"μ has dimension {ua.dim}, expected {n**m}")
    ps = decode(symmetric_projector_program(n, m), n**m)
    if ua.table is None or ua.table.lookup(ps) is None:
        raise ValidationError("P_S is not an enumerated output")
    binom = math.comb(m + n - 1, m)
    rng = np.random.default_rng(seed)
    vs = tensor_power(haar_states(n, samples, rng), m)
    rep0 = small_subspace_upper_bounds(ua, ps, vs[0])
    hu = [h_upper(ua, v) for v in vs]
    vals = np.einsum("si,ij,sj->s", vs.conj(), ua.mu.matrix, vs).real
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    lower = -math.log2(mean + 3 * se)
    bound = rep0.K + math.log2(binom)
    return CloningReport(
        n=n, m=m, binom=binom, K_PS=rep0.K,
        upper_bound=bound, upper_constant=rep0.constant,
        max_h_upper=max(hu), upper_ok=max(hu) <= bound + rep0.constant + 1e-9,
        mean_mu=mean, stderr_mu=se, lower_estimate=lower,
        max_h_lower=float(-np.log2(vals.min())),
        lower_ok=lower >= math.log2(binom) - margin,
    )


def cloning_gap(ua1: UniversalApprox, ua2: UniversalApprox, samples: int, seed: int) -> dict:
    """Largest ``H̄(ψ⊗ψ) - H̄(ψ)`` over sampled ψ."""
    n = ua1.dim
    rng = np.random.default_rng(seed)
    states = haar_states(n, samples, rng)
    gaps = [h_upper(ua2, np.kron(s, s)) - h_upper(ua1, s) for s in states]
    i = int(np.argmax(gaps))
    return {"max_gap": gaps[i], "h_upper_single": h_upper(ua1, states[i]), "h_upper_clone": h_upper(ua2, np.kron(states[i], states[i]))}


# -- unevenness --

@dataclass(frozen=True, eq=False)
class UnevennessResult:
    matrix: np.ndarray
    u: float


def _check_symmetric(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("expected a square matrix")
    if np.max(np.abs(a - a.T)) > DEFAULT_TOL.herm_tol * max(1.0, np.max(np.abs(a))):
        raise ValidationError("matrix is not symmetric")
    if not np.any(a):
        raise ValidationError("the zero matrix has no unevenness")
    return 0.5 * (a + a.T)


def unevenness(a) -> UnevennessResult:
    """Largest eigenvalue of ``A†A`` over its trace."""
    a = _check_symmetric(a)
    vals, _ = eig(a.conj().T @ a)
    return UnevennessResult(a, float(vals[0] / np.sum(vals)))


def takagi(a, perturb: float = 1e-10, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """``A ≈ V diag(s) Vᵀ`` with V unitary and ``s`` descending.

    Eigenvectors X of ``A†A`` satisfy ``A X_i = s_i e^{iθ_i} conj(X_i)``
    when the singular values are simple; then ``V_i = conj(X_i) e^{iθ_i/2}``.
    A symmetric perturbation of size ``perturb`` separates degenerate
    singular values first.
    """
    a = _check_symmetric(a)
    n = a.shape[0]
    if perturb:
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        a = a + perturb * np.linalg.norm(a) * (g + g.T) / 2
    vals, x = eig(a.conj().T @ a)
    s = np.sqrt(np.clip(vals, 0, None))
    v = np.empty_like(x)
    for i in range(n):
        xi = x[:, i]
        if s[i] > 1e-14 * max(s[0], 1e-300):
            theta = np.angle(xi @ (a @ xi))
        else:
            theta = 0.0
        v[:, i] = xi.conj() * np.exp(0.5j * theta)
    return v, s


def product_overlap(a, phi) -> float:
    """``|<α|φ⊗φ>|²`` for ``α = vec(A)``: ``|φᵀ conj(A) φ|²``."""
    phi = np.asarray(phi, dtype=complex)
    return float(abs(phi @ np.asarray(a).conj() @ phi) ** 2)


def _refine(b: np.ndarray, x: np.ndarray, iters: int) -> np.ndarray:
    # fixed point of x -> conj(B x); two steps are power iteration on B†B
    for _ in range(iters):
        x = np.conj(x @ b.T)
        x /= np.linalg.norm(x, axis=-1, keepdims=True)
    return x


@dataclass
class OverlapReport:
    u: float
    search_max: float
    witness_value: float
    upper_ok: bool
    witness_ok: bool


def overlap_sup_check(a, samples: int, seed: int, refine: int = 200, search_tol: float = 1e-6) -> OverlapReport:
    """Compare the best product overlap found by sampling plus local
    refinement with ``u(A)``, and the Takagi witness with ``u(A)``."""
    a = _check_symmetric(a)
    a = a / np.linalg.norm(a)
    u = unevenness(a).u
    rng = np.random.default_rng(seed)
    phis = haar_states(a.shape[0], samples, rng)
    b = a.conj()
    vals = np.abs(np.einsum("si,ij,sj->s", phis, b, phis)) ** 2
    top = phis[np.argsort(-vals)[: min(samples, 16)]]
    refined = _refine(b, top, refine)
    rvals = np.abs(np.einsum("si,ij,sj->s", refined, b, refined)) ** 2
    best = float(max(vals.max(), rvals.max()))
    v, _ = takagi(a)
    w = product_overlap(a, v[:, 0])
    return OverlapReport(u, best, w, best <= u + 1e-9, abs(w - u) <= 1e-8)


def random_symmetric(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.T) / 2


def subspace_unevenness(basis: np.ndarray, restarts: int = 32, iters: int = 300, seed: int = 0) -> np.ndarray:
    """Lower estimate of ``u(F) = max_x Σ_k |xᵀ A_k x|²`` for a batch of
    subspaces with Frobenius-orthonormal bases ``basis[t, k]``.

    Alternates between the best combination ``B = Σ c_k A_k`` for fixed x
    and the best x for fixed B (top eigenvector of B†B).  The best value
    seen is returned, so the estimate never exceeds ``u(F)``.
    """
    t, d, n, _ = basis.shape
    rng = np.random.default_rng(seed)
    x = haar_states(n, t * restarts, rng).reshape(t, restarts, n)
    best = np.zeros((t, restarts))
    active = np.arange(t)
    for _ in range(iters):
        bs, xs = basis[active], x[active]
        ax = np.einsum("tkij,trj->trki", bs, xs)
        a = np.einsum("trki,tri->trk", ax, xs)
        val = np.sum(np.abs(a) ** 2, axis=-1)
        gain = np.max(val - best[active], axis=1)
        best[active] = np.maximum(best[active], val)
        c = a.conj() / np.maximum(np.linalg.norm(a, axis=-1, keepdims=True), 1e-300)
        b = np.einsum("trk,tkij->trij", c, bs)
        _, vecs = np.linalg.eigh(np.matmul(np.conj(np.swapaxes(b, -1, -2)), b))
        x[active] = vecs[..., -1]
        active = active[gain >= 1e-12]
        if active.size == 0:
            break
    return best.max(axis=1)


def random_subspaces(n: int, d: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Frobenius-orthonormal bases of random d-dimensional subspaces of
    complex symmetric N×N matrices."""
    iu = np.triu_indices(n)
    npr = len(iu[0])
    # orthonormal coordinates on the symmetric matrices
    coords = np.zeros((npr, n, n))
    for k, (i, j) in enumerate(zip(*iu)):
        if i == j:
            coords[k, i, i] = 1.0
        else:
            coords[k, i, j] = coords[k, j, i] = 1 / math.sqrt(2)
    g = rng.standard_normal((trials, npr, d)) + 1j * rng.standard_normal((trials, npr, d))
    q, _ = np.linalg.qr(g)
    return np.einsum("tpk,pij->tkij", q, coords)


@dataclass
class AlgebraicBoundReport:
    n: int
    d: int
    trials: int
    bound: float
    empirical_min: float
    ok: bool


def algebraic_bound_check(n: int, d: int, trials: int, seed: int, restarts: int = 32, batch: int = 2000) -> AlgebraicBoundReport:
    """``u(F) ≥ d / N′`` with ``N′ = N(N+1)/2`` over random subspaces F."""
    npr = n * (n + 1) // 2
    if not 0 < d < npr:
        raise ValidationError(f"d must satisfy 0 < d < {npr}")
    if n > 4:
        raise ValidationError("brute-force regime needs N <= 4")
    rng = np.random.default_rng(seed)
    mins = []
    done = 0
    while done < trials:
        k = min(batch, trials - done)
        basis = random_subspaces(n, d, k, rng)
        mins.append(subspace_unevenness(basis, restarts, seed=seed + done).min())
        done += k
    emp = float(min(mins))
    bound = d / npr
    return AlgebraicBoundReport(n, d, trials, bound, emp, emp >= bound - 1e-6)
