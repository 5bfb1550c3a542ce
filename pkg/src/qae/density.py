"""The budgeted universal semi-density matrix ``μ_t``, the complexity
operator ``κ_t = -log₂ μ_t`` and the state complexities built on them.

``μ_t`` is the mixture of every halting output of a snapshot weighted by
its semimeasure mass, plus a small multiple of the maximally mixed state::

    μ_t = Σ_ψ m_t(ψ) |ψ><ψ| + Σ_P m_t(P) P / dim P + ε_reg I / N

All logarithms are base 2.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .elementary import ElementaryVector, PureState
from .errors import ValidationError
from .hermitian import DEFAULT_TOL, HermitianOperator, Tolerances, as_operator, op_func
from .machine import EnumerationSnapshot, SemimeasureTable, semimeasure

DEFAULT_EPS_REG = Fraction(1, 2**16)
# |<φ|ψ>|² at or below this counts as an exact zero overlap.
ZERO_OVERLAP = 1e-30


def state_vector(psi, dim: int | None = None) -> np.ndarray:
    """Unit vector from a PureState, ElementaryVector or array."""
    if isinstance(psi, ElementaryVector):
        v = psi.to_numpy()
    else:
        v = np.asarray(getattr(psi, "amplitudes", psi), dtype=complex).reshape(-1)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise ValidationError("the zero vector is not a state")
    if dim is not None and v.shape[0] != dim:
        raise ValidationError(f"state has dimension {v.shape[0]}, expected {dim}")
    return v / nrm


@dataclass(frozen=True, eq=False)
class UniversalApprox:
    dim: int
    mu: HermitianOperator
    kappa: HermitianOperator
    eps_reg: Fraction
    budget: tuple[int, int] | None = None
    table: SemimeasureTable | None = None
    projector_witness: bool = False

    @classmethod
    def from_operator(cls, mu, eps_reg=Fraction(0), tol: Tolerances = DEFAULT_TOL) -> "UniversalApprox":
        """Wrap a given semi-density matrix (no machine behind it)."""
        mu = as_operator(mu, tol)
        _check_semidensity(mu)
        kappa = op_func(mu, lambda x: -np.log2(x), "floor")
        return cls(mu.dim, mu, kappa, Fraction(eps_reg))

    @property
    def trace(self) -> float:
        return self.mu.trace()

    def h_lower(self, psi) -> float:
        return h_lower(self, psi)

    def h_upper(self, psi) -> float:
        return h_upper(self, psi)


def _check_semidensity(mu: HermitianOperator):
    if not mu.is_psd():
        raise ValidationError(f"μ is not PSD (λ_min = {mu.eigenvalues[-1]:.3g})")
    if mu.trace() > 1 + mu.tol.psd_tol:
        raise ValidationError(f"Tr μ = {mu.trace()} exceeds 1")


def output_term(output, mass: float, n: int, witness: bool = False) -> np.ndarray:
    """Contribution ``mass * density(output)``; with ``witness`` a projector
    contributes ``mass * (P/d + (I - P)/N) / 2`` instead."""
    if output.kind == "projector" and witness:
        p = output.projector()
        d = output.rank
        return mass * 0.5 * (p / d + (np.eye(n) - p) / n)
    return mass * output.density()


def build_mu(
    snapshot: EnumerationSnapshot,
    eps_reg=DEFAULT_EPS_REG,
    projector_witness: bool = False,
    tol: Tolerances = DEFAULT_TOL,
) -> UniversalApprox:
    """Assemble ``μ_t`` and ``κ_t`` from a snapshot.

    Terms are accumulated in table order (by shortest program), so the
    floating-point result is reproducible.
    """
    eps_reg = Fraction(eps_reg)
    if eps_reg < 0:
        raise ValidationError("ε_reg must be nonnegative")
    table = semimeasure(snapshot)
    total = table.total_mass() + eps_reg
    if total > 1:
        raise ValidationError(f"total mass {total} exceeds 1")
    n = snapshot.dim
    m = np.zeros((n, n), dtype=complex)
    for row in table:
        m += output_term(row.output, float(row.mass), n, projector_witness)
    m += float(eps_reg) / n * np.eye(n)
    mu = HermitianOperator(m, tol)
    kappa = op_func(mu, lambda x: -np.log2(x), "floor")
    return UniversalApprox(n, mu, kappa, eps_reg, snapshot.budget, table, projector_witness)


def h_lower(ua: UniversalApprox, psi) -> float:
    """``-log₂ <ψ|μ|ψ>``."""
    v = state_vector(psi, ua.dim)
    val = float(np.vdot(v, ua.mu.matrix @ v).real)
    return -math.log2(val) if val > 0 else math.inf


def h_upper(ua: UniversalApprox, psi) -> float:
    """``<ψ|κ|ψ>``."""
    v = state_vector(psi, ua.dim)
    return float(np.vdot(v, ua.kappa.matrix @ v).real)


def h_lower_eigen(ua: UniversalApprox, psi) -> float:
    """Same as :func:`h_lower`, through ``Σ μ_i |<u_i|ψ>|²``."""
    v = state_vector(psi, ua.dim)
    vals, vecs = ua.mu.eigensystem
    return -math.log2(float(np.sum(vals * np.abs(vecs.conj().T @ v) ** 2)))


def kq_t(snapshot: EnumerationSnapshot | SemimeasureTable, psi) -> float:
    """``min l(p) - log₂|<φ_p|ψ>|²`` over the state outputs of a snapshot.

    Only the shortest program of each output can attain the minimum, so
    the scan runs over distinct outputs.
    """
    table = snapshot if isinstance(snapshot, SemimeasureTable) else semimeasure(snapshot)
    v = state_vector(psi, table.condition_dim)
    rows = [r for r in table if r.output.kind == "state"]
    if not rows:
        raise ValidationError("snapshot has no state outputs")
    phis = np.stack([r.output.state.to_numpy() for r in rows])
    phis /= np.linalg.norm(phis, axis=1, keepdims=True)
    ov = np.abs(phis.conj() @ v) ** 2
    lengths = np.array([r.shortest for r in rows], dtype=float)
    ok = ov > ZERO_OVERLAP
    if not np.any(ok):
        return math.inf
    return float(np.min(lengths[ok] - np.log2(ov[ok])))


class EigenProjector(NamedTuple):
    op: HermitianOperator
    k: int
    degenerate_cut: bool


def eigen_projectors(ua: UniversalApprox, k: int, degeneracy_tol: float = 1e-12) -> EigenProjector:
    """Projector ``E_k`` onto the top-k eigenvectors of ``μ``.

    When the cut at k splits a cluster of (numerically) equal eigenvalues,
    the part taken from the cluster is fixed by Gram-Schmidt on the cluster
    projector applied to ``e_1, e_2, ...`` and the result is flagged.
    """
    n = ua.dim
    if not 1 <= k <= n:
        raise ValidationError(f"k = {k} outside 1..{n}")
    vals, vecs = ua.mu.eigensystem
    if k == n or vals[k - 1] - vals[k] >= degeneracy_tol:
        q = vecs[:, :k]
        return EigenProjector(HermitianOperator(q @ q.conj().T, ua.mu.tol), k, False)
    lo = k - 1
    while lo > 0 and vals[lo - 1] - vals[lo] < degeneracy_tol:
        lo -= 1
    hi = k
    while hi + 1 < n and vals[hi] - vals[hi + 1] < degeneracy_tol:
        hi += 1
    cluster = vecs[:, lo : hi + 1]
    qc = cluster @ cluster.conj().T
    chosen: list[np.ndarray] = []
    for j in range(n):
        w = qc[:, j].copy()
        for _ in range(2):
            for c in chosen:
                w -= np.vdot(c, w) * c
        nrm = np.linalg.norm(w)
        if nrm > 1e-8:
            chosen.append(w / nrm)
        if len(chosen) == k - lo:
            break
    q = np.concatenate([vecs[:, :lo], np.stack(chosen, axis=1)], axis=1)
    return EigenProjector(HermitianOperator(q @ q.conj().T, ua.mu.tol), k, True)


def lower_bound_check(ua: UniversalApprox, psi, k: float, lam: float) -> dict:
    """Both implications of the eigenprojector lower-bound theorem for one
    ``(ψ, k, λ)``.  A premise that does not hold makes its check vacuous."""
    if lam <= 1:
        raise ValidationError("λ must exceed 1")
    v = state_vector(psi, ua.dim)
    n = ua.dim
    hu, hl = h_upper(ua, v), h_lower(ua, v)
    out = {"k": k, "lambda": lam, "h_upper": hu, "h_lower": hl}
    idx_u = n if lam * k >= math.log2(n) else min(n, math.ceil(2 ** (lam * k)))
    idx_l = min(n, math.ceil(lam * 2**k))
    eu = eigen_projectors(ua, max(idx_u, 1)).op.expectation(v)
    el = eigen_projectors(ua, max(idx_l, 1)).op.expectation(v)
    out["upper_premise"] = hu < k
    out["upper_value"] = eu
    out["upper_ok"] = (not hu < k) or eu > 1 - 1 / lam - 1e-9
    out["lower_premise"] = hl < k
    out["lower_value"] = el
    out["lower_ok"] = (not hl < k) or el > 2**-k * (1 - 1 / lam) - 1e-9
    return out


@dataclass
class ComplexityReport:
    state_id: str
    H_lower: float
    H_upper: float
    Kq_t: float | None = None
    K_t: int | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("H_lower", "H_upper", "Kq_t"):
            if d[key] is not None and math.isinf(d[key]):
                d[key] = "inf"
        return d


def complexity_report(ua: UniversalApprox, psi, state_id: str = "", snapshot=None) -> ComplexityReport:
    v = state_vector(psi, ua.dim)
    rep = ComplexityReport(state_id, h_lower(ua, v), h_upper(ua, v))
    table = ua.table if snapshot is None else semimeasure(snapshot)
    if table is not None and any(r.output.kind == "state" for r in table):
        rep.Kq_t = kq_t(table, v)
        if isinstance(psi, ElementaryVector):
            from .machine import MachineOutput

            row = table.lookup(MachineOutput.of_state(psi))
            rep.K_t = row.shortest if row else None
    return rep


def gap_example_mu(n: int) -> UniversalApprox:
    """Semi-density with eigenvalue ``1 - 1/N`` on ``e_1``, ``1/N`` on
    ``e_N`` and zero elsewhere: the largest split of unit trace between a
    near-1 and a ``1/N`` eigenvalue."""
    if n < 2:
        raise ValidationError("need N >= 2")
    d = np.zeros(n)
    d[0] = 1 - 1 / n
    d[-1] = 1 / n
    return UniversalApprox.from_operator(np.diag(d))


def gap_example_state(n: int) -> PureState:
    v = np.zeros(n, dtype=complex)
    v[0] = v[-1] = 1
    return PureState(v)


def permutation_unitary(perm: Sequence[int]) -> np.ndarray:
    """Matrix of ``e_i -> e_perm[i]`` (0-based)."""
    n = len(perm)
    u = np.zeros((n, n))
    u[list(perm), list(range(n))] = 1
    return u
