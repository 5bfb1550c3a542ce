"""Universal randomness tests ``T″_ρ = ρ^{-1/2} μ ρ^{-1/2}`` relative to a
density ρ, their coordinate expression, and projector (Martin-Löf style)
tests dominated by them.

A state with weight outside the support of ρ gets the value ``+inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .density import UniversalApprox, state_vector
from .entropy import as_density
from .errors import DomainError, ValidationError
from .hermitian import HermitianOperator, loewner_leq, op_func
from .machine import SemimeasureTable


@dataclass(frozen=True, eq=False)
class TestOperator:
    op: HermitianOperator
    support: HermitianOperator
    infinite_off_support: bool
    rho: HermitianOperator
    mu: HermitianOperator

    def trace_rho(self) -> float:
        """``Tr(T″ ρ)``; at most ``Tr μ`` by cyclicity."""
        return float(np.trace(self.op.matrix @ self.rho.matrix).real)

    def spectrum(self) -> np.ndarray:
        return self.op.eigenvalues


@dataclass(frozen=True)
class TestValue:
    value: float

    @property
    def deficiency(self) -> float:
        if self.value == 0:
            return -math.inf
        return math.log2(self.value)


def build_test(ua: UniversalApprox, rho) -> TestOperator:
    """``ρ^{-1/2} μ ρ^{-1/2}`` on the support of ρ, zero on its kernel."""
    rho = as_density(rho)
    if rho.dim != ua.dim:
        raise ValidationError(f"dimension mismatch: {rho.dim} vs {ua.dim}")
    r = op_func(rho, lambda x: x**-0.5, "infinity")
    m = r.op.matrix @ ua.mu.matrix @ r.op.matrix
    op = HermitianOperator(0.5 * (m + m.conj().T), rho.tol)
    return TestOperator(op, r.support, r.infinite_off_support, rho, ua.mu)


def _off_support_weight(support: np.ndarray, v: np.ndarray) -> float:
    w = v - support @ v
    return float(np.vdot(w, w).real)


def evaluate_test(t: TestOperator, psi) -> TestValue:
    v = state_vector(psi, t.op.dim)
    if _off_support_weight(t.support.matrix, v) > t.rho.tol.psd_tol:
        return TestValue(math.inf)
    return TestValue(max(0.0, float(np.vdot(v, t.op.matrix @ v).real)))


def coordinate_value(mu, rho, psi, tol: float = 1e-10) -> TestValue:
    """``Σ_ij m_ij (p_i p_j)^{-1/2} c_i* c_j`` in the eigenbasis of ρ.

    Independent of :func:`build_test`: LAPACK eigenvectors and an explicit
    double sum instead of operator products.
    """
    mu = np.asarray(getattr(mu, "matrix", mu))
    rho = np.asarray(getattr(rho, "matrix", rho))
    p, vecs = np.linalg.eigh(0.5 * (rho + rho.conj().T))
    v = state_vector(psi, rho.shape[0])
    c = vecs.conj().T @ v
    on = p > tol
    if float(np.sum(np.abs(c[~on]) ** 2)) > tol:
        return TestValue(math.inf)
    m = vecs.conj().T @ mu @ vecs
    total = 0j
    idx = np.flatnonzero(on)
    for i in idx:
        for j in idx:
            total += m[i, j] * c[i].conjugate() * c[j] / math.sqrt(p[i] * p[j])
    return TestValue(max(0.0, total.real))


@dataclass
class MartinLofReport:
    deficiency: float
    universal_deficiency: float
    constant: float
    ok: bool


def martin_lof_term(K: int, projector, rho, psi) -> float:
    """Deficiency ``log₂(2^{-K} <ψ|P|ψ> / Tr(Pρ))`` of the projector test."""
    p = np.asarray(getattr(projector, "matrix", projector))
    rho = np.asarray(getattr(rho, "matrix", rho))
    tr = float(np.trace(p @ rho).real)
    if tr <= 1e-10:
        raise DomainError("Tr(Pρ) vanishes; the projector test is undefined")
    v = state_vector(psi, p.shape[0])
    val = 2.0**-K * float(np.vdot(v, p @ v).real) / tr
    return math.log2(val) if val > 1e-300 else -math.inf


def test_domination_constant(ua: UniversalApprox, rho, f) -> float:
    """Smallest ``c`` with ``ρ^{1/2} F ρ^{1/2} ≤ 2^c μ``; then
    ``<ψ|F|ψ> ≤ 2^c <ψ|T″|ψ>`` for ψ in the support of ρ."""
    rho = as_density(rho)
    half = op_func(rho, np.sqrt, "zero").matrix
    inv = op_func(ua.mu, lambda x: x**-0.5, None).matrix
    m = inv @ half @ np.asarray(f) @ half @ inv
    lam = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[-1])
    return math.log2(lam) if lam > 0 else -math.inf


def martin_lof_check(ua: UniversalApprox, K: int, projector, rho, psi) -> MartinLofReport:
    p = np.asarray(getattr(projector, "matrix", projector))
    tr = float(np.trace(p @ np.asarray(getattr(rho, "matrix", rho))).real)
    d = martin_lof_term(K, p, rho, psi)
    c = test_domination_constant(ua, rho, 2.0**-K * p / tr)
    u = evaluate_test(build_test(ua, rho), psi).deficiency
    return MartinLofReport(d, u, c, d <= u + c + 1e-9)


def sum_form_test(table: SemimeasureTable, rho, tol: float = 1e-10) -> np.ndarray:
    """``T′ = Σ m(φ) |φ><φ| / <φ|ρ|φ>`` over the state outputs of a table."""
    rho = np.asarray(getattr(rho, "matrix", rho))
    n = rho.shape[0]
    t = np.zeros((n, n), dtype=complex)
    for row in table:
        if row.output.kind != "state":
            continue
        phi = state_vector(row.output.state)
        w = float(np.vdot(phi, rho @ phi).real)
        if w > tol:
            t += float(row.mass) * np.outer(phi, phi.conj()) / w
    return t


def sum_form_domination(ua: UniversalApprox, rho) -> tuple[float, bool]:
    """``T′ ≤ c T″`` with ``c = N W / ε_reg``, W the snapshot mass.

    ``ρ^{1/2} T′ ρ^{1/2}`` has trace at most W, hence lies below
    ``W I ≤ (N W / ε_reg) μ``.  ρ must be invertible.
    """
    if ua.table is None or ua.eps_reg <= 0:
        raise ValidationError("needs a snapshot-built μ with a positive regularizer")
    rho = as_density(rho)
    if rho.eigenvalues[-1] <= rho.tol.psd_tol:
        raise ValidationError("ρ must be invertible")
    w = float(ua.table.total_mass())
    c = ua.dim * w / float(ua.eps_reg)
    tp = sum_form_test(ua.table, rho)
    tpp = build_test(ua, rho).op.matrix
    scale = max(1.0, float(np.max(np.abs(c * tpp))))
    return c, loewner_leq(tp, c * tpp, 1e-9 * scale)
