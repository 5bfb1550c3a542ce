"""Entropies and the complexity theorems that compare them with ``μ`` and
``κ``: the entropy/average-complexity sandwich, upper bounds from small
subspaces, subadditivity, monotonicity and the approximation lemma.

Every "up to a constant" statement is checked with a constant assembled
from the grammar (program lengths, TENSOR overhead) and the regularizer
masses; nothing is fitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .density import UniversalApprox, h_lower, h_upper, state_vector
from .elementary import ElementaryVector
from .errors import ValidationError
from .hermitian import DEFAULT_TOL, HermitianOperator, as_operator, loewner_leq, op_func, partial_trace, tensor
from .machine import (
    EnumerationSnapshot,
    MachineOutput,
    decode,
    encode_tensor,
    nontrivial_divisors,
    semimeasure,
    tensor_overhead,
)

SANDWICH_SLACK = 1e-6


def as_density(rho, semi: bool = False) -> HermitianOperator:
    """Validate a density (trace 1) or semi-density (trace <= 1) matrix."""
    op = as_operator(rho)
    if not op.is_psd():
        raise ValidationError(f"not PSD (λ_min = {op.eigenvalues[-1]:.3g})")
    tr = op.trace()
    if semi:
        if tr > 1 + 1e-10:
            raise ValidationError(f"semi-density has trace {tr} > 1")
    elif abs(tr - 1) > 1e-10:
        raise ValidationError(f"density has trace {tr}, expected 1")
    return op


def _xlogx(vals: np.ndarray) -> float:
    v = vals[vals > 0]
    return float(np.sum(v * np.log2(v)))


def von_neumann_entropy(rho) -> float:
    """``-Tr ρ log₂ ρ`` with ``0 log 0 = 0``."""
    op = as_density(rho)
    return max(0.0, -_xlogx(np.clip(op.eigenvalues, 0, None)))


def relative_entropy(rho, sigma) -> float:
    """``Tr ρ (log₂ ρ - log₂ σ)``, or ``inf`` when ρ has weight above
    ``psd_tol`` outside the support of σ."""
    r = as_density(rho, semi=True)
    s = as_density(sigma, semi=True)
    if r.dim != s.dim:
        raise ValidationError(f"dimension mismatch: {r.dim} vs {s.dim}")
    tol = s.tol.psd_tol
    svals, svecs = s.eigensystem
    ker = svecs[:, svals <= tol]
    if ker.shape[1] and float(np.trace(ker.conj().T @ r.matrix @ ker).real) > tol:
        return math.inf
    log_s = op_func(s, np.log2, "zero")
    tr_r_log_s = float(np.trace(r.matrix @ log_s.matrix).real)
    return _xlogx(np.clip(r.eigenvalues, 0, None)) - tr_r_log_s


def avg_complexity(ua: UniversalApprox, rho) -> float:
    """``Tr ρ κ``."""
    return float(np.trace(as_operator(rho).matrix @ ua.kappa.matrix).real)


@dataclass
class SandwichReport:
    S: float
    avg_complexity: float
    weight: float
    trace_mu: float
    c_left: float  # S(ρ ‖ μ/Tr μ), must be >= 0
    c_right: float  # Tr ρκ - S(ρ), must be <= -log₂ w
    left_ok: bool
    right_ok: bool

    @property
    def ok(self) -> bool:
        return self.left_ok and self.right_ok


def entropy_complexity_sandwich(ua: UniversalApprox, rho, w: float, slack: float = SANDWICH_SLACK) -> SandwichReport:
    """Check ``S(ρ) - c ≤ Tr ρκ ≤ S(ρ) + c'`` with ``c = -log₂ Tr μ`` and
    ``c' = -log₂ w`` for a density ρ with ``w ρ ≤ μ``.

    The left side follows from ``S(ρ ‖ μ / Tr μ) ≥ 0``; the right side from
    ``log(w ρ) ≤ log μ``.
    """
    rho = as_density(rho)
    if not w > 0:
        raise ValidationError("weight must be positive")
    if not loewner_leq(w * rho.matrix, ua.mu, 1e-9):
        raise ValidationError("domination w·ρ ≤ μ fails")
    s = von_neumann_entropy(rho)
    avg = avg_complexity(ua, rho)
    tr = ua.trace
    gap = avg - s
    c_left = gap + math.log2(tr)
    return SandwichReport(
        S=s,
        avg_complexity=avg,
        weight=w,
        trace_mu=tr,
        c_left=c_left,
        c_right=gap,
        left_ok=s <= avg - math.log2(tr) + slack and c_left >= -1e-9,
        right_ok=avg <= s - math.log2(w) + slack,
    )


def enumerated_witnesses(ua: UniversalApprox) -> list[tuple[str, np.ndarray, float]]:
    """Every semi-density the construction of ``μ`` dominates, with its
    weight: each table output, the regularizer ``I/N`` and ``μ/Tr μ``."""
    out = []
    n = ua.dim
    if ua.table is not None:
        for row in ua.table:
            rho = row.output.density()
            if row.output.kind == "projector" and ua.projector_witness:
                p = row.output.projector()
                rho = 0.5 * (p / row.output.rank + (np.eye(n) - p) / n)
            out.append((row.programs[0], rho, float(row.mass)))
    if ua.eps_reg > 0:
        out.append(("regularizer", np.eye(n) / n, float(ua.eps_reg)))
    out.append(("mu/Tr mu", ua.mu.matrix / ua.trace, ua.trace))
    return out


# -- small subspaces --

def domination_constant(ua: UniversalApprox, sigma, weight: float) -> float:
    """Smallest ``c >= 0`` with ``weight·σ ≤ 2^c μ``."""
    inv_sqrt = op_func(ua.mu, lambda x: x**-0.5, None)
    m = inv_sqrt.matrix @ (weight * np.asarray(sigma)) @ inv_sqrt.matrix
    lam = float(np.linalg.eigvalsh(0.5 * (m + m.conj().T))[-1])
    return max(0.0, math.log2(lam)) if lam > 0 else 0.0


@dataclass
class SmallSubspaceReport:
    K: int
    d: int
    overlap: float
    h_lower_bound: float
    h_upper_bound: float
    h_lower: float
    h_upper: float
    constant: float
    lower_ok: bool
    upper_ok: bool


def small_subspace_bounds(K: int, d: int, overlap: float, n: int) -> tuple[float, float]:
    """``K + log d - log<P>`` and ``K + log d + (1 - <P>) log N``."""
    first = K + math.log2(d) - math.log2(overlap) if overlap > 0 else math.inf
    second = K + math.log2(d) + (1 - overlap) * math.log2(n)
    return first, second


def small_subspace_upper_bounds(ua: UniversalApprox, projector: MachineOutput, psi) -> SmallSubspaceReport:
    """Upper bounds on both complexities from an enumerated projector.

    The constant is the measured domination constant of the witness
    ``2^{-K}·(P/d + (I - P)/N)/2`` plus the one bit lost to the factor 1/2.
    """
    if ua.table is None:
        raise ValidationError("μ was not built from a snapshot")
    row = ua.table.lookup(projector) if projector.kind == "projector" else None
    if row is None:
        raise ValidationError("projector is not an enumerated output")
    n = ua.dim
    p = projector.projector()
    d = projector.rank
    v = state_vector(psi, n)
    ov = float(np.vdot(v, p @ v).real)
    first, second = small_subspace_bounds(row.shortest, d, ov, n)
    sigma = 0.5 * (p / d + (np.eye(n) - p) / n)
    c = domination_constant(ua, sigma, 2.0**-row.shortest) + 1.0
    hl, hu = h_lower(ua, v), h_upper(ua, v)
    return SmallSubspaceReport(
        K=row.shortest,
        d=d,
        overlap=ov,
        h_lower_bound=first,
        h_upper_bound=second,
        h_lower=hl,
        h_upper=hu,
        constant=c,
        lower_ok=hl <= first + c + 1e-9,
        upper_ok=hu <= second + c + 1e-9,
    )


# -- subadditivity and monotonicity --

def _mass(ua: UniversalApprox) -> float:
    return float(ua.table.total_mass()) if ua.table is not None else ua.trace


def _missing_tensors(snap_x, snap_y, snap_xy) -> list[str]:
    have = snap_xy.programs()
    n = snap_xy.dim
    return [
        encode_tensor(a.program, b.program, n, snap_x.dim)
        for a in snap_x.entries
        for b in snap_y.entries
        if encode_tensor(a.program, b.program, n, snap_x.dim) not in have
    ]


@dataclass
class OrderCheck:
    name: str
    constant: float
    ok: bool
    detail: dict = field(default_factory=dict)


def subadditivity_check(ua_x: UniversalApprox, ua_y: UniversalApprox, ua_xy: UniversalApprox, snapshots, phi, psi) -> list[OrderCheck]:
    """``c·μ_X ⊗ μ_Y ≤ μ_XY`` and the scalar corollaries for ``φ ⊗ ψ``.

    ``c = 1 / max(2^o, R)`` where ``o`` is the TENSOR overhead and ``R``
    bounds the cross terms involving the regularizers by the regularizer
    of ``μ_XY``.  Requires the TENSOR program of every pair of X and Y
    programs to be in the XY snapshot.
    """
    snap_x, snap_y, snap_xy = snapshots
    nx, ny = ua_x.dim, ua_y.dim
    if ua_xy.dim != nx * ny:
        raise ValidationError(f"dimension mismatch: {ua_xy.dim} != {nx}·{ny}")
    if nx not in nontrivial_divisors(nx * ny):
        raise ValidationError("no TENSOR split for these factors")
    missing = _missing_tensors(snap_x, snap_y, snap_xy)
    if missing:
        raise ValidationError(f"{len(missing)} TENSOR programs missing from the XY snapshot, e.g. {missing[0]}")
    ex, ey, exy = float(ua_x.eps_reg), float(ua_y.eps_reg), float(ua_xy.eps_reg)
    if exy <= 0:
        raise ValidationError("the XY regularizer must be positive")
    o = tensor_overhead(nx, ny)
    r = (ex * _mass(ua_y) * ny + ey * _mass(ua_x) * nx + ex * ey) / exy
    c = 1.0 / max(2.0**o, r)
    prod = tensor(ua_x.mu, ua_y.mu)
    op_ok = loewner_leq(c * prod, ua_xy.mu, 1e-9)
    v = np.kron(state_vector(phi, nx), state_vector(psi, ny))
    slack = -math.log2(c)
    hl = (h_lower(ua_xy, v), h_lower(ua_x, phi) + h_lower(ua_y, psi))
    hu = (h_upper(ua_xy, v), h_upper(ua_x, phi) + h_upper(ua_y, psi))
    return [
        OrderCheck("operator", c, op_ok, {"tensor_overhead": o, "R": r}),
        OrderCheck("H_lower", slack, hl[0] <= hl[1] + slack + 1e-9, {"joint": hl[0], "sum": hl[1]}),
        OrderCheck("H_upper", slack, hu[0] <= hu[1] + slack + 1e-9, {"joint": hu[0], "sum": hu[1]}),
    ]


def monotonicity_check(ua_x: UniversalApprox, ua_xy: UniversalApprox, snapshots, phi, psi) -> list[OrderCheck]:
    """``c₁·Tr_Y μ_XY ≤ μ_X``, ``c₁·μ_XY ≤ μ_X ⊗ I`` and, when ψ is given
    as a Y program, ``c₂·μ_X ⊗ |ψ><ψ| ≤ μ_XY``; then the scalar
    corollaries ``H(φ) ≤ H(φ ⊗ ψ) - log₂ c₁`` for both complexities.

    ``c₁ = ε_X / (N_X Tr μ_XY)`` uses only the X regularizer;
    ``c₂ = 1 / max(2^{l(q)+o}, ε_X N_Y / ε_XY)`` uses the TENSOR programs
    built on the program q of ψ.
    """
    snap_x, snap_xy = snapshots
    nx = ua_x.dim
    if ua_xy.dim % nx:
        raise ValidationError(f"{ua_xy.dim} is not a multiple of {nx}")
    ny = ua_xy.dim // nx
    ex, exy = float(ua_x.eps_reg), float(ua_xy.eps_reg)
    if ex <= 0 or exy <= 0:
        raise ValidationError("both regularizers must be positive")
    checks = []
    c1 = ex / (nx * ua_xy.trace)
    red = partial_trace(ua_xy.mu, (nx, ny), "traceY")
    checks.append(OrderCheck("partial_trace", c1, loewner_leq(c1 * red, ua_x.mu, 1e-9)))
    checks.append(OrderCheck("mu_X x I", c1, loewner_leq(c1 * ua_xy.mu.matrix, tensor(ua_x.mu, np.eye(ny)), 1e-9)))

    program = psi if isinstance(psi, str) else None
    if program is not None:
        out = decode(program, ny)
        if not out or out.kind != "state":
            raise ValidationError(f"{program} is not a state program in dimension {ny}")
        have = snap_xy.programs()
        missing = [a.program for a in snap_x.entries if encode_tensor(a.program, program, nx * ny, nx) not in have]
        if missing:
            raise ValidationError(f"TENSOR(p, {program}) missing from the XY snapshot for {len(missing)} programs")
        o = tensor_overhead(nx, ny)
        c2 = 1.0 / max(2.0 ** (len(program) + o), ex * ny / exy)
        witness = tensor(ua_x.mu, out.density())
        checks.append(OrderCheck("witness", c2, loewner_leq(c2 * witness, ua_xy.mu, 1e-9), {"program": program}))
        psi = out.state
    v = np.kron(state_vector(phi, nx), state_vector(psi, ny))
    slack = -math.log2(c1)
    hl = (h_lower(ua_x, phi), h_lower(ua_xy, v))
    hu = (h_upper(ua_x, phi), h_upper(ua_xy, v))
    checks.append(OrderCheck("H_lower", slack, hl[0] <= hl[1] + slack + 1e-9, {"part": hl[0], "joint": hl[1]}))
    checks.append(OrderCheck("H_upper", slack, hu[0] <= hu[1] + slack + 1e-9, {"part": hu[0], "joint": hu[1]}))
    return checks


def bell_state_paradox(ua_x: UniversalApprox, ua_xy: UniversalApprox, bell_program: str) -> dict:
    """Entropy is not monotone under partial trace while ``H̄`` is.

    ``bell_program`` must decode (in dimension 4) to ``|00> + |11>``.
    """
    out = decode(bell_program, 4)
    if not out or out.kind != "state":
        raise ValidationError("Bell program does not halt with a state")
    rho_xy = out.density()
    rho_x = partial_trace(rho_xy, (2, 2), "traceY")
    c1 = float(ua_x.eps_reg) / (2 * ua_xy.trace)
    slack = -math.log2(c1)
    basis = np.eye(2)
    worst = max(
        h_upper(ua_x, basis[i]) - h_upper(ua_xy, np.kron(basis[i], basis[j]))
        for i in range(2)
        for j in range(2)
    )
    return {
        "S_XY": von_neumann_entropy(rho_xy),
        "S_X": von_neumann_entropy(rho_x),
        "h_upper_bell": h_upper(ua_xy, out.state),
        "h_upper_monotone_margin": slack - worst,
        "h_upper_monotone": worst <= slack + 1e-9,
    }


# -- orthogonal sequences --

def basis_complexities(ua: UniversalApprox) -> list[dict]:
    """``K_t(i)`` against both complexities for every basis state the
    snapshot reaches.  ``H̄(|i>) ≤ -log₂(2^{-K} + ε/N) ≤ K`` is exact."""
    if ua.table is None:
        raise ValidationError("μ was not built from a snapshot")
    n = ua.dim
    rows = []
    for i in range(1, n + 1):
        e = ElementaryVector(tuple(1 if k == i - 1 else 0 for k in range(n)))
        row = ua.table.lookup(MachineOutput.of_state(e))
        if row is None:
            continue
        v = e.to_numpy()
        bound = -math.log2(2.0**-row.shortest + float(ua.eps_reg) / n)
        rows.append({
            "index": i,
            "K_t": row.shortest,
            "H_lower": h_lower(ua, v),
            "H_upper": h_upper(ua, v),
            "bound": bound,
            "ok": h_lower(ua, v) <= h_upper(ua, v) + 1e-9 <= bound + 2e-9,
        })
    return rows


# -- approximation lemma --

def approximation_lemma_check(rho, psi, eps: float) -> tuple[float, float]:
    """For ``<ψ|ρ|ψ> ≥ 1 - ε`` return the top eigenvalue ``p₁`` and
    ``|<u₁|ψ>|²``; raises if ``p₁ < 1 - ε`` or the overlap is below
    ``1 - 2ε``."""
    op = as_density(rho, semi=True)
    v = state_vector(psi, op.dim)
    if op.expectation(v) < 1 - eps - 1e-12:
        raise ValidationError(f"<ψ|ρ|ψ> = {op.expectation(v)} < 1 - ε")
    vals, vecs = op.eigensystem
    p1 = float(vals[0])
    ov = float(abs(np.vdot(vecs[:, 0], v)) ** 2)
    if p1 < 1 - eps - 1e-9 or ov < 1 - 2 * eps - 1e-9:
        raise AssertionError(f"approximation lemma violated: p1={p1}, overlap={ov}, ε={eps}")
    return p1, ov


def approximation_lemma_boundary(eps: float, grid: int = 101) -> dict:
    """Smallest top-eigenvector overlap over the two-dimensional family
    ``ρ = p|0><0| + (1-p)|1><1|``, ``ψ = cos θ|0> + sin θ|1>`` subject to
    ``<ψ|ρ|ψ> ≥ 1 - ε``, found by a grid search."""
    best = (math.inf, None, None)
    for p in np.linspace(max(0.5, 1 - 2 * eps), 1.0, grid):
        rho = np.diag([p, 1 - p])
        for theta in np.linspace(0, math.pi / 2, grid):
            v = np.array([math.cos(theta), math.sin(theta)])
            if v @ rho @ v < 1 - eps:
                continue
            _, ov = approximation_lemma_check(rho, v, eps)
            if ov < best[0]:
                best = (ov, float(p), float(theta))
    return {"eps": eps, "min_overlap": best[0], "p": best[1], "theta": best[2], "lemma_bound": 1 - 2 * eps}
