"""Dense self-adjoint operators: eigensystems, operator functions, tensor
products, partial traces and the Loewner order.

Everything downstream (universal densities, entropies, randomness tests)
is expressed through :class:`HermitianOperator`, whose eigensystem is
computed once by a cyclic complex Jacobi sweep and cached.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, NumericError, ValidationError

JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_TARGET = 1e-13
# Above this size the cyclic Jacobi sweep is too slow in pure numpy code.
JACOBI_MAX_DIM = 64


@dataclass(frozen=True)
class Tolerances:
    herm_tol: float = 1e-10
    psd_tol: float = 1e-10
    ortho_tol: float = 1e-9
    recon_tol: float = 1e-9
    log_floor: float = 2.0**-96

    def __post_init__(self):
        for name in ("herm_tol", "psd_tol", "ortho_tol", "recon_tol", "log_floor"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be strictly positive")
        if not self.log_floor < 1:
            raise ValidationError("log_floor must be < 1")


DEFAULT_TOL = Tolerances()


def _jacobi_eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi for a complex Hermitian matrix.

    Each rotation first removes the phase of the pivot a[p, q] and then
    applies the classical real rotation, so the pair (p, q) is annihilated
    exactly.  Returns unsorted eigenvalues and the accumulated unitary.
    """
    a = np.array(a, dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    if n == 1:
        return a.diagonal().real.copy(), v
    scale = max(np.linalg.norm(a), 1e-300)
    iu = np.triu_indices(n, 1)
    for _ in range(JACOBI_MAX_SWEEPS):
        off = np.sqrt(2.0 * np.sum(np.abs(a[iu]) ** 2))
        if off <= JACOBI_OFF_TARGET * scale:
            return a.diagonal().real.copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300 or r < 1e-18 * scale:
                    continue
                phase = apq / r
                app = a[p, p].real
                aqq = a[q, q].real
                theta = (aqq - app) / (2.0 * r)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rot = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                cols = [p, q]
                a[:, cols] = a[:, cols] @ rot
                a[cols, :] = rot.conj().T @ a[cols, :]
                a[p, q] = a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real
                v[:, cols] = v[:, cols] @ rot
    raise NumericError(f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps")


def eig(h: "HermitianOperator | np.ndarray", method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues in descending order and matching orthonormal eigenvectors.

    ``method`` is ``"jacobi"``, ``"lapack"`` or ``"auto"`` (Jacobi up to
    ``JACOBI_MAX_DIM``).  Columns of the returned matrix are eigenvectors.
    """
    if isinstance(h, HermitianOperator):
        if method == "auto":
            return h.eigensystem
        m = h.matrix
    else:
        m = HermitianOperator(h).matrix
    n = m.shape[0]
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_DIM else "lapack"
    if method == "jacobi":
        vals, vecs = _jacobi_eigh(m)
    elif method == "lapack":
        vals, vecs = np.linalg.eigh(m)
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(-vals, kind="stable")
    return vals[order], vecs[:, order]


class HermitianOperator:
    """Immutable dense self-adjoint matrix with a lazily computed eigensystem.

    The input is checked against ``tol.herm_tol`` and then replaced by its
    exact Hermitian part.
    """

    __slots__ = ("matrix", "tol", "__dict__")

    def __init__(self, matrix, tol: Tolerances = DEFAULT_TOL):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise ValidationError(f"expected a nonempty square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("matrix has non-finite entries")
        dev = np.max(np.abs(m - m.conj().T))
        if dev > tol.herm_tol * max(1.0, np.max(np.abs(m))):
            raise ValidationError(f"matrix is not Hermitian (max deviation {dev:.3g})")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        self.matrix = m
        self.tol = tol

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        vals, vecs = eig(self.matrix, method="jacobi" if self.dim <= JACOBI_MAX_DIM else "lapack")
        vals.setflags(write=False)
        vecs.setflags(write=False)
        return vals, vecs

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.eigensystem[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self.eigensystem[1]

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def expectation(self, psi) -> float:
        psi = np.asarray(getattr(psi, "amplitudes", psi))
        return float(np.vdot(psi, self.matrix @ psi).real)

    def is_psd(self, tol: float | None = None) -> bool:
        tol = self.tol.psd_tol if tol is None else tol
        return bool(self.eigenvalues[-1] >= -tol)

    def __add__(self, other):
        if isinstance(other, HermitianOperator):
            other = other.matrix
        return HermitianOperator(self.matrix + other, self.tol)

    def __sub__(self, other):
        if isinstance(other, HermitianOperator):
            other = other.matrix
        return HermitianOperator(self.matrix - other, self.tol)

    def __mul__(self, scalar):
        return HermitianOperator(self.matrix * float(scalar), self.tol)

    __rmul__ = __mul__

    def __repr__(self):
        return f"HermitianOperator(dim={self.dim})"


def as_operator(x, tol: Tolerances = DEFAULT_TOL) -> HermitianOperator:
    return x if isinstance(x, HermitianOperator) else HermitianOperator(x, tol)


class RestrictedOperator(NamedTuple):
    """Result of an operator function evaluated only on the support."""

    op: HermitianOperator
    support: HermitianOperator
    infinite_off_support: bool


def op_func(
    h,
    f: Callable[[np.ndarray], np.ndarray],
    off_support: str | None = "floor",
):
    """Apply the scalar function ``f`` to ``h`` through its eigensystem.

    ``off_support`` decides what happens at eigenvalues at or below
    ``psd_tol``:

    * ``"floor"``: every eigenvalue is clamped to at least ``log_floor``
      before ``f`` is applied (the regularized reading of ``log``).
    * ``"infinity"``: ``f`` is applied on the support only; the result is a
      :class:`RestrictedOperator` carrying the support projector and a flag
      telling whether an infinite part was dropped.
    * ``"zero"``: ``f`` on the support, zero on the kernel.
    * ``None``: ``f`` on every eigenvalue; a non-finite value raises
      :class:`DomainError`.
    """
    h = as_operator(h)
    tol = h.tol
    vals, vecs = h.eigensystem
    if off_support == "floor":
        fv = np.asarray(f(np.maximum(vals, tol.log_floor)), dtype=float)
    elif off_support in ("infinity", "zero"):
        on = vals > tol.psd_tol
        fv = np.zeros_like(vals)
        if np.any(on):
            fv[on] = f(vals[on])
        if off_support == "infinity":
            support = HermitianOperator((vecs[:, on]) @ vecs[:, on].conj().T, tol)
            op = HermitianOperator((vecs * fv) @ vecs.conj().T, tol)
            return RestrictedOperator(op, support, bool(np.any(~on)))
    elif off_support is None:
        with np.errstate(divide="ignore", invalid="ignore"):
            fv = np.asarray(f(vals), dtype=float)
    else:
        raise ValueError(f"unknown off_support policy {off_support!r}")
    if not np.all(np.isfinite(fv)):
        raise DomainError("function is not finite on the spectrum")
    return HermitianOperator((vecs * fv) @ vecs.conj().T, tol)


def loewner_leq(a, b, tol: float = 1e-10) -> bool:
    """True iff ``b - a`` is positive semidefinite up to ``tol``."""
    a = as_operator(a)
    b = as_operator(b)
    if a.dim != b.dim:
        raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return bool((b - a).eigenvalues[-1] >= -tol)


# A ≤ B (B - A = diag(1, 0)) yet exp A ≰ exp B: exp is not operator monotone.
EXP_COUNTEREXAMPLE = (
    np.array([[1.0, 1.0], [1.0, 1.0]]),
    np.array([[2.0, 1.0], [1.0, 1.0]]),
)


def random_pd_pair(n: int, rng: np.random.Generator, floor: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Random positive definite ``A ≤ B`` with ``B = A + PSD``."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    a = g @ g.conj().T + floor * np.eye(n)
    h = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a, a + h @ h.conj().T


def tensor(a, b) -> np.ndarray:
    """Kronecker product; row index of the result is ``i_a * N_b + i_b``."""
    a = getattr(a, "matrix", a)
    b = getattr(b, "matrix", b)
    return np.kron(np.asarray(a), np.asarray(b))


def partial_trace(m, dims: tuple[int, int], side: str = "traceY") -> np.ndarray:
    """Trace out one factor of ``H_X ⊗ H_Y``.

    ``side="traceY"`` keeps X, ``side="traceX"`` keeps Y.
    """
    m = np.asarray(getattr(m, "matrix", m))
    nx, ny = dims
    if m.shape != (nx * ny, nx * ny):
        raise ValidationError(f"matrix of shape {m.shape} does not factor as {nx}x{ny}")
    t = m.reshape(nx, ny, nx, ny)
    if side == "traceY":
        return np.einsum("ajbj->ab", t)
    if side == "traceX":
        return np.einsum("iaib->ab", t)
    raise ValueError(f"side must be 'traceY' or 'traceX', not {side!r}")


def projector(vectors) -> np.ndarray:
    """Orthogonal projector onto the span of orthonormal column vectors."""
    q = np.asarray(vectors, dtype=complex)
    if q.ndim == 1:
        q = q[:, None]
    return q @ q.conj().T
