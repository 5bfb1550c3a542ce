"""Spherical caps and the counting argument behind the lower bound on Kq.

``n`` is the dimension of the ambient Euclidean space, so the sphere is
``S^{n-1}`` and ``s_n`` its surface volume.  A complex space ``C^D`` is
read as ``R^{2D}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .config import CAP_BOUND_C, COUNTING_C
from .density import kq_t
from .elementary import gram_span
from .errors import ResourceError, ValidationError
from .machine import EnumerationSnapshot, enumerate_programs, semimeasure

MC_BATCH = 100_000


@dataclass(frozen=True)
class CapQuery:
    n: int
    alpha: float

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("the sphere dimension n must be >= 2")
        if not 0 <= self.alpha <= math.pi:
            raise ValidationError("alpha must lie in [0, π]")


def log_ball_volume(n: int) -> float:
    """``ln b_n`` for the unit ball in ``R^n``."""
    return 0.5 * n * math.log(math.pi) - special.gammaln(0.5 * n + 1)


def log_sphere_volume(n: int) -> float:
    """``ln s_n``, the surface volume of the unit ball in ``R^n``."""
    return math.log(2) + 0.5 * n * math.log(math.pi) - special.gammaln(0.5 * n)


def _prefactor(n: int) -> float:
    # s_{n-1} / s_n = Γ(n/2) / (√π Γ((n-1)/2))
    return math.exp(special.gammaln(0.5 * n) - special.gammaln(0.5 * (n - 1)) - 0.5 * math.log(math.pi))


def cap_fraction_exact(q: CapQuery) -> float:
    """``s_n(α)/s_n`` by quadrature of ``sin^{n-2}``; caps wider than a
    hemisphere use the complement."""
    n, a = q.n, q.alpha
    if a > math.pi / 2:
        return 1.0 - cap_fraction_exact(CapQuery(n, math.pi - a))
    if a == 0:
        return 0.0
    if n == 2:
        return a / math.pi
    k = n - 2

    def f(x):
        s = math.sin(x)
        return s**k if s > 0 else 0.0

    val, _ = integrate.quad(f, 0.0, a, epsabs=1e-14, epsrel=1e-12, limit=500)
    return _prefactor(n) * val


def cap_fraction_beta(q: CapQuery) -> float:
    """Closed form ``I_{sin²α}((n-1)/2, 1/2) / 2`` for ``α ≤ π/2``."""
    n, a = q.n, q.alpha
    if a > math.pi / 2:
        return 1.0 - cap_fraction_beta(CapQuery(n, math.pi - a))
    return 0.5 * float(special.betainc(0.5 * (n - 1), 0.5, math.sin(a) ** 2))


def cap_fraction_bound(n: int, y: float, C: float = CAP_BOUND_C) -> float:
    """``C·exp(-n y²/2 + ln n)`` for the cap of half-angle ``π/2 - y``."""
    if not 0 < y <= math.pi / 2:
        raise ValidationError("y must lie in (0, π/2]")
    return C * math.exp(-n * y * y / 2 + math.log(n))


def bound_is_trivial(n: int, y: float, C: float = CAP_BOUND_C) -> bool:
    """True where the bound is at least 1 and so says nothing."""
    return cap_fraction_bound(n, y, C) >= 1.0


def cap_fraction_montecarlo(q: CapQuery, samples: int, seed: int) -> tuple[float, float]:
    """Fraction of uniform unit vectors within angle α of ``e_1``."""
    rng = np.random.default_rng(seed)
    thresh = math.cos(q.alpha)
    hits = 0
    done = 0
    while done < samples:
        k = min(MC_BATCH, samples - done)
        z = rng.standard_normal((k, q.n))
        c = z[:, 0] / np.linalg.norm(z, axis=1)
        hits += int(np.count_nonzero(c >= thresh))
        done += k
    p = hits / samples
    return p, math.sqrt(max(p * (1 - p), 0.0) / samples)


def laplace_gap(y: float) -> float:
    """``ln sin(π/2 - y) + y²/2``; negative for ``0 < y < π/2``."""
    return math.log(math.cos(y)) + y * y / 2


def sphere_identity_residual(n: int) -> float:
    """Relative residual of ``s_n = n b_n`` computed in logs."""
    return abs(math.expm1(log_sphere_volume(n) - math.log(n) - log_ball_volume(n)))


# -- counting --

@dataclass(frozen=True)
class CountingScenario:
    n: int
    k: int
    m: int

    def __post_init__(self):
        if min(self.n, self.m) < 1 or self.k < 0:
            raise ValidationError("n, m must be positive and k nonnegative")


def counting_lemma_fraction(sc: CountingScenario) -> float:
    """``exp(-2^{n-m} + k ln 2 + n)``."""
    return math.exp(-(2.0 ** (sc.n - sc.m)) + sc.k * math.log(2) + sc.n)


def complex_overlap_tail(dim: int, t: float) -> float:
    """``P(|<φ|ψ>|² ≥ t)`` for Haar ψ in ``C^dim``: ``(1 - t)^{dim-1}``."""
    return (1.0 - t) ** (dim - 1) if t < 1 else 0.0


def counting_montecarlo(sc: CountingScenario, samples: int, seed: int, max_dim: int = 64, max_k: int = 10) -> tuple[float, float]:
    """Fraction of Haar ψ in ``C^{2^n}`` with ``|<φ_i|ψ>|² ≥ 2^{-m}`` for
    one of ``2^k`` fixed random states ``φ_i``."""
    dim = 2**sc.n
    if dim > max_dim or sc.k > max_k:
        raise ResourceError(f"scenario (n={sc.n}, k={sc.k}) exceeds the Monte-Carlo cap")
    rng = np.random.default_rng(seed)
    r = 2**sc.k
    phis = rng.standard_normal((r, dim)) + 1j * rng.standard_normal((r, dim))
    phis /= np.linalg.norm(phis, axis=1, keepdims=True)
    t = 2.0**-sc.m
    hits = 0
    done = 0
    while done < samples:
        k = min(MC_BATCH // max(1, r // 8), samples - done)
        z = rng.standard_normal((k, dim)) + 1j * rng.standard_normal((k, dim))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        ov = np.abs(z @ phis.conj().T) ** 2
        hits += int(np.count_nonzero(ov.max(axis=1) >= t))
        done += k
    p = hits / samples
    return p, math.sqrt(max(p * (1 - p), 0.0) / samples)


def overlap_angle_agreement(n_qubits: int, m: int, samples: int, seed: int) -> float:
    """Fraction of sampled ψ on which ``|<φ|ψ>| ≥ 2^{-m/2}`` agrees with
    "the real angle between ψ and the phase-aligned φ in ``R^{2D}`` is at
    most ``arccos 2^{-m/2}``"."""
    dim = 2**n_qubits
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    phi /= np.linalg.norm(phi)
    z = rng.standard_normal((samples, dim)) + 1j * rng.standard_normal((samples, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    inner = z @ phi.conj()
    c1 = np.abs(inner) >= 2 ** (-m / 2)
    aligned = phi[None, :] * np.exp(1j * np.angle(inner))[:, None]
    real_dot = np.sum(aligned.real * z.real + aligned.imag * z.imag, axis=1)
    angle = np.arccos(np.clip(real_dot, -1, 1))
    c2 = angle <= math.acos(2 ** (-m / 2)) + 1e-12
    return float(np.mean(c1 == c2))


# -- Kq lower-bound re-enactment --

def kq_exponent(n: float, c: float = 0.0) -> float:
    """``-n²/2 + n(2 ln 2 + 1) + c - 1``."""
    return -n * n / 2 + n * (2 * math.log(2) + 1) + c - 1


def kq_exponent_root(c: float = 0.0) -> float:
    """Largest root of :func:`kq_exponent`; negative beyond it."""
    b = 2 * math.log(2) + 1
    return b + math.sqrt(b * b + 2 * (c - 1))


@dataclass
class KqScenarioReport:
    qubits: int
    threshold: int
    short_outputs: int
    dim_V: int
    samples: int
    kq_min: float
    kq_mean: float
    k_m_min: float
    m: float
    exponent_root: float
    all_above: bool
    degenerate: bool

    def to_dict(self) -> dict:
        return {k: (("inf" if isinstance(v, float) and math.isinf(v) else v)) for k, v in self.__dict__.items()}


def short_output_complement(snapshot: EnumerationSnapshot, threshold: int) -> np.ndarray:
    """Orthonormal basis (columns) of the complement of all state outputs
    with programs shorter than ``threshold``."""
    d = snapshot.dim
    short = [e.output.state.to_numpy() for e in snapshot.states() if e.length < threshold]
    if not short:
        return np.eye(d, dtype=complex)
    span = gram_span(short)
    full = gram_span([s.amplitudes for s in span] + list(np.eye(d)))
    return np.stack([s.amplitudes for s in full[len(span):]], axis=1)


def k_m(table, psi, m: float) -> float:
    """Shortest program whose output satisfies ``-log₂|<φ|ψ>|² ≤ m``."""
    best = math.inf
    for row in table:
        if row.output.kind != "state":
            continue
        phi = row.output.state.to_numpy()
        ov = abs(np.vdot(phi, psi)) ** 2 / np.vdot(phi, phi).real
        if ov > 0 and -math.log2(ov) <= m:
            best = min(best, row.shortest)
    return best


def kq_lowerbound_scenario(n: int, budget: tuple[int, int], samples: int, seed: int, c: float = 0.0, snapshot=None) -> KqScenarioReport:
    """Build V orthogonal to every output of length < n-1, sample ψ in V
    and record ``Kq_t(ψ)`` and ``K_m(ψ)`` with ``m = n - 2 log₂ n``."""
    if n > 6:
        raise ResourceError("the scenario is limited to n <= 6 qubits")
    snap = snapshot or enumerate_programs(2**n, budget)
    threshold = n - 1
    basis = short_output_complement(snap, threshold)
    dim_v = basis.shape[1]
    nshort = sum(1 for e in snap.states() if e.length < threshold)
    table = semimeasure(snap)
    m = n - 2 * math.log2(n)
    if dim_v == 0:
        return KqScenarioReport(n, threshold, nshort, 0, 0, math.nan, math.nan, math.nan, m, kq_exponent_root(c), False, True)
    rng = np.random.default_rng(seed)
    coeff = rng.standard_normal((samples, dim_v)) + 1j * rng.standard_normal((samples, dim_v))
    states = coeff @ basis.T
    states /= np.linalg.norm(states, axis=1, keepdims=True)
    kq = np.array([kq_t(table, s) for s in states])
    km = np.array([k_m(table, s, m) for s in states])
    return KqScenarioReport(
        qubits=n,
        threshold=threshold,
        short_outputs=nshort,
        dim_V=dim_v,
        samples=samples,
        kq_min=float(kq.min()),
        kq_mean=float(kq.mean()),
        k_m_min=float(km.min()),
        m=m,
        exponent_root=kq_exponent_root(c),
        all_above=bool(np.all(kq >= threshold)),
        degenerate=False,
    )
