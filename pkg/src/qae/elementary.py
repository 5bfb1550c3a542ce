"""Exact Gaussian-rational vectors (the machine's output currency), basis
and bitstring states, and the bridge to normalized floating-point states.

Text encoding of an :class:`ElementaryVector`::

    N;re_num/re_den+im_num/im_deni,...

for example ``2;3/5+0/1i,0/1+4/5i``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .errors import ParseError, ValidationError
from .hermitian import DEFAULT_TOL, loewner_leq, as_operator

_COEFF_RE = re.compile(r"^\s*(-?\d+)/(\d+)\+(-?\d+)/(\d+)i\s*$")


@dataclass(frozen=True)
class GaussianRational:
    """A complex number with rational real and imaginary parts."""

    re: Fraction = Fraction(0)
    im: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "re", Fraction(self.re))
        object.__setattr__(self, "im", Fraction(self.im))

    @property
    def re_num(self) -> int:
        return self.re.numerator

    @property
    def re_den(self) -> int:
        return self.re.denominator

    @property
    def im_num(self) -> int:
        return self.im.numerator

    @property
    def im_den(self) -> int:
        return self.im.denominator

    def __add__(self, other):
        other = _gr(other)
        return GaussianRational(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-_gr(other))

    def __mul__(self, other):
        o = _gr(other)
        return GaussianRational(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = _gr(other)
        n = o.abs2()
        if n == 0:
            raise ZeroDivisionError("division by the zero Gaussian rational")
        return self * o.conjugate() * GaussianRational(1 / n)

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def encode(self) -> str:
        return f"{self.re_num}/{self.re_den}+{self.im_num}/{self.im_den}i"

    @classmethod
    def parse(cls, text: str) -> "GaussianRational":
        m = _COEFF_RE.match(text)
        if not m:
            raise ParseError(f"bad coefficient {text!r}")
        a, b, c, d = (int(g) for g in m.groups())
        if b == 0 or d == 0:
            raise ParseError(f"zero denominator in {text!r}")
        return cls(Fraction(a, b), Fraction(c, d))


ZERO = GaussianRational()
ONE = GaussianRational(1)


def _gr(x) -> GaussianRational:
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, complex):
        raise TypeError("floating complex values are not exact; build a GaussianRational")
    return GaussianRational(Fraction(x))


@dataclass(frozen=True)
class ElementaryVector:
    """Unnormalized exact vector in ``H_N``."""

    coeffs: tuple[GaussianRational, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(_gr(c) for c in self.coeffs))
        if not self.coeffs:
            raise ValidationError("an elementary vector needs at least one coefficient")

    @property
    def dim(self) -> int:
        return len(self.coeffs)

    @cached_property
    def norm2(self) -> Fraction:
        return sum((c.abs2() for c in self.coeffs), Fraction(0))

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def __add__(self, other: "ElementaryVector") -> "ElementaryVector":
        if other.dim != self.dim:
            raise ValidationError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return ElementaryVector(tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def scale(self, c) -> "ElementaryVector":
        c = _gr(c)
        return ElementaryVector(tuple(c * a for a in self.coeffs))

    def tensor(self, other: "ElementaryVector") -> "ElementaryVector":
        return ElementaryVector(tuple(a * b for a in self.coeffs for b in other.coeffs))

    def inner(self, other: "ElementaryVector") -> GaussianRational:
        """Exact ``<self|other>`` (conjugate-linear in ``self``)."""
        total = ZERO
        for a, b in zip(self.coeffs, other.coeffs):
            total = total + a.conjugate() * b
        return total

    def canonical(self) -> "ElementaryVector":
        """Exact representative of the projective class: the first nonzero
        coefficient becomes 1."""
        for c in self.coeffs:
            if c:
                return ElementaryVector(tuple(a / c for a in self.coeffs))
        raise ValidationError("the zero vector has no canonical form")

    def to_numpy(self) -> np.ndarray:
        return np.array([complex(c) for c in self.coeffs], dtype=complex)

    def encode(self) -> str:
        return f"{self.dim};" + ",".join(c.encode() for c in self.coeffs)

    @classmethod
    def parse(cls, text: str) -> "ElementaryVector":
        head, sep, body = text.strip().partition(";")
        if not sep:
            raise ParseError(f"missing ';' in vector encoding {text!r}")
        try:
            n = int(head)
        except ValueError:
            raise ParseError(f"bad dimension {head!r}") from None
        parts = body.split(",")
        if len(parts) != n:
            raise ParseError(f"declared dimension {n} but found {len(parts)} coefficients")
        return cls(tuple(GaussianRational.parse(p) for p in parts))

    def __str__(self):
        return self.encode()


class PureState:
    """Normalized floating-point state with the phase convention applied:
    the first coefficient of modulus above 1e-12 is real and positive."""

    __slots__ = ("amplitudes",)

    def __init__(self, amplitudes, *, normalize: bool = True):
        a = np.array(amplitudes, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(a)
        if nrm == 0 or not np.isfinite(nrm):
            raise ValidationError("cannot build a state from the zero vector")
        if normalize:
            a = a / nrm
        elif abs(nrm - 1) > 1e-12:
            raise ValidationError(f"amplitudes have norm {nrm}, expected 1")
        nz = np.flatnonzero(np.abs(a) > 1e-12)
        if nz.size:
            c = a[nz[0]]
            a = a * (abs(c) / c)
        a.setflags(write=False)
        self.amplitudes = a

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def inner(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def tensor(self, other: "PureState") -> "PureState":
        return PureState(np.kron(self.amplitudes, other.amplitudes))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    def __repr__(self):
        return f"PureState(dim={self.dim})"


def basis_state(i: int, n: int) -> ElementaryVector:
    """The canonical basis vector ``|β_i>`` of ``H_N``, 1-based."""
    if not 1 <= i <= n:
        raise ValidationError(f"basis index {i} outside 1..{n}")
    return ElementaryVector(tuple(ONE if k == i - 1 else ZERO for k in range(n)))


def bitstring_state(x: str) -> ElementaryVector:
    """``|x> = |x(1)> ⊗ ... ⊗ |x(n)>``, i.e. basis index ``1 + int(x, 2)``."""
    if not x or set(x) - {"0", "1"}:
        raise ValidationError(f"expected a nonempty binary string, got {x!r}")
    return basis_state(int(x, 2) + 1, 2 ** len(x))


def normalize(v: ElementaryVector) -> PureState:
    if v.norm2 == 0:
        raise ValidationError("cannot normalize the zero vector")
    return PureState(v.to_numpy() / np.sqrt(float(v.norm2)))


def _amps(v) -> np.ndarray:
    if isinstance(v, ElementaryVector):
        return v.to_numpy()
    return np.asarray(getattr(v, "amplitudes", v), dtype=complex)


def gram_span(vectors, tol: float = 1e-10) -> list[PureState]:
    """Orthonormal basis of the span by modified Gram-Schmidt.

    A vector whose residual norm falls below ``tol`` is dropped.  A second
    orthogonalization pass is applied to each kept vector.
    """
    vectors = list(vectors)
    if not vectors:
        raise ValidationError("gram_span needs at least one vector")
    basis: list[np.ndarray] = []
    for v in vectors:
        w = _amps(v).copy()
        for _ in range(2):
            for q in basis:
                w = w - np.vdot(q, w) * q
        nrm = np.linalg.norm(w)
        if nrm >= tol:
            basis.append(w / nrm)
    return [PureState(q) for q in basis]


def basis_matrix(states) -> np.ndarray:
    """Stack states as columns."""
    cols = [_amps(s) for s in states]
    return np.stack(cols, axis=1)


def span_from_psd_approximations(sequence, target_rank: int, tol: float = 1e-9) -> list[PureState]:
    """Turn an increasing sequence of PSD operators approximating a projector
    from below into an orthonormal list spanning the union of their ranges.

    The range of every operator below a projector ``P`` lies inside the
    range of ``P``, so accumulated eigenvectors with eigenvalue above
    ``tol`` build up a basis of ``P``'s range.
    """
    ops = [as_operator(r) for r in sequence]
    if not ops:
        raise ValidationError("empty approximation sequence")
    for prev, nxt in zip(ops, ops[1:]):
        if not loewner_leq(prev, nxt, DEFAULT_TOL.psd_tol):
            raise ValidationError("approximation sequence is not increasing in the Loewner order")
    basis: list[PureState] = []
    for op in ops:
        vals, vecs = op.eigensystem
        cands = basis + [vecs[:, j] for j in range(op.dim) if vals[j] > tol]
        basis = gram_span(cands, tol) if cands else []
        if len(basis) >= target_rank:
            return basis[:target_rank]
    return basis
