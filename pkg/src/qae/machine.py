"""A fixed prefix-free constructor machine and its budgeted enumerator.

Programs are bitstrings parsed by a self-delimiting grammar::

    program := 00  gamma(i)                     BASIS   e_i in H_N
             | 01  gamma(j) program program      TENSOR  split N = d_j * (N / d_j)
             | 10  lit lit program program       WSUM    a*v1 + b*v2
             | 110 gamma(k) program^k            PROJ    projector onto a k-dim span
             | 111 program                       PAD     same output

``gamma`` is the Elias gamma code of a positive integer; ``d_j`` is the
j-th nontrivial divisor of N in increasing order; ``lit`` is one of::

    0 -> 1    100 -> -1    101 -> i    110 -> -i    1110 -> 2    1111 -> 1/2

TENSOR takes states or projectors and builds the product span.  WSUM and
PROJ take states only.  A zero WSUM, a dependent PROJ basis, an
out-of-range index or a step count above the budget rejects the program.
The grammar is read strictly left to right, so the accepted set is prefix
free, and a rejection caused by the bits read so far is inherited by every
extension; :func:`enumerate_programs` exploits this to prune its search.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .elementary import ONE, ZERO, ElementaryVector, GaussianRational, basis_state
from .errors import ResourceError, ValidationError

OP_BASIS = "00"
OP_TENSOR = "01"
OP_WSUM = "10"
OP_PROJ = "110"
OP_PAD = "111"

LITERALS: dict[str, GaussianRational] = {
    "0": ONE,
    "100": GaussianRational(-1),
    "101": GaussianRational(0, 1),
    "110": GaussianRational(0, -1),
    "1110": GaussianRational(2),
    "1111": GaussianRational(Fraction(1, 2)),
}
_LITERAL_CODES = {v: k for k, v in LITERALS.items()}

MAX_LENGTH_CAP = 24
MAX_STEPS_CAP = 10**7


class RejectReason(str, Enum):
    UNDERFLOW = "underflow"
    OVERFLOW = "overflow"
    ILL_FORMED = "ill-formed"
    BUDGET = "budget"


@dataclass(frozen=True)
class Rejected:
    reason: RejectReason
    detail: str = ""

    def __bool__(self):
        return False


class _Underflow(Exception):
    pass


class _IllFormed(Exception):
    pass


class _Budget(Exception):
    pass


def gamma_code(i: int) -> str:
    """Elias gamma code of ``i >= 1``."""
    if i < 1:
        raise ValidationError("gamma code needs a positive integer")
    b = bin(i)[2:]
    return "0" * (len(b) - 1) + b


def nontrivial_divisors(n: int) -> list[int]:
    return [d for d in range(2, n) if n % d == 0]


def _rref(rows: Sequence[ElementaryVector]) -> list[tuple[GaussianRational, ...]]:
    """Exact reduced row echelon form (zero rows removed)."""
    m = [list(r.coeffs) for r in rows]
    out: list[list[GaussianRational]] = []
    ncol = len(m[0]) if m else 0
    r = 0
    for c in range(ncol):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = m[r][c]
        m[r] = [x / inv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        r += 1
        if r == len(m):
            break
    out = m[:r]
    return [tuple(row) for row in out]


def exact_rank(rows: Sequence[ElementaryVector]) -> int:
    return len(_rref(rows)) if rows else 0


@dataclass(frozen=True)
class MachineOutput:
    """A state or a projector built by a program in ``H_N``."""

    kind: str
    target_dim: int
    state: ElementaryVector | None = None
    projector_basis: tuple[ElementaryVector, ...] = ()

    @classmethod
    def of_state(cls, v: ElementaryVector) -> "MachineOutput":
        return cls("state", v.dim, state=v)

    @classmethod
    def of_projector(cls, basis: Sequence[ElementaryVector]) -> "MachineOutput":
        return cls("projector", basis[0].dim, projector_basis=tuple(basis))

    @property
    def rank(self) -> int:
        return 1 if self.kind == "state" else len(self.projector_basis)

    @cached_property
    def key(self) -> tuple:
        """Exact canonical identity: projective class of a state, row space
        of a projector."""
        if self.kind == "state":
            return ("state", self.target_dim, self.state.canonical().coeffs)
        return ("projector", self.target_dim, tuple(_rref(self.projector_basis)))

    def vectors(self) -> list[ElementaryVector]:
        return [self.state] if self.kind == "state" else list(self.projector_basis)

    def orthonormal_basis(self) -> np.ndarray:
        b = np.stack([v.to_numpy() for v in self.vectors()], axis=1)
        q, _ = np.linalg.qr(b)
        return q

    def projector(self) -> np.ndarray:
        q = self.orthonormal_basis()
        return q @ q.conj().T

    def density(self) -> np.ndarray:
        """Unit-trace operator: ``|ψ><ψ|`` or ``P / dim P``."""
        return self.projector() / self.rank

    def permuted(self, perm: Sequence[int]) -> "MachineOutput":
        """Apply the basis permutation ``e_i -> e_perm[i]`` (0-based) exactly."""
        def move(v):
            c = [ZERO] * v.dim
            for i, x in enumerate(v.coeffs):
                c[perm[i]] = x
            return ElementaryVector(tuple(c))

        if self.kind == "state":
            return MachineOutput.of_state(move(self.state))
        return MachineOutput.of_projector([move(v) for v in self.projector_basis])

    def encode(self) -> str:
        return "|".join(v.encode() for v in self.vectors())

    @classmethod
    def parse(cls, kind: str, text: str) -> "MachineOutput":
        vecs = [ElementaryVector.parse(t) for t in text.split("|")]
        if kind == "state":
            if len(vecs) != 1:
                raise ValidationError("a state output has exactly one vector")
            return cls.of_state(vecs[0])
        if kind == "projector":
            return cls.of_projector(vecs)
        raise ValidationError(f"unknown output kind {kind!r}")


class _Parser:
    def __init__(self, bits: str, max_steps: int | None):
        self.bits = bits
        self.pos = 0
        self.steps = 0
        self.max_steps = max_steps

    def bit(self) -> str:
        if self.pos >= len(self.bits):
            raise _Underflow
        b = self.bits[self.pos]
        self.pos += 1
        return b

    def take(self, k: int) -> str:
        return "".join(self.bit() for _ in range(k))

    def gamma(self, limit: int) -> int:
        z = 0
        while self.bit() == "0":
            z += 1
            if 2**z > limit:
                raise _IllFormed(f"gamma value >= {2**z} exceeds {limit}")
        value = int("1" + self.take(z), 2)
        if value > limit:
            raise _IllFormed(f"gamma value {value} exceeds {limit}")
        return value

    def literal(self) -> GaussianRational:
        code = self.bit()
        while code not in LITERALS:
            code += self.bit()
        return LITERALS[code]

    def program(self, n: int):
        self.steps += 1
        if self.max_steps is not None and self.steps > self.max_steps:
            raise _Budget
        op = self.take(2)
        if op == OP_BASIS:
            return ("state", basis_state(self.gamma(n), n))
        if op == OP_TENSOR:
            divs = nontrivial_divisors(n)
            if not divs:
                raise _IllFormed(f"no tensor split of dimension {n}")
            d1 = divs[self.gamma(len(divs)) - 1]
            a = self.program(d1)
            b = self.program(n // d1)
            va = [a[1]] if a[0] == "state" else list(a[1])
            vb = [b[1]] if b[0] == "state" else list(b[1])
            prods = [x.tensor(y) for x in va for y in vb]
            if a[0] == "state" and b[0] == "state":
                return ("state", prods[0])
            return ("projector", tuple(prods))
        if op == OP_WSUM:
            ca = self.literal()
            cb = self.literal()
            a = self.program(n)
            b = self.program(n)
            if a[0] != "state" or b[0] != "state":
                raise _IllFormed("WSUM operands must be states")
            v = a[1].scale(ca) + b[1].scale(cb)
            if v.is_zero():
                raise _IllFormed("WSUM produced the zero vector")
            return ("state", v)
        op += self.bit()
        if op == OP_PROJ:
            k = self.gamma(n)
            vecs = []
            for _ in range(k):
                s = self.program(n)
                if s[0] != "state":
                    raise _IllFormed("PROJ operands must be states")
                vecs.append(s[1])
            if exact_rank(vecs) != k:
                raise _IllFormed("PROJ basis is linearly dependent")
            return ("projector", tuple(vecs))
        return self.program(n)  # PAD


def _classify(bits: str, n: int, max_steps: int | None):
    p = _Parser(bits, max_steps)
    try:
        kind, val = p.program(n)
    except _Underflow:
        return Rejected(RejectReason.UNDERFLOW)
    except _IllFormed as e:
        return Rejected(RejectReason.ILL_FORMED, str(e))
    except _Budget:
        return Rejected(RejectReason.BUDGET)
    if p.pos != len(bits):
        return Rejected(RejectReason.OVERFLOW, f"{len(bits) - p.pos} trailing bits")
    if kind == "state":
        return MachineOutput.of_state(val)
    return MachineOutput.of_projector(val)


def decode(bits: str, n: int, max_steps: int | None = None) -> "MachineOutput | Rejected":
    """Run the machine on ``bits`` in dimension ``n``.

    Returns a :class:`MachineOutput` when ``bits`` is exactly one
    well-formed program, else a falsy :class:`Rejected` with the reason.
    """
    if n < 1:
        raise ValidationError("dimension must be positive")
    if set(bits) - {"0", "1"}:
        raise ValidationError(f"not a bitstring: {bits!r}")
    return _classify(bits, n, max_steps)


# -- encoders (inverse direction, used to seed snapshots and in tests) --

def encode_basis(i: int) -> str:
    return OP_BASIS + gamma_code(i)


def encode_tensor(p1: str, p2: str, n: int, d1: int) -> str:
    divs = nontrivial_divisors(n)
    if d1 not in divs:
        raise ValidationError(f"{d1} is not a nontrivial divisor of {n}")
    return OP_TENSOR + gamma_code(divs.index(d1) + 1) + p1 + p2


def encode_literal(c: GaussianRational) -> str:
    try:
        return _LITERAL_CODES[c]
    except KeyError:
        raise ValidationError(f"{c} is not an encodable literal") from None


def encode_wsum(a, b, p1: str, p2: str) -> str:
    return OP_WSUM + encode_literal(_lit(a)) + encode_literal(_lit(b)) + p1 + p2


def _lit(x) -> GaussianRational:
    if isinstance(x, GaussianRational):
        return x
    if isinstance(x, complex):
        return GaussianRational(Fraction(x.real).limit_denominator(2), Fraction(x.imag).limit_denominator(2))
    return GaussianRational(Fraction(x))


def encode_proj(programs: Sequence[str]) -> str:
    return OP_PROJ + gamma_code(len(programs)) + "".join(programs)


def encode_pad(p: str) -> str:
    return OP_PAD + p


def tensor_overhead(nx: int, ny: int) -> int:
    """Bits a TENSOR instruction adds on top of its two operand programs."""
    return len(encode_tensor("", "", nx * ny, nx))


def encode_uniform_sum(indices: Sequence[int]) -> str:
    """Program for ``sum_j e_{indices[j]}`` built from nested WSUM(1, 1, ...)."""
    prog = encode_basis(indices[-1])
    for i in reversed(indices[:-1]):
        prog = encode_wsum(1, 1, encode_basis(i), prog)
    return prog


# -- enumeration --

@dataclass(frozen=True)
class SnapshotEntry:
    program: str
    output: MachineOutput

    @property
    def length(self) -> int:
        return len(self.program)

    @property
    def weight(self) -> Fraction:
        return Fraction(1, 2 ** len(self.program))


@dataclass(frozen=True)
class EnumerationSnapshot:
    """The halting table of the machine at a budget ``(max_len, max_steps)``."""

    dim: int
    budget: tuple[int, int]
    entries: tuple[SnapshotEntry, ...] = ()
    extra: bool = field(default=False)

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: (len(e.program), e.program)))
        object.__setattr__(self, "entries", entries)
        if self.kraft_mass > 1:
            raise ValidationError(f"Kraft mass {self.kraft_mass} exceeds 1")

    @cached_property
    def kraft_mass(self) -> Fraction:
        return sum((e.weight for e in self.entries), Fraction(0))

    def __len__(self):
        return len(self.entries)

    def programs(self) -> set[str]:
        return {e.program for e in self.entries}

    def states(self) -> list[SnapshotEntry]:
        return [e for e in self.entries if e.output.kind == "state"]

    def projectors(self) -> list[SnapshotEntry]:
        return [e for e in self.entries if e.output.kind == "projector"]

    def with_programs(self, programs: Iterable[str]) -> "EnumerationSnapshot":
        """Add specific halting programs beyond the enumerated budget."""
        have = self.programs()
        new = list(self.entries)
        for p in programs:
            if p in have:
                continue
            out = decode(p, self.dim)
            if not out:
                raise ValidationError(f"program {p} does not halt: {out.reason.value}")
            new.append(SnapshotEntry(p, out))
            have.add(p)
        return EnumerationSnapshot(self.dim, self.budget, tuple(new), extra=True)

    def permuted(self, perm: Sequence[int]) -> "EnumerationSnapshot":
        """Same programs, every output pushed through a basis permutation."""
        ents = tuple(SnapshotEntry(e.program, e.output.permuted(perm)) for e in self.entries)
        return EnumerationSnapshot(self.dim, self.budget, ents, extra=self.extra)

    def digest(self) -> str:
        from .storage import dumps_snapshot

        return hashlib.sha256(dumps_snapshot(self).encode()).hexdigest()


def check_budget(max_len: int, max_steps: int) -> None:
    if max_len < 0 or max_steps < 1:
        raise ValidationError(f"invalid budget ({max_len}, {max_steps})")
    if max_len > MAX_LENGTH_CAP:
        raise ResourceError(f"program length {max_len} exceeds hard cap {MAX_LENGTH_CAP}")
    if max_steps > MAX_STEPS_CAP:
        raise ResourceError(f"step budget {max_steps} exceeds hard cap {MAX_STEPS_CAP}")


def _search(root: str, n: int, max_len: int, max_steps: int) -> list[tuple[str, MachineOutput]]:
    found = []
    stack = [root]
    while stack:
        bits = stack.pop()
        res = _classify(bits, n, max_steps)
        if isinstance(res, MachineOutput):
            found.append((bits, res))
        elif res.reason is RejectReason.UNDERFLOW and len(bits) < max_len:
            stack.append(bits + "1")
            stack.append(bits + "0")
    return found


def enumerate_programs(
    n: int, budget: tuple[int, int], workers: int = 1
) -> EnumerationSnapshot:
    """All accepted programs of length at most ``max_len`` whose decoding
    takes at most ``max_steps`` instructions.

    The search walks the binary tree of prefixes and only descends below
    prefixes that underflow; every other prefix is accepted or rejected
    together with all of its extensions.  With ``workers > 1`` the eight
    3-bit subtrees are searched in separate processes; the merge sorts by
    ``(length, program)`` so the snapshot is identical to a serial run.
    """
    max_len, max_steps = budget
    check_budget(max_len, max_steps)
    if n < 1:
        raise ValidationError("dimension must be positive")
    found: list[tuple[str, MachineOutput]] = []
    if max_len >= 1:
        if workers > 1 and max_len > 3:
            roots = [format(i, "03b") for i in range(8)]
            # prefixes shorter than 3 bits never halt (the shortest program is 001)
            with ProcessPoolExecutor(max_workers=workers) as ex:
                parts = ex.map(_search, roots, [n] * 8, [max_len] * 8, [max_steps] * 8)
                for part in parts:
                    found.extend(part)
        else:
            found = _search("", n, max_len, max_steps)
    entries = tuple(SnapshotEntry(b, o) for b, o in found)
    return EnumerationSnapshot(n, (max_len, max_steps), entries)


def brute_force_scan(n: int, budget: tuple[int, int]) -> list[tuple[str, MachineOutput]]:
    """Decode every bitstring of length <= max_len; the unpruned reference."""
    max_len, max_steps = budget
    out = []
    for length in range(1, max_len + 1):
        for i in range(2**length):
            bits = format(i, f"0{length}b")
            res = decode(bits, n, max_steps)
            if res:
                out.append((bits, res))
    return out


# -- the resource-bounded semimeasure --

@dataclass
class TableRow:
    output: MachineOutput
    mass: Fraction
    shortest: int
    programs: list[str]

    @property
    def weight(self) -> Fraction:
        return self.mass


@dataclass
class SemimeasureTable:
    """``m_t`` and ``K_t`` keyed by canonical output."""

    condition_dim: int
    rows: dict[tuple, TableRow]

    @property
    def m_t(self) -> dict[tuple, Fraction]:
        return {k: r.mass for k, r in self.rows.items()}

    @property
    def K_t(self) -> dict[tuple, int]:
        return {k: r.shortest for k, r in self.rows.items()}

    def total_mass(self) -> Fraction:
        return sum((r.mass for r in self.rows.values()), Fraction(0))

    def lookup(self, output: MachineOutput) -> TableRow | None:
        return self.rows.get(output.key)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows.values())


def semimeasure(snapshot: EnumerationSnapshot) -> SemimeasureTable:
    """Aggregate ``m_t(o) = sum 2^{-l(p)}`` and ``K_t(o) = min l(p)`` per
    canonical output."""
    rows: dict[tuple, TableRow] = {}
    for e in snapshot.entries:
        k = e.output.key
        row = rows.get(k)
        if row is None:
            rows[k] = TableRow(e.output, e.weight, e.length, [e.program])
        else:
            row.mass += e.weight
            row.shortest = min(row.shortest, e.length)
            row.programs.append(e.program)
    return SemimeasureTable(snapshot.dim, rows)
