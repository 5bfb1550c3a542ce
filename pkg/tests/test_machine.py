from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qae.elementary import ElementaryVector, GaussianRational, basis_state
from qae.errors import ResourceError, ValidationError
from qae.machine import (
    MachineOutput,
    RejectReason,
    SnapshotEntry,
    EnumerationSnapshot,
    brute_force_scan,
    decode,
    encode_basis,
    encode_pad,
    encode_proj,
    encode_tensor,
    encode_uniform_sum,
    encode_wsum,
    enumerate_programs,
    gamma_code,
    nontrivial_divisors,
    semimeasure,
    tensor_overhead,
)

BELL = encode_wsum(1, 1, encode_basis(1), encode_basis(4))


@pytest.mark.parametrize("i, code", [(1, "1"), (2, "010"), (3, "011"), (4, "00100"), (7, "00111")])
def test_gamma_code(i, code):
    assert gamma_code(i) == code


def test_divisors():
    assert nontrivial_divisors(2) == []
    assert nontrivial_divisors(12) == [2, 3, 4, 6]


def test_shortest_basis_program():
    assert encode_basis(1) == "001"
    assert decode("001", 2).state == basis_state(1, 2)


@pytest.mark.parametrize("n", [2, 3, 4, 8])
def test_basis_programs_decode(n):
    for i in range(1, n + 1):
        assert decode(encode_basis(i), n).state == basis_state(i, n)


@pytest.mark.parametrize("program", ["001", "00010", encode_pad("001"), BELL])
def test_extension_overflows(program):
    n = 4
    assert decode(program, n)
    for b in "01":
        r = decode(program + b, n)
        assert not r and r.reason is RejectReason.OVERFLOW
    for k in range(len(program)):
        assert decode(program[:k], n).reason is RejectReason.UNDERFLOW


def test_cancelling_sum_is_ill_formed():
    r = decode(encode_wsum(1, -1, "001", "001"), 2)
    assert not r and r.reason is RejectReason.ILL_FORMED


def test_dependent_projector_is_ill_formed():
    r = decode(encode_proj([encode_basis(1), encode_basis(1)]), 2)
    assert r.reason is RejectReason.ILL_FORMED


def test_tensor_needs_a_split():
    assert decode("01" + "1" + "001" + "001", 2).reason is RejectReason.ILL_FORMED


def test_step_budget():
    assert decode("001", 2, max_steps=0).reason is RejectReason.BUDGET
    assert decode(BELL, 4, max_steps=2).reason is RejectReason.BUDGET
    assert decode(BELL, 4, max_steps=3)


def test_bad_input():
    with pytest.raises(ValidationError):
        decode("012", 2)
    with pytest.raises(ValidationError):
        decode("001", 0)


def test_grammar_lengths():
    # WSUM(2) + literal 1 (1) + literal 1 (1) + BASIS 1 (3) + BASIS 4 (2 + 5)
    assert len(BELL) == 14
    assert tensor_overhead(2, 2) == 3
    t = encode_tensor("001", "001", 4, 2)
    assert len(t) == 3 + 3 + 3
    assert decode(t, 4).state == basis_state(1, 4)


def test_bell_output():
    out = decode(BELL, 4)
    assert out.state.coeffs == (GaussianRational(1), GaussianRational(0), GaussianRational(0), GaussianRational(1))


def test_uniform_sum():
    out = decode(encode_uniform_sum([1, 2, 3]), 4)
    assert [complex(c) for c in out.state.coeffs] == [1, 1, 1, 0]


def test_projector_output():
    out = decode(encode_proj([encode_basis(1), encode_wsum(1, 1, encode_basis(1), encode_basis(2))]), 3)
    assert out.kind == "projector" and out.rank == 2
    assert abs(out.projector()[2, 2]) < 1e-15
    assert out.density().trace().real == pytest.approx(1.0)


def test_output_key_is_projective():
    a = MachineOutput.of_state(ElementaryVector((GaussianRational(1), GaussianRational(1))))
    b = MachineOutput.of_state(ElementaryVector((GaussianRational(0, 2), GaussianRational(0, 2))))
    assert a.key == b.key


def test_output_encoding_roundtrip():
    out = decode(encode_proj([encode_basis(1), encode_basis(3)]), 3)
    assert MachineOutput.parse("projector", out.encode()) == out


def test_empty_budget():
    snap = enumerate_programs(2, (0, 100))
    assert len(snap) == 0 and snap.kraft_mass == 0


def test_tiny_budget_by_hand():
    snap = enumerate_programs(2, (6, 100))
    assert snap.programs() == {"001", "00010", "111001"}
    assert snap.kraft_mass == Fraction(1, 8) + Fraction(1, 32) + Fraction(1, 64)


@pytest.mark.parametrize("n, L", [(2, 10), (3, 10), (4, 12)])
def test_enumeration_matches_brute_force(n, L):
    snap = enumerate_programs(n, (L, 1000))
    scan = brute_force_scan(n, (L, 1000))
    assert sorted(snap.programs()) == sorted(p for p, _ in scan)
    assert snap.kraft_mass == sum((Fraction(1, 2 ** len(p)) for p, _ in scan), Fraction(0))


def test_frozen_kraft_masses():
    # frozen from brute_force_scan
    assert enumerate_programs(2, (12, 10_000)).kraft_mass == Fraction(791, 4096)
    assert enumerate_programs(4, (12, 10_000)).kraft_mass == Fraction(501, 2048)


def test_snapshot_monotone_in_length():
    small = enumerate_programs(2, (6, 1000)).programs()
    big = enumerate_programs(2, (8, 1000)).programs()
    assert small <= big


def test_parallel_enumeration_identical():
    a = enumerate_programs(4, (13, 1000))
    b = enumerate_programs(4, (13, 1000), workers=2)
    assert a.entries == b.entries


def test_budget_caps():
    with pytest.raises(ResourceError):
        enumerate_programs(2, (25, 10))
    with pytest.raises(ResourceError):
        enumerate_programs(2, (5, 10**8))
    with pytest.raises(ValidationError):
        enumerate_programs(2, (-1, 10))


@given(st.text(alphabet="01", min_size=1, max_size=16), st.sampled_from([2, 3, 4]))
def test_prefix_free_property(bits, n):
    if decode(bits, n):
        for k in range(1, len(bits)):
            assert not decode(bits[:k], n)


def _entry(program, i, n=2):
    return SnapshotEntry(program, MachineOutput.of_state(basis_state(i, n)))


def test_semimeasure_single_program():
    t = semimeasure(EnumerationSnapshot(2, (8, 10), (_entry("00101", 1),)))
    (row,) = list(t)
    assert row.mass == Fraction(1, 32) and row.shortest == 5


def test_semimeasure_additive():
    t = semimeasure(EnumerationSnapshot(2, (8, 10), (_entry("00101", 1), _entry("0010111", 1))))
    (row,) = list(t)
    assert row.mass == Fraction(1, 32) + Fraction(1, 128)
    assert row.shortest == 5 and len(row.programs) == 2


def test_coding_direction():
    import math

    t = semimeasure(enumerate_programs(4, (14, 1000)))
    for row in t:
        assert -math.log2(row.mass) <= row.shortest


def test_kraft_guard():
    entries = tuple(_entry(p, 1) for p in ("0", "1", "00"))
    with pytest.raises(ValidationError):
        EnumerationSnapshot(2, (2, 1), entries)


def test_with_programs_and_permuted():
    snap = enumerate_programs(4, (8, 100)).with_programs([BELL])
    assert BELL in snap.programs() and snap.extra
    with pytest.raises(ValidationError):
        snap.with_programs(["0"])
    perm = snap.permuted([1, 0, 3, 2])
    assert perm.kraft_mass == snap.kraft_mass
    e = [x for x in perm.entries if x.program == "001"][0]
    assert e.output.state == basis_state(2, 4)
