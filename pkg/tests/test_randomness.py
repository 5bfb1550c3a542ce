import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qae.density import UniversalApprox, build_mu
from qae.errors import DomainError, ValidationError
from qae.machine import decode, encode_basis, encode_proj, enumerate_programs
from qae.randomness import (
    build_test,
    coordinate_value,
    evaluate_test,
    martin_lof_check,
    martin_lof_term,
    sum_form_domination,
    test_domination_constant as domination_constant,
)


def random_density(n, rng, rank=None):
    g = rng.standard_normal((n, rank or n)) + 1j * rng.standard_normal((n, rank or n))
    r = g @ g.conj().T
    return r / np.trace(r).real


def random_state(n, rng):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


@pytest.fixture(scope="module")
def ua4():
    prog = encode_proj([encode_basis(1), encode_basis(2)])
    return build_mu(enumerate_programs(4, (13, 10_000)).with_programs([prog]))


def test_uniform_rho(ua4, rng):
    t = build_test(ua4, np.eye(4) / 4)
    np.testing.assert_allclose(t.op.matrix, 4 * ua4.mu.matrix, atol=1e-12)
    for _ in range(20):
        v = random_state(4, rng)
        assert evaluate_test(t, v).value == pytest.approx(4 * ua4.mu.expectation(v), abs=1e-10)


def test_rho_proportional_to_mu(ua4):
    rho = ua4.mu.matrix / ua4.trace
    t = build_test(ua4, rho)
    # ρ^{-1/2} μ ρ^{-1/2} = Tr μ · I
    np.testing.assert_allclose(t.op.matrix, ua4.trace * np.eye(4), atol=1e-10)
    assert t.trace_rho() == pytest.approx(ua4.trace, abs=1e-12)


def test_rank_one_rho(ua4, rng):
    v = random_state(4, rng)
    t = build_test(ua4, np.outer(v, v.conj()))
    assert evaluate_test(t, v).value == pytest.approx(ua4.mu.expectation(v), abs=1e-12)
    assert evaluate_test(t, 1j * v).value == pytest.approx(ua4.mu.expectation(v), abs=1e-12)
    assert evaluate_test(t, random_state(4, rng)).value == math.inf


def test_off_support_infinite(ua4):
    t = build_test(ua4, np.diag([0.5, 0.5, 0, 0]))
    assert evaluate_test(t, [0, 0, 1, 0]).value == math.inf
    assert evaluate_test(t, [0, 0, 1, 0]).deficiency == math.inf
    assert math.isfinite(evaluate_test(t, [1, 1, 0, 0]).value)
    assert coordinate_value(ua4.mu, t.rho, [0, 0, 1, 0]).value == math.inf


def test_half_uniform_mu(rng):
    ua = UniversalApprox.from_operator(np.eye(3) / 6)
    t = build_test(ua, np.eye(3) / 3)
    for _ in range(5):
        assert evaluate_test(t, random_state(3, rng)).value == pytest.approx(0.5)


@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_test_property_and_dual_path(n, seed):
    rng = np.random.default_rng(seed)
    ua = build_mu(enumerate_programs(n, (10, 1000)))
    rho = random_density(n, rng)
    t = build_test(ua, rho)
    assert t.trace_rho() <= 1 + 1e-9
    v = random_state(n, rng)
    a = evaluate_test(t, v).value
    b = coordinate_value(ua.mu, rho, v).value
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9)


def test_dimension_mismatch(ua4):
    with pytest.raises(ValidationError):
        build_test(ua4, np.eye(2) / 2)


def test_martin_lof_term_examples():
    p = np.diag([1.0, 1.0, 0, 0])
    assert martin_lof_term(5, p, np.eye(4) / 4, [0, 0, 1, 0]) == -math.inf
    # Tr(Pρ) = 2^{-3}, K = 5
    rho = np.diag([1 / 16, 1 / 16, 7 / 16, 7 / 16])
    assert martin_lof_term(5, p, rho, [1, 0, 0, 0]) == pytest.approx(3 - 5)
    # uniform ρ: log N - log d - K
    assert martin_lof_term(4, p, np.eye(4) / 4, [1, 1, 0, 0]) == pytest.approx(2 - 1 - 4)
    with pytest.raises(DomainError):
        martin_lof_term(1, p, np.diag([0, 0, 0.5, 0.5]), [1, 0, 0, 0])


def test_martin_lof_domination(ua4, rng):
    out = decode(encode_proj([encode_basis(1), encode_basis(2)]), 4)
    row = ua4.table.lookup(out)
    for _ in range(10):
        rho = random_density(4, rng)
        rep = martin_lof_check(ua4, row.shortest, out.projector(), rho, random_state(4, rng))
        assert rep.ok
        # enumerated witness: the constant never exceeds what the weight 2^{-K} buys
        assert rep.constant <= math.log2(ua4.dim / float(ua4.eps_reg)) + 1e-9


def test_domination_constant_of_mu_itself(ua4, rng):
    rho = random_density(4, rng)
    # F = ρ^{-1/2} μ ρ^{-1/2} is T″ itself: constant 0
    f = build_test(ua4, rho).op.matrix
    assert domination_constant(ua4, rho, f) == pytest.approx(0, abs=1e-8)


def test_sum_form_domination(ua4, rng):
    for _ in range(5):
        c, ok = sum_form_domination(ua4, random_density(4, rng))
        assert ok
    assert c == pytest.approx(4 * float(ua4.table.total_mass()) / float(ua4.eps_reg))
    with pytest.raises(ValidationError):
        sum_form_domination(ua4, np.diag([1.0, 0, 0, 0]))
