"""Exit criteria, each at its stated tolerance and time budget.

Every test records a PASS/FAIL line that the terminal summary prints.
"""

import json
import math
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from qae import caps, cloning, density, entropy, randomness
from qae.config import COUNTING_C, RunConfig, SUITES
from qae.hermitian import EXP_COUNTEREXAMPLE, loewner_leq, op_func, random_pd_pair
from qae.machine import decode, encode_basis, encode_wsum, enumerate_programs
from qae.suites import run

pytestmark = pytest.mark.acceptance


class Clock:
    def __init__(self, limit):
        self.limit = limit
        self.start = time.perf_counter()

    @property
    def ok(self):
        return time.perf_counter() - self.start <= self.limit


def random_state(n, rng):
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_density(n, rng):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    r = g @ g.conj().T
    return r / np.trace(r).real


def test_01_kraft_prefix(record_criterion):
    clock = Clock(120)
    ok = True
    for n in (2, 4):
        accepted = {
            bits
            for length in range(1, 13)
            for bits in ("".join(t) for t in product("01", repeat=length))
            if decode(bits, n)
        }
        clash = [p for p in accepted if any(p[:k] in accepted for k in range(1, len(p)))]
        ok &= not clash
        ok &= accepted == enumerate_programs(n, (12, 10**6)).programs()
    for n in (2, 4, 8):
        for L in range(4, 17, 4):
            snap = enumerate_programs(n, (L, 10**6))
            exact = sum((Fraction(1, 2 ** len(p)) for p in snap.programs()), Fraction(0))
            ok &= snap.kraft_mass == exact <= 1
    assert record_criterion(1, "Kraft/prefix suite", ok and clock.ok)


def test_02_domination(record_criterion):
    clock = Clock(60)
    snap = enumerate_programs(2, (12, 10_000))
    ua = density.build_mu(snap)
    ok = len(snap) > 0 and all(loewner_leq(float(e.weight) * e.output.density(), ua.mu, 1e-9) for e in snap.entries)
    assert record_criterion(2, "Domination suite", ok and clock.ok)


def test_03_jensen_order(record_criterion):
    clock = Clock(120)
    rng = np.random.default_rng(3)
    jensen = True
    for n in (2, 4, 8):
        ua = density.build_mu(enumerate_programs(n, (12, 10_000)))
        for _ in range(1000):
            v = random_state(n, rng)
            jensen &= density.h_lower(ua, v) <= density.h_upper(ua, v) + 1e-9
    mono = True
    for _ in range(1000):
        a, b = random_pd_pair(int(rng.integers(2, 6)), rng)
        mono &= loewner_leq(op_func(a, np.log2, None), op_func(b, np.log2, None), 1e-8)
    a, b = EXP_COUNTEREXAMPLE
    counter = loewner_leq(a, b) and not loewner_leq(op_func(a, np.exp, None), op_func(b, np.exp, None))
    assert record_criterion(3, "Jensen/order suite", jensen and mono and counter and clock.ok)


def test_04_gap_example(record_criterion):
    clock = Clock(1)
    ua = density.gap_example_mu(16)
    psi = density.gap_example_state(16)
    hl, hu = density.h_lower(ua, psi), density.h_upper(ua, psi)
    ok = hl <= 1.1 and abs(hu - 2.0) <= 0.2
    assert record_criterion(4, "Gap example (log N)/2", ok and clock.ok)


def test_05_entropy_sandwich(record_criterion):
    clock = Clock(120)
    ua = density.build_mu(enumerate_programs(2, (12, 10_000)))
    reps = [entropy.entropy_complexity_sandwich(ua, rho, w, slack=1e-6) for _, rho, w in entropy.enumerated_witnesses(ua)]
    ok = len(reps) > 2 and all(r.ok for r in reps)
    # the stated two-sided form with c = -log Tr μ and c' = -log w
    ok &= all(r.S <= r.avg_complexity - math.log2(r.trace_mu) + 1e-6 for r in reps)
    ok &= all(r.avg_complexity <= r.S - math.log2(r.weight) + 1e-6 for r in reps)
    rng = np.random.default_rng(5)
    ok &= min(entropy.relative_entropy(random_density(3, rng), random_density(3, rng)) for _ in range(1000)) >= -1e-9
    assert record_criterion(5, "Entropy sandwich", ok and clock.ok)


def test_06_subadditivity_monotonicity(record_criterion):
    clock = Clock(60)
    sx = enumerate_programs(2, (6, 100))
    sxy = enumerate_programs(4, (15, 1000))
    ux, uxy = density.build_mu(sx), density.build_mu(sxy)
    e = np.eye(2)
    ok = True
    for i in range(2):
        for j in range(2):
            ok &= all(c.ok for c in entropy.subadditivity_check(ux, ux, uxy, (sx, sx, sxy), e[i], e[j]))
            ok &= all(c.ok for c in entropy.monotonicity_check(ux, uxy, (sx, sxy), e[i], encode_basis(j + 1)))
    bell = entropy.bell_state_paradox(ux, uxy, encode_wsum(1, 1, encode_basis(1), encode_basis(4)))
    ok &= abs(bell["S_X"] - 1.0) <= 1e-9 and bell["S_XY"] <= 1e-9 and bell["S_X"] > bell["S_XY"]
    ok &= bell["h_upper_monotone"]
    assert record_criterion(6, "Subadditivity/monotonicity", ok and clock.ok)


def test_07_universal_test(record_criterion):
    clock = Clock(60)
    ua = density.build_mu(enumerate_programs(4, (13, 10_000)))
    rng = np.random.default_rng(7)
    ok = True
    for _ in range(100):
        rho = random_density(4, rng)
        t = randomness.build_test(ua, rho)
        ok &= t.trace_rho() - 1 <= 1e-9
        v = random_state(4, rng)
        a = randomness.evaluate_test(t, v).value
        b = randomness.coordinate_value(ua.mu, rho, v).value
        ok &= abs(a - b) <= 1e-9 * max(1.0, abs(a))
    t = randomness.build_test(ua, np.eye(4) / 4)
    for _ in range(100):
        v = random_state(4, rng)
        ok &= abs(randomness.evaluate_test(t, v).value - 4 * ua.mu.expectation(v)) <= 1e-10
    assert record_criterion(7, "Universal-test suite", ok and clock.ok)


def test_08_cloning(record_criterion):
    clock = Clock(300)
    ok = all(
        cloning.symmetric_projector(n, m).dim == math.comb(m + n - 1, m)
        and round(cloning.symmetric_projector(n, m).projector.trace()) == math.comb(m + n - 1, m)
        for n, m in ((2, 2), (2, 3), (3, 2), (4, 2))
    )
    tw = cloning.twirl_average(2, 2, 10_000, seed=8)
    sym = cloning.symmetric_projector(2, 2)
    ok &= bool(np.all(np.abs(tw.mean - sym.projector.matrix / sym.dim) <= 5 * tw.stderr + 1e-12))
    snap = enumerate_programs(4, (12, 10_000)).with_programs([cloning.symmetric_projector_program(2, 2)])
    ua = density.build_mu(snap, projector_witness=True)
    rep = cloning.cloning_bounds(ua, 2, 2, 10_000, seed=8)
    ok &= rep.lower_estimate >= math.log2(3) - 0.1
    assert record_criterion(8, "Cloning suite", ok and clock.ok)


def test_09_unevenness(record_criterion):
    clock = Clock(300)
    ok = all(cloning.unevenness(np.eye(n)).u == 1 / n for n in (2, 3, 4))
    ok &= all(cloning.unevenness(np.outer(v, v)).u == 1.0 for v in ([1, 1], [1, 0, 2], [1, 2, 2, 0]))
    rng = np.random.default_rng(9)
    for k in range(1000):
        n = 2 + k % 3
        r = cloning.overlap_sup_check(cloning.random_symmetric(n, rng), 64, int(rng.integers(2**31)))
        ok &= r.search_max <= r.u + 1e-9 and r.witness_value >= r.u - 1e-6
    for d, bound in ((1, 1 / 3), (2, 2 / 3)):
        ab = cloning.algebraic_bound_check(2, d, 10_000, seed=90 + d)
        ok &= ab.bound == pytest.approx(bound) and ab.empirical_min >= bound - 1e-6
    assert record_criterion(9, "Unevenness suite", ok and clock.ok)


def test_10_cap_geometry(record_criterion):
    clock = Clock(600)
    ok = all(
        caps.sphere_identity_residual(n) <= 1e-12 and caps.log_ball_volume(n - 1) < caps.log_sphere_volume(n)
        for n in range(2, 513)
    )
    grid_n = (4, 8, 16, 32, 64, 128, 256, 512)
    grid_y = [round(0.05 * k, 2) for k in range(1, 21)]
    ok &= all(
        caps.cap_fraction_exact(caps.CapQuery(n, math.pi / 2 - y)) <= caps.cap_fraction_bound(n, y)
        for n in grid_n
        for y in grid_y
    )
    q = caps.CapQuery(4, math.pi / 3)
    est, se = caps.cap_fraction_montecarlo(q, 10**6, seed=10)
    ok &= abs(est - caps.cap_fraction_exact(q)) <= 4 * se
    for n in range(1, 7):
        for k in (0, 2, 5, 10):
            sc = caps.CountingScenario(n, k, 2)
            p, _ = caps.counting_montecarlo(sc, 20_000, seed=100 + 11 * n + k)
            ok &= p <= COUNTING_C * caps.counting_lemma_fraction(sc)
    assert record_criterion(10, "Cap-geometry suite", ok and clock.ok)


def test_11_kq_scenario(record_criterion):
    clock = Clock(120)
    rep = caps.kq_lowerbound_scenario(4, (12, 10_000), 1000, seed=11)
    ok = not rep.degenerate and rep.all_above and rep.kq_min >= 3
    # the exponent changes sign at about 4.31 for c = 0, so every n >= 17 is negative
    ok &= all(caps.kq_exponent(n, c=0.0) < 0 for n in range(17, 1025))
    ok &= caps.kq_exponent_root(0.0) < 17
    assert record_criterion(11, "Kq scenario", ok and clock.ok)


def test_12_reproducibility(record_criterion):
    cfg = RunConfig(suites=SUITES, samples=300, seed=2024)
    first, _ = run(cfg)
    second, _ = run(cfg)
    a, b = first.to_dict(), second.to_dict()
    a.pop("timing")
    b.pop("timing")
    same = json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert record_criterion(12, "Reproducibility", same and first.passed)
