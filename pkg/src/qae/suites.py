"""Experiment orchestration: ``run(config)`` executes the requested suites
in a fixed order and collects a JSON-ready report.

Every value in a report is a deterministic function of the configuration;
wall-clock times live under the separate ``timing`` key.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

from . import caps, cloning, density, entropy, randomness
from .config import SUITES, RunConfig
from .elementary import basis_state
from .hermitian import EXP_COUNTEREXAMPLE, loewner_leq, op_func, random_pd_pair
from .machine import (
    EnumerationSnapshot,
    decode,
    encode_basis,
    encode_wsum,
    enumerate_programs,
)

REPORT_FORMAT = "qae-report v1"


def jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


@dataclass
class Check:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)


@dataclass
class SuiteResult:
    name: str
    checks: list[Check] = field(default_factory=list)
    data: dict = field(default_factory=dict)

    def add(self, name: str, passed, **values) -> bool:
        self.checks.append(Check(name, bool(passed), values))
        return bool(passed)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, **c.values} for c in self.checks],
            "data": self.data,
        }


@dataclass
class RunContext:
    config: RunConfig
    snapshot: EnumerationSnapshot | None = None
    ua: density.UniversalApprox | None = None

    def rng(self, salt: int) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, salt])

    def seed(self, salt: int) -> int:
        return int(self.rng(salt).integers(2**31))


# -- suites --

def suite_enumerate(ctx: RunContext) -> SuiteResult:
    cfg = ctx.config
    res = SuiteResult("enumerate")
    snap = ctx.snapshot or enumerate_programs(cfg.dim, cfg.budget, workers=cfg.workers)
    ctx.snapshot = snap
    res.add("kraft", snap.kraft_mass <= 1, kraft_mass=snap.kraft_mass)
    progs = sorted(snap.programs())
    pset = set(progs)
    clash = [p for p in progs if any(p[:i] in pset for i in range(1, len(p)))]
    res.add("prefix_free", not clash, violations=len(clash))
    res.data = {"entries": len(snap), "digest": snap.digest(), "outputs": len(snap.states()) + len(snap.projectors())}
    return res


def _ensure_mu(ctx: RunContext) -> density.UniversalApprox:
    if ctx.ua is None:
        if ctx.snapshot is None:
            suite_enumerate(ctx)
        ctx.ua = density.build_mu(ctx.snapshot, ctx.config.eps_reg, tol=ctx.config.tolerances)
    return ctx.ua


def suite_mu(ctx: RunContext) -> SuiteResult:
    ua = _ensure_mu(ctx)
    snap = ctx.snapshot
    n = ua.dim
    tol = ctx.config.tolerances
    res = SuiteResult("mu")
    res.add("psd", ua.mu.is_psd(), min_eigenvalue=ua.mu.eigenvalues[-1])
    res.add("trace", ua.trace <= 1 + tol.psd_tol, trace=ua.trace)
    floor = float(ua.eps_reg) / n
    res.add("regularizer", ua.mu.eigenvalues[-1] >= floor - tol.psd_tol, floor=floor)
    bad = [e.program for e in snap.entries if not loewner_leq(e.weight * e.output.density(), ua.mu, 1e-9)]
    res.add("domination", not bad, entries=len(snap), failures=len(bad))
    back = op_func(ua.kappa, lambda x: 2.0**-x, None).matrix
    res.add("kappa_roundtrip", np.max(np.abs(back - ua.mu.matrix)) <= tol.recon_tol)
    rng = ctx.rng(1)
    count = min(ctx.config.samples, 1000)
    jensen = {}
    for d in sorted({n, 2, 4, 8}):
        u = ua if d == n else density.build_mu(
            enumerate_programs(d, (min(ctx.config.budget[0], 12), ctx.config.budget[1])), ctx.config.eps_reg
        )
        jensen[d] = max(jensen_gap(u, rng) for _ in range(count))
    res.add("jensen", max(jensen.values()) <= 1e-9, worst=jensen, samples=count)
    worst = math.inf
    for _ in range(count):
        a, b = random_pd_pair(int(rng.integers(2, 5)), rng)
        la = op_func(a, np.log2, None)
        lb = op_func(b, np.log2, None)
        worst = min(worst, (lb - la).eigenvalues[-1])
    res.add("log_monotone", worst >= -1e-8, min_eigenvalue=worst)
    a, b = EXP_COUNTEREXAMPLE
    gap = (op_func(b, np.exp, None) - op_func(a, np.exp, None)).eigenvalues[-1]
    res.add("exp_not_monotone", loewner_leq(a, b) and gap < -1e-3, min_eigenvalue=gap)
    reports = [density.complexity_report(ua, basis_state(i, n), f"e{i}").to_dict() for i in range(1, n + 1)]
    res.data = {
        "mu_spectrum": ua.mu.eigenvalues,
        "kappa_spectrum": ua.kappa.eigenvalues,
        "trace": ua.trace,
        "eps_reg": ua.eps_reg,
        "reports": reports,
    }
    return res


def jensen_gap(ua: density.UniversalApprox, rng: np.random.Generator) -> float:
    """``H_lower - H_upper`` at a random state; never positive."""
    v = rng.standard_normal(ua.dim) + 1j * rng.standard_normal(ua.dim)
    return density.h_lower(ua, v) - density.h_upper(ua, v)


SUB_BUDGET_X = (6, 100)
SUB_BUDGET_XY = (15, 1000)


def suite_entropy(ctx: RunContext) -> SuiteResult:
    ua = _ensure_mu(ctx)
    res = SuiteResult("entropy")
    sand = [entropy.entropy_complexity_sandwich(ua, rho, w) for _, rho, w in entropy.enumerated_witnesses(ua)]
    res.add(
        "sandwich",
        all(s.ok for s in sand),
        witnesses=len(sand),
        min_c_left=min(s.c_left for s in sand),
        max_c_right=max(s.c_right for s in sand),
    )
    rng = ctx.rng(2)
    n = ua.dim
    worst = math.inf
    for _ in range(min(ctx.config.samples, 1000)):
        a = _random_density(n, rng)
        b = _random_density(n, rng)
        worst = min(worst, entropy.relative_entropy(a, b))
    res.add("relative_entropy_nonnegative", worst >= -1e-9, min_value=worst)
    basis = entropy.basis_complexities(ua)
    res.add("orthogonal_sequence", all(r["ok"] for r in basis),
            c_machine=max((abs(r["H_upper"] - r["K_t"]) for r in basis), default=0.0))
    ss = []
    for row in ua.table:
        if row.output.kind == "projector":
            v = row.output.orthonormal_basis()[:, 0]
            ss.append(entropy.small_subspace_upper_bounds(ua, row.output, v))
    res.add("small_subspace", all(r.lower_ok and r.upper_ok for r in ss), projectors=len(ss))

    sx = enumerate_programs(2, SUB_BUDGET_X)
    sxy = enumerate_programs(4, SUB_BUDGET_XY)
    ux = density.build_mu(sx, ctx.config.eps_reg)
    uxy = density.build_mu(sxy, ctx.config.eps_reg)
    e = np.eye(2)
    sub_ok, mono_ok = True, True
    for i in range(2):
        for j in range(2):
            sub_ok &= all(c.ok for c in entropy.subadditivity_check(ux, ux, uxy, (sx, sx, sxy), e[i], e[j]))
            mono_ok &= all(c.ok for c in entropy.monotonicity_check(ux, uxy, (sx, sxy), e[i], encode_basis(j + 1)))
    res.add("subadditivity", sub_ok)
    res.add("monotonicity", mono_ok)
    bell = entropy.bell_state_paradox(ux, uxy, encode_wsum(1, 1, encode_basis(1), encode_basis(4)))
    res.add("bell_paradox", abs(bell["S_X"] - 1) <= 1e-9 and bell["S_XY"] <= 1e-9 and bell["h_upper_monotone"], **bell)
    eps = 0.05
    lemma = entropy.approximation_lemma_boundary(eps, grid=41)
    res.add("approximation_lemma", lemma["min_overlap"] >= 1 - 2 * eps - 1e-9, **lemma)
    return res


def _random_density(n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    r = g @ g.conj().T
    return r / np.trace(r).real


def suite_tests(ctx: RunContext) -> SuiteResult:
    ua = _ensure_mu(ctx)
    n = ua.dim
    res = SuiteResult("tests")
    rng = ctx.rng(3)
    excess, dual = -math.inf, 0.0
    count = min(ctx.config.samples, 100)
    for _ in range(count):
        rho = _random_density(n, rng)
        t = randomness.build_test(ua, rho)
        excess = max(excess, t.trace_rho() - 1)
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        a = randomness.evaluate_test(t, v).value
        b = randomness.coordinate_value(ua.mu, rho, v).value
        dual = max(dual, abs(a - b) / max(1.0, abs(a)))
    res.add("test_property", excess <= 1e-9, max_excess=excess, samples=count)
    res.add("dual_path", dual <= 1e-9, max_rel_diff=dual)
    t = randomness.build_test(ua, np.eye(n) / n)
    red = 0.0
    for _ in range(count):
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        v /= np.linalg.norm(v)
        red = max(red, abs(randomness.evaluate_test(t, v).value - n * ua.mu.expectation(v)))
    res.add("uniform_reduction", red <= 1e-10, max_diff=red)
    rho = _random_density(n, rng)
    ml = []
    for row in ua.table:
        if row.output.kind == "projector":
            v = row.output.orthonormal_basis()[:, 0]
            ml.append(randomness.martin_lof_check(ua, row.shortest, row.output.projector(), rho, v))
    res.add("martin_lof_domination", all(r.ok for r in ml), terms=len(ml))
    c, ok = randomness.sum_form_domination(ua, rho)
    res.add("sum_form_domination", ok, constant=c)
    res.data = {"uniform_test_spectrum": t.spectrum()}
    return res


def suite_clone(ctx: RunContext) -> SuiteResult:
    cfg = ctx.config
    res = SuiteResult("clone")
    for n, m in ((2, 2), (2, 3), (3, 2), (4, 2)):
        s = cloning.symmetric_projector(n, m)
        res.add(f"dim_S_{n}_{m}", round(s.projector.trace()) == s.dim == math.comb(m + n - 1, m), dim=s.dim)
    n, m = cfg.dim, cfg.fold
    sym = cloning.symmetric_projector(n, m)
    tw = cloning.twirl_average(n, m, max(cfg.samples, 2), ctx.seed(4))
    dev = np.abs(tw.mean - sym.projector.matrix / sym.dim)
    res.add("twirl", bool(np.all(dev <= 5 * tw.stderr + 1e-12)), samples=tw.samples)
    if n**m <= 16:
        prog = cloning.symmetric_projector_program(n, m)
        snap = enumerate_programs(n**m, cfg.budget, workers=cfg.workers).with_programs([prog])
        ua = density.build_mu(snap, cfg.eps_reg, projector_witness=True)
        rep = cloning.cloning_bounds(ua, n, m, max(cfg.samples, 2), ctx.seed(5))
        res.add("cloning_upper", rep.upper_ok, bound=rep.upper_bound, max_h_upper=rep.max_h_upper)
        res.add("cloning_lower", rep.lower_ok, log_binom=math.log2(rep.binom), estimate=rep.lower_estimate)
    rng = ctx.rng(6)
    res.add("u_identity", cloning.unevenness(np.eye(n)).u == 1 / n)
    worst = -math.inf
    for _ in range(min(cfg.samples, 200)):
        r = cloning.overlap_sup_check(cloning.random_symmetric(n, rng), 64, int(rng.integers(2**31)))
        worst = max(worst, r.search_max - r.u)
        if not (r.upper_ok and r.witness_ok):
            break
    res.add("overlap_sup", worst <= 1e-9, worst_excess=worst)
    if n <= 4:
        for d in (1, 2):
            if d < n * (n + 1) // 2:
                ab = cloning.algebraic_bound_check(n, d, min(cfg.samples, 1000), ctx.seed(7 + d))
                res.add(f"algebraic_bound_d{d}", ab.ok, bound=ab.bound, empirical_min=ab.empirical_min)
    return res


CAP_GRID_N = (4, 8, 16, 32, 64, 128, 256, 512)
CAP_GRID_Y = tuple(round(0.05 * k, 2) for k in range(1, 21))


def suite_caps(ctx: RunContext) -> SuiteResult:
    cfg = ctx.config
    res = SuiteResult("caps")
    worst = max(caps.sphere_identity_residual(n) for n in range(2, 513))
    strict = all(caps.log_ball_volume(n - 1) < caps.log_sphere_volume(n) for n in range(2, 513))
    res.add("sphere_identity", worst <= 1e-12 and strict, max_residual=worst)
    margin = min(
        caps.cap_fraction_bound(n, y, cfg.cap_bound_C) - caps.cap_fraction_exact(caps.CapQuery(n, math.pi / 2 - y))
        for n in CAP_GRID_N
        for y in CAP_GRID_Y
    )
    res.add("cap_bound_sweep", margin >= 0, min_margin=margin, C=cfg.cap_bound_C)
    res.add("laplace", all(caps.laplace_gap(y) < 0 for y in CAP_GRID_Y))
    q = caps.CapQuery(4, math.pi / 3)
    est, se = caps.cap_fraction_montecarlo(q, max(cfg.samples, 2), ctx.seed(8))
    exact = caps.cap_fraction_exact(q)
    res.add("cap_montecarlo", abs(est - exact) <= 4 * se, estimate=est, stderr=se, exact=exact)
    ok = True
    rows = []
    for n, k, m in ((3, 2, 1), (4, 4, 2), (5, 6, 2), (6, 10, 2)):
        sc = caps.CountingScenario(n, k, m)
        p, se = caps.counting_montecarlo(sc, max(cfg.samples, 2), ctx.seed(9 + n))
        bound = cfg.counting_C * caps.counting_lemma_fraction(sc)
        ok &= p <= bound
        rows.append({"n": n, "k": k, "m": m, "fraction": p, "stderr": se, "bound": bound})
    res.add("counting_lemma", ok, scenarios=rows)
    return res


def suite_kq(ctx: RunContext) -> SuiteResult:
    cfg = ctx.config
    res = SuiteResult("kq-scenario")
    rep = caps.kq_lowerbound_scenario(cfg.qubits, cfg.budget, max(cfg.samples, 2), ctx.seed(10))
    res.add("kq_above_threshold", rep.all_above and not rep.degenerate, **rep.to_dict())
    res.add("exponent_negative", all(caps.kq_exponent(n) < 0 for n in range(17, 513)), root=caps.kq_exponent_root())
    return res


SUITE_FUNCS = {
    "enumerate": suite_enumerate,
    "mu": suite_mu,
    "entropy": suite_entropy,
    "tests": suite_tests,
    "clone": suite_clone,
    "caps": suite_caps,
    "kq-scenario": suite_kq,
}


@dataclass
class RunReport:
    config: dict
    suites: dict
    digest: str | None
    timing: dict

    @property
    def passed(self) -> bool:
        return all(s["passed"] for s in self.suites.values())

    def to_dict(self) -> dict:
        return jsonable({
            "format": REPORT_FORMAT,
            "config": self.config,
            "suites": self.suites,
            "snapshot_digest": self.digest,
            "passed": self.passed,
            "timing": self.timing,
        })

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def run(config: RunConfig, snapshot: EnumerationSnapshot | None = None) -> tuple[RunReport, RunContext]:
    """Execute ``config.suites`` in the canonical order."""
    config.validate()
    ctx = RunContext(config, snapshot)
    suites, timing = {}, {}
    for name in SUITES:
        if name not in config.suites:
            continue
        t0 = time.perf_counter()
        suites[name] = SUITE_FUNCS[name](ctx).to_dict()
        timing[name] = time.perf_counter() - t0
    digest = ctx.snapshot.digest() if ctx.snapshot is not None else None
    return RunReport(config.to_dict(), jsonable(suites), digest, timing), ctx
