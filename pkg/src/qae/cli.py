"""``qae`` command line.

Exit status: 0 success, 1 a failed check, 2 bad configuration or input
text, 3 a resource cap was exceeded, 4 an I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys

import numpy as np

from . import caps, cloning, density, randomness, storage
from .config import SUITES, RunConfig, load_config
from .elementary import ElementaryVector, basis_state, bitstring_state
from .errors import IntegrityError, ParseError, ResourceError, ValidationError
from .machine import enumerate_programs
from .suites import jsonable, run

log = logging.getLogger("qae")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAP, EXIT_IO = 0, 1, 2, 3, 4


def parse_state(text: str, dim: int):
    """``e3`` (basis vector, 1-based), ``b0101`` (bit string), the
    elementary encoding ``2;1/1+0/1i,0/1+1/1i`` or a comma-separated list
    of complex amplitudes such as ``1,1j``.

    The exact forms come back as an :class:`ElementaryVector` so reports
    can look up their ``K_t``; amplitude lists as a unit numpy vector.
    """
    text = text.strip()
    if ";" in text:
        v = ElementaryVector.parse(text)
    elif text.startswith("e") and text[1:].isdigit():
        v = basis_state(int(text[1:]), dim)
    elif text.startswith("b") and set(text[1:]) <= {"0", "1"} and text[1:]:
        v = bitstring_state(text[1:])
    else:
        try:
            v = np.array([complex(x.replace(" ", "")) for x in text.split(",")])
        except ValueError:
            raise ParseError(f"cannot parse state {text!r}") from None
    return v if isinstance(v, ElementaryVector) and v.dim == dim and not v.is_zero() else density.state_vector(v, dim)


def read_matrix(path: str) -> np.ndarray:
    """Rows of ``re im`` pairs; ``#`` starts a comment."""
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].split()
            if not line:
                continue
            if len(line) % 2:
                raise ParseError("expected 're im' pairs", line=lineno)
            try:
                nums = [float(x) for x in line]
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            rows.append([complex(nums[i], nums[i + 1]) for i in range(0, len(nums), 2)])
    m = np.array(rows)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ParseError(f"{path}: expected a square matrix")
    return m


def _snapshot(cfg: RunConfig, path: str | None = None):
    if path:
        return storage.load_snapshot(path)
    return enumerate_programs(cfg.dim, cfg.budget, workers=cfg.workers)


def _emit(obj: dict, out: str | None) -> None:
    text = json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands; each returns (payload, passed) --

def cmd_mu(cfg, args):
    snap = _snapshot(cfg, args.snapshot)
    ua = density.build_mu(snap, cfg.eps_reg, tol=cfg.tolerances)
    out = {
        "dim": ua.dim,
        "budget": list(cfg.budget),
        "entries": len(snap),
        "kraft_mass": snap.kraft_mass,
        "trace": ua.trace,
        "mu_spectrum": ua.mu.eigenvalues,
        "kappa_spectrum": ua.kappa.eigenvalues,
        "digest": snap.digest(),
    }
    states = args.state or [f"e{i}" for i in range(1, ua.dim + 1)]
    out["reports"] = [density.complexity_report(ua, parse_state(s, ua.dim), s, snap).to_dict() for s in states]
    return out, ua.mu.is_psd()


def cmd_verify(cfg, args):
    report, _ = run(cfg)
    d = report.to_dict()
    if args.figures:
        from .plotting import render_figures

        d["figures"] = render_figures(d, args.figures)
    return d, report.passed


def cmd_test(cfg, args):
    snap = _snapshot(cfg, args.snapshot)
    ua = density.build_mu(snap, cfg.eps_reg, tol=cfg.tolerances)
    rho = read_matrix(args.rho) if args.rho else np.eye(ua.dim) / ua.dim
    t = randomness.build_test(ua, rho)
    states = args.state or [f"e{i}" for i in range(1, ua.dim + 1)]
    rows = []
    for s in states:
        v = parse_state(s, ua.dim)
        val = randomness.evaluate_test(t, v)
        rows.append({"state": s, "value": val.value, "deficiency": val.deficiency})
    excess = t.trace_rho() - 1
    return {"trace_rho": t.trace_rho(), "spectrum": t.spectrum(), "values": rows}, excess <= 1e-9


def cmd_clone(cfg, args):
    n, m = cfg.dim, cfg.fold
    sym = cloning.symmetric_projector(n, m)
    tw = cloning.twirl_average(n, m, cfg.samples, cfg.seed)
    dev = np.abs(tw.mean - sym.projector.matrix / sym.dim)
    twirl_ok = bool(np.all(dev <= 5 * tw.stderr + 1e-12))
    snap = enumerate_programs(n**m, cfg.budget, workers=cfg.workers).with_programs([cloning.symmetric_projector_program(n, m)])
    ua = density.build_mu(snap, cfg.eps_reg, projector_witness=True)
    rep = cloning.cloning_bounds(ua, n, m, cfg.samples, cfg.seed)
    out = {"dim_S": sym.dim, "binom": math.comb(m + n - 1, m), "twirl_ok": twirl_ok, "bounds": rep.__dict__}
    return out, twirl_ok and rep.upper_ok and rep.lower_ok


def cmd_uneven(cfg, args):
    if args.matrix:
        a = read_matrix(args.matrix)
        r = cloning.overlap_sup_check(a, cfg.samples, cfg.seed)
        return {"u": r.u, "search_max": r.search_max, "witness": r.witness_value}, r.upper_ok and r.witness_ok
    rep = cloning.algebraic_bound_check(cfg.dim, args.subspace_dim, args.trials, cfg.seed)
    return rep.__dict__, rep.ok


def cmd_caps(cfg, args):
    q = caps.CapQuery(args.n, args.alpha)
    exact = caps.cap_fraction_exact(q)
    est, se = caps.cap_fraction_montecarlo(q, cfg.samples, cfg.seed)
    out = {"n": q.n, "alpha": q.alpha, "exact": exact, "beta": caps.cap_fraction_beta(q), "montecarlo": est, "stderr": se}
    y = math.pi / 2 - q.alpha
    if 0 < y <= math.pi / 2:
        out["bound"] = caps.cap_fraction_bound(q.n, y, cfg.cap_bound_C)
    return out, abs(est - exact) <= 4 * se + 1e-12 and exact <= out.get("bound", math.inf)


def cmd_kq(cfg, args):
    rep = caps.kq_lowerbound_scenario(cfg.qubits, cfg.budget, cfg.samples, cfg.seed)
    return rep.to_dict(), rep.all_above and not rep.degenerate


def cmd_snapshot(cfg, args):
    if args.action == "write":
        snap = enumerate_programs(cfg.dim, cfg.budget, workers=cfg.workers)
        digest = storage.save_snapshot(snap, args.path)
    else:
        snap = storage.load_snapshot(args.path)
        digest = snap.digest()
    return {"path": args.path, "dim": snap.dim, "entries": len(snap), "kraft_mass": snap.kraft_mass, "digest": digest}, True


COMMANDS = {
    "mu": cmd_mu,
    "verify": cmd_verify,
    "test": cmd_test,
    "clone": cmd_clone,
    "uneven": cmd_uneven,
    "caps": cmd_caps,
    "kq-scenario": cmd_kq,
    "snapshot": cmd_snapshot,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", help="key = value configuration file")
    g.add_argument("--seed", help="64-bit RNG seed")
    g.add_argument("--out", help="write JSON here instead of stdout")
    g.add_argument("--budget", help="enumeration budget 'L,T'")
    g.add_argument("--dim", help="Hilbert space dimension N")
    g.add_argument("--eps-reg", help="regularizer weight, e.g. 1/65536")
    g.add_argument("--samples", help="Monte-Carlo sample count")
    g.add_argument("--workers", help="enumeration processes")
    g.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="qae", description="Resource-bounded algorithmic entropy of quantum states.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mu", parents=[common], help="build μ_t and report state complexities")
    s.add_argument("--state", action="append", help="e3, b01 or 1,1j (repeatable)")
    s.add_argument("--snapshot", help="load the enumeration from a snapshot file")

    s = sub.add_parser("verify", parents=[common], help="run the verification suites")
    s.add_argument("--suite", action="append", choices=SUITES, help="suite to run (repeatable)")
    s.add_argument("--all", action="store_true", help="run every suite")
    s.add_argument("--fold", help="clone count m")
    s.add_argument("--qubits", help="qubits for the Kq scenario")
    s.add_argument("--figures", metavar="DIR", help="also render PNG figures into DIR")

    s = sub.add_parser("test", parents=[common], help="evaluate the universal test T″_ρ")
    s.add_argument("--rho", help="density matrix file (rows of 're im' pairs); default uniform")
    s.add_argument("--state", action="append")
    s.add_argument("--snapshot")

    s = sub.add_parser("clone", parents=[common], help="cloning bounds on the symmetric subspace")
    s.add_argument("--fold", help="clone count m")

    s = sub.add_parser("uneven", parents=[common], help="unevenness of subspaces or a matrix")
    s.add_argument("--subspace-dim", type=int, default=1)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--matrix", help="symmetric matrix file (rows of 're im' pairs)")

    s = sub.add_parser("caps", parents=[common], help="spherical cap fraction: quadrature, bound, Monte-Carlo")
    s.add_argument("--n", type=int, default=4, help="ambient real dimension")
    s.add_argument("--alpha", type=float, default=math.pi / 3, help="cap half-angle")

    s = sub.add_parser("kq-scenario", parents=[common], help="Kq lower-bound scenario")
    s.add_argument("--qubits", help="number of qubits n")

    s = sub.add_parser("snapshot", parents=[common], help="write or check an enumeration snapshot")
    s.add_argument("action", choices=("write", "read"))
    s.add_argument("path")
    return p


_OVERRIDES = ("seed", "budget", "dim", "eps_reg", "samples", "workers", "fold", "qubits")


def config_from_args(args, environ=None) -> RunConfig:
    cli = {k: getattr(args, k) for k in _OVERRIDES if getattr(args, k, None) is not None}
    if getattr(args, "all", False):
        cli["suites"] = ",".join(SUITES)
    elif getattr(args, "suite", None):
        cli["suites"] = ",".join(args.suite)
    if args.out:
        cli["output_path"] = args.out
    return load_config(args.config, environ, cli)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(args)
        payload, passed = COMMANDS[args.command](cfg, args)
        _emit(payload, args.out)
    except ResourceError as exc:
        log.error("resource cap: %s", exc)
        return EXIT_CAP
    except (ParseError, ValidationError, IntegrityError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return EXIT_IO
    if not passed:
        log.error("one or more checks failed")
        return EXIT_FAIL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
