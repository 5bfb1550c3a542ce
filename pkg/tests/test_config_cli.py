import json
from fractions import Fraction

import numpy as np
import pytest

from qae.cli import main, parse_state, read_matrix
from qae.config import RunConfig, apply_overrides, env_overrides, load_config, parse_config_text
from qae.errors import ParseError, ResourceError, ValidationError


def test_config_roundtrip():
    cfg = parse_config_text("dim = 4  # comment\nbudget = 10, 500\nseed = 7\neps_reg = 1/1024\npsd_tol = 1e-9\nsuites = mu, caps\n")
    assert cfg.dim == 4 and cfg.budget == (10, 500) and cfg.eps_reg == Fraction(1, 1024)
    assert cfg.tolerances.psd_tol == 1e-9 and cfg.suites == ("mu", "caps")
    assert parse_config_text(cfg.dumps()) == cfg


def test_config_errors_carry_line():
    with pytest.raises(ParseError) as err:
        parse_config_text("dim = 2\n\nfoo = 1\n")
    assert err.value.line == 3
    with pytest.raises(ParseError) as err:
        parse_config_text("dim 2\n")
    assert err.value.line == 1
    with pytest.raises(ParseError):
        parse_config_text("budget = 12\n")


def test_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed = 1\ndim = 3\nsamples = 50\n")
    cfg = load_config(path, environ={"QAE_SEED": "2", "QAE_DIM": "5"}, cli={"dim": "4"})
    assert (cfg.seed, cfg.dim, cfg.samples) == (2, 4, 50)


def test_env_prefix():
    assert env_overrides({"QAE_BUDGET": "8,10", "HOME": "/"}) == {"budget": "8,10"}


def test_caps_and_validation():
    with pytest.raises(ResourceError):
        load_config(environ={}, cli={"budget": "30,5"})
    with pytest.raises(ValidationError):
        RunConfig(suites=("nope",)).validate()
    with pytest.raises(ValidationError):
        apply_overrides(RunConfig(), {"eps_reg": "3/2"}).validate()


def test_parse_state():
    from qae.density import state_vector
    from qae.elementary import ElementaryVector

    assert isinstance(parse_state("e2", 3), ElementaryVector)
    np.testing.assert_allclose(state_vector(parse_state("e2", 3)), [0, 1, 0])
    np.testing.assert_allclose(state_vector(parse_state("b10", 4)), [0, 0, 1, 0])
    np.testing.assert_allclose(parse_state("1,1j", 2), np.array([1, 1j]) / 2**0.5)
    np.testing.assert_allclose(state_vector(parse_state("2;1/1+0/1i,0/1+1/1i", 2)), np.array([1, 1j]) / 2**0.5)
    with pytest.raises(ValidationError):
        parse_state("1,0", 3)
    with pytest.raises(ValidationError):
        parse_state("2;1/1+0/1i,0/1+1/1i", 3)
    with pytest.raises(ParseError):
        parse_state("x,y", 2)


def test_read_matrix(tmp_path):
    p = tmp_path / "rho.txt"
    p.write_text("# uniform qubit\n0.5 0  0 0\n0 0  0.5 0\n")
    np.testing.assert_allclose(read_matrix(p), np.eye(2) / 2)
    p.write_text("0.5 0 0\n")
    with pytest.raises(ParseError):
        read_matrix(p)


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_cli_mu(capsys):
    code, out = run_cli(capsys, "mu", "--dim", "2", "--state", "e1", "--state", "1,1")
    assert code == 0
    assert out["kraft_mass"] == "791/4096"
    assert out["reports"][0]["K_t"] == 3


def test_cli_empty_verify(capsys):
    code, out = run_cli(capsys, "verify")
    assert code == 0 and out["suites"] == {} and out["config"]["dim"] == 2


def test_cli_verify_entropy(capsys):
    code, out = run_cli(capsys, "verify", "--suite", "entropy", "--dim", "2", "--budget", "10,10000", "--samples", "100")
    assert code == 0 and out["suites"]["entropy"]["passed"]


def test_cli_test_command(capsys, tmp_path):
    p = tmp_path / "rho.txt"
    p.write_text("1 0 0 0\n0 0 0 0\n")
    code, out = run_cli(capsys, "test", "--rho", str(p), "--state", "e2", "--state", "e1")
    assert code == 0
    assert out["values"][0]["value"] == "inf"


def test_cli_caps_and_kq(capsys):
    code, out = run_cli(capsys, "caps", "--n", "6", "--alpha", "1.0", "--samples", "20000")
    assert code == 0 and out["beta"] == pytest.approx(out["exact"])
    code, out = run_cli(capsys, "kq-scenario", "--samples", "50")
    assert code == 0 and out["all_above"]


def test_cli_uneven_and_clone(capsys):
    code, out = run_cli(capsys, "uneven", "--trials", "50", "--subspace-dim", "1")
    assert code == 0 and out["ok"]
    code, out = run_cli(capsys, "clone", "--samples", "300")
    assert code == 0 and out["binom"] == 3


def test_cli_snapshot_roundtrip(capsys, tmp_path):
    path = str(tmp_path / "s.txt")
    code, wrote = run_cli(capsys, "snapshot", "write", path, "--dim", "3", "--budget", "10,100")
    assert code == 0
    code, read = run_cli(capsys, "snapshot", "read", path)
    assert code == 0 and read["digest"] == wrote["digest"]


def test_cli_out_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", "--suite", "enumerate", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["suites"]["enumerate"]["passed"]


def test_cli_figures(capsys, tmp_path):
    figs = tmp_path / "figs"
    code, out = run_cli(capsys, "verify", "--suite", "mu", "--suite", "caps", "--samples", "50", "--figures", str(figs))
    assert code == 0
    assert {p.name for p in figs.iterdir()} >= {"mu_spectrum.png", "basis_complexities.png", "cap_bound.png"}


@pytest.mark.parametrize(
    "argv, code",
    [
        (["mu", "--budget", "40,5"], 3),
        (["mu", "--config", "/nonexistent/qae.cfg"], 4),
        (["mu", "--dim", "x"], 2),
        (["mu", "--state", "e1,", "--dim", "2"], 2),
        (["snapshot", "read", "/nonexistent/s.txt"], 4),
    ],
)
def test_cli_exit_codes(capsys, argv, code):
    assert main(argv) == code


def test_cli_bad_config_file(capsys, tmp_path):
    p = tmp_path / "bad.cfg"
    p.write_text("dim = 2\nwhat = 3\n")
    assert main(["mu", "--config", str(p)]) == 2


def test_cli_corrupt_snapshot(capsys, tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("# qae-snapshot v1\ndim 2\nbudget 3 10\nkraft_mass 1/8\nentries 2\n001 state 2;1/1+0/1i,0/1+0/1i\n")
    assert main(["snapshot", "read", str(p)]) == 2


def test_cli_failed_check_exit(capsys, monkeypatch):
    import qae.cli as cli

    monkeypatch.setitem(cli.COMMANDS, "caps", lambda cfg, args: ({}, False))
    assert main(["caps"]) == 1
