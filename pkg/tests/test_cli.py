import json
from pathlib import Path

import pytest

from deblog.cli import main, parse_model_spec, run_command
from deblog.errors import SpecError

SPECS = Path(__file__).resolve().parent.parent / "specs"


def spec(**kw):
    base = {"m": 2, "n": 1, "alphas": [{"dtheta1": 1}]}
    base.update(kw)
    return json.dumps(base, indent=2)


def test_parse_darboux_equivalent():
    model, profile, cfg = parse_model_spec(spec())
    assert model.m == 2 and model.n == 1 and model.gamma.is_zero()
    assert profile.parity == "even" and profile.k == 1
    assert cfg.eps_ladder == (0.2, 0.1, 0.05, 0.025)


def test_parse_rejects_extra_alphas():
    with pytest.raises(SpecError, match="expected m=2 Laurent coefficients"):
        parse_model_spec(spec(alphas=[{"dtheta1": 1}, {}, {}]))


def test_parse_errors_carry_context():
    with pytest.raises(SpecError, match="line 2"):
        parse_model_spec('{"m": 2,\n "n": }')
    with pytest.raises(SpecError, match="line 4.*dimension mismatch"):
        parse_model_spec(spec(alphas=[{"dtheta3": 1}]))
    with pytest.raises(SpecError, match="strictly decreasing"):
        parse_model_spec(spec(eps_ladder=[0.1, 0.2]))
    with pytest.raises(SpecError, match=r"\(0, 1/2\)"):
        parse_model_spec(spec(eps_ladder=[0.6]))


def test_parse_trig_coefficients():
    text = (SPECS / "nonconstant-beta.spec").read_text()
    model, profile, cfg = parse_model_spec(text)
    assert model.n == 2 and not model.gamma.is_zero()
    assert cfg.leaf_moment is not None


def run(tmp_path, *args):
    return run_command(list(args) + ["--out", str(tmp_path)])


def test_converge_command(tmp_path):
    r = run(tmp_path, "converge", "--spec", str(SPECS / "darboux-k1.spec"), "--jmax", "1")
    assert r.exit_code == 0
    rows = (tmp_path / "converge.csv").read_text().splitlines()
    assert rows[0] == "eps,j,sup_norm" and len(rows) == 9


def test_volume_command(tmp_path):
    r = run(tmp_path, "volume", "--spec", str(SPECS / "darboux-k1.spec"))
    assert r.exit_code == 0
    head = (tmp_path / "volume.csv").read_text().splitlines()[0]
    assert head == "eps,volume_complement,volume_inside,volume_total,predicted_total"
    assert "2(2+1/(2k-1)) formula" in r.report and "endpoint oracle" in r.report


def test_check_folded_lists_components(tmp_path):
    r = run(tmp_path, "check-folded", "--spec", str(SPECS / "darboux-k0-odd.spec"))
    assert r.exit_code == 0
    assert r.report.count("(transversal)") == 3


def test_tampered_tail_exit_code(tmp_path):
    args = ["coincide", "--spec", str(SPECS / "darboux-k1-odd-4d.spec")]
    assert run(tmp_path, *args).exit_code == 0
    assert run(tmp_path, *args, "--tail-mode", "paper-literal").exit_code == 1


def test_input_errors(tmp_path):
    assert run(tmp_path, "volume", "--spec", str(tmp_path / "missing.spec")).exit_code == 2
    assert run(tmp_path, "nonsense", "--spec", str(SPECS / "darboux-k1.spec")).exit_code == 2
    bad = tmp_path / "bad.spec"
    bad.write_text(spec(m=3))
    assert run(tmp_path, "check-symplectic", "--spec", str(bad)).exit_code == 2


@pytest.mark.parametrize("cmd,name", [("fit", "fit.csv"), ("moment-image", "moment_image.csv"),
                                      ("check-symplectic", "symplectic.csv")])
def test_csv_is_deterministic(tmp_path, cmd, name):
    a, b = tmp_path / "a", tmp_path / "b"
    s = str(SPECS / "darboux-k1.spec")
    assert run(a, cmd, "--spec", s).exit_code == 0
    assert run(b, cmd, "--spec", s).exit_code == 0
    assert (a / name).read_bytes() == (b / name).read_bytes()


def test_all_subcommands_run(tmp_path):
    even = str(SPECS / "nonconstant-beta.spec")
    odd = str(SPECS / "darboux-k1-odd-4d.spec")
    for cmd in ("profile", "validate", "check-symplectic", "coincide", "volume", "moment-image"):
        assert run(tmp_path, cmd, "--spec", even, "--grid", "101,8").exit_code == 0, cmd
    for cmd in ("check-folded", "fold-locus", "coincide"):
        assert run(tmp_path, cmd, "--spec", odd).exit_code == 0, cmd
    assert main(["converge", "--spec", str(SPECS / "darboux-k2.spec"), "--out", str(tmp_path)]) == 0
