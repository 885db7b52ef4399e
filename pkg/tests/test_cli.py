import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from semispec import __version__
from semispec.cli import DEFAULTS, main, resolve
from semispec.errors import ConfigError

GOLDEN = Path(__file__).parent / "golden"
FIXTURES = Path(__file__).parent / "fixtures"


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def body(text):
    """Drop the stamp line that opens every text artifact."""
    first, rest = text.split("\n", 1)
    assert first.lstrip("#% ").startswith(f"semispec {__version__} config ")
    return rest


def test_symbolic_latex_matches_golden(capsys):
    code, out, _ = run_cli(capsys, "symbolic", "--model", "scalar", "--dims", "1",
                           "--order", "4", "--emit", "latex")
    assert code == 0
    assert body(out) == (GOLDEN / "computed_scalar1d_b4.tex").read_text()


@pytest.mark.parametrize("dims", [1, 2])
@pytest.mark.parametrize("order", range(7))
def test_symbolic_text_matches_golden(capsys, dims, order):
    code, out, _ = run_cli(capsys, "symbolic", "--dims", str(dims), "--order", str(order))
    assert code == 0
    assert body(out) == (GOLDEN / f"computed_scalar{dims}d_b{order}.txt").read_text()


@pytest.mark.parametrize("order", range(4))
def test_symbolic_magnetic_text_matches_golden(capsys, order):
    code, out, _ = run_cli(capsys, "symbolic", "--model", "magnetic", "--dims", "2",
                           "--order", str(order))
    assert code == 0
    assert body(out) == (GOLDEN / f"computed_magnetic2d_b{order}.txt").read_text()


def test_symbolic_normal_form_json(capsys):
    code, out, _ = run_cli(capsys, "symbolic", "--order", "2", "--normalize", "--emit", "json")
    assert code == 0
    doc = json.loads(out)
    golden = json.loads((GOLDEN / "computed_normal_forms.json").read_text())
    assert doc["normal_form"] == golden["scalar1d_nu1"]


def test_symbolic_normalize_rejects_odd_order(capsys):
    code, _, err = run_cli(capsys, "symbolic", "--order", "3", "--normalize")
    assert code == 2 and "even" in err


def test_forward_harmonic_levels(capsys):
    code, out, _ = run_cli(capsys, "forward", "--preset", "harmonic", "--hbar", "0.1",
                           "--emax", "1")
    assert code == 0
    rows = np.genfromtxt(body(out).splitlines(), delimiter=",", names=True)
    assert np.array_equal(rows["index"], np.arange(10))
    assert np.allclose(rows["eigenvalue"], 0.05 + 0.1 * np.arange(10), atol=1e-10)
    assert rows["converged"].all()


def test_invert_magnetic_on_fixtures(capsys, tmp_path):
    pair = f"{FIXTURES / 'magnetic_I.csv'},{FIXTURES / 'magnetic_II.csv'}"
    code, out, _ = run_cli(capsys, "invert-magnetic", "--input", pair, "--out", str(tmp_path))
    assert code == 0
    prof = np.genfromtxt(body(out).splitlines(), delimiter=",", names=True)
    assert np.allclose(prof["V"], prof["s"] / 2, atol=1e-8)
    assert np.allclose(prof["B"], 1.5, atol=1e-8)
    report = json.loads((tmp_path / "invert-magnetic.json").read_text())
    assert len(report["meta"]["provenance"]["input_sha256"]) == 2


def test_invert_magnetic_missing_input(capsys, tmp_path):
    code, _, err = run_cli(capsys, "invert-magnetic", "--input",
                           f"{tmp_path / 'nope.csv'},{tmp_path / 'nada.csv'}")
    assert code == 2 and "not found" in err


@pytest.mark.parametrize("argv,code", [
    (["forward", "--hbar", "-1"], 2),
    (["forward", "--param", "oops"], 2),
    (["forward", "--hbar", "0.001", "--basis", "64", "--emax", "0.9"], 3),
    (["invert-double", "--lambda-max", "0.3"], 4),
])
def test_exit_codes(capsys, argv, code):
    got, _, err = run_cli(capsys, *argv)
    assert got == code
    assert err.startswith("semispec: ")


def test_unknown_flag_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["forward", "--no-such-flag"])
    assert exc.value.code == 2


def test_artifacts_are_deterministic_and_stamped(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["zoll-check", "--points", "8", "--out", str(d)]) == 0
    capsys.readouterr()
    names = sorted(p.name for p in a.iterdir())
    assert names == ["periods.csv", "zoll-check.json"]
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()
    report = json.loads((a / "zoll-check.json").read_text())
    cfg = resolve("zoll-check", flags={"points": 8})
    assert report["meta"]["config_hash"] == cfg.hash
    assert report["meta"]["version"] == __version__
    assert report["meta"]["config"] == cfg.as_dict()
    assert (a / "periods.csv").read_text().startswith(f"# semispec {__version__} config {cfg.hash}")


def test_hash_changes_with_config():
    assert resolve("zoll-check").hash != resolve("zoll-check", flags={"points": 9}).hash
    assert resolve("zoll-check").hash == resolve("zoll-check", flags={}).hash


def test_config_file_merges_under_flags(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"subcommand": "zoll-check", "points": 5, "lambda_max": 0.5}))
    code, out, _ = run_cli(capsys, "zoll-check", "--config", str(cfg), "--points", "7")
    assert code == 0
    meta = json.loads(out)["meta"]["config"]
    assert meta["points"] == 7 and meta["lambda_max"] == 0.5
    assert meta["lambda_min"] == DEFAULTS["zoll-check"]["lambda_min"]


def test_config_file_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run_cli(capsys, "zoll-check", "--config", str(bad))[0] == 2
    other = tmp_path / "other.json"
    other.write_text(json.dumps({"subcommand": "forward"}))
    assert run_cli(capsys, "zoll-check", "--config", str(other))[0] == 2
    extra = tmp_path / "extra.json"
    extra.write_text(json.dumps({"bogus": 1}))
    assert run_cli(capsys, "zoll-check", "--config", str(extra))[0] == 2


def test_resolve_rejects_unknown_subcommand():
    with pytest.raises(ConfigError):
        resolve("dance")


def test_zoll_check_reports_small_defect(capsys):
    code, out, _ = run_cli(capsys, "zoll-check")
    assert code == 0
    assert json.loads(out)["zoll_defect"] < 1e-9


def test_quad_curve_output(capsys):
    code, out, _ = run_cli(capsys, "quad", "--curve", "area", "--points", "8",
                           "--lambda-max", "0.5")
    assert code == 0
    rows = np.genfromtxt(body(out).splitlines(), delimiter=",", names=True)
    assert rows["lambda"][-1] == 0.5 and np.all(np.diff(rows["area"]) > 0)


@pytest.mark.slow
def test_fit_defaults_meet_tolerances(capsys):
    code, out, _ = run_cli(capsys, "fit")
    assert code == 0
    rel = json.loads(out)["relative_error"]
    assert rel["nu0"] < 5e-3 and rel["nu1"] < 5e-2


def test_invert_well_with_noise_is_seeded(capsys):
    argv = ["invert-well", "--noise-seed", "3", "--noise-amplitude", "1e-9"]
    code, first, _ = run_cli(capsys, *argv)
    assert code == 0
    assert run_cli(capsys, *argv)[1] == first


def test_thread_count_does_not_change_output(capsys, monkeypatch):
    argv = ["forward", "--hbar", "0.1", "0.05", "--emax", "0.6"]
    code, serial, _ = run_cli(capsys, *argv)
    monkeypatch.setenv("SEMISPEC_THREADS", "2")
    assert run_cli(capsys, *argv)[1] == serial
    monkeypatch.setenv("SEMISPEC_THREADS", "many")
    assert run_cli(capsys, *argv)[0] == 2


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "semispec.cli", "--version"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and __version__ in proc.stdout
