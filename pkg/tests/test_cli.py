"""End-to-end command-line behaviour: exit codes, reports, determinism."""
import json
import math
import subprocess
import sys

import pytest

from qgrowth import cli


def run(tmp_path, *args):
    return cli.main(["--out", str(tmp_path), *args])


def test_verify_pass(tmp_path):
    assert run(tmp_path, "verify", "--family", "loglog4", "--n", "4") == 0
    data = json.loads((tmp_path / "verify_loglog4_n4.json").read_text())
    assert data["max_rel"] <= 1e-8 and data["pass"]
    assert len(data["weak"]) == 3
    assert (tmp_path / "verify_loglog4_n4.csv").read_text().startswith("radius")


def test_verify_sinlog2nd(tmp_path):
    assert run(tmp_path, "verify", "--family", "sinlog2nd", "--n", "3") == 0


def test_verify_configuration_error(tmp_path):
    assert run(tmp_path, "verify", "--family", "loglog4", "--n", "5") == 2
    assert run(tmp_path, "verify", "--family", "sinlog4th", "--n", "4") == 2
    assert run(tmp_path, "verify", "--family", "nosuch", "--n", "4") == 2
    assert run(tmp_path, "frobnicate") == 2


def test_verify_failure_exit_code(tmp_path):
    assert run(tmp_path, "--tol", "1e-30", "verify", "--family", "sinlog4th", "--n", "5",
               "--no-weak") == 1


def test_lorentz_command(tmp_path):
    assert run(tmp_path, "lorentz", "--function", "powerlaw:s=2", "--n", "4", "--p", "2",
               "--q", "inf") == 0
    data = json.loads((tmp_path / "lorentz_n4_s2_p2_qinf.json").read_text())
    assert data["empirical"]["value"] == pytest.approx(math.pi * math.sqrt(2), rel=1e-2)


def test_membership_command(tmp_path):
    assert run(tmp_path, "membership", "--family", "sinlog4th", "--n", "6", "--k", "2",
               "--p-grid", "2,2.5,2.9,3") == 0
    data = json.loads((tmp_path / "membership_sinlog4th_n6_k2.json").read_text())
    assert [r["verdict"] for r in data["table"]] == ["Member", "Member", "Member", "NotMember"]


def test_morrey_and_decay_commands(tmp_path):
    assert run(tmp_path, "morrey", "--family", "powerlaw", "--alpha", "0.5", "--n", "4",
               "--p", "2", "--r0", "0.5", "--theta", "0.1", "--count", "4") == 0
    data = json.loads((tmp_path / "morrey_powerlaw_n4_p2.json").read_text())
    assert data["fit"]["slope"] == pytest.approx(1.0, abs=0.05)
    assert run(tmp_path, "decay", "--family", "sinlog2nd", "--n", "4", "--r0", "0.1",
               "--theta", "0.1", "--count", "3", "--quantity", "oscillation") == 0
    data = json.loads((tmp_path / "decay_oscillation_sinlog2nd_n4.json").read_text())
    assert min(data["values"]) >= 1.9


SUITE = {
    "seed": 7,
    "jobs": [
        {"command": "verify", "parameters": {"family": "sinlog2nd", "n": 4}},
        {"command": "verify", "parameters": {"family": "loglog4", "n": 5}},
        {"command": "decay", "parameters": {"family": "linear", "n": 3, "center": "0.1,0,0",
                                            "r0": 0.5, "theta": 0.5, "count": 3, "samples": 512}},
        {"command": "membership", "parameters": {"family": "sinlog2nd", "n": 4, "p_grid": "2,4"}},
    ],
}


def _suite(tmp_path, name, config, *flags):
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / name
    code = cli.main(["--out", str(out), *flags, "suite", "--config", str(cfg)])
    return code, out


def test_suite_failure_does_not_abort(tmp_path):
    code, out = _suite(tmp_path, "a", SUITE)
    assert code == 1
    index = json.loads((out / "index.json").read_text())
    assert [j["status"] for j in index["jobs"]] == ["pass", "config-error", "pass", "pass"]
    timing = json.loads((out / "timing.json").read_text())
    assert len(timing["jobs"]) == 4


def test_suite_deterministic_and_parallel_identical(tmp_path):
    _, a = _suite(tmp_path, "a", SUITE)
    _, b = _suite(tmp_path, "b", SUITE)
    _, c = _suite(tmp_path, "c", SUITE, "--parallel")
    names = sorted(p.name for p in a.iterdir() if p.name != "timing.json")
    assert names == sorted(p.name for p in c.iterdir() if p.name != "timing.json")
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes() == (c / name).read_bytes()


def test_empty_suite(tmp_path):
    code, out = _suite(tmp_path, "empty", {})
    assert code == 0
    assert json.loads((out / "index.json").read_text())["jobs"] == []


def test_suite_rejects_unknown_command(tmp_path):
    code, _ = _suite(tmp_path, "bad", {"jobs": [{"command": "plot", "parameters": {}}]})
    assert code == 2


def test_suite_missing_config(tmp_path):
    assert cli.main(["suite", "--config", str(tmp_path / "missing.json")]) == 2


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qgrowth.cli", "--out", str(tmp_path), "verify",
                           "--family", "loglog4", "--n", "5"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "configuration error" in proc.stderr
