import io
import json
import subprocess
import sys

import pytest

from smoothdio.cli import RunConfig, config_from_args, run


def invoke(argv, env=None):
    cfg = config_from_args(argv)
    out, err = io.StringIO(), io.StringIO()
    code = run(cfg, out, err)
    return code, out.getvalue(), err.getvalue()


def test_convergents_csv():
    code, out, err = invoke(["convergents", "--theta", "sqrt:2", "--q-max", "100"])
    rows = out.strip().splitlines()
    assert code == 0 and err == ""
    assert rows[0] == "index,a,q,convergent"
    assert len(rows[1:]) == 6 and rows[-1].endswith("99/70")


def test_psi_json():
    code, out, _ = invoke(["psi", "--x", "10", "--y", "2"])
    assert code == 0
    assert json.loads(out) == {"schema": 1, "x": 10, "y": 2, "psi": 4}


def test_plan_gamma():
    code, out, _ = invoke(["plan", "--theta", "sqrt:2", "--C", "3", "--eps", "0.05", "--q-min", "1000"])
    rec = json.loads(out)
    assert code == 0 and rec["schema"] == 1
    assert rec["gamma"] == pytest.approx(0.0694444444444444, abs=1e-15)
    assert rec["q"] == 2378


def test_plan_nonpositive_gamma_exits_2():
    code, out, err = invoke(["plan", "--theta", "sqrt:2", "--C", "3", "--eps", "0.3", "--q-min", "1000"])
    assert code == 2 and out == "" and "gamma" in err


def test_budget_exits_3():
    code, out, err = invoke(["search", "--theta", "sqrt:2", "--C", "3", "--q-min", "1000", "--work-budget", "10"])
    assert code == 3 and out == "" and err


@pytest.mark.parametrize(
    "argv",
    [
        ["convergents", "--theta", "sqrt:9", "--q-max", "10"],
        ["psi", "--x", "10"],
        ["expsum", "--S", "1,2", "--J", "3", "--a", "2", "--q", "4", "--H", "1"],
        ["lemma3", "--M", "4", "--values", "0.1"],
    ],
)
def test_hypothesis_exit_2(argv):
    code, out, err = invoke(argv)
    assert code == 2 and out == "" and err.startswith("error:")


def test_unknown_keys_rejected():
    assert run(RunConfig("psi", {"x": 10, "y": 2, "bogus": 1}), io.StringIO(), io.StringIO()) == 2
    assert run(RunConfig("psi", {"x": 10, "y": 2}, work_budget=0), io.StringIO(), io.StringIO()) == 2
    assert run(RunConfig("nope"), io.StringIO(), io.StringIO()) == 2


def test_fifteen_significant_digits():
    _, out, _ = invoke(["alpha", "--x", "100", "--y", "100"])
    assert '"alpha":0.958425676277222,' in out


def test_expsum_csv_trailer():
    code, out, _ = invoke(["expsum", "--S", "2,3", "--J", "2", "--a", "1", "--q", "5", "--H", "2"])
    lines = out.splitlines()
    assert code == 0 and lines[0] == "h,magnitude" and lines[-1].startswith("# total=")


def test_scan_csv_columns():
    code, out, _ = invoke(["scan", "--theta", "sqrt:2", "--C", "3", "--n-max", "1000"])
    lines = out.splitlines()
    assert code == 0 and lines[0] == "n,u,v,dist,exponent"
    assert lines[1].startswith("4,")


def test_deterministic_and_cache_transparent(tmp_path, monkeypatch):
    args = ["search", "--theta", "sqrt:2", "--C", "3", "--q-min", "1000", "--limit", "5"]
    base = invoke(args + ["--no-cache"])[1]
    assert invoke(args)[1] == base
    cached = args + ["--cache-dir", str(tmp_path)]
    assert invoke(cached)[1] == base
    assert any(tmp_path.iterdir())
    assert invoke(cached)[1] == base
    assert invoke(args + ["--threads", "3"])[1] == base


def test_env_cache_overrides_flag(tmp_path, monkeypatch):
    env_dir, flag_dir = tmp_path / "env", tmp_path / "flag"
    env_dir.mkdir()
    flag_dir.mkdir()
    monkeypatch.setenv("SMOOTHDIO_CACHE", str(env_dir))
    cfg = config_from_args(["sieve", "--x", "100", "--c", "2", "--y", "5", "--cache-dir", str(flag_dir)])
    assert cfg.cache_dir == str(env_dir)
    assert config_from_args(["sieve", "--x", "100", "--c", "2", "--y", "5", "--no-cache"]).cache_dir is None


def test_every_subcommand_runs():
    cases = [
        ["sieve", "--x", "10", "--c", "2", "--y", "3"],
        ["scaling", "--x", "1e4", "--y", "50", "--c", "2"],
        ["lemma2", "--x", "1e4", "--C", "2", "--eps", "0.5"],
        ["lemma3", "--M", "8", "--N", "50", "--trials", "3", "--seed", "1"],
        ["lemma4", "--M", "16", "--N", "16", "--q", "17", "--a", "3", "--draws", "2"],
        ["expsum", "--theta", "sqrt:2", "--C", "3", "--q-min", "100"],
        ["diagnostics", "--theta", "sqrt:2", "--C", "3", "--q-min", "100"],
    ]
    for argv in cases:
        code, out, err = invoke(argv)
        assert code == 0, (argv, err)
        assert out.strip()


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "smoothdio", "psi", "--x", "10", "--y", "2"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert proc.stdout == '{"schema":1,"x":10,"y":2,"psi":4}\n'
    bad = subprocess.run([sys.executable, "-m", "smoothdio", "psi", "--x", "ten"], capture_output=True, text=True)
    assert bad.returncode == 2 and bad.stdout == ""
