import json
import subprocess
import sys

import pytest

from cflab.cli import main, render


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_expand_rational_json(capsys):
    code, out, _ = run(capsys, "expand", "--rational", "2/5")
    assert code == 0
    data = json.loads(out)
    assert data["quotients"] == [2, 2]
    assert data["source"]["kind"] == "rational"


def test_stats_csv(capsys):
    code, out, _ = run(capsys, "stats", "--quotients", "1,2,3,4,5", "--N", "4", "--out", "csv")
    assert code == 0
    assert out.splitlines()[-1] == "4,20,40,4,"


def test_precondition_exit_code(capsys):
    code, _, err = run(capsys, "dim", "--phi", "log(")
    assert code == 2
    assert "position 4" in err
    assert run(capsys, "pressure", "--theta", "0.4")[0] == 2
    assert run(capsys, "expand", "--rational", "3/2")[0] == 2


def test_budget_exit_code(capsys):
    code, _, err = run(capsys, "pressure", "--theta", "1", "--depth", "8", "--budget", "100")
    assert code == 3
    assert "exceeds 100 nodes" in err


def test_let_bindings_and_formula(capsys):
    code, out, _ = run(capsys, "formula", "covering", "--counts", "b^n", "--diameters", "4^(-n)",
                       "--K", "40", "--let", "b=2")
    assert code == 0
    assert json.loads(out)["value"] == 0.5
    assert run(capsys, "dim", "--phi", "n", "--let", "oops")[0] == 2


def test_generate_to_file(capsys, tmp_path):
    target = tmp_path / "point.json"
    code, out, _ = run(capsys, "generate", "--kind", "upsilon", "--terms", "20", "--out", str(target))
    assert code == 0 and out == ""
    data = json.loads(target.read_text())
    assert data["quotients"][19] == 17155
    code, out, _ = run(capsys, "generate", "--kind", "b-full", "--terms", "5")
    assert code == 2


def test_config_supplies_defaults(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"theta": 0.8, "depth": 3, "alphabet": 20}))
    code, out, _ = run(capsys, "pressure", "--config", str(cfg))
    assert code == 0
    assert json.loads(out)["depth_n"] == 3
    code, out, _ = run(capsys, "pressure", "--config", str(cfg), "--depth", "2")
    assert json.loads(out)["depth_n"] == 2
    cfg.write_text(json.dumps({"bogus": 1}))
    assert run(capsys, "pressure", "--theta", "1", "--config", str(cfg))[0] == 2


def test_dirichlet_command(capsys):
    code, out, _ = run(capsys, "dirichlet", "--quotients", ",".join(["1"] * 12), "--N", "10",
                       "--psi", "c/n", "--let", "c=0.5", "--outer")
    assert code == 0
    assert json.loads(out)["indices"] == list(range(1, 11))


def test_montecarlo_seeded_output_is_stable(capsys):
    first = run(capsys, "montecarlo", "digit-freq", "--samples", "5", "--terms", "200", "--seed", "3")[1]
    again = run(capsys, "montecarlo", "digit-freq", "--samples", "5", "--terms", "200", "--seed", "3")[1]
    assert first == again


def test_render_formats():
    text = render({"x": 1.0 / 3.0, "y": float("inf"), "z": [float("nan")]}, "json")
    assert json.loads(text) == {"x": 0.333333333333, "y": "inf", "z": ["nan"]}
    table = {"columns": ["a", "b"], "rows": [(1, 0.5), (2, None)]}
    assert render(table, "csv") == "a,b\n1,0.5\n2,\n"


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "cflab", "expand", "--rational", "1/3"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["quotients"] == [3]


@pytest.mark.parametrize("argv", [
    ["pressure", "--theta", "0.7", "--depth", "4", "--alphabet", "30"],
    ["montecarlo", "sll", "--samples", "6", "--n", "300", "--seed", "5"],
])
def test_workers_do_not_change_bytes(argv):
    outs = [subprocess.run([sys.executable, "-m", "cflab", *argv, "--workers", w],
                           capture_output=True, text=True, check=True).stdout for w in ("1", "3")]
    assert outs[0] == outs[1]


def test_short_flag_is_not_taken_as_config_prefix(capsys):
    code, _, err = run(capsys, "theta", "--c", "1", "--tol", "1e-6")
    assert code == 2
    assert "tol" in err and "config" not in err


def test_huge_integers_serialize(capsys, tmp_path):
    # built as text so the test itself never converts a 6000-digit int
    big = "1" + "0" * 5999 + "7"
    src = tmp_path / "q.json"
    src.write_text(f"[1, {big}, 3]")
    code, out, _ = run(capsys, "stats", "--file", str(src), "--N", "2", "--out", "csv")
    assert code == 0
    assert out.splitlines()[-1].split(",")[1] == "3" + "0" * 5998 + "21"
