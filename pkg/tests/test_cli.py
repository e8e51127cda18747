import math
import os

import numpy as np
import pytest

from brwlab.cli import main


def run_cli(args, tmp_path, name="out.csv"):
    out = tmp_path / name
    code = main(list(args) + ["--out", str(out)])
    text = out.read_text() if out.exists() else ""
    return code, text


def rows_of(text):
    import csv
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    parsed = list(csv.reader(lines))
    return [dict(zip(parsed[0], row)) for row in parsed[1:]]


def test_rate_shift_example(tmp_path):
    code, text = run_cli(["rate", "--set", "(-inf,0]", "--p", "0.8", "--b", "2"],
                         tmp_path)
    assert code == 0
    row = rows_of(text)[0]
    assert row["regime"] == "shift"
    assert abs(float(row["i_rate"]) - 0.583369) < 1e-5
    assert row["scale"] == "sqrt_n"


def test_rate_degenerate_full_line(tmp_path):
    code, text = run_cli(["rate", "--set", "R", "--p", "0.3"], tmp_path)
    assert code == 0
    row = rows_of(text)[0]
    assert row["regime"] == "degenerate"
    assert float(row["i_tilde"]) == 0.0


def test_rate_malformed_set_exits_2(tmp_path, capsys):
    code = main(["rate", "--set", "(0,]", "--p", "0.5"])
    assert code == 2
    err = capsys.readouterr().err
    assert "position 3" in err


def test_rate_p_out_of_range_exits_2(tmp_path):
    assert main(["rate", "--set", "R", "--p", "1.5"]) == 2
    assert main(["rate", "--set", "R", "--p", "0"]) == 2


def test_simulate_requires_positive_replicas():
    assert main(["simulate", "--replicas", "0", "--n", "4"]) == 2


def test_simulate_reproducible_and_sane(tmp_path):
    args = ["simulate", "--law", "2:0.5,3:0.5", "--n", "65", "--replicas", "20",
            "--seed", "42", "--mode", "hybrid"]
    code1, text1 = run_cli(args, tmp_path, "a.csv")
    code2, text2 = run_cli(args, tmp_path, "b.csv")
    assert code1 == code2 == 0
    assert text1 == text2
    finals = [float(r["fraction_A"]) for r in rows_of(text1)
              if r["generation"] == "65"]
    assert len(finals) == 20
    assert abs(float(np.mean(finals)) - 0.5) < 0.05
    norm = [float(r["normalized_total"]) for r in rows_of(text1)]
    assert all(v > 0 for v in norm)


def test_ldp_infeasible_exits_3(tmp_path, capsys):
    code = main(["ldp", "--set", "(-inf,0]", "--p", "0.9", "--kind", "shift",
                 "--x", "0.2", "--n-grid", "64", "--replicas", "100"])
    assert code == 3
    err = capsys.readouterr().err
    assert "infeasible" in err and "falls short" in err


def test_ldp_thread_count_invariance(tmp_path):
    args = ["ldp", "--set", "(-inf,0]", "--p", "0.8", "--law", "2:0.5,3:0.5",
            "--n-grid", "36,64", "--replicas", "120", "--seed", "7"]
    _, text1 = run_cli(args + ["--threads", "1"], tmp_path, "t1.csv")
    _, text2 = run_cli(args + ["--threads", "2"], tmp_path, "t2.csv")
    assert text1 == text2
    row = rows_of(text1)[0]
    assert row["kind"] == "shift"
    assert float(row["q_hat"]) > 0.0


def test_enumerate_exact_row(tmp_path):
    code, text = run_cli(["enumerate", "--n", "2", "--law", "2:1.0",
                          "--set", "(-inf,0]", "--p", "1"], tmp_path)
    assert code == 0
    row = rows_of(text)[0]
    assert row["probability_exact"] == "25/64"
    assert float(row["probability"]) == 0.390625


def test_interp_alpha_hat_band(tmp_path):
    code, text = run_cli(["interp", "--alpha", "0.75", "--p", "0.5",
                          "--delta", "0.05", "--n-grid", "100,1000,10000"],
                         tmp_path)
    assert code == 0
    rows = rows_of(text)
    alpha_hat = float(rows[0]["alpha_hat"])
    assert 0.65 <= alpha_hat <= 0.85
    assert "# alpha_hat=" in text


def test_clt_scan_metadata_and_decay(tmp_path):
    code, text = run_cli(["clt-scan", "--set", "(-inf,0]", "--R", "2",
                          "--n-grid", "25,100"], tmp_path)
    assert code == 0
    rows = rows_of(text)
    assert float(rows[0]["sup_error"]) > float(rows[1]["sup_error"])
    assert float(rows[0]["xi_radius"]) == 10.0


def test_probe_commands_run(tmp_path):
    code, text = run_cli(["probe-typical", "--set", "(-inf,0]", "--t", "1",
                          "--n-grid", "16,32", "--replicas", "120",
                          "--seed", "3"], tmp_path)
    assert code == 0
    assert len(rows_of(text)) == 2
    code, text = run_cli(["probe-concentration", "--pop-grid", "20,80",
                          "--n", "8", "--replicas", "200", "--seed", "3"],
                         tmp_path)
    assert code == 0
    rows = rows_of(text)
    assert len(rows) == 2
    assert 0.0 <= float(rows[0]["frequency"]) <= 1.0


def test_env_var_default_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("BRWLAB_SEED", "9")
    code, text = run_cli(["rate", "--set", "R", "--p", "0.3"], tmp_path)
    assert code == 0
    assert "seed=9 " in text


def test_config_file_merges_and_flags_win(tmp_path):
    cfg = tmp_path / "cfg"
    cfg.write_text("# experiment defaults\nset=(-inf,0]\np=0.8\nb=2\nseed=5\n")
    code, text = run_cli(["rate", "--config", str(cfg)], tmp_path, "c1.csv")
    assert code == 0
    assert "seed=5" in text
    assert rows_of(text)[0]["regime"] == "shift"
    code, text = run_cli(["rate", "--config", str(cfg), "--p", "0.4"],
                         tmp_path, "c2.csv")
    assert code == 0
    assert rows_of(text)[0]["regime"] == "degenerate"


def test_missing_required_option_exits_2():
    assert main(["rate", "--p", "0.5"]) == 2  # --set absent


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_numeric_failure_exits_4(monkeypatch, capsys):
    from brwlab import cli
    from brwlab.errors import NumericError

    def boom(resolved):
        raise NumericError("synthetic convergence failure")

    monkeypatch.setitem(cli._DISPATCH, "rate", boom)
    code = main(["rate", "--set", "R", "--p", "0.5"])
    assert code == 4
    assert "numeric failure" in capsys.readouterr().err
