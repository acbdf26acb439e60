"""Command-line interface: subcommands, exit codes, file formats,
configuration precedence, determinism."""

import json
import os

import pytest

from navierlab.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


# ---------------------------------------------------------------------------
# predict
# ---------------------------------------------------------------------------


def test_predict_exponential_eight(capsys):
    code, out = run(capsys, "predict", "--family", "exp", "--N", "8")
    assert code == 0
    record = json.loads(out)
    assert record["verdict"] == "regular"
    assert record["family"] == "exp" and record["N"] == 8


def test_predict_mems_unknown(capsys):
    code, out = run(capsys, "predict", "--family", "mems:p=2", "--N", "6")
    assert code == 0
    assert json.loads(out)["verdict"] == "unknown"  # 6 > 16/3


def test_predict_low_dimension_power(capsys):
    code, out = run(capsys, "predict", "--family", "power:p=1.5", "--N", "2")
    assert code == 0
    assert json.loads(out)["verdict"] == "regular"


def test_predict_bad_family(capsys):
    code, _ = run(capsys, "predict", "--family", "quintic", "--N", "3")
    assert code == 2


def test_usage_error_exit_code(capsys):
    assert main([]) == 2
    assert main(["predict"]) == 2


# ---------------------------------------------------------------------------
# bootstrap
# ---------------------------------------------------------------------------


def test_bootstrap_increasing(capsys):
    code, out = run(capsys, "bootstrap", "--N", "6", "--q", "1", "--alpha", "1.5", "--beta", "0.5")
    assert code == 0
    trace = json.loads(out)["trace"]
    assert trace["classification"] == "increasing-to-fixed-point"
    assert trace["fixed_point"] == pytest.approx(1.5)


def test_bootstrap_escape(capsys):
    code, out = run(capsys, "bootstrap", "--N", "5", "--q", "1", "--alpha", "1.5", "--beta", "0.5")
    assert code == 0
    trace = json.loads(out)["trace"]
    assert trace["classification"] == "escapes-above-quarter-dimension"


def test_bootstrap_constant_at_fixed_point(capsys):
    code, out = run(capsys, "bootstrap", "--N", "6", "--q", "1.5", "--alpha", "1.5", "--beta", "0.5")
    assert code == 0
    seq = json.loads(out)["trace"]["sequence"]
    assert max(abs(q - 1.5) for q in seq) < 1e-12


def test_bootstrap_inconclusive_exit(capsys):
    code, out = run(
        capsys, "bootstrap", "--N", "6", "--q", "1", "--alpha", "1.4",
        "--beta", "1.39999", "--steps", "1",
    )
    assert code == 3


def test_bootstrap_bad_params(capsys):
    code, _ = run(capsys, "bootstrap", "--N", "6", "--q", "1", "--alpha", "0.5", "--beta", "0.7")
    assert code == 2


# ---------------------------------------------------------------------------
# branch / verify
# ---------------------------------------------------------------------------

SMALL = ["--n", "64", "--m-max", "0.4", "--amplitude-step", "0.1"]


def test_branch_writes_artifacts(tmp_path, capsys):
    out = str(tmp_path / "run")
    code, stdout = run(capsys, "branch", "--family", "exp", "--N", "3", *SMALL, "--out", out)
    assert code == 0
    csv_path = os.path.join(out, "branch_exp_N3.csv")
    json_path = os.path.join(out, "branch_exp_N3.json")
    assert os.path.exists(csv_path) and os.path.exists(json_path)
    header = open(csv_path).readline().strip()
    assert header == "m,lambda,u_center,max_u,mu1,residual_norm,newton_iters"
    summary = json.loads(open(json_path).read())
    assert summary["status"] == "ok"
    assert summary["config"]["n"] == 64  # resolved config embedded
    assert json.loads(stdout)["family"] == "exp"


def test_branch_deterministic(tmp_path, capsys):
    # identical resolved config (including the output directory) twice
    out = str(tmp_path / "det")
    args = ["branch", "--family", "exp", "--N", "3", *SMALL, "--out", out]
    run(capsys, *args)
    first = {
        name: open(os.path.join(out, name), "rb").read()
        for name in ("branch_exp_N3.csv", "branch_exp_N3.json")
    }
    run(capsys, *args)
    for name, payload in first.items():
        assert open(os.path.join(out, name), "rb").read() == payload, name


def test_branch_dump_fields(tmp_path, capsys):
    out = str(tmp_path / "fields")
    code, _ = run(
        capsys, "branch", "--family", "exp", "--N", "3", *SMALL, "--out", out, "--dump-fields"
    )
    assert code == 0
    assert os.path.exists(os.path.join(out, "field_exp_N3_0000.csv"))
    grid_header = json.loads(open(os.path.join(out, "grid_exp_N3.json")).read())
    assert grid_header == {"N": 3, "n": 64, "r_inner": 0.0, "r_outer": 1.0}


def test_verify_writes_reports(tmp_path, capsys):
    out = str(tmp_path / "verify")
    code, stdout = run(
        capsys, "verify", "--family", "exp", "--N", "3", "--n", "64",
        "--m-max", "2.2", "--amplitude-step", "0.1", "--out", out,
    )
    assert code == 0
    est = open(os.path.join(out, "estimates_exp_N3.csv")).read().splitlines()
    assert est[0] == "estimate,m,lambda,lhs,rhs,margin,satisfied"
    assert all(line.endswith("true") for line in est[1:])
    verdict = json.loads(open(os.path.join(out, "verify_exp_N3.json")).read())
    assert verdict["pointwise_all_satisfied"] is True
    assert verdict["fold_detected"] is True
    assert "f-squared" in verdict["suprema"]


def test_branch_compute_failure_exit(tmp_path, capsys):
    # an unattainable Newton tolerance forces continuation to give up
    out = str(tmp_path / "fail")
    code, _ = run(
        capsys, "branch", "--family", "exp", "--N", "3", *SMALL,
        "--out", out, "--tol", "1e-30",
    )
    assert code == 4


def test_branch_mems_touchdown_clamp(tmp_path, capsys):
    # m_max beyond the touchdown guard is clamped, not an error
    out = str(tmp_path / "mems")
    code, stdout = run(
        capsys, "branch", "--family", "mems:p=2", "--N", "4", "--n", "64",
        "--m-max", "0.99999999", "--amplitude-step", "0.1", "--out", out,
    )
    assert code == 0
    assert json.loads(stdout)["fold_detected"] is True


# ---------------------------------------------------------------------------
# config file
# ---------------------------------------------------------------------------


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# small smoke run\nfamily = exp\nN = 3\nn = 64\nm_max = 0.3\namplitude_step = 0.1\n")
    out = str(tmp_path / "cfgout")
    code, stdout = run(capsys, "branch", "--config", str(cfg), "--out", out)
    assert code == 0
    assert json.loads(stdout)["config"]["m_max"] == 0.3
    # flags take precedence over the file
    code, stdout = run(capsys, "branch", "--config", str(cfg), "--out", out, "--m-max", "0.2")
    assert json.loads(stdout)["config"]["m_max"] == 0.2


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("famly = exp\n")
    code, _ = run(capsys, "branch", "--config", str(cfg))
    assert code == 2


def test_config_bad_line(tmp_path, capsys):
    cfg = tmp_path / "bad2.cfg"
    cfg.write_text("family exp\n")
    code, _ = run(capsys, "branch", "--config", str(cfg))
    assert code == 2


def test_invalid_grid_is_usage_error(capsys):
    code, _ = run(capsys, "branch", "--family", "exp", "--N", "3", "--n", "2")
    assert code == 2
    code, _ = run(capsys, "branch", "--family", "exp", "--N", "1", "--n", "64")
    assert code == 2
    code, _ = run(capsys, "branch", "--family", "exp", "--N", "3", "--n", "64",
                  "--m-max", "-1")
    assert code == 2


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def test_sweep_aggregate(tmp_path, capsys):
    out = str(tmp_path / "sweep")
    code, stdout = run(
        capsys, "sweep", "--families", "exp,power:p=2", "--dims", "3..4",
        "--n", "64", "--m-max", "0.4", "--amplitude-step", "0.1", "--out", out,
    )
    assert code == 0
    lines = open(os.path.join(out, "sweep.csv")).read().splitlines()
    assert lines[0] == "family,N,status,lambda_star,fold_detected,verdict,rule,estimates_ok"
    assert len(lines) == 5  # 2 families x 2 dims
    cells = [line.split(",") for line in lines[1:]]
    assert [c[0] for c in cells] == ["exp", "exp", "power:p=2", "power:p=2"]
    assert all(c[2] == "ok" for c in cells)
    # per-cell artifacts exist
    assert os.path.exists(os.path.join(out, "branch_exp_N3.csv"))
    assert os.path.exists(os.path.join(out, "branch_power-p2_N4.csv"))


def test_sweep_parallel_matches_serial(tmp_path, capsys):
    serial = str(tmp_path / "serial")
    parallel = str(tmp_path / "parallel")
    args = ["sweep", "--families", "exp", "--dims", "3,4", "--n", "64",
            "--m-max", "0.3", "--amplitude-step", "0.1"]
    run(capsys, *args, "--out", serial)
    run(capsys, *args, "--out", parallel, "--jobs", "2")
    a = open(os.path.join(serial, "sweep.csv"), "rb").read()
    b = open(os.path.join(parallel, "sweep.csv"), "rb").read()
    assert a == b


def test_sweep_requires_lists(capsys):
    assert main(["sweep", "--families", "exp"]) == 2
    assert main(["sweep", "--dims", "3..4"]) == 2
    assert main(["sweep", "--families", "bogus", "--dims", "3"]) == 2
