import json
import math

import numpy as np
import pytest

from expanderprune.cli import main
from expanderprune.formats import save_checkpoint, save_matrix_text
from expanderprune.nets import LSTM, PruneMask, init_params
from expanderprune.pruning import load_trajectory
from expanderprune.svgplot import render_trajectory
from test_pruning import fake_record, trajectory_from_gaps

CONFIG = """
[experiment]
cell_kind = rnn
hidden_size = 6
seed = 3
output_dir = {out}

[data]
source = synth
synth_kind = mean-threshold
n_samples = 80
k = 4
input_size = 3

[train]
learning_rate = 0.003
train_epochs = 2
batch_size = 20

[prune]
rounds = 3
final_fraction = 0.05
finetune_epochs = 1
"""


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_analyze_identity_matrix(tmp_path, capsys):
    path = tmp_path / "eye.matx"
    save_matrix_text(np.eye(4), path)
    code, out, _ = run_cli(capsys, "analyze", str(path), "--mode", "weighted")
    assert code == 0
    payload = json.loads(out)
    (report,) = payload["reports"]
    assert report["layer"] == "matrix"
    assert report["lambda1"] == 1.0
    assert report["lambda2"] == 1.0
    assert report["delta_s"] == -1.0


def test_analyze_missing_file_exits_2(tmp_path, capsys):
    code, _, err = run_cli(capsys, "analyze", str(tmp_path / "nope.matx"))
    assert code == 2
    assert err.startswith("error: ENOENT:")
    assert "\n" not in err.strip()


def test_analyze_fresh_checkpoint_reports_positive_gaps(tmp_path, capsys):
    params = init_params(28, 128, 10, "rnn", seed=0)
    ckpt = tmp_path / "dense.ckpt"
    save_checkpoint(ckpt, params, PruneMask.full(params))
    code, out, _ = run_cli(capsys, "analyze", str(ckpt))
    assert code == 0
    payload = json.loads(out)
    assert {r["layer"] for r in payload["reports"]} == {"w_xh", "w_hh"}
    for report in payload["reports"]:
        value = report["delta_s"]
        if report["mode"] == "unweighted":
            assert value == "inf"  # dense support: lambda2 = 0
        else:
            assert value == "inf" or value > 0


def test_analyze_per_gate_lstm(tmp_path, capsys):
    params = init_params(5, 4, 2, LSTM, seed=1)
    ckpt = tmp_path / "lstm.ckpt"
    save_checkpoint(ckpt, params, PruneMask.full(params))
    code, out, _ = run_cli(capsys, "analyze", str(ckpt), "--layer", "wxh",
                           "--mode", "weighted", "--per-gate")
    assert code == 0
    layers = [r["layer"] for r in json.loads(out)["reports"]]
    assert layers == ["w_xh", "w_xh[i]", "w_xh[f]", "w_xh[g]", "w_xh[o]"]


def test_unroll_closed_form_agrees(tmp_path, capsys):
    rng = np.random.default_rng(2)
    B = rng.standard_normal((3, 3))
    B = (B + B.T) / 2
    path = tmp_path / "block.matx"
    save_matrix_text(B, path)
    code, out, _ = run_cli(capsys, "unroll", str(path), "--k", "4", "--closed-form")
    assert code == 0
    payload = json.loads(out)
    assert payload["dimension"] == 15
    assert len(payload["spectrum"]) == 15
    assert payload["max_deviation"] < 1e-9


def test_unroll_refuses_closed_form_for_asymmetric(tmp_path, capsys):
    path = tmp_path / "block.matx"
    save_matrix_text(np.array([[0.0, 1.0], [0.5, 0.0]]), path)
    code, _, err = run_cli(capsys, "unroll", str(path), "--k", "2", "--closed-form")
    assert code == 2
    assert err.startswith("error: EDOMAIN:")


def test_prune_train_report_end_to_end(tmp_path, capsys):
    config_path = tmp_path / "exp.ini"
    out_dir = tmp_path / "run"
    config_path.write_text(CONFIG.format(out=out_dir))

    code, out, _ = run_cli(capsys, "prune", "--config", str(config_path))
    assert code == 0
    summary = json.loads(out)
    assert summary["rounds_recorded"] == 4
    assert (out_dir / "trajectory.jsonl").exists()
    assert (out_dir / "round_003.ckpt").exists()
    first_bytes = (out_dir / "trajectory.jsonl").read_bytes()

    # resume over a complete run changes nothing
    code, out, _ = run_cli(capsys, "prune", "--config", str(config_path))
    assert code == 0
    assert (out_dir / "trajectory.jsonl").read_bytes() == first_bytes

    code, out, _ = run_cli(capsys, "report", str(out_dir / "trajectory.jsonl"),
                           "--out", str(tmp_path / "fig.svg"))
    assert code == 0
    report_payload = json.loads(out)
    assert report_payload["records"] == 4
    svg = (tmp_path / "fig.svg").read_text()
    assert svg.startswith("<svg")
    csv_lines = (tmp_path / "fig.csv").read_text().strip().splitlines()
    assert len(csv_lines) == 1 + 4  # header + one row per record

    code, out, _ = run_cli(capsys, "train", "--config", str(config_path),
                           "--out", str(tmp_path / "dense"))
    assert code == 0
    train_payload = json.loads(out)
    assert (tmp_path / "dense" / "dense.ckpt").exists()
    assert 0.0 <= train_payload["test_accuracy"] <= 1.0


def test_prune_seed_override_refuses_mismatched_resume(tmp_path, capsys):
    config_path = tmp_path / "exp.ini"
    out_dir = tmp_path / "run"
    config_path.write_text(CONFIG.format(out=out_dir))
    code, _, _ = run_cli(capsys, "prune", "--config", str(config_path))
    assert code == 0
    code, _, err = run_cli(capsys, "prune", "--config", str(config_path), "--seed", "99")
    assert code == 2
    assert err.startswith("error: ECONFIG:")


def test_prune_invalid_config_lists_fields(tmp_path, capsys):
    config_path = tmp_path / "exp.ini"
    config_path.write_text("[experiment]\ncell_kind = gru\n\n[data]\nsource = nowhere\n")
    code, _, err = run_cli(capsys, "prune", "--config", str(config_path))
    assert code == 2
    assert err.startswith("error: ECONFIG:")
    assert "cell_kind" in err and "data.source" in err


def test_exp_home_resolves_relative_output(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("EXP_HOME", str(tmp_path))
    config_path = tmp_path / "exp.ini"
    config_path.write_text(CONFIG.format(out="nested/run"))
    code, out, _ = run_cli(capsys, "prune", "--config", str(config_path))
    assert code == 0
    assert (tmp_path / "nested" / "run" / "trajectory.jsonl").exists()


def test_report_empty_trajectory_fails(tmp_path, capsys):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    code, _, err = run_cli(capsys, "report", str(path))
    assert code == 2
    assert err.startswith("error: EDOMAIN:")


def test_svg_marks_one_rule_per_crossed_gap(tmp_path):
    # weighted delta_s crosses at index 2; the unweighted gaps never do
    records = []
    for i, value in enumerate([0.4, 0.1, -0.2, -0.5]):
        records.append(fake_record(i, {"weighted_delta_s": value}))
    traj = trajectory_from_gaps("weighted_delta_s", [0.4, 0.1, -0.2, -0.5])
    svg_path = tmp_path / "fig.svg"
    render_trajectory(traj, svg_path)
    svg = svg_path.read_text()
    # both panels carry exactly one crossing rule, for the weighted gap
    assert svg.count('class="zero-crossing zero-crossing-weighted_delta_s"') == 2
    assert 'zero-crossing-unweighted_delta_s"' not in svg
    assert 'zero-crossing-unweighted_delta_r"' not in svg
    assert (tmp_path / "fig.csv").exists()


def test_svg_axes_cover_data(tmp_path):
    gaps = [1.2, 0.3, -0.7]
    traj = trajectory_from_gaps("unweighted_delta_s", gaps)
    for i, record in enumerate(traj.records):
        record.q = {"w_xh": 1.0 - 0.3 * i, "w_hh": 1.0 - 0.3 * i}
        record.test_accuracy = 0.9 - 0.2 * i
    svg_path = tmp_path / "fig.svg"
    render_trajectory(traj, svg_path)
    svg = svg_path.read_text()
    assert "100.0" in svg and "40.0" in svg  # x range endpoints (percent)
    assert "1.20" in svg and "-0.70" in svg  # gap axis endpoints
