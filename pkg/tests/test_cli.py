import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from coherent_receiver import cli
from coherent_receiver.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, SWEEP_COLUMNS, SweepConfig, main


def run_cli(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_sweep_csv_layout(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--alphabet", "bpsk", "--channel", "stirap", "--n", "10,2",
                           "--alpha-min", "0", "--alpha-max", "1", "--alpha-steps", "3")
    assert code == EXIT_OK
    rows = parse_csv(out)
    assert tuple(rows[0].keys()) == SWEEP_COLUMNS
    assert [(float(r["alpha"]), int(r["n"])) for r in rows] == [(0.0, 2), (0.0, 10), (0.5, 2), (0.5, 10),
                                                                 (1.0, 2), (1.0, 10)]
    for r in rows[:2]:
        for col in ("receiver_error", "helstrom_bound", "homodyne_error"):
            assert float(r[col]) == pytest.approx(0.5, abs=1e-12)
    # round-trip formatting
    assert all(repr(float(r["helstrom_bound"])) == r["helstrom_bound"] for r in rows)


def test_sweep_is_bit_identical(tmp_path, capsys):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert main(["sweep", "--alphabet", "3ask", "--channel", "ideal-swap", "--n", "2,5",
                     "--alpha-max", "1.2", "--alpha-steps", "4", "--output", str(p)]) == EXIT_OK
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_sweep_jsonl(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--alphabet", "bpsk", "--channel", "exact-pure", "--n", "4",
                           "--alpha-max", "0.6", "--alpha-steps", "2", "--format", "jsonl")
    assert code == EXIT_OK
    records = [json.loads(line) for line in out.splitlines()]
    assert len(records) == 2 and set(records[0]) == set(SWEEP_COLUMNS)
    assert records[0]["skipped"] is False


def test_sweep_flags_guarded_cells(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--alphabet", "bpsk", "--channel", "stirap", "--n", "2,30",
                           "--alpha-min", "1", "--alpha-max", "2", "--alpha-steps", "2")
    assert code == EXIT_OK
    rows = {(float(r["alpha"]), int(r["n"])): r for r in parse_csv(out)}
    assert rows[(2.0, 2)]["skipped"] == "true" and rows[(2.0, 2)]["receiver_error"] == ""
    assert rows[(2.0, 30)]["skipped"] == "false" and rows[(2.0, 30)]["receiver_error"] != ""


def test_sweep_lossy_rows_respect_bound(capsys):
    for alphabet in ("bpsk", "3ask"):
        code, out, _ = run_cli(capsys, "sweep", "--alphabet", alphabet, "--channel", "stirap", "--n", "2,10",
                               "--alpha-max", "1.3", "--alpha-steps", "5")
        assert code == EXIT_OK
        for r in parse_csv(out):
            assert float(r["receiver_error"]) >= float(r["helstrom_bound"]) - 1e-9


def test_sweep_finite_n_gap_for_ternary_stirap(capsys):
    code, out, _ = run_cli(capsys, "sweep", "--alphabet", "3ask", "--channel", "stirap", "--n", "2",
                           "--alpha-min", "1.2", "--alpha-max", "1.3", "--alpha-steps", "2")
    for r in parse_csv(out):
        assert float(r["receiver_error"]) - float(r["helstrom_bound"]) > 1e-2


def test_sweep_exact_pure_gap_shrinks(capsys):
    def max_gap(n):
        _, out, _ = run_cli(capsys, "sweep", "--alphabet", "bpsk", "--channel", "exact-pure", "--n", str(n),
                            "--alpha-max", "1.5", "--alpha-steps", "7")
        return max(abs(float(r["receiver_error"]) - float(r["helstrom_bound"])) for r in parse_csv(out))

    assert max_gap(100) < max_gap(10)


def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"alphabet": "bpsk", "channel": "stirap", "n": [3], "alpha_max": 0.5,
                               "alpha_steps": 2, "format": "jsonl"}))
    code, out, _ = run_cli(capsys, "sweep", "--config", str(cfg))
    assert code == EXIT_OK
    assert [json.loads(line)["n"] for line in out.splitlines()] == [3, 3]
    code, out, _ = run_cli(capsys, "sweep", "--config", str(cfg), "--n", "5", "--format", "csv")
    assert code == EXIT_OK
    assert {int(r["n"]) for r in parse_csv(out)} == {5}


@pytest.mark.parametrize("payload,field", [
    ({"alphabet": "bpsk", "channel": "stirap", "colour": "red"}, "colour"),
    ({"alphabet": "bpsk", "channel": "stirap", "alpha_steps": 1}, "alpha_steps"),
    ({"alphabet": "bpsk", "channel": "stirap", "alpha_min": -1}, "alpha_min"),
    ({"alphabet": "bpsk", "channel": "stirap", "slice_counts": [0]}, "slice_counts"),
    ({"alphabet": "bpsk", "channel": "laser"}, "channel"),
    ({"alphabet": "qam", "channel": "stirap"}, "alphabet"),
])
def test_config_errors_name_the_field(tmp_path, capsys, payload, field):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps(payload))
    code, _, err = run_cli(capsys, "sweep", "--config", str(cfg))
    assert code == EXIT_CONFIG
    assert field in err


def test_config_unreadable(tmp_path, capsys):
    code, _, err = run_cli(capsys, "sweep", "--config", str(tmp_path / "missing.json"))
    assert code == EXIT_CONFIG
    (tmp_path / "bad.json").write_text("{not json")
    code, _, _ = run_cli(capsys, "sweep", "--config", str(tmp_path / "bad.json"))
    assert code == EXIT_CONFIG


def test_sweep_config_defaults():
    cfg = SweepConfig(alphabet="bpsk", channel="stirap").validate()
    assert cfg.slice_counts == [2, 10, 30, 100]
    assert np.allclose(cfg.alpha_grid, np.linspace(0, 1.5, 16))


def test_gram_bpsk(capsys):
    code, out, _ = run_cli(capsys, "gram", "--alphabet", "bpsk", "--alpha", "1", "--n", "10")
    assert code == EXIT_OK
    rec = json.loads(out)
    assert rec["compressed_gram"][0][1] == pytest.approx((0.9 / 1.1) ** 10, abs=1e-12)
    assert rec["coherent_gram"][0][1] == pytest.approx(np.exp(-2), abs=1e-15)
    assert rec["slice_leakage"] <= 1e-12


def test_gram_ternary_entries(capsys):
    alpha, n = 1.0, 12
    code, out, _ = run_cli(capsys, "gram", "--alphabet", "3ask", "--alpha", str(alpha), "--n", str(n))
    g = np.array(json.loads(out)["compressed_gram"])
    x = (n / (n + alpha**2)) ** (n / 2)
    y = ((n - alpha**2) / (n + alpha**2)) ** n
    assert np.allclose(g, [[1, x, y], [x, 1, x], [y, x, 1]], atol=1e-12)


def test_gram_large_n_deviation(capsys):
    code, out, _ = run_cli(capsys, "gram", "--alphabet", "bpsk", "--alpha", "1", "--n", "3000")
    assert json.loads(out)["max_deviation"] <= 1e-4


def test_run_report(capsys):
    code, out, _ = run_cli(capsys, "run", "--alphabet", "3ask", "--alpha", "0.8", "--n", "6", "--channel", "ideal-swap")
    assert code == EXIT_OK
    rec = json.loads(out)
    assert rec["max_contract_residual"] <= 1e-10
    assert rec["max_unitarity_residual"] <= 1e-12
    assert rec["max_trace_error"] <= 1e-10
    assert rec["min_state_eigenvalue"] >= -1e-10
    assert rec["receiver_error"] >= rec["helstrom_bound"] - 1e-9


def test_multimode_command(capsys):
    code, out, _ = run_cli(capsys, "multimode", "--alpha", "0.5", "--n", "10", "--channel", "ideal-swap")
    assert code == EXIT_OK
    rec = json.loads(out)
    assert rec["joint_error"] <= rec["per_mode_error"]
    assert rec["joint_error"] >= rec["helstrom_bound"] - 1e-9
    code, out, _ = run_cli(capsys, "multimode", "--alpha", "0", "--n", "3")
    rec = json.loads(out)
    assert rec["joint_error"] == pytest.approx(2 / 3, abs=1e-9)
    assert rec["per_mode_error"] == pytest.approx(2 / 3, abs=1e-9)


def test_point_command_errors(capsys):
    assert run_cli(capsys, "run", "--alpha", "-1", "--n", "4")[0] == EXIT_CONFIG
    assert run_cli(capsys, "run", "--alpha", "1", "--n", "0")[0] == EXIT_CONFIG
    assert run_cli(capsys, "run", "--alpha", "1", "--n", "4", "--channel", "bogus")[0] == EXIT_CONFIG
    code, _, err = run_cli(capsys, "run", "--alpha", "3", "--n", "2")
    assert code == EXIT_CONFIG and "need n >=" in err


def test_numerical_failure_exit_code(capsys, monkeypatch):
    from coherent_receiver import discrimination

    original = discrimination.povm_optimize
    monkeypatch.setattr(cli, "povm_optimize", lambda prob: original(prob, max_iters=1))
    code, _, err = run_cli(capsys, "multimode", "--alpha", "0.5", "--n", "4")
    assert code == EXIT_NUMERIC and "converge" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "coherent_receiver", "gram", "--alpha", "0.5", "--n", "4"],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["n"] == 4
