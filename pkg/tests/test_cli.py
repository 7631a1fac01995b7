import csv
import json
import subprocess
import sys

import pytest

from qwtransfer.cli import main


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out)])
    return code, out


def rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_evolve_one_step(tmp_path):
    code, out = run(tmp_path, "evolve", "--steps", "1")
    assert code == 0
    got = [(r["step"], r["position"], float(r["probability"])) for r in rows(out / "evolve_distribution.csv")]
    assert [g[:2] for g in got] == [("0", "0"), ("1", "-1"), ("1", "1")]
    assert got[1][2] == pytest.approx(0.5, abs=1e-15)
    amps = json.loads((out / "evolve_amplitudes.json").read_text())
    assert amps["order"] == "coin_first"
    assert len(amps["inputs"]["ideal"][1]["branches"][0]["amplitudes"]) == 4


def test_evolve_zero_steps(tmp_path):
    code, out = run(tmp_path, "evolve", "--steps", "0")
    assert code == 0
    assert len(rows(out / "evolve_distribution.csv")) == 1


def test_negative_steps_is_config_error(tmp_path):
    code, out = run(tmp_path, "evolve", "--steps", "-1")
    assert code == 2
    assert not out.exists()


def test_entanglement_table(tmp_path):
    code, out = run(tmp_path, "entanglement", "--steps", "2")
    assert code == 0
    table = rows(out / "entanglement.csv")
    by_step = {int(r["step"]): r for r in table}
    assert abs(float(by_step[1]["e_avg"])) < 1e-10
    assert float(by_step[0]["e_normalized"]) == 1.0
    assert float(by_step[2]["e_avg"]) == pytest.approx(0.5, abs=1e-10)


def test_entanglement_reruns_are_byte_identical(tmp_path):
    _, a = run(tmp_path / "a", "entanglement", "--steps", "4", "--input", "both")
    _, b = run(tmp_path / "b", "entanglement", "--steps", "4", "--input", "both")
    assert (a / "entanglement.csv").read_bytes() == (b / "entanglement.csv").read_bytes()


def test_remote_scan_columns(tmp_path):
    code, out = run(tmp_path, "remote-scan", "--steps", "2", "--grid-deg", "10")
    assert code == 0
    table = rows(out / "remote_scan.csv")
    cells = {(r["scenario"], r["step"], r["alpha_deg"], r["beta_deg"]): r for r in table}
    assert {r["scenario"] for r in table} == {"entangled", "theory_a", "theory_b", "theory_c", "mixed"}
    assert {r["alpha_deg"] for r in table} == {str(d) for d in range(0, 180, 10)}
    # at step 1 the entangled and theory A surfaces coincide
    for (name, step, a, b), r in cells.items():
        if name == "entangled" and step == "1" and r["present"] == "true":
            ref = cells[("theory_a", step, a, b)]
            assert float(r["raw_variance"]) == pytest.approx(float(ref["raw_variance"]), abs=1e-12)
    ent2 = max(float(r["raw_variance"]) for r in table
               if r["scenario"] == "entangled" and r["step"] == "2" and r["present"] == "true")
    cl2 = max(float(r["raw_variance"]) for r in table
              if r["scenario"] == "theory_a" and r["step"] == "2" and r["present"] == "true")
    assert ent2 - cl2 >= 0.5
    norm = [float(r["normalized_variance"]) for r in table
            if r["scenario"] == "mixed" and r["step"] == "2" and r["present"] == "true"]
    assert min(norm) == 0.0 and max(norm) == 1.0
    missing = [r for r in table if r["present"] == "false"]
    assert missing and all(r["raw_variance"] == "nan" for r in missing)


def test_exact_tomography(tmp_path):
    code, out = run(tmp_path, "tomography", "--steps", "2", "--exact")
    assert code == 0
    table = rows(out / "tomography.csv")
    assert all(float(r["fidelity"]) >= 1 - 1e-9 for r in table)
    assert float(table[0]["chsh"]) == pytest.approx(1.0, abs=1e-9)


def test_sampled_tomography_is_reproducible(tmp_path):
    args = ("tomography", "--steps", "1", "--input", "werner", "--shots", "1000000", "--seed", "5")
    _, a = run(tmp_path / "a", *args)
    _, b = run(tmp_path / "b", *args)
    assert (a / "tomography.csv").read_bytes() == (b / "tomography.csv").read_bytes()
    assert float(rows(a / "tomography.csv")[0]["chsh"]) == pytest.approx(0.6488, abs=0.01)


def test_sampled_tomography_needs_a_seed(tmp_path):
    code, out = run(tmp_path, "tomography", "--steps", "1")
    assert code == 2
    assert not out.exists()


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"steps": 3, "input": "both", "classical-weight": 0.25}))
    code, out = run(tmp_path, "evolve", "--config", str(cfg), "--steps", "1")
    assert code == 0
    table = rows(out / "evolve_distribution.csv")
    assert {r["input"] for r in table} == {"ideal", "werner"}
    assert max(int(r["step"]) for r in table) == 1


def test_classical_weight_alias(tmp_path):
    code, out = run(tmp_path, "remote-scan", "--steps", "1", "--grid-deg", "45", "--classical-weight", "0.3")
    assert code == 0
    mixed = [r for r in rows(out / "remote_scan.csv") if r["scenario"] == "mixed"]
    assert float(mixed[0]["entangled_weight"]) == pytest.approx(0.7)


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"stepz": 3}))
    assert run(tmp_path, "evolve", "--config", str(cfg))[0] == 2


def test_json_output_has_sorted_keys_and_no_nan(tmp_path):
    code, out = run(tmp_path, "remote-scan", "--steps", "1", "--grid-deg", "45", "--format", "json")
    assert code == 0
    text = (out / "remote_scan.json").read_text()
    assert "NaN" not in text
    payload = json.loads(text)
    first = payload["rows"][0]
    assert list(first) == sorted(first)
    assert first["raw_variance"] is None  # alpha = beta = 0 is an orthogonal projection


def test_runtime_error_exit_code_leaves_no_files(tmp_path):
    # a Werner pair this noisy has zero initial entanglement, so normalization fails
    code, out = run(tmp_path, "entanglement", "--input", "werner", "--visibility", "0.2")
    assert code == 3
    assert not out.exists() or not any(out.iterdir())


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "qwtransfer", "evolve", "--steps", "1",
                           "--out", str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "evolve_distribution.csv").exists()
