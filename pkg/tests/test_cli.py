import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from bellchain import csvio
from bellchain.cli import Config, ConfigError, _as_float, main, run
from bellchain.plots import emit_plot

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return path


SMALL_SWEEP = """
[chain]
kind = "branched"
n_chain = 12

[sweep]
jm_lo = 0.5
jm_hi = 3.0
jm_coarse_step = 0.25
jm_refine_step = 0.05
tau_max = 20.0
"""

SMALL_DISORDER = """
[run]
seed = 4242

[chain]
kind = "branched"
n_chain = 12

[disorder]
jm_star = 1.5
tau_star = 5.0
n_realizations = 30
p_grid = [0.001, 0.01, 0.05]
"""

SMALL_PERTURB = """
[run]
seed = 99

[chain]
kind = "branched"
n_chain = 12

[perturb]
n_per_p = 25
p_lo = 0.0
p_hi = 0.1
p_step = 0.05

[sweep]
jm_lo = 0.5
jm_hi = 3.0
jm_coarse_step = 0.25
jm_refine_step = 0.05
tau_max = 20.0
"""


def test_as_float_accepts_pi_multiples():
    assert _as_float("25pi") == pytest.approx(25 * math.pi)
    assert _as_float("2.5*pi") == pytest.approx(2.5 * math.pi)
    assert _as_float("pi") == pytest.approx(math.pi)
    assert _as_float(3) == 3.0
    with pytest.raises(ValueError):
        _as_float("twenty")


def test_config_errors_name_field_and_line(tmp_path):
    cfg = Config("[chain]\nkind = 'branched'\n\n[sweep]\njm_lo = 'abc'\n", "x.toml")
    with pytest.raises(ConfigError, match=r"x\.toml:1: missing required field `n_chain` in \[chain\]"):
        cfg.get("chain", "n_chain", int)
    with pytest.raises(ConfigError, match=r"x\.toml:5: field `jm_lo`"):
        cfg.get("sweep", "jm_lo", float)
    with pytest.raises(ConfigError, match="x.toml"):
        Config("[chain\n", "x.toml")


def test_missing_n_chain_exits_1(tmp_path, capsys):
    path = write(tmp_path, "[chain]\nkind = 'branched'\n\n[sweep]\njm_lo = 0.0\njm_hi = 1.0\n")
    assert run("sweep", path, tmp_path / "out") == 1
    err = capsys.readouterr().err
    assert "n_chain" in err and "run.toml:1" in err


def test_invalid_values_exit_1(tmp_path):
    path = write(tmp_path, SMALL_SWEEP.replace('"branched"', '"ring"'))
    assert run("sweep", path, tmp_path / "out") == 1
    path = write(tmp_path, SMALL_SWEEP.replace("n_chain = 12", "n_chain = 2"))
    assert run("sweep", path, tmp_path / "out") == 1
    assert run("sweep", tmp_path / "nope.toml", tmp_path / "out") == 1
    assert run("sweep", write(tmp_path, SMALL_SWEEP), tmp_path / "out", workers=0) == 1


def test_sweep_command(tmp_path):
    out = tmp_path / "out"
    assert run("sweep", write(tmp_path, SMALL_SWEEP), out) == 0
    (best,) = csvio.read_optimum(out / "optimum.csv")
    coarse = csvio.read_sweep(out / "sweep.csv")
    assert len(coarse) == 11
    assert best.objective_value >= coarse[:, 2].max() - 1e-12
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "sweep"
    assert set(manifest["outputs"]) == {"sweep.csv", "sweep_refined.csv", "optimum.csv"}
    assert "PCG64" in manifest["prng"]


def test_trace_command_with_plot(tmp_path):
    cfg = "[chain]\nkind = 'branched'\nn_chain = 10\nj_m = 1.6\n\n[trace]\ntau_max = 5.0\ntau_step = 0.05\n"
    out = tmp_path / "out"
    assert run("trace", write(tmp_path, cfg), out, plot=True) == 0
    records = csvio.read_trace(out / "trace.csv")
    assert len(records) == 101 and records[-1].tau == 5.0
    assert (out / "trace.svg").exists()


def test_compare_command(tmp_path):
    cfg = "[compare]\nn_chain = 12\njm_lo = -3.0\njm_hi = 3.0\njm_coarse_step = 0.5\njm_refine_step = 0.1\ntau_max = 20.0\n"
    out = tmp_path / "out"
    assert run("compare", write(tmp_path, cfg), out) == 0
    rows = csvio.read_rows(out / "compare.csv", ("label", "kind", "j_a", "j_a_tilde", "j_b", "j_b_tilde", "jm_star", "tau_star", "objective_value"))
    assert sorted(r[0] for r in rows) == list("abcdef")
    values = [float(r[-1]) for r in rows]
    assert values == sorted(values, reverse=True)


def test_single_command(tmp_path):
    cfg = "[single]\nn_chain = 10\njm_lo = 0.5\njm_hi = 2.0\njm_coarse_step = 0.5\njm_refine_step = 0.1\ntau_max = 30.0\n"
    out = tmp_path / "out"
    assert run("single", write(tmp_path, cfg), out) == 0
    rows = {r[0]: float(r[3]) for r in csvio.read_rows(out / "single.csv", ("model", "jm_star", "tau_star", "fidelity"))}
    assert rows["branched"] <= 0.5 + 1e-10
    assert rows["standard"] > 0.5


def test_oracle_check_command(tmp_path, capsys):
    out = tmp_path / "out"
    assert run("oracle-check", CONFIGS / "oracle_n4.toml", out) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["report"]["passed"] is True
    assert manifest["report"]["max_abs_deviation"] < 1e-8
    assert "oracle-check" in capsys.readouterr().out


def test_oracle_check_rejects_large_chain(tmp_path):
    path = write(tmp_path, "[chain]\nkind = 'branched'\nn_chain = 20\n")
    assert run("oracle-check", path, tmp_path / "out") == 1


def test_disorder_round_trip(tmp_path):
    out = tmp_path / "out"
    assert run("disorder", write(tmp_path, SMALL_DISORDER), out) == 0
    summary = csvio.read_disorder(out)
    assert summary.samples.shape == (3, 30)
    rows = csvio.read_rows(out / "disorder_summary.csv", csvio.DISORDER_SUMMARY_HEADER)
    np.testing.assert_allclose([float(r[1]) for r in rows], summary.mean, rtol=1e-11)
    # rewriting what was read gives the same bytes
    again = tmp_path / "again"
    again.mkdir()
    (point,) = csvio.read_rows(out / "disorder_point.csv", csvio.POINT_HEADER)
    from bellchain.sweep import OptimalPoint

    csvio.write_disorder(again, summary, OptimalPoint(float(point[0]), float(point[1]), float("nan")))
    for name in ("disorder.csv", "disorder_point.csv"):
        assert (again / name).read_bytes() == (out / name).read_bytes()


def test_schema_mismatch(tmp_path):
    path = write(tmp_path, "a,b\n1,2\n", "bad.csv")
    with pytest.raises(csvio.SchemaError, match="expected columns"):
        csvio.read_trace(path)


def test_fmt():
    assert csvio.fmt(3) == "3"
    assert csvio.fmt(0.1) == "0.1"
    assert csvio.fmt(np.int64(7)) == "7"
    assert csvio.fmt(1 / 3) == "0.333333333333"


@pytest.mark.parametrize("command,text", [("disorder", SMALL_DISORDER), ("perturb", SMALL_PERTURB)])
def test_outputs_are_byte_identical_across_runs_and_workers(tmp_path, command, text):
    path = write(tmp_path, text)
    digests = []
    for i, workers in enumerate((1, 1, 2)):
        out = tmp_path / f"out{i}"
        assert run(command, path, out, workers=workers) == 0
        digests.append(json.loads((out / "manifest.json").read_text())["outputs"])
    assert digests[0] == digests[1] == digests[2]


def test_seed_flag_changes_disorder(tmp_path):
    path = write(tmp_path, SMALL_DISORDER)
    assert run("disorder", path, tmp_path / "a", seed=1) == 0
    assert run("disorder", path, tmp_path / "b", seed=2) == 0
    assert (tmp_path / "a" / "disorder.csv").read_bytes() != (tmp_path / "b" / "disorder.csv").read_bytes()


def test_main_parses_arguments(tmp_path):
    out = tmp_path / "out"
    assert main(["sweep", "--config", str(write(tmp_path, SMALL_SWEEP)), "--out", str(out), "--workers", "1"]) == 0
    assert (out / "optimum.csv").exists()
    with pytest.raises(SystemExit):
        main(["bogus"])


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "bellchain.cli", "oracle-check", "--config", str(CONFIGS / "oracle_n4.toml"), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr


# ---------------------------------------------------------------------------
# plots


def test_plot_single_row_trace(tmp_path):
    from bellchain.measures import TransmissionRecord

    csv_path = csvio.write_trace(tmp_path / "t.csv", [TransmissionRecord(1.0, 0.5, 0.3, 0.4)])
    svg = emit_plot(csv_path, "trace").read_text()
    assert "<svg" in svg and "EoF" in svg


def test_plot_sweep_annotation(tmp_path):
    rows = np.array([[0.0, 1.0, 0.2], [1.0, 2.5, 0.75], [2.0, 3.0, 0.5]])
    svg = emit_plot(csvio.write_sweep(tmp_path / "s.csv", rows), "sweep").read_text()
    assert "peak 0.7500 at Jt/ħ = 2.500, J_m/J = 1.000" in svg


def test_plot_disorder_scatter(tmp_path):
    rows = [(p, i, 0.5 + 0.01 * i) for p in (0.01, 0.02) for i in range(7)]
    csv_path = csvio.write_rows(tmp_path / "disorder.csv", csvio.DISORDER_HEADER, rows)
    svg = emit_plot(csv_path, "disorder_scatter").read_text()
    # one marker per realization inside the scatter group; the curves carry no markers
    start = svg.index('<g id="PathCollection_1">')
    group = svg[start : svg.index("</g>", start)]
    assert group.count("<use") == 14
    assert svg.count('<g id="PathCollection_') == 1


def test_plot_is_deterministic(tmp_path):
    rows = np.array([[0.0, 1.0, 0.2], [1.0, 2.5, 0.75]])
    path = csvio.write_sweep(tmp_path / "s.csv", rows)
    first = emit_plot(path, "sweep", tmp_path / "a.svg").read_bytes()
    second = emit_plot(path, "sweep", tmp_path / "b.svg").read_bytes()
    assert first == second


def test_plot_subcommand_errors(tmp_path, capsys):
    bad = write(tmp_path, "x,y\n1,2\n", "bad.csv")
    assert main(["plot", str(bad), "--kind", "trace"]) == 1
