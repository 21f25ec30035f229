import csv
import json

import jsonschema
import pytest

from vmcboost import cli
from vmcboost.model import ValidationReport


def run(tmp_path, *args, name="out"):
    out = tmp_path / name
    code = cli.run([*args, "--out", str(out)])
    return code, out


def summary(out):
    return json.loads((out / "summary.json").read_text())


def test_analyze_defaults(tmp_path):
    code, out = run(tmp_path, "analyze")
    assert code == 0
    op = summary(out)["result"]["operating_point"]
    assert (op["v_out"], op["v_sw"], op["v_d"], op["i_l_avg"]) == (480.0, 120.0, 240.0, 6.0)


def test_analyze_region_error(tmp_path, capsys):
    code, out = run(tmp_path, "analyze", "--duty", "0.4")
    assert code == 1
    assert "0.5 < duty < 1" in capsys.readouterr().err
    assert not (out / "summary.json").exists()


def test_analyze_halved_input(tmp_path):
    _, a = run(tmp_path, "analyze", name="a")
    _, b = run(tmp_path, "analyze", "--v_in", "15", name="b")
    oa, ob = summary(a)["result"]["operating_point"], summary(b)["result"]["operating_point"]
    for key in ("v_out", "v_c1", "v_c2", "v_c3", "v_c4", "v_sw", "v_d"):
        assert ob[key] == oa[key] / 2


def test_config_file_and_dashed_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"v_in": 20, "duty": 0.8}))
    code, out = run(tmp_path, "analyze", "--config", str(cfg), "--r-load", "1000")
    assert code == 0
    doc = summary(out)
    assert doc["config"]["v_in"] == 20.0 and doc["config"]["r_load"] == 1000.0
    assert doc["result"]["operating_point"]["v_out"] == pytest.approx(400.0)


@pytest.mark.parametrize("content", ['{"v_inn": 30}', '{"v_in": "thirty"}', "[1, 2]", "{not json"])
def test_bad_config_exit_one(tmp_path, content):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(content)
    code, _ = run(tmp_path, "analyze", "--config", str(cfg))
    assert code == 1


def test_simulate_defaults(tmp_path):
    code, out = run(tmp_path, "simulate")
    assert code == 0
    res = summary(out)["result"]
    assert res["converged"]
    assert res["metrics"]["vout"]["mean"] == pytest.approx(480.0, rel=0.02)
    assert res["stress"]["S1"]["peak_voltage"] == pytest.approx(120.0, rel=0.02)
    assert res["diode_consistency"]["violations"] == 0
    header = (out / "waveforms.csv").read_text().splitlines()[0]
    assert header == "t,iL1,iL2,vC1,vC2,vC3,vC4,vout,iin,vsw1,vsw2,vd1,vd2,vd3,vd4,id1,id2,id3,id4"
    with open(out / "waveforms.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) > 512
    assert float(rows[0]["vout"]) == pytest.approx(480.0, rel=0.02)


def test_simulate_non_convergence_exit_three(tmp_path):
    code, out = run(tmp_path, "simulate", "--max_cycles", "1")
    assert code == 3
    doc = summary(out)
    assert doc["status"] == "not_converged" and doc["result"]["converged"] is False


def test_simulate_validation_failure_exit_two(tmp_path, monkeypatch):
    report = ValidationReport()
    report.add("mode_II_conduction", False, "mode II: wrong diodes")
    monkeypatch.setattr(cli, "validate_model", lambda model: report)
    code, _ = run(tmp_path, "simulate")
    assert code == 2


@pytest.mark.parametrize("target,duty", [(480, 0.75), (960, 0.875)])
def test_design(tmp_path, target, duty):
    code, out = run(tmp_path, "design", "--target_v_out", str(target))
    assert code == 0
    res = summary(out)["result"]
    assert res["duty"] == duty
    if target == 480:
        assert res["ratings"]["switch"]["voltage"] == pytest.approx(150.0)


def test_design_infeasible(tmp_path, capsys):
    code, _ = run(tmp_path, "design", "--target_v_out", "240")
    assert code == 1
    assert "gain above 8" in capsys.readouterr().err


def test_losses_defaults(tmp_path):
    code, out = run(tmp_path, "losses")
    assert code == 0
    report = summary(out)["result"]["report"]
    assert report["efficiency"] == pytest.approx(0.96, abs=0.01)
    assert sum(report["items"].values()) == pytest.approx(report["p_total"], rel=1e-12)


def test_losses_lossless(tmp_path):
    code, out = run(tmp_path, "losses", "--lossless")
    assert code == 0
    report = summary(out)["result"]["report"]
    assert all(v == 0 for v in report["items"].values())
    assert report["lossless"] is True


def test_sweep_rows_and_interior_peak(tmp_path):
    code, out = run(tmp_path, "sweep", "--p_min", "50", "--p_max", "360", "--points", "20")
    assert code == 0
    with open(out / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["p_out", "efficiency"]
    assert len(rows) == 20
    eta = [float(r["efficiency"]) for r in rows]
    k = eta.index(max(eta))
    assert 0 < k < len(eta) - 1


@pytest.mark.parametrize("command", ["analyze", "simulate", "design", "losses", "sweep"])
def test_summary_validates_against_shipped_schema(tmp_path, command):
    extra = ["--points", "3"] if command == "sweep" else []
    code, out = run(tmp_path, command, *extra)
    assert code == 0
    doc = summary(out)
    shipped = json.loads((out / "schema.json").read_text())
    assert shipped == cli.schema()
    jsonschema.validate(doc, shipped)


def test_schema_rejects_malformed_summary():
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate({"command": "analyze", "status": "ok", "config": {}, "result": {}}, cli.schema())


@pytest.mark.parametrize("command", ["simulate", "sweep"])
def test_reruns_are_byte_identical(tmp_path, command):
    extra = ["--points", "4", "--figures"] if command == "sweep" else ["--figures"]
    _, a = run(tmp_path, command, *extra, name="a")
    _, b = run(tmp_path, command, *extra, name="b")
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    assert any(name.endswith(".png") for name in files)
    for name in files:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_figures_are_opt_in(tmp_path):
    _, out = run(tmp_path, "losses")
    assert not list(out.glob("*.png"))
    _, out = run(tmp_path, "losses", "--figures", name="fig")
    assert sorted(p.name for p in out.glob("*.png")) == ["losses.png", "waveforms.png"]


def test_main_exits_with_code(tmp_path):
    with pytest.raises(SystemExit) as exc:
        cli.main(["analyze", "--duty", "0.3", "--out", str(tmp_path)])
    assert exc.value.code == 1
