import csv
import json
import subprocess
import sys

import pytest

from tisca.cli import HISTORY_COLUMNS, main
from tisca.config import config_from_dict, parse_config
from tisca.exceptions import ParseError, ValidationError

MINIMAL = {"comparisons": [{"name": "c", "metric_proposed": "a",
                            "metric_benchmark": "b", "mde": 0.5}]}


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return path


def test_minimal_defaults():
    cfg = config_from_dict(MINIMAL)
    t = cfg.tisca
    assert t.correction == "none"
    assert t.initial_count == t.batch_size == 50
    assert t.alpha == 0.05 and t.target_power == 0.8
    assert t.comparisons[0].alternative == "two_sided"
    assert cfg.parallelism == 1 and cfg.source is None


@pytest.mark.parametrize("patch, field", [
    ({"alpha": 1.5}, "alpha"),
    ({"target_power": 1.0}, "target_power"),
    ({"batch_size": 0}, "batch_size"),
    ({"correction": "sidak"}, "correction"),
    ({"parallelism": 0}, "parallelism"),
    ({"colour": "blue"}, "colour"),
    ({"source": {"builtin": "nope"}}, "source"),
    ({"source": {"command": []}}, "source"),
])
def test_invalid_fields(patch, field):
    with pytest.raises(ValidationError) as exc:
        config_from_dict({**MINIMAL, **patch})
    assert exc.value.field == field


def test_duplicate_comparison_names():
    comps = MINIMAL["comparisons"] * 2
    with pytest.raises(ValidationError) as exc:
        config_from_dict({"comparisons": comps})
    assert exc.value.field == "comparisons"


def test_comparison_entry_checks():
    for bad in ({"name": "c", "metric_proposed": "a", "metric_benchmark": "b"},
                {"name": "c", "metric_proposed": "a", "metric_benchmark": "b", "mde": "1"},
                {"name": "c", "metric_proposed": "a", "metric_benchmark": "b", "mde": 1,
                 "extra": 1}):
        with pytest.raises(ValidationError):
            config_from_dict({"comparisons": [bad]})
    with pytest.raises(ValidationError):
        config_from_dict({"comparisons": []})


def test_parse_error_reports_line(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text('{\n  "alpha": 0.05,\n  "comparisons": [,]\n}\n')
    with pytest.raises(ParseError) as exc:
        parse_config(path)
    assert exc.value.line == 3
    with pytest.raises(ParseError):
        parse_config(tmp_path / "missing.json")


def test_round_trip_through_to_dict():
    doc = {**MINIMAL, "correction": "BH", "source": {"command": ["sim", "-x"]},
           "batch_size": 20, "initial_count": 10, "parallelism": 2}
    cfg = config_from_dict(doc)
    echoed = cfg.to_dict()
    assert echoed["correction"] == "BH"
    assert config_from_dict(echoed) == cfg


def gauss_config(tmp_path, fixture_cmd, **extra):
    doc = {
        "source": {"command": fixture_cmd("gauss_sim.py")},
        "comparisons": [{"name": "a_vs_b", "metric_proposed": "model_a",
                         "metric_benchmark": "model_b", "mde": -1.0}],
        "batch_size": 10, **extra,
    }
    return write_json(tmp_path / "cfg.json", doc)


def test_cli_run_subprocess_source(tmp_path, fixture_cmd, capsys):
    cfg = gauss_config(tmp_path, fixture_cmd, parallelism=2)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert "power_reached" in capsys.readouterr().out

    report = json.loads((out / "report.json").read_text())
    assert report["stopped_by"] == "power_reached"
    j = report["j_final"]
    with open(out / "runs.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["seed", "model_a", "model_b"]
    assert [int(r[0]) for r in rows[1:]] == list(range(1, j + 1))
    with open(out / "power_history.csv") as fh:
        hist = list(csv.DictReader(fh))
    assert tuple(hist[0]) == HISTORY_COLUMNS
    assert int(hist[-1]["j"]) == j
    assert float(hist[-1]["estimated_power"]) >= 0.8


def test_cli_max_j_exit_code(tmp_path, fixture_cmd):
    cfg = gauss_config(tmp_path, fixture_cmd, max_j=30, parallelism=4)
    cfg_doc = json.loads(cfg.read_text())
    cfg_doc["comparisons"][0]["mde"] = -0.01
    write_json(cfg, cfg_doc)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out)]) == 2
    report = json.loads((out / "report.json").read_text())
    assert report["stopped_by"] == "max_j_reached" and report["j_final"] == 30


def test_cli_errors_exit_one(tmp_path, fixture_cmd, capsys):
    bad = write_json(tmp_path / "bad.json", {**MINIMAL, "alpha": 2})
    assert main(["run", "--config", str(bad)]) == 1
    no_source = write_json(tmp_path / "nosrc.json", MINIMAL)
    assert main(["run", "--config", str(no_source)]) == 1

    failing = write_json(tmp_path / "fail.json", {
        **MINIMAL, "source": {"command": fixture_cmd("fail_sim.py")}})
    assert main(["run", "--config", str(failing), "--out", str(tmp_path / "o")]) == 1
    assert "error" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 1


def test_cli_demo_small(tmp_path):
    cfg = write_json(tmp_path / "demo.json", {
        "comparisons": [{"name": "pehe1", "metric_proposed": "slearner_pehe1",
                         "metric_benchmark": "tlearner_pehe1", "mde": -3.0}],
        "batch_size": 20,
    })
    out = tmp_path / "out"
    code = main(["demo", "--config", str(cfg), "--n-train", "200", "--n-test", "200",
                 "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["config"]["source"] == {"builtin": "dgp1-linear-demo"}
    assert report["j_final"] % 20 == 0


def test_cli_power_anchor(capsys):
    assert main(["power", "--n", "50", "--sd-a", "1", "--sd-b", "1", "--delta", "0.566"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("power = 0.80")


def test_cli_validate_small(tmp_path, capsys):
    cfg = write_json(tmp_path / "v.json", {**MINIMAL, "batch_size": 20})
    assert main(["validate", "--config", str(cfg), "--reps", "20"]) == 0
    out = capsys.readouterr().out
    assert "20 repetitions" in out and "c " in out


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "tisca", "power", "--n", "10",
                           "--sd-a", "1", "--sd-b", "2", "--delta", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("power = ")
