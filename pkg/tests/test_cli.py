import json

import pytest

from locforget.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_locate_figure_example(capsys):
    code, out, _ = run(capsys, "locate", "--caption", "a red car", "--prompt", "a yellow bus")
    assert code == 0
    assert json.loads(out)["forgetting_elements"] == ["red car"]


def test_locate_identical(capsys, tmp_path):
    target = tmp_path / "plan.json"
    code, out, _ = run(capsys, "locate", "--caption", "a red car", "--prompt", "a red car",
                       "--out", str(target))
    assert code == 0
    assert json.loads(target.read_text())["forgetting_elements"] == []


@pytest.mark.parametrize("argv", [
    ["locate", "--prompt", ""],
    ["locate", "--caption", "a red car", "--prompt", "very red"],
])
def test_locate_parse_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2
    assert "error" in err


def test_sample_writes_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "sample", "--out", str(tmp_path))
    assert code == 0
    final = json.loads((tmp_path / "final.json").read_text())
    meta = json.loads((tmp_path / "metadata.json").read_text())
    assert final["z"][0] > 0
    # frozen from the reference run with the default configuration
    assert final["z"][0] == pytest.approx(18.438058823495982, rel=1e-9)
    assert meta["config"]["w"] == 10.0 and meta["config"]["eta"] == 2.5
    assert meta["config"]["steps"] == 50 and meta["config"]["strength"] == 0.8
    assert meta["version"] and meta["plan"]["forgetting_elements"] == ["red car"]
    assert (tmp_path / "trajectory.csv").read_text().startswith("t,z0\n800,")


def test_sample_eta_zero_matches_plain_cfg(capsys, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(capsys, "sample", "--eta", "0", "--out", str(a))[0] == 0
    # no forgetting elements at all: caption and prompt agree
    assert run(capsys, "sample", "--eta", "0", "--caption", "a yellow bus", "--prompt", "a yellow bus",
               "--input=-3", "--out", str(b))[0] == 0
    assert json.loads((b / "metadata.json").read_text())["plan"]["forgetting_elements"] == []
    assert json.loads((a / "metadata.json").read_text())["cfg_equivalent"] is True
    assert (a / "trajectory.csv").read_bytes() == (b / "trajectory.csv").read_bytes()


def test_sample_config_file_flag_wins(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"w": 3.0, "eta": 1.0, "seed": 5}))
    assert run(capsys, "sample", "--config", str(cfg), "--eta", "0.5", "--out", str(tmp_path))[0] == 0
    meta = json.loads((tmp_path / "metadata.json").read_text())["config"]
    assert (meta["w"], meta["eta"], meta["seed"]) == (3.0, 0.5, 5)


def test_sample_bad_model_path(capsys, tmp_path):
    code, _, err = run(capsys, "sample", "--model", str(tmp_path / "nope.json"), "--out", str(tmp_path))
    assert code == 1


def test_sample_unknown_concept(capsys, tmp_path):
    code, _, err = run(capsys, "sample", "--prompt", "a green tram", "--out", str(tmp_path))
    assert code == 3
    assert "green tram" in err


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return path


def test_evaluate_round_trip(capsys, tmp_path):
    _write(tmp_path / "out.json", {"t": 0, "z": [-3.0]})
    manifest = _write(tmp_path / "m.json", [
        {"input": [-3.0], "output": "out.json", "reference": [3.0], "prompt": "a yellow bus"},
        {"input": [-3.0], "output": [3.0], "prompt": "a yellow bus"},
    ])
    code, out, _ = run(capsys, "evaluate", str(manifest))
    assert code == 0
    doc = json.loads(out)
    assert doc["aggregate"]["sample_count"] == 2
    assert doc["samples"][0]["l1"] == 0.0            # identical vectors
    assert doc["samples"][0]["clip_d"] <= 0          # a copy of the input
    assert doc["samples"][1]["clip_t"] == pytest.approx(1.0, abs=1e-12)
    assert doc["aggregate"]["inception_score"] == pytest.approx(2.0, abs=1e-6)


def test_evaluate_missing_file(capsys, tmp_path):
    manifest = _write(tmp_path / "m.json", [
        {"input": [0.0], "output": "missing.json", "prompt": "a yellow bus"}])
    code, _, err = run(capsys, "evaluate", str(manifest))
    assert code == 1
    assert "entry 0" in err and "missing.json" in err


def test_ablate_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "ablate", "--eta-grid", "2.5,0,2.5", "--chains", "20",
                       "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "ablation.csv").read_text().splitlines()
    assert lines[0].startswith("eta,chains,clip_t_x100")
    assert [l.split(",")[0] for l in lines[1:]] == ["0.0", "2.5", "2.5"]
    assert lines[2] == lines[3]
    assert (tmp_path / "ablation.svg").read_text().lstrip().startswith("<?xml")
    assert json.loads((tmp_path / "metadata.json").read_text())["eta_grid"] == [2.5, 0.0, 2.5]


def test_ablate_rows_independent(capsys, tmp_path):
    run(capsys, "ablate", "--eta-grid", "0,1,5", "--chains", "20", "--out", str(tmp_path / "a"))
    run(capsys, "ablate", "--eta-grid", "0,5", "--chains", "20", "--out", str(tmp_path / "b"))
    a = (tmp_path / "a" / "ablation.csv").read_text().splitlines()
    b = (tmp_path / "b" / "ablation.csv").read_text().splitlines()
    assert [a[1], a[3]] == b[1:]


def test_ablate_eta_zero_matches_plain_cfg(capsys, tmp_path):
    from locforget.diffusion import builtin_model, make_schedule, sample_finals
    from locforget.guidance import GuidanceParams
    from locforget.locate import EditPlan
    from locforget.pipeline import RunConfig, ablation_row

    row = ablation_row(RunConfig(), 0.0, 50)
    finals = sample_finals(builtin_model(), EditPlan(["yellow bus"], []), GuidanceParams(10, 0),
                           make_schedule(), [-3.0], 0.8, 0, 50)
    assert row["log_likelihood"] == pytest.approx(
        float(builtin_model().log_likelihood(finals).mean()), rel=1e-12)
