import csv
import json

import jsonschema
import numpy as np
import pytest

from cli_pipeline import SYNTH, output_files, pipeline, run
from fieldgrid.cli import main
from fieldgrid.io import load_schema, read_polygons, read_raster, write_raster
from fieldgrid.raster import Raster


@pytest.fixture(scope="module")
def outputs(tmp_path_factory):
    mp = pytest.MonkeyPatch()
    a = tmp_path_factory.mktemp("run_a")
    b = tmp_path_factory.mktemp("run_b")
    try:
        pipeline(a, mp)
        pipeline(b, mp)
    finally:
        mp.undo()
    return a, b


def test_all_outputs_bit_identical(outputs):
    a, b = outputs
    files_a, files_b = output_files(a), output_files(b)
    assert files_a == files_b
    assert len(files_a) > 20
    for rel in files_a:
        assert (a / rel).read_bytes() == (b / rel).read_bytes(), rel


def test_reports_validate_against_schemas(outputs):
    a, _ = outputs
    jsonschema.validate(json.loads((a / "eval.json").read_text()), load_schema("evaluation"))
    jsonschema.validate(json.loads((a / "eval_cut.json").read_text()), load_schema("evaluation"))
    jsonschema.validate(json.loads((a / "opt.json").read_text()), load_schema("optimization"))


def test_pipeline_content(outputs):
    a, _ = outputs
    ref = read_raster(a / "scene/reference.fgr").data[0]
    ids = read_raster(a / "ids.fgr").data[0]
    # polygons written by synth rasterise back onto the reference
    assert np.array_equal(ids, ref)
    assert np.array_equal(read_raster(a / "mosaic.fgr").data, read_raster(a / "scene/masks.fgr").data)
    doc = json.loads((a / "eval.json").read_text())
    assert doc["object"]["hit_rate"] == 1.0
    assert len(read_polygons(a / "fields.geojson")) == read_raster(a / "fields.fgr").data.max()
    with open(a / "table.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["name"] for r in rows] == ["eval", "eval_cut"]
    assert list(rows[0]) == ["name", "hit_rate", "oversegmentation", "undersegmentation", "eccentricity", "shift"]


def test_seed_changes_synth(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    run("--seed", "1", "synth", "--out", "s1", "--size", "64", "--n-fields", "6")
    run("--seed", "2", "synth", "--out", "s2", "--size", "64", "--n-fields", "6")
    assert (tmp_path / "s1/reference.fgr").read_bytes() != (tmp_path / "s2/reference.fgr").read_bytes()


def test_config_supplies_options(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "cfg.yaml").write_text("seed: 4\nsynth:\n  out: scene\n  size: 64\n  n_fields: 6\n")
    run("--config", "cfg.yaml", "synth")
    flags = tmp_path / "flags"
    flags.mkdir()
    monkeypatch.chdir(flags)
    run(*SYNTH)
    assert (tmp_path / "scene/masks.fgr").read_bytes() == (flags / "scene/masks.fgr").read_bytes()


def test_flag_overrides_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "cfg.json").write_text(json.dumps({"synth": {"out": "scene", "size": 64, "n_fields": 6}}))
    run("--config", "cfg.json", "synth", "--size", "80")
    assert read_raster(tmp_path / "scene/image.fgr").shape == (80, 80)


@pytest.mark.parametrize(
    "argv",
    [
        ["extract", "--masks", "missing.fgr", "--out", "x.fgr"],
        ["synth", "--out", "s", "--size", "8"],
        ["--config", "nope.yaml", "synth", "--out", "s"],
        ["extract", "--masks", "m.fgr", "--out", "x.fgr", "--thresholds", "2", "0.5", "0.5"],
    ],
)
def test_error_exit_code(tmp_path, monkeypatch, argv, capsys):
    monkeypatch.chdir(tmp_path)
    write_raster(Raster(np.zeros((3, 4, 4), np.float32), (0, 0, 1)), "m.fgr")
    assert main(argv) == 1
    assert "fieldgrid: error:" in capsys.readouterr().err


def test_missing_required_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["extract"])
    assert exc.value.code == 2


def test_log_env(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("FIELDGRID_LOG", "not-a-level")
    assert main(SYNTH) == 0
