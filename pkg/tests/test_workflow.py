import json
import os
import sys

import pytest
from typer.testing import CliRunner

# Add the app directory to Python path
sys.path.append(os.path.join(os.path.dirname(os.path.abspath(__file__)), ".."))

from cli.main import app
from griddata.gfb import read_series
from utils.helper import read_csv

runner = CliRunner()

TINY = """
grid_size = 8
lowres_factor = 4
n_days = 40
n_train_days = 32
batch_size = 4
max_epochs = 1
patience = 1
n_quantiles = 4
kl_bins = 5
"""

STEPS = ["gen-data", "train", "baseline", "evaluate", "extremes", "robustness"]


def run_all(tmp_path, name, extra=""):
    config = tmp_path / f"{name}.conf"
    config.write_text(TINY + extra)
    out = tmp_path / name
    for step in STEPS:
        result = runner.invoke(app, ["--config", str(config), "--out", str(out), step])
        assert result.exit_code == 0, f"{step}: {result.stdout}"
    return out


def checkpoints(out):
    return sorted(f for f in os.listdir(out / "checkpoints") if f.endswith(".mck1"))


class TestBiasCorrectionRun:
    def test_every_stage_writes_its_artifacts(self, tmp_path):
        out = run_all(tmp_path, "bc")
        assert checkpoints(out) == ["gt.mck1", "kr.mck1", "mp.mck1", "teacher.mck1"]

        summary = read_csv(str(out / "evaluation" / "summary.csv"))
        assert [row["model"] for row in summary] == ["bias_data", "TEACHER", "GT", "MP", "KR", "QM", "QDM"]

        indices = read_csv(str(out / "extremes" / "indices.csv"))
        assert len(indices) == 8 * 3
        detection = read_csv(str(out / "extremes" / "detection.csv"))
        assert [row["model"] for row in detection][0] == "bias_data"

        robustness = read_csv(str(out / "robustness" / "robustness.csv"))
        assert len(robustness) == 4

        manifest = json.loads((out / "manifest.json").read_text())
        assert set(STEPS) <= set(manifest)
        assert manifest["train"]["seeds"]["train_seed"] == 7

    def test_predict_uses_test_inputs(self, tmp_path):
        out = run_all(tmp_path, "bc")
        config = str(tmp_path / "bc.conf")
        result = runner.invoke(app, ["--config", config, "--out", str(out), "predict",
                                     "--checkpoint", str(out / "checkpoints" / "kr.mck1")])
        assert result.exit_code == 0
        prediction = read_series(str(out / "predictions" / "kr.gfb"))
        assert prediction.n_days == 8
        assert prediction.data.min() >= 0.0


class TestDownscalingRun:
    def test_interpolation_baselines_join_the_table(self, tmp_path):
        out = run_all(tmp_path, "ds", "task = downscaling\n")
        assert len(checkpoints(out)) == 4
        summary = read_csv(str(out / "evaluation" / "summary.csv"))
        assert {"BILINEAR", "BICUBIC", "QM", "QDM"} <= {row["model"] for row in summary}


@pytest.mark.slow
class TestReproducibility:
    def test_same_config_same_files(self, tmp_path):
        first = json.loads((run_all(tmp_path, "a") / "manifest.json").read_text())
        second = json.loads((run_all(tmp_path, "b") / "manifest.json").read_text())
        for step in ("gen-data", "train", "baseline"):
            assert first[step]["files"] == second[step]["files"]
