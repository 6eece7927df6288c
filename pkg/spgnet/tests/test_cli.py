# Copyright 2026 The spgnet developers.

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

# http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import logging
import os

import pytest
from pandas import read_csv

from spgnet.cli import main
from spgnet.io import load_tensor, write_ppm
from spgnet.models import ModelConfig, SPATNModel, SPGNetModel
from spgnet.pose import write_keypoints
from spgnet.train import save_model


def test_usage_errors(capsys):
    assert main([]) == 2
    assert main(["frobnicate"]) == 2
    assert main(["pose-maps"]) == 2


def test_version(capsys):
    assert main(["--version"]) == 0
    assert "spgnet" in capsys.readouterr().out


def test_synth_data(tmpdir):
    out = str(tmpdir.join("data"))
    assert main(["synth-data", "--n", "2", "--size", "32", "--classes", "5", "--out", out]) == 0
    assert len(read_csv(os.path.join(out, "manifest.csv"))) == 2
    assert os.path.exists(os.path.join(out, "000001_flow.phi.spgt"))


def test_pose_maps(keypoints_path, tmpdir):
    out = str(tmpdir.join("pose.spgt"))
    assert main(["pose-maps", "--keypoints", keypoints_path, "--size", "64", "--out", out]) == 0
    assert load_tensor(out).shape == (1, 30, 64, 64)
    assert main(["pose-maps", "--keypoints", keypoints_path, "--size", "64", "--no-distance-maps",
                 "--out", out]) == 0
    assert load_tensor(out).shape == (1, 18, 64, 64)


def test_bad_kappa_fails(keypoints_path, tmpdir):
    assert main(["pose-maps", "--keypoints", keypoints_path, "--kappa", "0.5",
                 "--out", str(tmpdir.join("pose.spgt"))]) == 1


@pytest.fixture()
def trained(toy_config, tmpdir):
    model_config = ModelConfig.from_config(toy_config)
    spatn, spgnet = str(tmpdir.join("spatn.ckpt")), str(tmpdir.join("spgnet.ckpt"))
    save_model(SPATNModel(model_config), toy_config, spatn)
    save_model(SPGNetModel(model_config), toy_config, spgnet)
    return spatn, spgnet


@pytest.fixture()
def inference_inputs(toy_samples, tmpdir):
    sample = toy_samples[0]
    files = {"source": str(tmpdir.join("source.ppm")), "parsing": str(tmpdir.join("source.pgm")),
             "source_pose": str(tmpdir.join("source.pose.txt")), "target_pose": str(tmpdir.join("target.pose.txt")),
             "flow": str(tmpdir.join("pair"))}
    write_ppm(files["source"], sample.source_image.data)
    sample.source_map.write(files["parsing"])
    write_keypoints(files["source_pose"], sample.source_keypoints)
    write_keypoints(files["target_pose"], sample.target_keypoints)
    sample.flow.save(files["flow"])
    return files


def _infer_args(trained, files, out, flow=None):
    return ["infer", "--spatn", trained[0], "--spgnet", trained[1], "--source", files["source"],
            "--source-parsing", files["parsing"], "--source-keypoints", files["source_pose"],
            "--target-keypoints", files["target_pose"], "--flow", flow or files["flow"], "--out", out]


def test_infer(trained, inference_inputs, tmpdir):
    out = str(tmpdir.join("out"))
    assert main(_infer_args(trained, inference_inputs, out, inference_inputs["flow"] + ".phi.spgt")) == 0
    assert os.path.exists(os.path.join(out, "pred.ppm"))
    assert os.path.exists(os.path.join(out, "pred.pgm"))


def test_infer_names_the_missing_flow(trained, inference_inputs, tmpdir, caplog):
    missing = str(tmpdir.join("nowhere"))
    with caplog.at_level(logging.ERROR):
        assert main(_infer_args(trained, inference_inputs, str(tmpdir), missing)) == 1
    assert missing + ".phi.spgt" in caplog.text


def test_train_spatn(toy_config_path, tmpdir):
    out = str(tmpdir)
    assert main(["train-spatn", "--config", toy_config_path, "--set", "stage1_iterations=1", "--out", out]) == 0
    assert os.path.exists(os.path.join(out, "spatn.ckpt.cfg"))
    assert main(["train-spatn", "--config", toy_config_path, "--set", "stage1_iterations", "--out", out]) == 1


def test_train_spgnet(toy_config_path, tmpdir):
    out = str(tmpdir)
    assert main(["train-spgnet", "--config", toy_config_path, "--scheme", "parallel", "--set", "iterations=1",
                 "--out", out]) == 0
    assert len(read_csv(os.path.join(out, "metrics.csv"))) == 1


def test_eval(toy_samples, tmpdir):
    pred, truth = tmpdir.mkdir("pred"), tmpdir.mkdir("truth")
    for directory in (pred, truth):
        write_ppm(str(directory.join("a.ppm")), toy_samples[0].target_image.data)
        toy_samples[0].target_map.write(str(directory.join("a.pgm")))
    out = str(tmpdir.join("scores.csv"))
    assert main(["eval", "--pred", str(pred), "--truth", str(truth), "--out", out]) == 0
    table = read_csv(out)
    assert list(table["name"]) == ["a", "mean"]
    assert table["miou"].tolist() == [1.0, 1.0]


def test_check(tmpdir):
    out = str(tmpdir.join("report.csv"))
    assert main(["check", "--suite", "invariants", "--out", out]) == 0
    assert read_csv(out)["passed"].all()
