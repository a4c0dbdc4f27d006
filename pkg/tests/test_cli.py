"""Command-line interface tests (in-process through main())."""

import json

import numpy as np
import pytest

from quadlab.cli import main
from quadlab.morphology import parse_robot_description
from quadlab.motions import ReferenceMotion


class TestMorph:
    def test_preset_prints_text_doc(self, capsys):
        assert main(["morph", "preset", "A1"]) == 0
        out = capsys.readouterr().out
        assert "name = A1" in out
        assert "base_length = 0.27" in out

    def test_preset_unknown_rejected(self):
        with pytest.raises(SystemExit):
            main(["morph", "preset", "NotARobot"])

    def test_sample_writes_urdf_and_text(self, tmp_path):
        assert main(["morph", "sample", "--seed", "7", "--count", "2",
                     "--out", str(tmp_path)]) == 0
        files = sorted(p.name for p in tmp_path.iterdir())
        assert files == ["sample_7_0.txt", "sample_7_0.urdf",
                         "sample_7_1.txt", "sample_7_1.urdf"]
        m = parse_robot_description(tmp_path / "sample_7_0.urdf")
        assert m.total_mass > 0

    def test_sample_with_config_document(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"size_factor_range": [1.1, 1.1]}))
        assert main(["morph", "sample", "--seed", "1", "--config", str(cfg),
                     "--out", str(tmp_path / "out")]) == 0
        m = parse_robot_description(tmp_path / "out" / "sample_1_0.urdf")
        assert m.size_factor == pytest.approx(1.1)


class TestMotion:
    def test_synth_pace_round_trips(self, tmp_path):
        out = tmp_path / "pace.json"
        assert main(["motion", "synth", "--gait", "pace", "--speed", "0.4",
                     "--out", str(out)]) == 0
        motion = ReferenceMotion.load(out)
        assert motion.loop
        assert motion.base_positions[-1, 0] == pytest.approx(
            0.4 * motion.duration, abs=1e-9)

    def test_synth_invalid_params_exit_code(self, tmp_path):
        code = main(["motion", "synth", "--gait", "pace", "--period", "-1",
                     "--out", str(tmp_path / "bad.json")])
        assert code == 2


class TestTrainEval:
    CFG = {"total_samples": 128, "workers": 2, "rollout_length": 32,
           "minibatch_size": 32, "epochs": 1, "mode": "fixed", "seed": 3}

    def test_train_then_sweep(self, tmp_path):
        cfg = tmp_path / "train.json"
        cfg.write_text(json.dumps(self.CFG))
        run = tmp_path / "run"
        assert main(["train", "--config", str(cfg), "--out", str(run)]) == 0
        assert (run / "checkpoint_final.pt").exists()
        assert (run / "learning_curve.csv").exists()
        assert (run / "learning_curve.png").exists()

        out = tmp_path / "eval"
        assert main(["eval", "sweep", "--policy", str(run / "checkpoint_final.pt"),
                     "--axis", "latency", "--from", "0", "--to", "0.04",
                     "--steps", "2", "--trials", "1", "--out", str(out)]) == 0
        assert (out / "sweep_latency.csv").exists()
        assert (out / "sweep_latency.png").exists()

    def test_mode_alias_maps_to_generalized(self, tmp_path):
        cfg = tmp_path / "train.json"
        cfg.write_text(json.dumps({**self.CFG, "workers": 1,
                                   "rollout_length": 16}))
        run = tmp_path / "run"
        assert main(["train", "--config", str(cfg), "--mode", "genloco",
                     "--out", str(run)]) == 0
        saved = json.loads((run / "train_config.json").read_text())
        assert saved["mode"] == "generalized"

    def test_unknown_axis_exit_code(self, tmp_path):
        cfg = tmp_path / "train.json"
        cfg.write_text(json.dumps({**self.CFG, "workers": 1,
                                   "rollout_length": 16}))
        run = tmp_path / "run"
        main(["train", "--config", str(cfg), "--out", str(run)])
        code = main(["eval", "sweep", "--policy",
                     str(run / "checkpoint_final.pt"), "--axis", "wingspan",
                     "--from", "0", "--to", "1", "--steps", "2",
                     "--out", str(run)])
        assert code == 2
