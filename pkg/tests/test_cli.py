"""CLI behaviour: exit codes, diagnostics, and artifact emission."""
import pytest

from semcom.cli import main


class TestOverheadCommand:
    def test_paper_values(self, capsys):
        assert main(["overhead", "--paper"]) == 0
        out = capsys.readouterr().out
        assert "8,963,680" in out
        assert "174,240" in out
        assert "356,573,829" in out
        assert "210,237,977" in out
        assert "145,780,221" in out
        assert "111,048,888" in out
        assert "98.0%" in out

    def test_custom_ledger(self, capsys):
        assert main(["overhead", "--L", "10", "--n-f", "4", "--n-t", "2"]) == 0
        out = capsys.readouterr().out
        assert "40" in out and "20" in out

    def test_json_emission(self, tmp_path, capsys):
        target = tmp_path / "table.json"
        assert main(["overhead", "--paper", "--json", str(target)]) == 0
        capsys.readouterr()
        assert target.exists()
        import json
        data = json.loads(target.read_text())
        assert data["L"] == 4840


class TestGradcheckCommand:
    def test_default_seed_passes(self, capsys):
        assert main(["gradcheck", "--seed", "7"]) == 0
        assert "max relative gradient error" in capsys.readouterr().out

    def test_bad_epsilon_diagnostic(self, capsys):
        assert main(["gradcheck", "--epsilon", "0"]) == 1
        assert "error:" in capsys.readouterr().err


class TestArgparseBehaviour:
    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["overhead", "--bogus"])
        assert exc.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_unknown_command_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2


class TestSimulateCommand:
    def test_missing_config_diagnostic(self, capsys):
        assert main(["simulate", "--config", "missing.cfg"]) == 1
        err = capsys.readouterr().err
        assert "file not found" in err

    def test_end_to_end_small(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["train-codec", "--per-class", "1", "--epochs", "1",
                     "--out", "codec.semw"]) == 0
        assert main(["train-forest", "--per-class", "20",
                     "--out", "forest.semw"]) == 0
        config = tmp_path / "sim.cfg"
        config.write_text(
            "seed = 1\n"
            "scenario = sleeping:8,eating:8\n"
            "codec_model = codec.semw\n"
            "forest_model = forest.semw\n"
            "out_report = report.json\n"
            "out_events = events.log\n")
        assert main(["simulate", "--config", str(config)]) == 0
        capsys.readouterr()
        assert (tmp_path / "report.json").exists()
        assert (tmp_path / "events.log").exists()

    def test_config_without_models_diagnostic(self, tmp_path, capsys):
        config = tmp_path / "sim.cfg"
        config.write_text("scenario = sleeping:8\n")
        assert main(["simulate", "--config", str(config)]) == 1
        assert "codec_model" in capsys.readouterr().err


class TestDataAndEval:
    def test_gen_data_writes_artifacts(self, tmp_path, capsys):
        out = tmp_path / "data"
        assert main(["gen-data", "--out", str(out), "--dwell", "4"]) == 0
        capsys.readouterr()
        assert (out / "accel.csv").exists()
        assert (out / "postures.csv").exists()
        assert (out / "segment_labels.csv").exists()
        for room in ("bedroom", "living_room", "kitchen"):
            assert (out / f"{room}.semf").exists()
        from semcom.weights_io import read_frames
        frames = read_frames(out / "bedroom.semf")
        assert frames.shape[1:] == (112, 112, 3)

    def test_eval_writes_csv(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        assert main(["train-codec", "--per-class", "1", "--epochs", "1",
                     "--out", "codec.semw"]) == 0
        assert main(["eval", "--model", "codec.semw", "--per-class", "1",
                     "--seeds", "1", "--snr-test", "25",
                     "--out", "eval.csv"]) == 0
        capsys.readouterr()
        lines = (tmp_path / "eval.csv").read_text().strip().splitlines()
        assert lines[0] == "snr_test_db,accuracy_mean,accuracy_std"
        assert len(lines) == 2

    def test_eval_missing_model(self, capsys):
        assert main(["eval", "--model", "nope.semw"]) == 1
        assert "file not found" in capsys.readouterr().err
