"""End-to-end CLI coverage: every subcommand through the real entry point."""

import filecmp
import subprocess
import sys
from pathlib import Path

import pytest

FAUP = [sys.executable, "-m", "faup.cli"]


def run(*args, expect=0):
    proc = subprocess.run(FAUP + list(args), capture_output=True, text=True)
    assert proc.returncode == expect, \
        f"faup {' '.join(args)} -> {proc.returncode}\n{proc.stdout}\n{proc.stderr}"
    return proc


def dir_snapshot(root: Path):
    out = {}
    for path in sorted(root.rglob("*")):
        if path.is_file():
            out[str(path.relative_to(root))] = path.read_bytes()
    return out


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    data = root / "data"
    model = root / "model.faup"
    run("synth", "--out", str(data), "--per-class", "6", "--noise", "0.005",
        "--seed", "11")
    run("train", "--data", str(data), "--out", str(model))
    return root, data, model


class TestSynth:
    def test_deterministic_directories(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        for out in (a, b):
            run("synth", "--out", str(out), "--per-class", "3", "--seed", "7")
        assert dir_snapshot(a) == dir_snapshot(b)

    def test_sequence_mode(self, tmp_path):
        out = tmp_path / "seq"
        proc = run("synth", "--out", str(out), "--path", "Surprise,Happiness",
                   "--frames-per-state", "3", "--noise", "0")
        assert "6 frames" in proc.stdout
        assert len(list(out.glob("frame_*.landmarks"))) == 6


class TestTrainClassify:
    def test_classify_full_output(self, workspace):
        root, data, model = workspace
        sample = data / "Happiness" / "0000.landmarks"
        proc = run("classify", "--model", str(model), "--input", str(sample))
        assert "emotion=Happiness" in proc.stdout
        assert "NSur=" in proc.stdout

    def test_classify_pruned_output(self, workspace):
        root, data, model = workspace
        sample = data / "Surprise" / "0001.landmarks"
        proc = run("classify", "--model", str(model), "--input", str(sample),
                   "--pruned")
        assert "emotion=Surprise" in proc.stdout
        assert "points_examined=2" in proc.stdout

    def test_classify_with_prior(self, workspace):
        root, data, model = workspace
        sample = data / "Fear" / "0000.landmarks"
        proc = run("classify", "--model", str(model), "--input", str(sample),
                   "--pruned", "--prior", "Surprise")
        assert "emotion=Fear" in proc.stdout


class TestBench:
    def test_report_files_written(self, workspace, tmp_path):
        root, data, model = workspace
        report = tmp_path / "bench.tsv"
        proc = run("bench", "--model", str(model), "--data", str(data),
                   "--report", str(report))
        assert "mean point reduction" in proc.stdout
        assert report.is_file()
        header = report.read_text().splitlines()[0]
        assert header.split("\t") == ["detector", "emotion", "sv_number",
                                      "margin", "correctness", "full_points",
                                      "pruned_points", "reduction"]
        assert (tmp_path / "bench_summary.txt").is_file()
        assert (tmp_path / "bench_reduction.png").is_file()
        assert (tmp_path / "bench_timing.png").is_file()


class TestTransitions:
    def test_detects_boundary(self, workspace, tmp_path):
        root, data, model = workspace
        seq = tmp_path / "seq"
        run("synth", "--out", str(seq), "--path", "Surprise,Disgust",
            "--frames-per-state", "4", "--noise", "0")
        proc = run("transitions", "--model", str(model), "--sequence", str(seq),
                   "--initial", "Surprise")
        assert "from=Surprise to=Disgust" in proc.stdout
        assert "frame=4" in proc.stdout

    def test_constant_sequence(self, workspace, tmp_path):
        root, data, model = workspace
        seq = tmp_path / "flat"
        run("synth", "--out", str(seq), "--path", "Sadness",
            "--frames-per-state", "3", "--noise", "0")
        proc = run("transitions", "--model", str(model), "--sequence", str(seq),
                   "--initial", "Sadness")
        assert "no transitions detected" in proc.stdout


class TestImageMode:
    def test_render_train_classify(self, tmp_path):
        data = tmp_path / "imgdata"
        model = tmp_path / "img.faup"
        run("synth", "--out", str(data), "--per-class", "1", "--noise", "0",
            "--render")
        run("train", "--data", str(data), "--mode", "image",
            "--components", "4", "--out", str(model))
        sample = data / "Disgust" / "0000.pgm"
        proc = run("classify", "--model", str(model), "--input", str(sample))
        assert "emotion=" in proc.stdout


class TestRules:
    def test_dump_contains_tables(self):
        proc = run("rules", "--dump")
        assert "{1, 2, 5, 15, 16, 20, 26}" in proc.stdout
        assert "Surprise -> Sadness" in proc.stdout
        assert "AU26" in proc.stdout

    def test_trees_text_and_dot(self):
        assert "AU" in run("rules", "--tree", "absence").stdout
        proc = run("rules", "--tree", "transition", "--format", "dot")
        assert proc.stdout.startswith("digraph")


class TestErrorPaths:
    def test_no_arguments_usage_error(self):
        run(expect=1)

    def test_unknown_flag_usage_error(self):
        run("synth", "--frobnicate", expect=1)

    def test_missing_dataset_data_error(self, workspace, tmp_path):
        root, data, model = workspace
        run("bench", "--model", str(model), "--data", str(tmp_path / "nope"),
            "--report", str(tmp_path / "r.tsv"), expect=2)

    def test_corrupt_model_data_error(self, workspace, tmp_path):
        root, data, model = workspace
        bad = tmp_path / "bad.faup"
        text = model.read_text()
        bad.write_text(text.replace("seed", "sead", 1))
        sample = data / "Fear" / "0000.landmarks"
        proc = run("classify", "--model", str(bad), "--input", str(sample),
                   expect=2)
        assert "error" in proc.stderr

    def test_unsupported_model_version(self, workspace, tmp_path):
        root, data, model = workspace
        bad = tmp_path / "v99.faup"
        bad.write_text(model.read_text().replace("FAUPMODEL 1", "FAUPMODEL 99", 1))
        sample = data / "Fear" / "0000.landmarks"
        run("classify", "--model", str(bad), "--input", str(sample), expect=2)

    def test_bad_emotion_name(self, workspace, tmp_path):
        root, data, model = workspace
        sample = data / "Fear" / "0000.landmarks"
        run("classify", "--model", str(model), "--input", str(sample),
            "--prior", "Boredom", expect=1)


class TestHelp:
    @pytest.mark.parametrize("command,flag,default", [
        ("synth", "--noise", "0.01"),
        ("synth", "--intensity", "0.05"),
        ("synth", "--seed", "42"),
        ("train", "--svm-c", "1.0"),
        ("train", "--tau", "0.025"),
        ("train", "--working-width", "490"),
        ("train", "--working-height", "400"),
        ("train", "--canny-sigma", "1.4"),
    ])
    def test_defaults_documented(self, command, flag, default):
        proc = subprocess.run(FAUP + [command, "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        options = proc.stdout.split("options:", 1)[1]
        assert flag in options
        entry = options.split(flag, 1)[1].split("  --")[0]
        assert f"default: {default}" in entry
