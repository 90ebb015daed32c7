import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from artrestore.cli import main
from artrestore.degrade import DistortionType, load_manifest, random_texture
from artrestore.denoiser import build_denoiser, save_model
from artrestore.dispatch import DenoiserRegistry
from artrestore.image import load_image, save_image


def tree_hash(root: Path) -> str:
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.name.encode())
            h.update(p.read_bytes())
    return h.hexdigest()


def make_clean_dir(tmp_path, n=2, size=20) -> Path:
    d = tmp_path / "clean_src"
    d.mkdir(exist_ok=True)
    for i in range(n):
        save_image(random_texture(size, size, 3, seed=50 + i), d / f"c{i}.png")
    return d


def synth_args(clean, out, extra=()):
    return ["synth", "--input-dir", str(clean), "--output-dir", str(out), *extra]


@pytest.fixture()
def registry_file(tmp_path):
    """Registry with an identity-ish gaussian specialist."""
    model = build_denoiser(DistortionType.GAUSSIAN_NOISE, image_channels=3,
                           num_layers=3, hidden_channels=4)
    for blk in model.blocks:
        if blk.bn is not None:
            blk.bn.batches_tracked = 1
    ckpt = tmp_path / "gauss.ddc"
    save_model(model, ckpt)
    registry = DenoiserRegistry()
    registry.register(DistortionType.GAUSSIAN_NOISE, ckpt)
    path = tmp_path / "registry.json"
    registry.save(path)
    return path


class TestHelp:
    @pytest.mark.parametrize("cmd", ["synth", "train", "restore", "eval", "report"])
    def test_subcommand_help_exits_zero(self, cmd, capsys):
        assert main([cmd, "--help"]) == 0
        out = capsys.readouterr().out
        assert "--" in out

    def test_help_documents_flags(self, capsys):
        main(["synth", "--help"])
        out = capsys.readouterr().out
        for flag in ("--input-dir", "--output-dir", "--per-image", "--seed",
                     "--types", "--levels", "--split"):
            assert flag in out
        main(["train", "--help"])
        out = capsys.readouterr().out
        for flag in ("--manifest", "--dtype", "--out", "--patch", "--batch", "--lr",
                     "--epochs-max", "--channels", "--layers", "--kernel", "--seed", "--desk"):
            assert flag in out


class TestSynth:
    def test_default_pair_count_summary(self, tmp_path, capsys):
        clean = make_clean_dir(tmp_path)
        assert main(synth_args(clean, tmp_path / "out")) == 0
        out = capsys.readouterr().out
        assert "100 pairs written" in out
        manifest = load_manifest(tmp_path / "out" / "manifest.jsonl")
        assert len(manifest.records) == 100

    def test_per_image_zero_is_usage_error(self, tmp_path, capsys):
        clean = make_clean_dir(tmp_path)
        assert main(synth_args(clean, tmp_path / "out", ["--per-image", "0"])) == 2

    def test_same_seed_byte_identical(self, tmp_path):
        clean = make_clean_dir(tmp_path)
        args = ["--per-image", "4", "--seed", "9", "--types", "gaussian_noise,darken"]
        assert main(synth_args(clean, tmp_path / "a", args)) == 0
        assert main(synth_args(clean, tmp_path / "b", args)) == 0
        assert tree_hash(tmp_path / "a") == tree_hash(tmp_path / "b")

    def test_unknown_type_usage_error(self, tmp_path):
        clean = make_clean_dir(tmp_path)
        assert main(synth_args(clean, tmp_path / "out", ["--types", "rust"])) == 2

    def test_empty_input_exit_code(self, tmp_path):
        empty = tmp_path / "none"
        empty.mkdir()
        assert main(synth_args(empty, tmp_path / "out")) == 4

    def test_bad_split_usage_error(self, tmp_path):
        clean = make_clean_dir(tmp_path)
        assert main(synth_args(clean, tmp_path / "out", ["--split", "0.5,0.5,0.5"])) == 2


class TestTrain:
    def make_dataset(self, tmp_path):
        clean = make_clean_dir(tmp_path, n=4, size=24)
        out = tmp_path / "data"
        code = main(synth_args(clean, out, [
            "--per-image", "2", "--seed", "3", "--types", "gaussian_noise",
            "--levels", "3", "--split", "0.5,0.25,0.25",
        ]))
        assert code == 0
        return out / "manifest.jsonl"

    def test_desk_run_writes_checkpoint_and_csv(self, tmp_path, capsys):
        manifest = self.make_dataset(tmp_path)
        ckpt = tmp_path / "g.ddc"
        code = main([
            "train", "--manifest", str(manifest), "--dtype", "gaussian_noise",
            "--out", str(ckpt), "--desk", "--patch", "16", "--batch", "4",
            "--epochs-max", "1", "--patches-per-epoch", "8", "--layers", "3",
            "--channels", "4",
        ])
        assert code == 0
        assert ckpt.exists()
        assert ckpt.with_name("g_train.csv").exists()
        assert "best val PSNR" in capsys.readouterr().out

    def test_unknown_dtype_lists_choices(self, tmp_path, capsys):
        manifest = self.make_dataset(tmp_path)
        code = main([
            "train", "--manifest", str(manifest), "--dtype", "bogus",
            "--out", str(tmp_path / "x.ddc"),
        ])
        assert code == 2
        assert "gaussian_noise" in capsys.readouterr().err

    def test_epochs_max_zero_saves_init_model(self, tmp_path):
        manifest = self.make_dataset(tmp_path)
        ckpt = tmp_path / "init.ddc"
        code = main([
            "train", "--manifest", str(manifest), "--dtype", "gaussian_noise",
            "--out", str(ckpt), "--desk", "--patch", "16", "--epochs-max", "0",
            "--layers", "3", "--channels", "4",
        ])
        assert code == 0 and ckpt.exists()

    def test_full_size_configuration_accepted(self, tmp_path):
        # The default 17-layer / 64-map network; epoch budget 0 keeps the
        # flag check fast by saving the freshly initialized model.
        manifest = self.make_dataset(tmp_path)
        ckpt = tmp_path / "full.ddc"
        code = main([
            "train", "--manifest", str(manifest), "--dtype", "gaussian_noise",
            "--out", str(ckpt), "--layers", "17", "--channels", "64",
            "--patch", "16", "--epochs-max", "0",
        ])
        assert code == 0
        from artrestore.denoiser import read_model_info

        info = read_model_info(ckpt)
        assert len(info["layers"]) == 17
        assert info["channels_hidden"] == 64

    def test_empty_train_set_exit_code(self, tmp_path):
        manifest = self.make_dataset(tmp_path)
        code = main([
            "train", "--manifest", str(manifest), "--dtype", "tear",
            "--out", str(tmp_path / "x.ddc"), "--desk", "--patch", "16",
        ])
        assert code == 5


class TestRestore:
    def test_manifest_mode_count(self, tmp_path, registry_file, capsys):
        clean = make_clean_dir(tmp_path, n=4, size=20)
        data = tmp_path / "data"
        main(synth_args(clean, data, [
            "--per-image", "2", "--seed", "3", "--types", "gaussian_noise",
            "--levels", "2", "--split", "0.5,0.25,0.25",
        ]))
        manifest = load_manifest(data / "manifest.jsonl")
        out = tmp_path / "restored"
        code = main([
            "restore", "--registry", str(registry_file), "--manifest",
            str(data / "manifest.jsonl"), "--output", str(out),
        ])
        assert code == 0
        restored = list(out.glob("*.png"))
        assert len(restored) == len(manifest.select(split="test"))

    def test_missing_specialist_exit_code(self, tmp_path, registry_file, capsys):
        clean = make_clean_dir(tmp_path, n=1)
        code = main([
            "restore", "--registry", str(registry_file), "--input", str(clean),
            "--dtype", "pixelate", "--level", "2", "--output", str(tmp_path / "o"),
        ])
        assert code == 7
        assert "pixelate" in capsys.readouterr().err

    def test_odd_size_input_keeps_dimensions(self, tmp_path, registry_file):
        src = tmp_path / "odd"
        src.mkdir()
        save_image(random_texture(15, 19, 3, seed=1), src / "odd.png")
        out = tmp_path / "o"
        code = main([
            "restore", "--registry", str(registry_file), "--input", str(src),
            "--dtype", "gaussian_noise", "--level", "3", "--output", str(out),
        ])
        assert code == 0
        img = load_image(out / "odd.png")
        assert (img.height, img.width) == (15, 19)

    def test_single_mode_needs_all_flags(self, tmp_path, registry_file):
        code = main([
            "restore", "--registry", str(registry_file),
            "--output", str(tmp_path / "o"),
        ])
        assert code == 2


class TestEvalReport:
    def build_eval_setup(self, tmp_path):
        clean = make_clean_dir(tmp_path, n=4, size=20)
        data = tmp_path / "data"
        main(synth_args(clean, data, [
            "--per-image", "2", "--seed", "3", "--types", "gaussian_noise",
            "--levels", "2", "--split", "0.5,0.25,0.25",
        ]))
        manifest = load_manifest(data / "manifest.jsonl")
        restored = tmp_path / "restored"
        restored.mkdir()
        for rec in manifest.select(split="test"):
            save_image(load_image(manifest.clean_path(rec)), restored / Path(rec.distorted).name)
        return data / "manifest.jsonl", restored

    def test_perfect_copies_score_ssim_one(self, tmp_path, capsys):
        manifest, restored = self.build_eval_setup(tmp_path)
        scores_csv = tmp_path / "scores.csv"
        code = main([
            "eval", "--manifest", str(manifest), "--restored-dir", str(restored),
            "--out", str(scores_csv),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "mean SSIM 1.0000" in out

    def test_missing_restored_exit_code(self, tmp_path):
        manifest, restored = self.build_eval_setup(tmp_path)
        next(iter(restored.glob("*.png"))).unlink()
        code = main([
            "eval", "--manifest", str(manifest), "--restored-dir", str(restored),
            "--out", str(tmp_path / "s.csv"),
        ])
        assert code == 8

    def test_eval_report_round_trip(self, tmp_path):
        manifest, restored = self.build_eval_setup(tmp_path)
        # Score the distorted images themselves so PSNR values are finite.
        m = load_manifest(manifest)
        import shutil

        distorted_dir = tmp_path / "asis"
        distorted_dir.mkdir()
        for rec in m.select(split="test"):
            shutil.copy(m.distorted_path(rec), distorted_dir / Path(rec.distorted).name)
        scores_csv = tmp_path / "scores.csv"
        assert main([
            "eval", "--manifest", str(manifest), "--restored-dir", str(distorted_dir),
            "--out", str(scores_csv),
        ]) == 0
        report_dir = tmp_path / "report"
        assert main([
            "report", "--scores", str(scores_csv), "--out-dir", str(report_dir), "--svg",
        ]) == 0
        for name in ("histogram.csv", "line.csv", "scatter.csv",
                     "histogram.svg", "line.svg", "scatter.svg"):
            assert (report_dir / name).exists()
        hist_rows = (report_dir / "histogram.csv").read_text().strip().splitlines()[1:]
        n_scores = len(m.select(split="test"))
        assert sum(int(r.split(",")[2]) for r in hist_rows) == n_scores

    def test_report_single_row_single_bin(self, tmp_path):
        scores_csv = tmp_path / "one.csv"
        scores_csv.write_text("image_id,psnr_db,ssim,mse\nimg0,28.810000,0.792600,0.001\n")
        report_dir = tmp_path / "rep"
        assert main(["report", "--scores", str(scores_csv), "--out-dir", str(report_dir)]) == 0
        rows = (report_dir / "histogram.csv").read_text().strip().splitlines()[1:]
        occupied = [r for r in rows if int(r.split(",")[2]) > 0]
        assert occupied == ["28.0,29.0,1"]

    def test_report_empty_scores_exit_code(self, tmp_path):
        scores_csv = tmp_path / "empty.csv"
        scores_csv.write_text("image_id,psnr_db,ssim,mse\n")
        assert main(["report", "--scores", str(scores_csv),
                     "--out-dir", str(tmp_path / "rep")]) == 9


class TestThreadsEnv:
    def test_env_var_used(self, tmp_path, monkeypatch):
        clean = make_clean_dir(tmp_path)
        monkeypatch.setenv("DDCNN_THREADS", "2")
        assert main(synth_args(clean, tmp_path / "out", ["--per-image", "2"])) == 0

    def test_bad_env_var_is_usage_error(self, tmp_path, monkeypatch):
        clean = make_clean_dir(tmp_path)
        monkeypatch.setenv("DDCNN_THREADS", "zero")
        assert main(synth_args(clean, tmp_path / "out", ["--per-image", "2"])) == 2

    def test_flag_beats_env(self, tmp_path, monkeypatch):
        clean = make_clean_dir(tmp_path)
        monkeypatch.setenv("DDCNN_THREADS", "notanumber")
        assert main(synth_args(clean, tmp_path / "out",
                               ["--per-image", "2", "--threads", "1"])) == 0
