import json

import numpy as np
import pytest

from stnet.cli import main
from stnet.data import DatasetManifest, read_frame_container
from stnet.models import load_checkpoint


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Synthesize, split and train a small C3D run once for the module."""
    root = tmp_path_factory.mktemp("cli")
    data, run = root / "data", root / "run"
    assert main(["synth", "--clips-per-class", "10", "--seed", "5", "--out", str(data)]) == 0
    assert main(["split", "--data", str(data)]) == 0
    assert main(["train", "--variant", "C3D", "--data", str(data), "--epochs", "2", "--lr", "1e-3",
                 "--checkpoint-every", "1", "--out", str(run)]) == 0
    return data, run


def test_split_writes_three_files(workspace):
    data, _ = workspace
    counts = [len(DatasetManifest.read(data / f"{s}.jsonl")) for s in ("train", "val", "test")]
    assert counts == [16, 2, 2]


def test_train_artifacts(workspace):
    _, run = workspace
    assert (run / "model.ckpt").exists() and (run / "history.csv").exists()
    assert sorted(p.name for p in (run / "checkpoints").iterdir()) == ["epoch_001.ckpt", "epoch_002.ckpt"]
    report = json.loads((run / "metrics.json").read_text())
    assert report["notes"] == [] and len(report["confusion_matrix"]) == 2
    model, meta = load_checkpoint(run / "model.ckpt")
    assert model.config.variant == "C3D" and meta["epoch"] == 2


def test_eval_and_predict(workspace, capsys, tmp_path):
    data, run = workspace
    assert main(["eval", "--checkpoint", str(run / "model.ckpt"), "--data", str(data), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "metrics.json").read_text())["samples"] == 2
    clip = next((data / "clips").iterdir())
    capsys.readouterr()
    assert main(["predict", "--checkpoint", str(run / "model.ckpt"), str(clip)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["label"] in (0, 1) and abs(sum(out["probs"]) - 1) < 1e-5


def test_stream_container_and_raw(workspace, capsys, tmp_path):
    data, run = workspace
    clip = next((data / "clips").iterdir())
    capsys.readouterr()
    assert main(["stream", "--checkpoint", str(run / "model.ckpt"), "--stride", "4", str(clip)]) == 0
    lines = [json.loads(s) for s in capsys.readouterr().out.splitlines()]
    assert [r["start"] for r in lines] == [0]
    frames = read_frame_container(clip).frames
    raw = tmp_path / "s.rgb"
    raw.write_bytes(np.concatenate([frames, frames]).tobytes())
    assert main(["stream", "--checkpoint", str(run / "model.ckpt"), "--stride", "8", "--raw",
                 "--height", "24", "--width", "24", str(raw)]) == 0
    lines = [json.loads(s) for s in capsys.readouterr().out.splitlines()]
    assert [r["start"] for r in lines] == [0, 8, 16]


def test_stream_too_short_exits_with_frames_error(workspace, capsys, tmp_path):
    _, run = workspace
    raw = tmp_path / "short.rgb"
    raw.write_bytes(bytes(24 * 24 * 3 * 5))
    code = main(["stream", "--checkpoint", str(run / "model.ckpt"), "--raw", "--height", "24", "--width", "24",
                 str(raw)])
    assert code == 8
    assert "error[insufficient-frames]" in capsys.readouterr().err


def test_inspect_writes_feature_maps(workspace, capsys, tmp_path):
    data, _ = workspace
    clip = next((data / "clips").iterdir())
    assert main(["inspect", "--variant", "LRCN_CustomCNN", "--clip", str(clip), "--layers", "0", "conv2",
                 "--out", str(tmp_path)]) == 0
    assert len(list(tmp_path.glob("*.pgm"))) == 16 + 32
    assert "per-frame CNN layers" in capsys.readouterr().out


def test_vgg_run_flags_untrained_backbone(workspace, capsys, tmp_path):
    data, _ = workspace
    assert main(["train", "--variant", "LRCN_VGG", "--data", str(data), "--epochs", "1",
                 "--out", str(tmp_path)]) == 0
    assert "untrained backbone" in capsys.readouterr().out
    assert json.loads((tmp_path / "metrics.json").read_text())["notes"] == ["untrained backbone"]
    assert load_checkpoint(tmp_path / "model.ckpt")[1]["notes"] == ["untrained backbone"]


def test_gradcheck_subset(capsys):
    assert main(["gradcheck", "--seeds", "1", "--only", "dense"]) == 0
    assert capsys.readouterr().out.startswith("PASS")


def test_error_exit_codes(capsys, tmp_path):
    assert main(["train", "--variant", "C3D"]) == 2
    assert "error[usage]" in capsys.readouterr().err
    assert main(["gradcheck", "--only", "nope"]) == 2
    assert main(["predict", "--checkpoint", str(tmp_path / "missing.ckpt"), "x"]) == 1
    assert "error[io]" in capsys.readouterr().err
    bad = tmp_path / "bad.ckpt"
    bad.write_bytes(b"not a checkpoint")
    assert main(["eval", "--checkpoint", str(bad), "--data", str(tmp_path)]) in (6, 7)
