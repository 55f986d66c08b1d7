"""Command-line interface: ``stnet <command> [options]``.

Every failure exits with the error's category code and prints
``error[<category>]: <message>`` to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    CLASS_NAMES,
    DatasetManifest,
    FrameSequence,
    ManifestEntry,
    SplitSpec,
    SyntheticConfig,
    frames_from_raw,
    generate_synthetic_dataset,
    preprocess_clip,
    read_frame_container,
    split_dataset,
    write_frame_container,
)
from .errors import ConfigError, DataError, StnetError, UsageError
from .models import (
    PRESETS,
    VARIANTS,
    ModelConfig,
    build_model,
    import_external_weights,
    load_checkpoint,
    save_checkpoint,
)
from .training import (
    TRAIN_PRESETS,
    TrainConfig,
    dump_feature_maps,
    evaluate,
    save_feature_maps,
    sliding_window_classify,
    train,
    write_history_csv,
)

log = logging.getLogger("stnet")

SPLIT_FILES = ("train.jsonl", "val.jsonl", "test.jsonl")


# -- helpers --------------------------------------------------------------

def _read_config_file(path):
    if path is None:
        return {}, {}
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    if "model" in raw or "train" in raw:
        return dict(raw.get("model", {})), dict(raw.get("train", {}))
    return raw, {}


def model_config_from_args(args) -> ModelConfig:
    model_kw, _ = _read_config_file(getattr(args, "config", None))
    variant = args.variant or model_kw.get("variant")
    if variant is None:
        raise UsageError("--variant is required (one of " + ", ".join(VARIANTS) + ")")
    base = PRESETS[args.preset](variant).to_dict()
    base.update(model_kw)
    base["variant"] = variant
    return ModelConfig.from_dict(base).validate()


def train_config_from_args(args) -> TrainConfig:
    _, train_kw = _read_config_file(args.config)
    base = TRAIN_PRESETS[args.preset]()
    try:
        cfg = TrainConfig(**{**base.__dict__, **train_kw})
    except TypeError as exc:
        raise ConfigError(f"bad train config: {exc}") from exc
    for flag in ("optimizer", "lr", "batch_size", "epochs", "clip_norm", "checkpoint_every"):
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, flag, value)
    cfg.seed = args.seed
    return cfg.validate()


def _manifest_path(data) -> Path:
    p = Path(data)
    if p.is_dir():
        p = p / "manifest.jsonl"
    if not p.exists():
        raise DataError(f"no manifest at {p}")
    return p


def _load_splits(data, seed):
    """(train, val, test) manifests from a split directory or by splitting a manifest."""
    d = Path(data)
    if d.is_dir() and all((d / f).exists() for f in SPLIT_FILES):
        return tuple(DatasetManifest.read(d / f) for f in SPLIT_FILES)
    return split_dataset(DatasetManifest.read(_manifest_path(data)), SplitSpec(seed=seed))


def _load_clip(path) -> FrameSequence:
    return read_frame_container(path)


def _model_from_checkpoint(args):
    if not args.checkpoint:
        raise UsageError("--checkpoint is required")
    model, meta = load_checkpoint(args.checkpoint)
    return model.eval(), meta


def _emit(obj, out=None, name=None):
    text = json.dumps(obj, indent=2)
    print(text)
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        (Path(out) / name).write_text(text + "\n")


# -- commands -------------------------------------------------------------

def cmd_synth(args):
    cfg = SyntheticConfig(clips_per_class=args.clips_per_class, frames=args.frames, size=args.size, seed=args.seed)
    out = args.out or "synthetic"
    manifest, _ = generate_synthetic_dataset(cfg, out)
    print(f"wrote {len(manifest)} clips to {out} (manifest {Path(out) / 'manifest.jsonl'})")


def cmd_preprocess(args):
    """Wrap raw RGB24 streams into frame containers plus a manifest.

    Expected layout: ``<data>/nonviolent/*.rgb`` and ``<data>/violent/*.rgb``,
    each file a time-major stream of height x width x 3 bytes per frame.
    """
    if not args.data:
        raise UsageError("--data is required")
    src, out = Path(args.data), Path(args.out or "containers")
    (out / "clips").mkdir(parents=True, exist_ok=True)
    entries = []
    for label, name in enumerate(CLASS_NAMES):
        for f in sorted((src / name).glob("*.rgb")):
            frames = frames_from_raw(f.read_bytes(), args.height, args.width, 3)
            rel = f"clips/{name}_{f.stem}.stf"
            write_frame_container(FrameSequence(frames, label, f.stem, args.fps), out / rel)
            entries.append(ManifestEntry(f.stem, rel, label, len(frames), args.height, args.width))
    if not entries:
        raise DataError(f"no *.rgb streams under {src}/nonviolent or {src}/violent")
    DatasetManifest(entries, out.resolve()).write(out / "manifest.jsonl")
    print(f"wrote {len(entries)} containers to {out}")


def cmd_split(args):
    if not args.data:
        raise UsageError("--data is required")
    manifest = DatasetManifest.read(_manifest_path(args.data))
    spec = SplitSpec(tuple(args.ratios), args.seed, not args.no_stratify)
    parts = split_dataset(manifest, spec)
    out = Path(args.out or (Path(args.data) if Path(args.data).is_dir() else Path(args.data).parent))
    out.mkdir(parents=True, exist_ok=True)
    for name, part in zip(SPLIT_FILES, parts):
        part.write(out / name)
        print(f"{name}: {len(part)} clips {part.counts}")


def cmd_train(args):
    if not args.data:
        raise UsageError("--data is required")
    mcfg = model_config_from_args(args)
    tcfg = train_config_from_args(args)
    out = Path(args.out or "run")
    out.mkdir(parents=True, exist_ok=True)
    tr, va, te = _load_splits(args.data, args.seed)
    size = (mcfg.height, mcfg.width)
    train_set = tr.load(mcfg.frames, size)
    val_set = va.load(mcfg.frames, size) if len(va) else None
    model = build_model(mcfg, seed=args.seed)
    notes = []
    if mcfg.variant == "LRCN_VGG":
        if args.vgg_weights:
            rep = import_external_weights(model, args.vgg_weights)
            print(f"imported {len(rep.loaded)} backbone layers from {args.vgg_weights}")
        if not args.vgg_weights or not rep.loaded:
            notes.append("untrained backbone")
            print("note: untrained backbone (no external VGG weights imported)")
    print(f"{mcfg.variant}: {model.count_parameters()} parameters, {len(tr)} train / {len(va)} val clips")
    t0 = time.time()

    def report(r):
        val = "" if r.val_accuracy is None else f"  val loss {r.val_loss:.4f} acc {r.val_accuracy:.3f}"
        print(f"epoch {r.epoch:3d}  loss {r.train_loss:.4f} acc {r.train_accuracy:.3f}{val}  [{time.time() - t0:.0f}s]")

    model, history = train(model, train_set, val_set, tcfg, checkpoint_dir=out / "checkpoints", on_epoch=report)
    save_checkpoint(model, out / "model.ckpt", epoch=tcfg.epochs, seed=args.seed, extra={"notes": notes})
    write_history_csv(history, out / "history.csv")
    print(f"saved {out / 'model.ckpt'} and {out / 'history.csv'}")
    if len(te):
        metrics = evaluate(model, te.load(mcfg.frames, size))
        (out / "metrics.json").write_text(json.dumps({**metrics.to_dict(), "notes": notes}, indent=2) + "\n")
        print(metrics)


def cmd_eval(args):
    model, meta = _model_from_checkpoint(args)
    if not args.data:
        raise UsageError("--data is required")
    d = Path(args.data)
    manifest = DatasetManifest.read(d / "test.jsonl" if (d / "test.jsonl").exists() else _manifest_path(d))
    cfg = model.config
    metrics = evaluate(model, manifest.load(cfg.frames, (cfg.height, cfg.width)))
    notes = list(meta.get("notes", []))
    print(metrics)
    for n in notes:
        print(f"note: {n}")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        (Path(args.out) / "metrics.json").write_text(json.dumps({**metrics.to_dict(), "notes": notes}, indent=2) + "\n")


def cmd_predict(args):
    model, _ = _model_from_checkpoint(args)
    cfg = model.config
    seq = _load_clip(args.clip)
    x = preprocess_clip(seq.frames, cfg.frames, (cfg.height, cfg.width))[None]
    probs = model.predict(x)[0]
    label = int(np.argmax(probs))
    _emit({"clip": str(args.clip), "label": label, "class": CLASS_NAMES[label],
           "probs": [float(p) for p in probs]})


def cmd_stream(args):
    model, _ = _model_from_checkpoint(args)
    if args.raw:
        if not (args.height and args.width):
            raise UsageError("--raw needs --height and --width")
        raw = sys.stdin.buffer.read() if args.clip == "-" else Path(args.clip).read_bytes()
        frames = frames_from_raw(raw, args.height, args.width, 3)
    else:
        frames = _load_clip(args.clip).frames
    for r in sliding_window_classify(model, frames, window=args.window, stride=args.stride):
        print(json.dumps({**r.to_dict(), "class": CLASS_NAMES[r.label]}))


def cmd_gradcheck(args):
    from .gradcheck import CASES, run_suite

    names = args.only or list(CASES)
    unknown = sorted(set(names) - set(CASES))
    if unknown:
        raise UsageError(f"unknown gradcheck cases {unknown}; available: {', '.join(CASES)}")
    t0 = time.time()
    results = run_suite(tuple(range(args.seeds)), names)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name:22s} seed {r.seed}  max rel err {r.max_rel_error:.2e}"
              f"  ({r.checked} entries, {r.seconds:.2f}s)")
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} passed in {time.time() - t0:.1f}s")
    return 1 if failed else 0


def cmd_inspect(args):
    if args.checkpoint:
        model, _ = _model_from_checkpoint(args)
    else:
        model = build_model(model_config_from_args(args), seed=args.seed)
    cfg = model.config
    print(f"{cfg.variant}  input {cfg.input_shape}  parameters {model.count_parameters()}")
    for name, desc in zip(model.net.names, model.blueprint()):
        print(f"  {name:12s} {desc}")
    extractor = model.feature_extractor()
    if extractor is not None:
        print("per-frame CNN layers:")
        for i, (name, layer) in enumerate(zip(extractor.names, extractor.layers)):
            print(f"  [{i:2d}] {name:14s} {layer.describe()}")
    if args.layers:
        if not args.clip:
            raise UsageError("--layers needs --clip to pick a frame from")
        frames = _load_clip(args.clip).frames
        if not 0 <= args.frame < len(frames):
            raise UsageError(f"--frame {args.frame} outside clip of {len(frames)} frames")
        refs = [int(s) if s.lstrip("-").isdigit() else s for s in args.layers]
        maps = dump_feature_maps(model, frames[args.frame], refs)
        written = save_feature_maps(maps, args.out or "feature_maps")
        print(f"wrote {len(written)} feature maps to {args.out or 'feature_maps'}")


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stnet", description="Spatiotemporal violence-detection models in numpy.")
    p.add_argument("--version", action="version", version=f"stnet {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=False):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", help="output directory")
        if model:
            sp.add_argument("--variant", choices=VARIANTS)
            sp.add_argument("--preset", choices=sorted(PRESETS), default="desk")
            sp.add_argument("--config", help="JSON file with optional 'model' and 'train' sections")

    sp = sub.add_parser("synth", help="generate the synthetic two-class motion dataset")
    common(sp)
    sp.add_argument("--clips-per-class", type=int, default=100)
    sp.add_argument("--frames", type=int, default=16)
    sp.add_argument("--size", type=int, default=24)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("preprocess", help="wrap raw RGB24 frame streams into containers")
    common(sp)
    sp.add_argument("--data", help="directory with nonviolent/ and violent/ *.rgb streams")
    sp.add_argument("--height", type=int, required=True)
    sp.add_argument("--width", type=int, required=True)
    sp.add_argument("--fps", type=float, default=30.0)
    sp.set_defaults(func=cmd_preprocess)

    sp = sub.add_parser("split", help="seeded stratified train/val/test split of a manifest")
    common(sp)
    sp.add_argument("--data", help="manifest file or directory holding manifest.jsonl")
    sp.add_argument("--ratios", type=float, nargs=3, default=(0.8, 0.1, 0.1))
    sp.add_argument("--no-stratify", action="store_true")
    sp.set_defaults(func=cmd_split)

    sp = sub.add_parser("train", help="train a variant")
    common(sp, model=True)
    sp.add_argument("--data", help="split directory or manifest")
    sp.add_argument("--optimizer", choices=("adam", "sgd"))
    sp.add_argument("--lr", type=float)
    sp.add_argument("--batch-size", type=int)
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--clip-norm", type=float)
    sp.add_argument("--checkpoint-every", type=int)
    sp.add_argument("--vgg-weights", help="STNETCKP file with VGG backbone kernels (LRCN_VGG only)")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="score a checkpoint on a test manifest")
    common(sp)
    sp.add_argument("--data")
    sp.add_argument("--checkpoint")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("predict", help="classify one clip container")
    common(sp)
    sp.add_argument("--checkpoint")
    sp.add_argument("clip")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("stream", help="sliding-window classification of a long stream")
    common(sp)
    sp.add_argument("--checkpoint")
    sp.add_argument("--stride", type=int, default=1)
    sp.add_argument("--window", type=int, help="frames per window (default: the model's clip length)")
    sp.add_argument("--raw", action="store_true", help="input is raw RGB24 ('-' reads stdin)")
    sp.add_argument("--height", type=int)
    sp.add_argument("--width", type=int)
    sp.add_argument("clip")
    sp.set_defaults(func=cmd_stream)

    sp = sub.add_parser("gradcheck", help="finite-difference check of every layer")
    sp.add_argument("--seeds", type=int, default=3)
    sp.add_argument("--only", nargs="+")
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("inspect", help="parameter counts, layer list and feature maps")
    common(sp, model=True)
    sp.add_argument("--checkpoint")
    sp.add_argument("--clip")
    sp.add_argument("--frame", type=int, default=0)
    sp.add_argument("--layers", nargs="+", help="per-frame CNN layer indices or names")
    sp.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return int(args.func(args) or 0)
    except StnetError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
