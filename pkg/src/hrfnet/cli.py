"""``hrfnet`` command line: synth | train | eval | bench | predict | visualize.

Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numeric failure,
1 anything else raised by the package.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, DataError, HRFNetError, NumericError
from .runconfig import resolve

log = logging.getLogger("hrfnet")

RUN_CONFIG_NAME = "run_config.yaml"


def _flag(p, *names, key, **kw):
    p.add_argument(*names, dest=key, default=argparse.SUPPRESS, **kw)


def _bool_flag(p, name, key, help=None):
    p.add_argument(name, dest=key, action=argparse.BooleanOptionalAction, default=argparse.SUPPRESS,
                   help=help)


def _model_flags(p):
    _flag(p, "--width-mult", key="model.width_multiplier", type=float, help="channel width multiplier")
    _bool_flag(p, "--srm", "model.use_srm", help="use the SRM branches (--no-srm for RGB only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hrfnet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hrfnet {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name, help):
        p = sub.add_parser(name, help=help, description=help)
        p.add_argument("--config", type=Path, help="YAML file of dotted keys")
        return p

    p = command("synth", "generate forged image/mask pairs from pristine bases")
    _flag(p, "--bases", key="synth.bases", help="directory of pristine base images")
    _flag(p, "--out", key="synth.out", help="output dataset directory")
    _flag(p, "--count", key="synth.count", type=int)
    _flag(p, "--size", key="synth.size", type=int, help="output side in pixels")
    _flag(p, "--seed", key="synth.seed", type=int)
    _flag(p, "--blend", key="synth.blend", choices=("none", "feathered"))
    _flag(p, "--feather-radius", key="synth.feather_radius", type=int)
    _flag(p, "--split", key="synth.split", type=float, nargs=3, metavar=("TRAIN", "VAL", "TEST"))
    _flag(p, "--workers", key="synth.workers", type=int)
    _flag(p, "--synthetic-bases", key="synth.synthetic_bases", type=int, metavar="N",
          help="first write N procedural base tiles into --bases")

    p = command("train", "train on a synthesized dataset")
    _flag(p, "--data", key="train.data", help="dataset directory holding manifest.json")
    _flag(p, "--out", key="train.out", help="directory for checkpoints and history")
    _flag(p, "--epochs", key="train.epochs", type=int)
    _flag(p, "--batch-size", key="train.batch_size", type=int)
    _flag(p, "--lr", key="train.lr0", type=float)
    _flag(p, "--decay-factor", key="train.decay_factor", type=float)
    _flag(p, "--decay-every", key="train.decay_every", type=int)
    _flag(p, "--tampered-weight", key="train.tampered_weight", type=float)
    _flag(p, "--seed", key="train.seed", type=int)
    _flag(p, "--max-steps", key="train.max_steps", type=int)
    _bool_flag(p, "--flip", "train.flip_augment", help="random horizontal/vertical flips")
    _model_flags(p)

    p = command("eval", "pixel AUC of a checkpoint on a dataset split")
    _flag(p, "--checkpoint", key="eval.checkpoint")
    _flag(p, "--data", key="eval.data")
    _flag(p, "--split", key="eval.split", choices=("train", "val", "test"))
    _flag(p, "--mode", key="eval.mode", choices=("pooled", "per_image_mean"))
    _flag(p, "--out", key="eval.out", help="directory for metrics.json")

    p = command("bench", "batch-1 memory and FPS")
    _flag(p, "--checkpoint", key="bench.checkpoint", help="benchmark these weights instead of a fresh model")
    _flag(p, "--size", key="bench.size", type=int, help="square input side")
    _flag(p, "--iters", key="bench.iters", type=int)
    _flag(p, "--warmup", key="bench.warmup", type=int)
    _flag(p, "--device", key="bench.device")
    _flag(p, "--method", key="bench.method", help="row label")
    _flag(p, "--out", key="bench.out")
    _model_flags(p)

    p = command("predict", "tampering probability and mask for one image")
    _flag(p, "--image", key="predict.image")
    _flag(p, "--checkpoint", key="predict.checkpoint")
    _flag(p, "--threshold", key="predict.threshold", type=float)
    _flag(p, "--out", key="predict.out")

    p = command("visualize", "input | GT | prediction grid")
    _flag(p, "--data", key="visualize.data")
    _flag(p, "--split", key="visualize.split", choices=("train", "val", "test"))
    _flag(p, "--checkpoint", key="visualize.checkpoints", action="append", metavar="[NAME=]PATH")
    _flag(p, "--count", key="visualize.count", type=int)
    _flag(p, "--out", key="visualize.out", help="output PNG")
    return parser


def _need(cfg, *keys):
    missing = [k for k in keys if cfg[k] in (None, [])]
    if missing:
        flags = ", ".join("--" + k.split(".", 1)[1].replace("_", "-") for k in missing)
        raise ConfigError(f"missing required option(s): {flags}")


def model_config(cfg, size: int):
    from .model import ModelConfig

    m = cfg.section("model")
    overrides = {"use_srm": m["use_srm"], "smooth_activations": m["smooth_activations"],
                 "srm_threshold": m["srm_threshold"]}
    if m["aspp_rates"] is not None:
        overrides["aspp_rates"] = tuple(m["aspp_rates"])
    return ModelConfig.desk(size, m["width_multiplier"], m["deep_input_size"], **overrides)


def cmd_synth(cfg):
    from .datasynth import SynthConfig, generate_dataset, make_synthetic_bases

    _need(cfg, "synth.bases", "synth.out")
    s = cfg.section("synth")
    if s["synthetic_bases"]:
        make_synthetic_bases(s["bases"], s["synthetic_bases"], size=s["size"], seed=s["seed"])
    keys = {k: v for k, v in s.items() if k not in ("bases", "out", "synthetic_bases")}
    manifest = generate_dataset(s["bases"], s["out"], SynthConfig(**keys))
    manifest.validate()
    cfg.save(Path(s["out"]) / RUN_CONFIG_NAME)
    counts = {k: len(manifest.split(k)) for k in ("train", "val", "test")}
    print(f"wrote {len(manifest.entries)} pairs to {s['out']} {counts}")


def cmd_train(cfg):
    import torch

    from .datasynth import DatasetManifest
    from .model import HRFNet
    from .train import TrainConfig, train_loop

    _need(cfg, "train.data", "train.out")
    t = cfg.section("train")
    manifest = DatasetManifest.load(t.pop("data"))
    out, max_steps = Path(t.pop("out")), t.pop("max_steps")
    tcfg = TrainConfig.from_dict(t)
    size = manifest.config.get("size")
    if size is None:
        raise DataError("manifest does not record the image size")
    torch.manual_seed(tcfg.seed)
    model = HRFNet(model_config(cfg, size))
    cfg.save(out / RUN_CONFIG_NAME)
    result = train_loop(model, manifest, tcfg, out_dir=out, max_steps=max_steps)
    last = result.history[-1]
    print(f"trained {len(result.history)} epoch(s): loss {last['train_loss']:.5f}, "
          f"val AUC {last['val_auc']:.4f}; checkpoints in {out}")


def cmd_eval(cfg):
    from .datasynth import DatasetManifest
    from .evaluation import evaluate
    from .model import load_checkpoint

    _need(cfg, "eval.checkpoint", "eval.data")
    e = cfg.section("eval")
    model, _ = load_checkpoint(e["checkpoint"])
    report = evaluate(model, DatasetManifest.load(e["data"]), e["split"], e["mode"])
    if e["out"]:
        report.save(Path(e["out"]) / "metrics.json")
        cfg.save(Path(e["out"]) / RUN_CONFIG_NAME)
    print(f"{e['split']} pixel AUC ({report.mode}): {report.auc:.4f} over {report.n_images} images;"
          f" F1 {report.f1:.4f}, IoU {report.iou:.4f}")


def cmd_bench(cfg):
    from .evaluation import BENCH_HEADER, bench_row, measure_fps, measure_memory
    from .model import HRFNet, load_checkpoint

    b = cfg.section("bench")
    size = (b["size"], b["size"])
    if b["checkpoint"]:
        model, _ = load_checkpoint(b["checkpoint"])
    else:
        model = HRFNet(model_config(cfg, b["size"]))
    method = b["method"] or f"HRFNet (width {model.cfg.width_multiplier:g}, {'RGB+SRM' if model.cfg.use_srm else 'RGB'})"
    memory = measure_memory(model, size, b["device"])
    fps = measure_fps(model, size, b["iters"], b["warmup"], b["device"])
    print(BENCH_HEADER)
    print(bench_row(method, memory, fps))
    print(f"input {size[0]}x{size[1]}, batch 1, no gradients, memory mode: {memory.mode}")
    if b["out"]:
        import json

        out = Path(b["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.json").write_text(json.dumps(
            {"method": method, "memory_mb": memory.mb, "memory_mode": memory.mode, "fps": fps,
             "input": list(size), "device": b["device"]}, indent=1))
        cfg.save(out / RUN_CONFIG_NAME)


def cmd_predict(cfg):
    from PIL import Image

    from .datasynth import load_image
    from .model import load_checkpoint, predict_mask

    _need(cfg, "predict.image", "predict.checkpoint")
    p = cfg.section("predict")
    image_path = Path(p["image"])
    if not image_path.is_file():
        raise DataError(f"image not found: {image_path}")
    model, _ = load_checkpoint(p["checkpoint"])
    prob, mask = predict_mask(model, load_image(image_path), p["threshold"])
    out = Path(p["out"]) if p["out"] else image_path.parent
    out.mkdir(parents=True, exist_ok=True)
    stem = image_path.stem
    np.save(out / f"{stem}_prob.npy", prob.astype(np.float32))
    Image.fromarray(np.clip(np.rint(prob * 255), 0, 255).astype(np.uint8)).save(out / f"{stem}_prob.png")
    Image.fromarray(mask * 255).save(out / f"{stem}_mask.png")
    cfg.save(out / RUN_CONFIG_NAME)
    print(f"wrote {stem}_prob.png, {stem}_prob.npy and {stem}_mask.png to {out} "
          f"({int(mask.sum())} tampered pixels)")


def cmd_visualize(cfg):
    from .datasynth import DatasetManifest
    from .evaluation import render_comparison
    from .model import load_checkpoint, predict_mask
    from .train import ManifestDataset

    _need(cfg, "visualize.data", "visualize.checkpoints", "visualize.out")
    v = cfg.section("visualize")
    models = {}
    for spec in v["checkpoints"]:
        name, _, path = spec.rpartition("=")
        models[name or Path(path).stem] = load_checkpoint(path)[0]
    dataset = ManifestDataset(DatasetManifest.load(v["data"]), v["split"])
    if len(dataset) == 0:
        raise DataError(f"split {v['split']!r} is empty")
    samples = []
    for i in range(min(v["count"], len(dataset))):
        image, gt = dataset.load(i)
        samples.append((image, gt, {n: predict_mask(m, image)[1] for n, m in models.items()}))
    out = Path(v["out"])
    render_comparison(samples, path=out)
    cfg.save(out.with_name(out.stem + "_" + RUN_CONFIG_NAME))
    print(f"wrote {len(samples)}-row comparison to {out}")


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "predict": cmd_predict,
    "visualize": cmd_visualize,
}


def resolve_args(argv=None, environ=None):
    """Parse ``argv`` and merge every config source; returns (command, RunConfig, namespace)."""
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if "." in k}
    return args.command, resolve(args.config, flags, environ), args


def main(argv=None) -> int:
    try:
        command, cfg, args = resolve_args(argv)
    except ConfigError as exc:
        print(f"hrfnet: usage error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[command](cfg)
    except ConfigError as exc:
        print(f"hrfnet {command}: usage error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"hrfnet {command}: data error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"hrfnet {command}: numeric failure: {exc}", file=sys.stderr)
        return 4
    except HRFNetError as exc:
        print(f"hrfnet {command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
