"""Command-line surface: degrade, train, upsample, evaluate, ablate.

Every run writes a resolved-config dump (TOML) capturing each constant it
ran with, so any result can be reproduced from its output directory alone.
Exit codes: 0 success, 2 config error, 3 data error, 4 numerical abort.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - python 3.10
    import tomli as tomllib

from . import ablation, adversarial, metrics
from .antialias import lowpass_kernel_1d
from .errors import ConfigError, DataError, NumericalAbort, VsrlabError
from .flowops import ClassicalEstimator, FlowEstimator, make_estimator
from .generator import (
    ModelConfig,
    build_generator,
    load_checkpoint,
    upsample_video,
)
from .videodata import (
    SyntheticSceneSpec,
    VideoClip,
    degrade_bd,
    degrade_bi,
    load_frames,
    load_manifest,
    write_frames,
    write_synthetic_clip,
)

CACHE_ENV = "VSRLAB_CACHE"


def cache_dir() -> Path | None:
    val = os.environ.get(CACHE_ENV)
    return Path(val) if val else None


# ---------------------------------------------------------------------------
# TOML emission / parsing
# ---------------------------------------------------------------------------

def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError(f"cannot serialize config value {v!r}")


def dump_resolved_config(path, sections: dict) -> None:
    """Write the fully resolved configuration of a run as TOML."""
    lines = []
    for name, table in sections.items():
        lines.append(f"[{name}]")
        for key, val in table.items():
            lines.append(f"{key} = {_toml_value(val)}")
        lines.append("")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines))


def _model_constants(cfg: ModelConfig) -> dict:
    d = {
        "k": cfg.k, "scale": cfg.scale,
        "enc_blocks": cfg.enc_blocks, "dec_blocks": cfg.dec_blocks,
        "base_channels": cfg.base_channels, "feat_channels": cfg.feat_channels,
        "extract_blocks": cfg.extract_blocks, "prop_blocks": cfg.prop_blocks,
        "attn_at_dec_block": list(cfg.attn_at_dec_block),
        "temporal_chunk": cfg.temporal_chunk, "noise_mode": cfg.noise_mode,
        "temporal": cfg.temporal, "propagation": cfg.propagation,
        "blurpool": cfg.blurpool, "hf_shuttle": cfg.hf_shuttle,
        "lowpass_kernel": [1, 4, 6, 4, 1],
        "lowpass_kernel_divisor": 16,
    }
    assert np.allclose(np.array(d["lowpass_kernel"]) / d["lowpass_kernel_divisor"],
                       lowpass_kernel_1d())
    return d


def _train_constants(tcfg: adversarial.TrainConfig) -> dict:
    return {
        "lr": tcfg.lr, "beta1": tcfg.beta1, "beta2": tcfg.beta2,
        "batch": tcfg.batch, "frames_per_clip": tcfg.frames_per_clip,
        "crop": tcfg.crop, "iters": tcfg.iters, "seed": tcfg.seed,
        "charbonnier_eps": tcfg.charbonnier_eps,
        "checkpoint_every": tcfg.checkpoint_every,
        "perceptual_backend": tcfg.perceptual_backend,
        "weight_gan": tcfg.weights.gan, "weight_r1": tcfg.weights.r1,
        "weight_perceptual": tcfg.weights.perceptual,
        "weight_charbonnier": tcfg.weights.charbonnier,
    }


_CONFIG_SCHEMA = {
    "data": {
        "manifest": str, "scale": int, "flow": str,
    },
    "model": {
        "k": int, "base_channels": int, "feat_channels": int,
        "extract_blocks": int, "prop_blocks": int, "attn_at_dec_block": list,
        "temporal_chunk": int, "noise_mode": str, "temporal": bool,
        "propagation": bool, "blurpool": bool, "hf_shuttle": bool,
    },
    "train": {
        "lr": float, "beta1": float, "beta2": float, "batch": int,
        "frames_per_clip": int, "crop": int, "iters": int, "seed": int,
        "charbonnier_eps": float, "checkpoint_every": int,
        "perceptual_backend": str, "weight_gan": float, "weight_r1": float,
        "weight_perceptual": float, "weight_charbonnier": float,
    },
    "out": {
        "dir": str,
    },
}


def parse_config_file(path) -> dict:
    """Parse and validate a TOML config; every violation is reported at once."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"config file not found: {path}")
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    problems = []
    for section, table in raw.items():
        if section not in _CONFIG_SCHEMA:
            problems.append(f"unknown section [{section}]")
            continue
        if not isinstance(table, dict):
            problems.append(f"[{section}] must be a table")
            continue
        schema = _CONFIG_SCHEMA[section]
        for key, val in table.items():
            if key not in schema:
                problems.append(f"unknown key {section}.{key}")
                continue
            want = schema[key]
            ok = isinstance(val, want)
            if want is float and isinstance(val, int) and not isinstance(val, bool):
                ok = True
            if want is int and isinstance(val, bool):
                ok = False
            if not ok:
                problems.append(
                    f"{section}.{key} must be {want.__name__}, got {type(val).__name__}"
                )
    if problems:
        raise ConfigError("invalid config:\n  " + "\n  ".join(problems))
    return raw


def _exact_flows_for_dir(clip_dir: Path, scale: int, t_len: int, size: tuple):
    scene_path = clip_dir / "scene.json"
    if not scene_path.is_file():
        raise DataError(f"flow = 'exact' needs {scene_path}")
    spec = SyntheticSceneSpec.from_json(scene_path.read_text())
    h, w = size
    flow = np.empty((t_len - 1, h, w, 2), dtype=np.float64)
    flow[..., 0] = spec.velocity[0] / scale
    flow[..., 1] = spec.velocity[1] / scale
    return flow, -flow


def _dataset_from_manifest(manifest: str, scale: int, flow_mode: str) -> list:
    samples = []
    for clip_dir in load_manifest(manifest):
        hr = load_frames(clip_dir)
        lr = degrade_bi(hr, scale)
        t_len, h, w, _ = lr.shape
        if flow_mode == "exact":
            fwd, bwd = _exact_flows_for_dir(Path(clip_dir), scale, t_len, (h, w))
        elif flow_mode == "classical":
            est = ClassicalEstimator(levels=_levels_for(h, w))
            f_field, b_field = est.clip_flows(lr)
            fwd, bwd = f_field.flow, b_field.flow
        else:
            raise ConfigError(f"data.flow must be 'exact' or 'classical', got {flow_mode!r}")
        samples.append(adversarial.ClipSample(
            lr=lr.frames.astype(np.float64), hr=hr.frames.astype(np.float64),
            flow_fwd=np.asarray(fwd, dtype=np.float64),
            flow_bwd=np.asarray(bwd, dtype=np.float64),
        ))
    if not samples:
        raise DataError(f"manifest {manifest} yielded no clips")
    return samples


def _levels_for(h: int, w: int) -> int:
    lv = 0
    while min(h, w) >= (1 << (lv + 1)) * 8 and lv < 3:
        lv += 1
    return lv


def _refuse_existing(out_dir: Path, force: bool) -> None:
    if out_dir.exists() and any(out_dir.iterdir()) and not force:
        raise DataError(
            f"output directory {out_dir} is not empty; pass --force to overwrite"
        )


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Cached flow estimation
# ---------------------------------------------------------------------------

class MemoizedEstimator(FlowEstimator):
    """Caches per-pair flows on disk, keyed by frame content and estimator."""

    def __init__(self, base: FlowEstimator, directory: Path):
        self.base = base
        self.name = base.name
        self.is_exact = base.is_exact
        self.directory = directory
        directory.mkdir(parents=True, exist_ok=True)

    def estimate(self, a, b, index=None, reverse=False):
        h = hashlib.sha256()
        h.update(self.name.encode())
        h.update(np.ascontiguousarray(np.asarray(a, dtype=np.float64)).tobytes())
        h.update(np.ascontiguousarray(np.asarray(b, dtype=np.float64)).tobytes())
        path = self.directory / f"flow_{h.hexdigest()}.npy"
        if path.exists():
            return np.load(path)
        flow = self.base.estimate(a, b, index=index, reverse=reverse)
        np.save(path, flow)
        return flow


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_degrade(args) -> int:
    in_dir = Path(args.in_dir)
    out_dir = Path(args.out_dir)
    if not in_dir.is_dir():
        raise DataError(f"input directory not found: {in_dir}")
    _refuse_existing(out_dir, args.force)
    # A directory of PNGs is one clip; otherwise every subdirectory is a clip.
    if any(p.suffix == ".png" for p in in_dir.iterdir()):
        clip_dirs = [in_dir]
    else:
        clip_dirs = sorted(p for p in in_dir.iterdir() if p.is_dir())
    if not clip_dirs:
        raise DataError(f"no clips found in {in_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for clip_dir in clip_dirs:
        clip = load_frames(clip_dir)
        if args.mode == "bi":
            lr = degrade_bi(clip, args.scale)
        else:
            lr = degrade_bd(clip, sigma=args.sigma, scale=args.scale)
        name = clip_dir.name if clip_dir != in_dir else "clip"
        write_frames(lr, out_dir / name)
        meta = {"mode": args.mode, "scale": args.scale, "source": str(clip_dir)}
        if args.mode == "bd":
            meta["sigma"] = args.sigma
        (out_dir / name / "degrade.json").write_text(json.dumps(meta, indent=2))
        names.append(name)
    (out_dir / "manifest.txt").write_text("\n".join(names) + "\n")
    dump_resolved_config(out_dir / "resolved_config.toml", {
        "degrade": {
            "mode": args.mode, "scale": args.scale, "sigma": args.sigma,
            "bicubic_a": -0.5, "in_dir": str(in_dir), "out_dir": str(out_dir),
        },
    })
    print(f"wrote {len(names)} clip(s) to {out_dir}")
    return 0


def cmd_train(args) -> int:
    raw = parse_config_file(args.config)
    model_cfg = ModelConfig(**raw.get("model", {}))
    train_table = dict(raw.get("train", {}))
    weights = adversarial.LossWeights(
        gan=train_table.pop("weight_gan", 0.05),
        r1=train_table.pop("weight_r1", 0.2048),
        perceptual=train_table.pop("weight_perceptual", 5.0),
        charbonnier=train_table.pop("weight_charbonnier", 10.0),
    )
    train_cfg = adversarial.TrainConfig(weights=weights, **train_table)
    data = raw.get("data", {})
    if "manifest" not in data:
        raise ConfigError("config needs data.manifest")
    scale = data.get("scale", model_cfg.scale)
    if scale != model_cfg.scale:
        raise ConfigError(
            f"data.scale = {scale} does not match model scale 2^k = {model_cfg.scale}"
        )
    out_dir = Path(raw.get("out", {}).get("dir", args.out or "train_out"))
    out_dir.mkdir(parents=True, exist_ok=True)
    dump_resolved_config(out_dir / "resolved_config.toml", {
        "model": _model_constants(model_cfg),
        "train": _train_constants(train_cfg),
        "data": {"manifest": str(data["manifest"]), "scale": scale,
                 "flow": data.get("flow", "exact")},
        "out": {"dir": str(out_dir)},
    })
    dataset = _dataset_from_manifest(data["manifest"], scale, data.get("flow", "exact"))
    gen = build_generator(model_cfg, seed=train_cfg.seed)
    disc = adversarial.Discriminator(model_cfg)
    result = adversarial.train(gen, disc, dataset, train_cfg, str(out_dir),
                               resume_from=args.resume)
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"loss log:   {result.loss_csv_path}")
    return 0


def cmd_upsample(args) -> int:
    model, _ = load_checkpoint(args.checkpoint)
    if args.config:
        raw = parse_config_file(args.config)
        wanted = raw.get("model", {})
        mismatched = []
        for key, val in wanted.items():
            have = getattr(model.cfg, key)
            if isinstance(have, tuple):
                have = list(have)
            if have != val:
                mismatched.append(f"{key}: checkpoint has {have!r}, config wants {val!r}")
        if mismatched:
            raise ConfigError(
                "checkpoint/config mismatch:\n  " + "\n  ".join(mismatched)
            )
    out_dir = Path(args.out_dir)
    _refuse_existing(out_dir, args.force)
    clip = load_frames(args.in_dir)
    estimator = _build_eval_estimator(args.flow, Path(args.in_dir))
    if args.chunk is not None:
        model.cfg.temporal_chunk = args.chunk
    out = upsample_video(model, clip, estimator=estimator, noise_seed=args.seed)
    write_frames(out, out_dir)
    sidecar = {
        "checkpoint": str(args.checkpoint),
        "checkpoint_sha256": _sha256_file(args.checkpoint),
        "chunk": model.cfg.temporal_chunk,
        "seed": args.seed,
        "flow": args.flow,
        "n_frames": len(out),
        "scale": model.cfg.scale,
    }
    (out_dir / "provenance.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    dump_resolved_config(out_dir / "resolved_config.toml", {
        "model": _model_constants(model.cfg),
        "upsample": {"checkpoint": str(args.checkpoint), "in_dir": str(args.in_dir),
                     "out_dir": str(out_dir), "chunk": model.cfg.temporal_chunk,
                     "seed": args.seed, "flow": args.flow},
    })
    print(f"wrote {len(out)} frames to {out_dir}")
    return 0


def _build_eval_estimator(flow_spec: str, scene_dir: Path) -> FlowEstimator:
    scene = None
    if flow_spec == "exact":
        scene_path = scene_dir / "scene.json"
        if not scene_path.is_file():
            raise DataError(f"--flow exact needs {scene_path}")
        scene = SyntheticSceneSpec.from_json(scene_path.read_text())
    est = make_estimator(flow_spec, scene=scene)
    cache = cache_dir()
    if cache is not None and not est.is_exact:
        est = MemoizedEstimator(est, cache / "flows")
    return est


def cmd_evaluate(args) -> int:
    gen_clip = load_frames(args.gen_dir)
    gt_clip = load_frames(args.gt_dir)
    if len(gen_clip) != len(gt_clip):
        raise DataError(
            f"frame-count mismatch: {args.gen_dir} has {len(gen_clip)}, "
            f"{args.gt_dir} has {len(gt_clip)}"
        )
    estimator = _build_eval_estimator(args.flow, Path(args.gt_dir))
    report = metrics.evaluate(
        gen_clip, gt_clip, estimator,
        color_space=args.color_space, clip_id=Path(args.gen_dir).name,
    )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    metrics.write_report(report, out)
    dump_resolved_config(out.parent / "resolved_config.toml", {
        "evaluate": {"gen_dir": str(args.gen_dir), "gt_dir": str(args.gt_dir),
                     "flow": args.flow, "color_space": args.color_space,
                     "out": str(out)},
    })
    print(report.to_json())
    return 0


def _load_ablation_split(split_dir: Path, scale: int) -> list:
    clip_dirs = sorted(p for p in split_dir.iterdir() if p.is_dir())
    if not clip_dirs:
        raise DataError(f"no clips in {split_dir}")
    samples = []
    for clip_dir in clip_dirs:
        hr = load_frames(clip_dir)
        lr = degrade_bi(hr, scale)
        t_len, h, w, _ = lr.shape
        fwd, bwd = _exact_flows_for_dir(clip_dir, scale, t_len, (h, w))
        samples.append(adversarial.ClipSample(
            lr=lr.frames.astype(np.float64), hr=hr.frames.astype(np.float64),
            flow_fwd=fwd, flow_bwd=bwd,
        ))
    return samples


def make_ablation_dataset(root: Path, n_train: int, n_test: int, t_len: int,
                          lr_size: int, scale: int, seed: int) -> None:
    """Render synthetic HR clips (with scene sidecars) into train/ and test/."""
    rng = np.random.default_rng(seed)
    hr_size = lr_size * scale
    from .videodata import PATTERNS
    for split, count in (("train", n_train), ("test", n_test)):
        for i in range(count):
            v = rng.integers(1, 5, size=2) * rng.choice((-1, 1), size=2)
            spec = SyntheticSceneSpec(
                pattern=PATTERNS[i % len(PATTERNS)],
                velocity=(int(v[0]), int(v[1])), T=t_len, H=hr_size, W=hr_size,
                seed=int(rng.integers(1 << 31)),
            )
            write_synthetic_clip(spec, root / split / f"clip{i:03d}")


def cmd_ablate(args) -> int:
    root = Path(args.dataset_dir)
    scale = 1 << args.k
    if args.make_data:
        make_ablation_dataset(root, args.n_train, args.n_test, args.frames,
                              args.lr_size, scale, args.data_seed)
    if not (root / "train").is_dir() or not (root / "test").is_dir():
        raise DataError(f"{root} needs train/ and test/ clip directories "
                        "(generate them with --make-data)")
    train_set = _load_ablation_split(root / "train", scale)
    eval_set = _load_ablation_split(root / "test", scale)
    all_variants = {v.id: v for v in ablation.ladder()}
    wanted = [v.strip() for v in args.variants.split(",")] if args.variants else list(all_variants)
    unknown = [v for v in wanted if v not in all_variants]
    if unknown:
        raise ConfigError(f"unknown variants: {unknown}; choose from {list(all_variants)}")
    variants = [all_variants[v] for v in wanted]
    seeds = tuple(range(args.seeds))
    out_dir = Path(args.out)
    work_dir = cache_dir() or out_dir
    results = ablation.run_ablation(
        train_set, eval_set, str(work_dir / "runs"), variants=variants,
        seeds=seeds, iters=args.iters, model_kwargs={"k": args.k},
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "table.md").write_text(ablation.results_to_markdown(results))
    (out_dir / "table.csv").write_text(ablation.results_to_csv(results))
    dump_resolved_config(out_dir / "resolved_config.toml", {
        "ablate": {"dataset_dir": str(root), "variants": wanted,
                   "seeds": args.seeds, "iters": args.iters, "k": args.k,
                   "out": str(out_dir)},
    })
    print((out_dir / "table.md").read_text())
    return 0


# ---------------------------------------------------------------------------
# Parser / entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vsrlab",
        description="Video super-resolution lab: degradations, training, "
                    "upsampling, metrics, ablations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="downscale HR clips (BI/BD protocols)")
    p.add_argument("in_dir")
    p.add_argument("out_dir")
    p.add_argument("--mode", choices=("bi", "bd"), default="bi")
    p.add_argument("--scale", type=int, default=4)
    p.add_argument("--sigma", type=float, default=1.6)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("train", help="train a generator from a TOML config")
    p.add_argument("config")
    p.add_argument("--out", default=None, help="fallback when out.dir unset")
    p.add_argument("--resume", default=None, help="checkpoint to resume from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("upsample", help="apply a trained generator to a clip")
    p.add_argument("checkpoint")
    p.add_argument("in_dir")
    p.add_argument("out_dir")
    p.add_argument("--chunk", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--flow", default="classical",
                   help="classical | exact | external:DIR")
    p.add_argument("--config", default=None,
                   help="optional TOML cross-checked against the checkpoint")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_upsample)

    p = sub.add_parser("evaluate", help="score a generated clip against GT")
    p.add_argument("gen_dir")
    p.add_argument("gt_dir")
    p.add_argument("--flow", default="classical",
                   help="classical | exact | external:DIR")
    p.add_argument("--color-space", choices=("rgb", "y"), default="rgb")
    p.add_argument("--out", default="report.json")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="run the feature-ablation ladder")
    p.add_argument("dataset_dir")
    p.add_argument("--variants", default=None,
                   help="comma-separated subset, e.g. V1-temporal,V2-propagation")
    p.add_argument("--seeds", type=int, default=3)
    p.add_argument("--iters", type=int, default=400)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--out", default="ablation_out")
    p.add_argument("--make-data", action="store_true")
    p.add_argument("--n-train", type=int, default=6)
    p.add_argument("--n-test", type=int, default=3)
    p.add_argument("--frames", type=int, default=6)
    p.add_argument("--lr-size", type=int, default=8)
    p.add_argument("--data-seed", type=int, default=0)
    p.set_defaults(func=cmd_ablate)

    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalAbort as exc:
        msg = f"numerical abort: {exc}"
        if exc.dump_path:
            msg += f" (inputs dumped to {exc.dump_path})"
        print(msg, file=sys.stderr)
        return 4
    except VsrlabError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
