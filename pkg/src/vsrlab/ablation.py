"""Feature-ablation ladder: cumulative variants, toy presets, and tables.

Each variant enables exactly one more architecture feature than its
predecessor; runs differ only in flags and seed, never in data or budget.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from .adversarial import Discriminator, TrainConfig, perceptual_distance_frames, train
from .errors import ConfigError, NumericalAbort
from .flowops import ClassicalEstimator
from .generator import ModelConfig, VideoGenerator, build_generator, upsample_video
from .metrics import ref_warping_error
from .videodata import (
    FlowField,
    PATTERNS,
    SyntheticSceneSpec,
    VideoClip,
    degrade_bi,
    synth_sequence,
)
from .adversarial import ClipSample

VARIANT_FLAG_ORDER = ("temporal", "propagation", "blurpool", "hf_shuttle")


@dataclass
class AblationVariant:
    """One rung of the ladder; flags say which architecture features are on."""

    id: str
    flags: dict

    def __post_init__(self):
        missing = set(VARIANT_FLAG_ORDER) - set(self.flags)
        if missing:
            raise ConfigError(f"variant {self.id} missing flags: {sorted(missing)}")


def ladder() -> list:
    """The five cumulative variants, one new feature per step."""
    variants = []
    enabled: dict = {k: False for k in VARIANT_FLAG_ORDER}
    variants.append(AblationVariant("V0-image", dict(enabled)))
    names = ("V1-temporal", "V2-propagation", "V3-blurpool", "V4-hfshuttle")
    for name, flag in zip(names, VARIANT_FLAG_ORDER):
        enabled = dict(enabled)
        enabled[flag] = True
        variants.append(AblationVariant(name, dict(enabled)))
    return variants


VARIANT_IDS = tuple(v.id for v in ladder())


def check_cumulative(variants: list) -> None:
    """Assert the one-feature-per-step structure of a variant list."""
    for prev, cur in zip(variants, variants[1:]):
        delta = [k for k in VARIANT_FLAG_ORDER if prev.flags[k] != cur.flags[k]]
        added = [k for k in delta if cur.flags[k]]
        if len(delta) != 1 or len(added) != 1:
            raise ConfigError(
                f"variants {prev.id} -> {cur.id} must add exactly one feature, "
                f"changed {delta}"
            )


# ---------------------------------------------------------------------------
# Toy presets and synthetic datasets
# ---------------------------------------------------------------------------

def toy_model_config(flags: dict | None = None, k: int = 2, **overrides) -> ModelConfig:
    """Small generator sized for CPU experiments on 8-16 px LR clips."""
    kwargs = dict(
        k=k,
        base_channels=8,
        feat_channels=8,
        extract_blocks=2,
        prop_blocks=2,
        temporal_chunk=10,
    )
    if flags:
        kwargs.update(flags)
    kwargs.update(overrides)
    return ModelConfig(**kwargs)


def toy_train_config(iters: int, seed: int = 0, **overrides) -> TrainConfig:
    # The full-scale default lr (5e-5) barely moves an 8-channel model on
    # 8 px crops within a few thousand iterations; the toy recipe runs hot.
    kwargs = dict(iters=iters, seed=seed, crop=8, frames_per_clip=6, batch=1,
                  lr=7e-4, checkpoint_every=max(iters, 1))
    kwargs.update(overrides)
    return TrainConfig(**kwargs)


def make_translating_dataset(
    n_clips: int,
    t_len: int = 6,
    lr_size: int = 8,
    scale: int = 4,
    seed: int = 0,
    patterns: tuple = PATTERNS,
) -> list:
    """Paired LR/HR translating clips with exact LR-resolution flows.

    HR clips are rendered analytically and degraded bicubically; uniform
    translation survives downscaling, so the LR ground-truth flow is just
    velocity / scale.
    """
    rng = np.random.default_rng(seed)
    hr_size = lr_size * scale
    samples = []
    for i in range(n_clips):
        pattern = patterns[i % len(patterns)]
        v = rng.integers(1, 5, size=2) * rng.choice((-1, 1), size=2)
        spec = SyntheticSceneSpec(
            pattern=pattern, velocity=(int(v[0]), int(v[1])),
            T=t_len, H=hr_size, W=hr_size, seed=int(rng.integers(1 << 31)),
        )
        hr, _, _ = synth_sequence(spec)
        lr = degrade_bi(hr, scale)
        flow = np.empty((t_len - 1, lr_size, lr_size, 2), dtype=np.float64)
        flow[..., 0] = v[0] / scale
        flow[..., 1] = v[1] / scale
        samples.append(ClipSample(
            lr=lr.frames.astype(np.float64),
            hr=hr.frames.astype(np.float64),
            flow_fwd=flow,
            flow_bwd=-flow,
        ))
    return samples


# ---------------------------------------------------------------------------
# Running the ladder
# ---------------------------------------------------------------------------

@dataclass
class VariantResult:
    variant: AblationVariant
    per_seed: list = field(default_factory=list)  # dicts: seed, perceptual, e_ref_warp
    failed: bool = False
    failure: str = ""

    def _vals(self, key: str) -> list:
        return [row[key] for row in self.per_seed]

    def mean(self, key: str) -> float:
        return float(np.mean(self._vals(key))) if self.per_seed else math.nan

    def median(self, key: str) -> float:
        return float(np.median(self._vals(key))) if self.per_seed else math.nan


def evaluate_generator(model: VideoGenerator, eval_set: list, noise_seed: int = 0) -> dict:
    """Mean perceptual distance and referenced warping error over a test set.

    Metric flows come from the classical estimator applied to the generated
    frames, so the measure reacts to output quality rather than echoing the
    oracle motion.
    """
    est = ClassicalEstimator(levels=2)
    percs, rwes = [], []
    for sample in eval_set:
        lr_clip = VideoClip(np.clip(sample.lr, 0.0, 1.0))
        flows = (
            FlowField(sample.flow_fwd.astype(np.float32), "forward"),
            FlowField(sample.flow_bwd.astype(np.float32), "backward"),
        )
        out = upsample_video(model, lr_clip, flows=flows, noise_seed=noise_seed)
        gt = np.clip(sample.hr, 0.0, 1.0)
        percs.append(perceptual_distance_frames(out.frames, gt))
        rwes.append(ref_warping_error(gt, out.frames, est))
    return {"perceptual": float(np.mean(percs)), "e_ref_warp": float(np.mean(rwes))}


def run_variant(
    variant: AblationVariant,
    train_set: list,
    eval_set: list,
    seeds: tuple,
    iters: int,
    out_dir: str,
    model_kwargs: dict | None = None,
    train_kwargs: dict | None = None,
) -> VariantResult:
    result = VariantResult(variant)
    for seed in seeds:
        cfg = toy_model_config(variant.flags, **(model_kwargs or {}))
        tcfg = toy_train_config(iters, seed=seed, **(train_kwargs or {}))
        gen = build_generator(cfg, seed=seed)
        disc = Discriminator(cfg)
        run_dir = os.path.join(out_dir, variant.id, f"seed{seed}")
        try:
            train(gen, disc, train_set, tcfg, run_dir)
        except NumericalAbort as exc:
            result.failed = True
            result.failure = str(exc)
            return result
        row = evaluate_generator(gen, eval_set, noise_seed=seed)
        row["seed"] = seed
        result.per_seed.append(row)
    return result


def run_ablation(
    train_set: list,
    eval_set: list,
    out_dir: str,
    variants: list | None = None,
    seeds: tuple = (0, 1, 2),
    iters: int = 400,
    model_kwargs: dict | None = None,
    train_kwargs: dict | None = None,
) -> list:
    """Train and evaluate every variant; aborts mark the row FAILED but do
    not stop the remaining variants."""
    variants = variants if variants is not None else ladder()
    check_cumulative(variants)
    results = []
    for variant in variants:
        results.append(run_variant(
            variant, train_set, eval_set, seeds, iters, out_dir,
            model_kwargs=model_kwargs, train_kwargs=train_kwargs,
        ))
    return results


def results_to_markdown(results: list) -> str:
    """Ladder table (mean over seeds), one row per variant in ladder order."""
    lines = [
        "| variant | perceptual | e_ref_warp |",
        "| --- | --- | --- |",
    ]
    for res in results:
        if res.failed:
            lines.append(f"| {res.variant.id} | FAILED | FAILED |")
        else:
            lines.append(
                f"| {res.variant.id} | {res.mean('perceptual'):.6f} "
                f"| {res.mean('e_ref_warp'):.6f} |"
            )
    return "\n".join(lines) + "\n"


def results_to_csv(results: list) -> str:
    lines = ["variant,seed,perceptual,e_ref_warp"]
    for res in results:
        if res.failed:
            lines.append(f"{res.variant.id},FAILED,FAILED,FAILED")
            continue
        for row in res.per_seed:
            lines.append(
                f"{res.variant.id},{row['seed']},{row['perceptual']!r},{row['e_ref_warp']!r}"
            )
    return "\n".join(lines) + "\n"
