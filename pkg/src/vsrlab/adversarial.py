"""GAN objective, auxiliary losses, discriminator, and the training loop.

Loss bookkeeping follows the non-saturating formulation with R1 gradient
regularization; reconstruction is anchored by a Charbonnier term and a
perceptual feature distance.
"""

from __future__ import annotations

import csv
import os
from dataclasses import asdict, dataclass, field

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ConfigError, DataError, NumericalAbort
from .generator import (
    ModelConfig,
    VideoGenerator,
    make_noise,
    save_checkpoint,
    load_checkpoint,
    TemporalBlock,
)
from .antialias import BlurPool2d, StridedDown2d
from .propagation import ResidualBlock

LOSS_CSV_HEADER = ("iter", "L_GAN", "L_R1", "L_perc", "L_char", "total")


@dataclass
class LossWeights:
    gan: float = 0.05
    r1: float = 0.2048
    perceptual: float = 5.0
    charbonnier: float = 10.0


@dataclass
class TrainConfig:
    lr: float = 5.0e-5
    beta1: float = 0.0
    beta2: float = 0.99
    batch: int = 1
    frames_per_clip: int = 10
    crop: int = 64
    iters: int = 1000
    seed: int = 0
    charbonnier_eps: float = 1.0e-3
    checkpoint_every: int = 500
    perceptual_backend: str = "random-feature"
    weights: LossWeights = field(default_factory=LossWeights)

    def __post_init__(self):
        if self.iters < 1 or self.batch < 1 or self.frames_per_clip < 1:
            raise ConfigError("iters, batch and frames_per_clip must be positive")
        if self.crop % 8 or self.crop < 8:
            raise ConfigError("crop must be a positive multiple of 8")
        if self.lr <= 0:
            raise ConfigError("learning rate must be positive")


# ---------------------------------------------------------------------------
# Loss terms
# ---------------------------------------------------------------------------

def charbonnier(x: torch.Tensor, y: torch.Tensor, eps: float = 1.0e-3) -> torch.Tensor:
    """Smooth L1: mean of sqrt((x - y)^2 + eps^2); equals eps at x == y."""
    if x.shape != y.shape:
        raise DataError(f"shape mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    return torch.sqrt((x - y) ** 2 + eps * eps).mean()


def gan_losses(d_real: torch.Tensor, d_fake: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Non-saturating logistic losses.

    Returns (L_G, L_D) where L_G = E[softplus(-D(fake))] and
    L_D = E[softplus(-D(real))] + E[softplus(D(fake))].
    """
    loss_g = F.softplus(-d_fake).mean()
    loss_d = F.softplus(-d_real).mean() + F.softplus(d_fake).mean()
    return loss_g, loss_d


def r1_penalty(discriminator: nn.Module, real: torch.Tensor) -> torch.Tensor:
    """Mean squared gradient norm of the discriminator at the real batch."""
    real = real.detach().requires_grad_(True)
    scores = discriminator(real)
    (grad,) = torch.autograd.grad(scores.sum(), real, create_graph=True)
    return grad.reshape(grad.shape[0], -1).pow(2).sum(dim=1).mean()


@dataclass
class LossTerms:
    """Unweighted scalar loss terms, combined by `total_loss`."""

    gan: float | torch.Tensor = 0.0
    r1: float | torch.Tensor = 0.0
    perceptual: float | torch.Tensor = 0.0
    charbonnier: float | torch.Tensor = 0.0


def total_loss(terms: LossTerms, weights: LossWeights | None = None):
    """Weighted sum of the four training terms."""
    w = weights or LossWeights()
    return (
        w.gan * terms.gan
        + w.r1 * terms.r1
        + w.perceptual * terms.perceptual
        + w.charbonnier * terms.charbonnier
    )


# ---------------------------------------------------------------------------
# Perceptual distance
# ---------------------------------------------------------------------------

_FEATURE_STACK_SEED = 7130
_feature_stack_cache: dict = {}


def _feature_stack(dtype: torch.dtype):
    """Fixed random conv stack shared by every call of the default backend."""
    key = dtype
    if key not in _feature_stack_cache:
        g = torch.Generator().manual_seed(_FEATURE_STACK_SEED)
        chans = [(3, 16), (16, 32), (32, 64)]
        layers = []
        for cin, cout in chans:
            w = torch.randn(cout, cin, 3, 3, generator=g, dtype=torch.float64)
            w = w / (cin * 9) ** 0.5
            b = torch.randn(cout, generator=g, dtype=torch.float64) * 0.1
            layers.append((w, b))
        _feature_stack_cache[key] = [(w.to(dtype), b.to(dtype)) for w, b in layers]
    return _feature_stack_cache[key]


def _normalize_channels(f: torch.Tensor) -> torch.Tensor:
    return f / torch.sqrt((f**2).sum(dim=1, keepdim=True) + 1.0e-10)


def perceptual_distance(x: torch.Tensor, y: torch.Tensor,
                        backend: str = "random-feature") -> torch.Tensor:
    """Symmetric perceptual distance between (N, 3, H, W) image batches.

    The default backend compares raw pixels plus a fixed, seeded stack of
    random stride-2 conv features (channel-normalized), so the distance is
    deterministic, symmetric, and zero exactly when the inputs are equal.
    """
    if backend != "random-feature":
        raise ConfigError(f"unknown perceptual backend: {backend!r}")
    if x.shape != y.shape:
        raise DataError(f"shape mismatch: {tuple(x.shape)} vs {tuple(y.shape)}")
    if x.ndim != 4 or x.shape[1] != 3:
        raise DataError(f"expected (N, 3, H, W), got {tuple(x.shape)}")
    dist = ((x - y) ** 2).mean()
    fx, fy = x, y
    for w, b in _feature_stack(x.dtype):
        if min(fx.shape[-2:]) < 4:
            break
        fx = F.leaky_relu(F.conv2d(fx, w, b, stride=2, padding=1), 0.2)
        fy = F.leaky_relu(F.conv2d(fy, w, b, stride=2, padding=1), 0.2)
        dist = dist + ((_normalize_channels(fx) - _normalize_channels(fy)) ** 2).mean()
    return dist


def perceptual_distance_frames(a: np.ndarray, b: np.ndarray,
                               backend: str = "random-feature") -> float:
    """Numpy convenience wrapper over (T, H, W, 3) clips; returns a float."""
    ta = torch.from_numpy(np.ascontiguousarray(a.transpose(0, 3, 1, 2))).double()
    tb = torch.from_numpy(np.ascontiguousarray(b.transpose(0, 3, 1, 2))).double()
    with torch.no_grad():
        return float(perceptual_distance(ta, tb, backend=backend))


# ---------------------------------------------------------------------------
# Discriminator
# ---------------------------------------------------------------------------

class Discriminator(nn.Module):
    """Clip-level critic: three downsamplings, temporal mixing, scalar score.

    Mirrors the generator's anti-aliased encoder; scores are averaged over
    frames so a clip gets a single logit.
    """

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        b = cfg.base_channels
        down_cls = BlurPool2d if cfg.blurpool else StridedDown2d
        self.stem = nn.Conv2d(3, b, 3, padding=1)
        self.downs = nn.ModuleList([
            down_cls(b, 2 * b), down_cls(2 * b, 4 * b), down_cls(4 * b, 4 * b),
        ])
        self.body = ResidualBlock(4 * b)
        self.temporal = TemporalBlock(4 * b) if cfg.temporal else None
        if self.temporal is not None:
            self.temporal.zero_init()
        self.act = nn.LeakyReLU(0.1)
        self.head = nn.Linear(4 * b, 1)

    def forward(self, clips: torch.Tensor) -> torch.Tensor:
        """Args: clips (B, T, 3, H, W) in [0, 1]-ish range. Returns (B,)."""
        if clips.ndim != 5 or clips.shape[2] != 3:
            raise DataError(f"expected (B, T, 3, H, W), got {tuple(clips.shape)}")
        bsz, t_len = clips.shape[:2]
        x = clips.reshape(bsz * t_len, *clips.shape[2:])
        x = self.act(self.stem(x))
        for down in self.downs:
            x = self.act(down(x))
        x = self.body(x)
        x = x.reshape(bsz, t_len, *x.shape[1:])
        if self.temporal is not None:
            x = torch.stack([self.temporal(clip) for clip in x])
        pooled = x.mean(dim=(-2, -1))
        scores = self.head(pooled).squeeze(-1)
        return scores.mean(dim=1)


# ---------------------------------------------------------------------------
# Dataset
# ---------------------------------------------------------------------------

@dataclass
class ClipSample:
    """One training example: paired LR/HR clips plus LR-resolution flows."""

    lr: np.ndarray
    hr: np.ndarray
    flow_fwd: np.ndarray
    flow_bwd: np.ndarray

    def __post_init__(self):
        t, h, w, _ = self.lr.shape
        th, hh, wh, _ = self.hr.shape
        if th != t or hh % h or wh % w or hh // h != wh // w:
            raise DataError("hr clip is not an integer scale of the lr clip")
        if self.flow_fwd.shape != (t - 1, h, w, 2) or self.flow_bwd.shape != (t - 1, h, w, 2):
            raise DataError("flow shapes do not match the lr clip")

    @property
    def scale(self) -> int:
        return self.hr.shape[1] // self.lr.shape[1]


@dataclass
class TrainResult:
    checkpoint_path: str
    loss_csv_path: str
    iters_run: int
    curves: list


def _sample_batch(dataset, cfg: TrainConfig, model_cfg: ModelConfig, it: int):
    """Deterministic batch for iteration `it`: crops, windows, noise seed.

    All randomness is a pure function of (seed, it) so interrupted runs
    resume bitwise.
    """
    rng = np.random.default_rng([cfg.seed, it])
    scale = dataset[0].scale
    lr_list, hr_list, ff_list, fb_list = [], [], [], []
    for _ in range(cfg.batch):
        sample = dataset[int(rng.integers(len(dataset)))]
        t, h, w, _ = sample.lr.shape
        f = min(cfg.frames_per_clip, t)
        c = min(cfg.crop, h, w) // 8 * 8
        if c < 8:
            raise DataError(f"clip too small to crop: {h}x{w}")
        t0 = int(rng.integers(t - f + 1))
        y0 = int(rng.integers(h - c + 1))
        x0 = int(rng.integers(w - c + 1))
        lr_list.append(sample.lr[t0 : t0 + f, y0 : y0 + c, x0 : x0 + c])
        hr_list.append(
            sample.hr[t0 : t0 + f, y0 * scale : (y0 + c) * scale, x0 * scale : (x0 + c) * scale]
        )
        ff_list.append(sample.flow_fwd[t0 : t0 + f - 1, y0 : y0 + c, x0 : x0 + c])
        fb_list.append(sample.flow_bwd[t0 : t0 + f - 1, y0 : y0 + c, x0 : x0 + c])
    noise_seed = int(rng.integers(1 << 62))
    to_t = lambda arrs, perm: [
        torch.from_numpy(np.ascontiguousarray(a.transpose(*perm))).float() for a in arrs
    ]
    return (
        to_t(lr_list, (0, 3, 1, 2)),
        to_t(hr_list, (0, 3, 1, 2)),
        [torch.from_numpy(a.copy()).float() for a in ff_list],
        [torch.from_numpy(a.copy()).float() for a in fb_list],
        noise_seed,
    )


def _dump_batch(out_dir, it, tensors):
    path = os.path.join(out_dir, f"nan_dump_{it:06d}.npz")
    np.savez(path, **{k: v.detach().cpu().numpy() for k, v in tensors.items()})
    return path


def train(
    generator: VideoGenerator,
    discriminator: Discriminator,
    dataset: list,
    cfg: TrainConfig,
    out_dir: str,
    resume_from: str | None = None,
) -> TrainResult:
    """Alternating generator/discriminator optimization with Adam.

    Writes `loss_log.csv` (one row per iteration) and periodic checkpoints
    under `out_dir`; aborts with a batch dump on non-finite losses. Resuming
    from a checkpoint reproduces the uninterrupted run bit for bit.
    """
    if not dataset:
        raise DataError("empty training dataset")
    os.makedirs(out_dir, exist_ok=True)
    model_cfg = generator.cfg
    w = cfg.weights
    opt_g = torch.optim.Adam(generator.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2))
    opt_d = torch.optim.Adam(discriminator.parameters(), lr=cfg.lr, betas=(cfg.beta1, cfg.beta2))

    start_iter = 0
    csv_path = os.path.join(out_dir, "loss_log.csv")
    curves = []
    if resume_from is not None:
        loaded, extra = load_checkpoint(resume_from)
        if loaded.cfg != model_cfg:
            raise DataError("checkpoint model config does not match the generator")
        generator.load_state_dict(loaded.state_dict())
        discriminator.load_state_dict(extra["discriminator"])
        opt_g.load_state_dict(extra["opt_g"])
        opt_d.load_state_dict(extra["opt_d"])
        start_iter = extra["iter"]

    fresh_csv = not (start_iter and os.path.exists(csv_path))
    with open(csv_path, "w" if fresh_csv else "a", newline="") as fh:
        writer = csv.writer(fh)
        if fresh_csv:
            writer.writerow(LOSS_CSV_HEADER)

        for it in range(start_iter + 1, cfg.iters + 1):
            lr_b, hr_b, ff_b, fb_b, noise_seed = _sample_batch(dataset, cfg, model_cfg, it)
            fake = []
            for i in range(cfg.batch):
                f_len, _, ch, cw = lr_b[i].shape
                noise = make_noise(model_cfg, f_len, ch, cw, noise_seed + i)
                ff = ff_b[i] if f_len > 1 else None
                fb = fb_b[i] if f_len > 1 else None
                fake.append(generator(lr_b[i], ff, fb, noise))
            fake = torch.stack(fake)
            real = torch.stack(hr_b)

            # Discriminator step (generator frozen via detach).
            d_real = discriminator(real)
            d_fake = discriminator(fake.detach())
            _, loss_d = gan_losses(d_real, d_fake)
            r1 = r1_penalty(discriminator, real)
            opt_d.zero_grad(set_to_none=True)
            (loss_d + w.r1 * r1).backward()
            opt_d.step()

            # Generator step against the updated discriminator.
            d_fake2 = discriminator(fake)
            loss_gan = F.softplus(-d_fake2).mean()
            loss_perc = torch.stack([
                perceptual_distance(fake[i], real[i], backend=cfg.perceptual_backend)
                for i in range(cfg.batch)
            ]).mean()
            loss_char = charbonnier(fake, real, eps=cfg.charbonnier_eps)
            loss_g = w.gan * loss_gan + w.perceptual * loss_perc + w.charbonnier * loss_char
            opt_g.zero_grad(set_to_none=True)
            loss_g.backward()
            opt_g.step()

            row = {
                "iter": it,
                "L_GAN": float(loss_gan.detach()),
                "L_R1": float(r1.detach()),
                "L_perc": float(loss_perc.detach()),
                "L_char": float(loss_char.detach()),
            }
            row["total"] = float(total_loss(LossTerms(
                gan=row["L_GAN"], r1=row["L_R1"],
                perceptual=row["L_perc"], charbonnier=row["L_char"]), w))
            if not all(np.isfinite(v) for v in row.values()):
                dump = _dump_batch(out_dir, it, {"lr": lr_b[0], "hr": real, "fake": fake})
                raise NumericalAbort(
                    f"non-finite loss at iteration {it}; inputs saved", dump_path=dump
                )
            writer.writerow([row[k] for k in LOSS_CSV_HEADER])
            curves.append(row)

            if it % cfg.checkpoint_every == 0 or it == cfg.iters:
                ckpt = os.path.join(out_dir, f"ckpt_{it:06d}.pt")
                save_checkpoint(ckpt, generator, extra={
                    "iter": it,
                    "discriminator": discriminator.state_dict(),
                    "opt_g": opt_g.state_dict(),
                    "opt_d": opt_d.state_dict(),
                    "train_config": asdict(cfg),
                })

    final = os.path.join(out_dir, f"ckpt_{cfg.iters:06d}.pt")
    return TrainResult(checkpoint_path=final, loss_csv_path=csv_path,
                       iters_run=cfg.iters - start_iter, curves=curves)
