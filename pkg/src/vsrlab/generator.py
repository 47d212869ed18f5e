"""Asymmetric video upsampling U-Net.

Three anti-aliased encoder downsamplings, 3 + k decoder upsamplings (net
scale 2**k), high-frequency skip shuttling, spatial self-attention at the
lowest decoder resolution, and zero-initialized temporal inflation so the
freshly built video model reproduces its per-frame image twin.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .antialias import BlurPool2d, FeatureMap, StridedDown2d, lowpass2d_tensor
from .errors import ConfigError, DataError
from .flowops import ClassicalEstimator, FlowEstimator
from .propagation import (
    FlowGuidedPropagation,
    PixelLift,
    PropagationConfig,
    ResidualBlock,
)
from .videodata import FlowField, VideoClip

CHECKPOINT_VERSION = 1


@dataclass
class ModelConfig:
    """Generator hyperparameters; the encoder depth is fixed at 3.

    k is the log2 upsampling factor, so the output is 2**k times larger.
    Variant flags switch architecture features for ablations; every flag
    keeps the remaining parameter shapes untouched.
    """

    k: int = 2
    base_channels: int = 32
    feat_channels: int = 32
    extract_blocks: int = 5
    prop_blocks: int = 7
    attn_at_dec_block: tuple = (0,)
    temporal_chunk: int = 10
    noise_mode: str = "shared"
    temporal: bool = True
    propagation: bool = True
    blurpool: bool = True
    hf_shuttle: bool = True

    enc_blocks: int = field(default=3, init=False, repr=False)

    def __post_init__(self):
        if self.k not in (1, 2, 3):
            raise ConfigError(f"k must be 1, 2 or 3, got {self.k}")
        if self.base_channels < 1 or self.feat_channels < 1:
            raise ConfigError("channel counts must be positive")
        if self.temporal_chunk < 1:
            raise ConfigError("temporal_chunk must be positive")
        if self.noise_mode not in ("shared", "per-frame"):
            raise ConfigError(f"noise_mode must be 'shared' or 'per-frame', got {self.noise_mode!r}")
        self.attn_at_dec_block = tuple(sorted(set(int(i) for i in self.attn_at_dec_block)))
        for i in self.attn_at_dec_block:
            if not 0 <= i < self.dec_blocks:
                raise ConfigError(f"attention block index {i} outside decoder range")

    @property
    def scale(self) -> int:
        return 1 << self.k

    @property
    def dec_blocks(self) -> int:
        return 3 + self.k

    def to_text(self) -> str:
        """Stable key=value serialization embedded in checkpoints."""
        lines = []
        for f in fields(self):
            if not f.init:
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            lines.append(f"{f.name}={v}")
        return "\n".join(lines)

    @classmethod
    def from_text(cls, text: str) -> "ModelConfig":
        kwargs = {}
        conv = {
            "k": int, "base_channels": int, "feat_channels": int,
            "extract_blocks": int, "prop_blocks": int, "temporal_chunk": int,
            "noise_mode": str,
            "temporal": lambda s: s == "True", "propagation": lambda s: s == "True",
            "blurpool": lambda s: s == "True", "hf_shuttle": lambda s: s == "True",
            "attn_at_dec_block": lambda s: tuple(int(x) for x in s.split(",") if x),
        }
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            if key not in conv:
                raise DataError(f"unknown model config key: {key!r}")
            kwargs[key] = conv[key](value)
        return cls(**kwargs)


# ---------------------------------------------------------------------------
# Noise
# ---------------------------------------------------------------------------

@dataclass
class NoiseMap:
    """Per-decoder-resolution spatial noise, shared or per-frame across time.

    z[j] has shape (1, 1, H_j, W_j) in shared mode and (T, 1, H_j, W_j) in
    per-frame mode; slicing by absolute frame range keeps chunked inference
    consistent with the full-clip call.
    """

    z: list
    seed: int
    temporal_mode: str

    @staticmethod
    def generate(seed: int, shapes: list, t_len: int, temporal_mode: str = "shared",
                 dtype=torch.float32) -> "NoiseMap":
        if temporal_mode not in ("shared", "per-frame"):
            raise ConfigError(f"unknown temporal_mode: {temporal_mode!r}")
        g = torch.Generator().manual_seed(int(seed) & 0x7FFFFFFFFFFFFFFF)
        lead = 1 if temporal_mode == "shared" else t_len
        z = [torch.randn(lead, 1, h, w, generator=g, dtype=dtype) for (h, w) in shapes]
        return NoiseMap(z=z, seed=seed, temporal_mode=temporal_mode)

    def frame_slice(self, t0: int, t1: int) -> "NoiseMap":
        if self.temporal_mode == "shared":
            return self
        return NoiseMap(z=[zi[t0:t1] for zi in self.z], seed=self.seed,
                        temporal_mode=self.temporal_mode)


def decoder_input_shapes(cfg: ModelConfig, h: int, w: int) -> list:
    """Spatial shape seen at each decoder block input for an (h, w) LR clip."""
    return [(h // 8 * (1 << j), w // 8 * (1 << j)) for j in range(cfg.dec_blocks)]


def make_noise(cfg: ModelConfig, t_len: int, h: int, w: int, seed: int) -> NoiseMap:
    return NoiseMap.generate(seed, decoder_input_shapes(cfg, h, w), t_len, cfg.noise_mode)


# ---------------------------------------------------------------------------
# Temporal and attention modules
# ---------------------------------------------------------------------------

class TemporalConv(nn.Module):
    """Kernel-3 convolution along time at every spatial position.

    The closing projection starts at zero, so the block is an identity
    mapping until training moves it.
    """

    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv1d(channels, channels, 3, padding=1)
        self.act = nn.LeakyReLU(0.1)
        self.conv2 = nn.Conv1d(channels, channels, 3, padding=1)

    def zero_init(self):
        nn.init.zeros_(self.conv2.weight)
        nn.init.zeros_(self.conv2.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        t, c, h, w = x.shape
        seq = x.permute(2, 3, 1, 0).reshape(h * w, c, t)
        seq = self.conv2(self.act(self.conv1(seq)))
        return x + seq.reshape(h, w, c, t).permute(3, 2, 0, 1)


class TemporalAttention(nn.Module):
    """Self-attention across frames with no spatial receptive field."""

    def __init__(self, channels: int):
        super().__init__()
        self.norm = nn.GroupNorm(1, channels)
        self.qkv = nn.Conv1d(channels, 3 * channels, 1)
        self.proj = nn.Conv1d(channels, channels, 1)
        self.scale = channels ** -0.5

    def zero_init(self):
        nn.init.zeros_(self.proj.weight)
        nn.init.zeros_(self.proj.bias)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        t, c, h, w = x.shape
        seq = self.norm(x).permute(2, 3, 1, 0).reshape(h * w, c, t)
        q, k, v = self.qkv(seq).chunk(3, dim=1)
        attn = torch.softmax(q.transpose(1, 2) @ k * self.scale, dim=-1)
        out = self.proj((attn @ v.transpose(1, 2)).transpose(1, 2))
        return x + out.reshape(h, w, c, t).permute(3, 2, 0, 1)


class TemporalBlock(nn.Module):
    """Temporal conv followed by temporal attention, both identity at init."""

    def __init__(self, channels: int):
        super().__init__()
        self.tconv = TemporalConv(channels)
        self.tattn = TemporalAttention(channels)

    def zero_init(self):
        self.tconv.zero_init()
        self.tattn.zero_init()

    def forward(self, x):
        return self.tattn(self.tconv(x))


class SpatialAttention(nn.Module):
    """Per-frame single-head self-attention over all spatial positions."""

    def __init__(self, channels: int):
        super().__init__()
        self.norm = nn.GroupNorm(1, channels)
        self.qkv = nn.Conv2d(channels, 3 * channels, 1)
        self.proj = nn.Conv2d(channels, channels, 1)
        self.scale = channels ** -0.5

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        t, c, h, w = x.shape
        q, k, v = self.qkv(self.norm(x)).reshape(t, 3, c, h * w).unbind(1)
        attn = torch.softmax(q.transpose(1, 2) @ k * self.scale, dim=-1)
        out = (v @ attn.transpose(1, 2)).reshape(t, c, h, w)
        return x + self.proj(out)


# ---------------------------------------------------------------------------
# The U-Net
# ---------------------------------------------------------------------------

def _skip_cat(enc: torch.Tensor, dec: torch.Tensor, hf_shuttle: bool) -> torch.Tensor:
    skip = enc - lowpass2d_tensor(enc) if hf_shuttle else enc
    return torch.cat((dec, skip), dim=1)


def hf_shuttle_skip(enc_feature: FeatureMap, dec_feature: FeatureMap,
                    hf_shuttle: bool = True) -> torch.Tensor:
    """Join an encoder tap onto the decoder stream through the skip path.

    With the shuttle on, the skip carries only the high-frequency residual
    of the encoder feature; otherwise the full feature passes through. Maps
    smaller than the public lowpass2d minimum use the periodic reflection
    continuation, so tiny training crops still work.
    """
    if enc_feature.data.shape[-2:] != dec_feature.data.shape[-2:]:
        raise DataError(
            f"encoder {tuple(enc_feature.data.shape)} and decoder"
            f" {tuple(dec_feature.data.shape)} taps disagree spatially"
        )
    return _skip_cat(enc_feature.data, dec_feature.data, hf_shuttle)


class EncoderBlock(nn.Module):
    def __init__(self, channels_in: int, channels_out: int, blurpool: bool):
        super().__init__()
        self.body = ResidualBlock(channels_in)
        down_cls = BlurPool2d if blurpool else StridedDown2d
        self.down = down_cls(channels_in, channels_out)

    def forward(self, x):
        tap = self.body(x)
        return self.down(tap), tap


class DecoderBlock(nn.Module):
    def __init__(self, channels_in: int, channels_out: int, skip_channels: int,
                 attend: bool, temporal: bool, hf_shuttle: bool):
        super().__init__()
        self.hf_shuttle = hf_shuttle
        self.noise_scale = nn.Parameter(torch.tensor(0.1))
        self.skip_fuse = (
            nn.Conv2d(channels_in + skip_channels, channels_in, 1) if skip_channels else None
        )
        self.body = ResidualBlock(channels_in)
        self.attn = SpatialAttention(channels_in) if attend else None
        self.temporal = TemporalBlock(channels_in) if temporal else None
        self.up_conv = nn.Conv2d(channels_in, channels_out, 3, padding=1)

    def forward(self, x, skip, z):
        x = x + self.noise_scale * z.to(x.dtype)
        if self.skip_fuse is not None:
            x = self.skip_fuse(_skip_cat(skip, x, self.hf_shuttle))
        x = self.body(x)
        if self.attn is not None:
            x = self.attn(x)
        if self.temporal is not None:
            x = self.temporal(x)
        return self.up_conv(F.interpolate(x, scale_factor=2, mode="nearest"))


class VideoUNet(nn.Module):
    """Maps propagated features plus LR frames to the upscaled clip residual."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        b = cfg.base_channels
        self.stem = nn.Conv2d(cfg.feat_channels, b, 3, padding=1)
        enc_w = [b, 2 * b, 4 * b, 4 * b]
        self.encoders = nn.ModuleList(
            EncoderBlock(enc_w[i], enc_w[i + 1], cfg.blurpool) for i in range(3)
        )
        self.bottleneck = ResidualBlock(enc_w[3])
        # Skip taps live at h (b), h/2 (2b) and h/4 (4b); decoder blocks 1-3
        # consume them in reverse order. Blocks beyond 3 run above the input
        # resolution where no encoder features exist.
        self.decoders = nn.ModuleList()
        ch = enc_w[3]
        for j in range(cfg.dec_blocks):
            out_ch = {0: 4 * b, 1: 2 * b}.get(j, b)
            skip_ch = {1: 4 * b, 2: 2 * b, 3: b}.get(j, 0)
            self.decoders.append(
                DecoderBlock(
                    ch, out_ch, skip_ch,
                    attend=j in cfg.attn_at_dec_block,
                    temporal=cfg.temporal and j in cfg.attn_at_dec_block,
                    hf_shuttle=cfg.hf_shuttle,
                )
            )
            ch = out_ch
        self.head = nn.Conv2d(ch, 3, 3, padding=1)
        zero_init_temporal(self)

    def forward(self, feats: torch.Tensor, lr_frames: torch.Tensor,
                noise: NoiseMap) -> torch.Tensor:
        t_len, _, h, w = feats.shape
        if h % 8 or w % 8:
            raise DataError(f"spatial size must be divisible by 8, got {h}x{w}")
        if lr_frames.shape[0] != t_len or lr_frames.shape[2:] != feats.shape[2:]:
            raise DataError("frames and features disagree in shape")
        x = self.stem(feats)
        taps = {}
        for i, enc in enumerate(self.encoders):
            x, tap = enc(x)
            taps[1 << i] = tap
        x = self.bottleneck(x)
        for j, dec in enumerate(self.decoders):
            skip = taps.get(8 >> j) if 1 <= j <= 3 else None
            x = dec(x, skip, noise.z[j])
        residual = self.head(x)
        base = F.interpolate(lr_frames, scale_factor=self.cfg.scale, mode="bilinear",
                             align_corners=False)
        return base + residual


class VideoGenerator(nn.Module):
    """Full generator: input adapter (propagation or pixel lift) plus U-Net."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.cfg = cfg
        if cfg.propagation:
            self.adapter = FlowGuidedPropagation(PropagationConfig(
                feat_channels=cfg.feat_channels,
                extract_blocks=cfg.extract_blocks,
                prop_blocks=cfg.prop_blocks,
            ))
        else:
            self.adapter = PixelLift(cfg.feat_channels)
        self.unet = VideoUNet(cfg)

    def forward(self, lr_frames: torch.Tensor, flow_fwd, flow_bwd,
                noise: NoiseMap) -> torch.Tensor:
        feats = self.adapter(lr_frames, flow_fwd, flow_bwd).feats
        return self.unet(feats, lr_frames, noise)


def build_generator(cfg: ModelConfig, seed: int = 0) -> VideoGenerator:
    """Construct a generator with reproducible initialization."""
    torch.manual_seed(seed)
    return VideoGenerator(cfg)


def zero_init_temporal(module: nn.Module) -> nn.Module:
    """Reset every temporal block to an exact identity mapping.

    Builders call this once, so a freshly constructed video model matches the
    per-frame image model weight for weight.
    """
    for m in module.modules():
        if isinstance(m, TemporalBlock):
            m.zero_init()
    return module


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------

def chunked_inference(model: VideoGenerator, feats: torch.Tensor,
                      lr_frames: torch.Tensor, noise: NoiseMap,
                      chunk: int | None = None) -> torch.Tensor:
    """Run the U-Net on non-overlapping temporal chunks and concatenate.

    Propagated features come in for the whole clip; only the upsampler sees
    the clip piecewise, so each chunk is an independent forward call.
    """
    chunk = model.cfg.temporal_chunk if chunk is None else chunk
    if chunk < 1:
        raise ConfigError("chunk size must be positive")
    t_len = feats.shape[0]
    outs = []
    for t0 in range(0, t_len, chunk):
        t1 = min(t0 + chunk, t_len)
        outs.append(model.unet(feats[t0:t1], lr_frames[t0:t1], noise.frame_slice(t0, t1)))
    return torch.cat(outs)


def upsample_video(model: VideoGenerator, clip: VideoClip,
                   estimator: FlowEstimator | None = None,
                   flows: tuple[FlowField, FlowField] | None = None,
                   noise_seed: int = 0) -> VideoClip:
    """Upscale a clip by the model's 2**k factor.

    Flow-guided propagation runs over the entire clip first; the upsampler
    is then applied per temporal chunk. Flows are taken from `flows` when
    given, otherwise estimated (classical estimator by default) on the
    low-resolution frames.
    """
    cfg = model.cfg
    t_len, h, w, _ = clip.shape
    if h % 8 or w % 8:
        raise DataError(f"frame size must be divisible by 8, got {h}x{w}")
    frames = torch.from_numpy(np.ascontiguousarray(clip.frames.transpose(0, 3, 1, 2))).float()
    flow_fwd = flow_bwd = None
    if t_len > 1 and cfg.propagation:
        if flows is None:
            estimator = estimator or ClassicalEstimator()
            flows = estimator.clip_flows(clip)
        f, b = flows
        if f.direction != "forward" or b.direction != "backward":
            raise DataError("flows must be a (forward, backward) pair")
        flow_fwd = torch.from_numpy(f.flow).float()
        flow_bwd = torch.from_numpy(b.flow).float()
    noise = make_noise(cfg, t_len, h, w, noise_seed)
    model.eval()
    with torch.no_grad():
        feats = model.adapter(frames, flow_fwd, flow_bwd).feats
        out = chunked_inference(model, feats, frames, noise)
    arr = out.clamp(0.0, 1.0).permute(0, 2, 3, 1).numpy().astype(np.float64)
    return VideoClip(arr, frame_rate=clip.frame_rate)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

def save_checkpoint(path: str, model: VideoGenerator, extra: dict | None = None) -> None:
    """Serialize model weights, config and any extra state (optimizers, rng)."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "config": model.cfg.to_text(),
        "state": model.state_dict(),
        "extra": extra or {},
    }
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    torch.save(payload, path)


def load_checkpoint(path: str) -> tuple[VideoGenerator, dict]:
    """Rebuild a generator from a checkpoint; returns (model, extra)."""
    if not os.path.exists(path):
        raise DataError(f"checkpoint not found: {path}")
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise DataError(f"corrupt checkpoint: {path} ({exc})") from exc
    if not isinstance(payload, dict) or "version" not in payload:
        raise DataError(f"corrupt checkpoint: {path} (missing version field)")
    if payload["version"] != CHECKPOINT_VERSION:
        raise DataError(
            f"unsupported checkpoint version {payload['version']} (expected {CHECKPOINT_VERSION})"
        )
    cfg = ModelConfig.from_text(payload["config"])
    model = VideoGenerator(cfg)
    model.load_state_dict(payload["state"])
    return model, payload.get("extra", {})


def clone_config(cfg: ModelConfig, **overrides) -> ModelConfig:
    """Copy a config with field overrides (variant flags for ablations)."""
    return replace(cfg, **overrides)


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
