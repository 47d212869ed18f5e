"""Flow-guided bidirectional recurrent feature propagation.

Runs over the full low-resolution clip before the upsampling network sees
anything, so every frame's features carry information from the whole clip.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch
import torch.nn as nn

from .errors import ConfigError, DataError
from .flowops import warp_features


@dataclass
class PropagationConfig:
    feat_channels: int = 32
    extract_blocks: int = 5
    prop_blocks: int = 7
    bidirectional: bool = True
    share_direction_weights: bool = False

    def __post_init__(self):
        if self.feat_channels < 1:
            raise ConfigError("feat_channels must be positive")
        if self.extract_blocks < 1 or self.prop_blocks < 1:
            raise ConfigError("block counts must be positive")


@dataclass
class PropagatedFeatures:
    """Per-frame aligned features (T, C, H, W) at low resolution."""

    feats: torch.Tensor

    def __post_init__(self):
        if self.feats.ndim != 4:
            raise DataError(f"expected (T, C, H, W), got {tuple(self.feats.shape)}")


class ResidualBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.act = nn.LeakyReLU(0.1)

    def forward(self, x):
        return x + self.conv2(self.act(self.conv1(x)))


class FeatureExtractor(nn.Module):
    """Per-frame shallow resnet lifting RGB to feat_channels."""

    def __init__(self, channels: int, blocks: int):
        super().__init__()
        self.head = nn.Conv2d(3, channels, 3, padding=1)
        self.body = nn.Sequential(*[ResidualBlock(channels) for _ in range(blocks)])

    def forward(self, frames: torch.Tensor) -> torch.Tensor:
        return self.body(self.head(frames))


class PropagationBranch(nn.Module):
    """One temporal direction: refine (feature, warped hidden) into a new hidden."""

    def __init__(self, channels: int, blocks: int):
        super().__init__()
        self.fuse = nn.Conv2d(2 * channels, channels, 3, padding=1)
        self.body = nn.Sequential(*[ResidualBlock(channels) for _ in range(blocks)])

    def forward(self, feat: torch.Tensor, hidden: torch.Tensor) -> torch.Tensor:
        return self.body(self.fuse(torch.cat((feat, hidden), dim=1)))


class FlowGuidedPropagation(nn.Module):
    """Bidirectional recurrence with flow-warped hidden states.

    The backward-in-time pass aligns each hidden state with the forward flow
    of the pair (content of frame t sits at p + f_fwd[t](p) in frame t+1);
    the forward-in-time pass symmetrically uses the backward flow.
    """

    def __init__(self, cfg: PropagationConfig):
        super().__init__()
        self.cfg = cfg
        c = cfg.feat_channels
        self.extractor = FeatureExtractor(c, cfg.extract_blocks)
        self.branch_fwd = PropagationBranch(c, cfg.prop_blocks)
        if cfg.share_direction_weights:
            self.branch_bwd = self.branch_fwd
        else:
            self.branch_bwd = PropagationBranch(c, cfg.prop_blocks)
        fused_in = 2 * c if cfg.bidirectional else c
        self.fusion = nn.Conv2d(fused_in, c, 1)
        if cfg.share_direction_weights and cfg.bidirectional:
            self._tie_fusion_halves()

    def _tie_fusion_halves(self):
        # With tied branches the two direction features are interchangeable;
        # mirroring the fusion weight keeps the whole module symmetric.
        with torch.no_grad():
            c = self.cfg.feat_channels
            self.fusion.weight[:, c:] = self.fusion.weight[:, :c]

    def extract_features(self, frames: torch.Tensor) -> torch.Tensor:
        """Lift (T, 3, H, W) frames to (T, C, H, W) pre-propagation features."""
        if frames.ndim != 4 or frames.shape[1] != 3:
            raise DataError(f"expected (T, 3, H, W) frames, got {tuple(frames.shape)}")
        return self.extractor(frames)

    def forward(
        self,
        frames: torch.Tensor,
        flow_fwd: torch.Tensor | None,
        flow_bwd: torch.Tensor | None,
    ) -> PropagatedFeatures:
        """Args:
            frames: (T, 3, H, W) low-resolution frames.
            flow_fwd: (T-1, H, W, 2) flow of pair (t, t+1), or None when T == 1.
            flow_bwd: (T-1, H, W, 2) flow of pair (t+1, t), or None when T == 1.
        """
        t_len = frames.shape[0]
        for name, fl in (("flow_fwd", flow_fwd), ("flow_bwd", flow_bwd)):
            if t_len > 1:
                if fl is None:
                    raise DataError(f"{name} required for clips with more than one frame")
                if fl.shape[0] != t_len - 1 or fl.shape[1:3] != frames.shape[2:4]:
                    raise DataError(
                        f"{name} shape {tuple(fl.shape)} does not match frames"
                        f" {tuple(frames.shape)}"
                    )
        feats = self.extract_features(frames)
        zero = torch.zeros_like(feats[:1])

        h_fwd = [None] * t_len
        hidden = zero
        for t in range(t_len):
            if t > 0:
                hidden = warp_features(hidden, flow_bwd[t - 1 : t].to(feats.dtype))
            hidden = self.branch_fwd(feats[t : t + 1], hidden)
            h_fwd[t] = hidden

        if not self.cfg.bidirectional:
            # Forward-only keeps strict causality: frame t never sees t+1.
            return PropagatedFeatures(self.fusion(torch.cat(h_fwd)))

        h_bwd = [None] * t_len
        hidden = zero
        for t in range(t_len - 1, -1, -1):
            if t < t_len - 1:
                hidden = warp_features(hidden, flow_fwd[t : t + 1].to(feats.dtype))
            hidden = self.branch_bwd(feats[t : t + 1], hidden)
            h_bwd[t] = hidden

        both = torch.cat((torch.cat(h_fwd), torch.cat(h_bwd)), dim=1)
        return PropagatedFeatures(self.fusion(both))


class PixelLift(nn.Module):
    """Propagation-free stand-in: a 1x1 conv lift of the raw pixels.

    Keeps the upsampler's input contract (and its parameter count) unchanged
    when propagation is switched off in ablations.
    """

    def __init__(self, channels: int):
        super().__init__()
        self.lift = nn.Conv2d(3, channels, 1)

    def forward(self, frames, flow_fwd=None, flow_bwd=None) -> PropagatedFeatures:
        return PropagatedFeatures(self.lift(frames))
