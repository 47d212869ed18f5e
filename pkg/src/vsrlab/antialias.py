"""Binomial low-pass filtering, BlurPool downsampling, and LF/HF feature splits.

All operations act on (..., H, W) torch tensors; FeatureMap wraps the
(T, C, H, W) layout used by the generator encoder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import DataError


@dataclass
class FeatureMap:
    """Encoder feature tensor (T, C, H, W) tagged with its resolution level."""

    data: torch.Tensor
    level: int = 0

    def __post_init__(self):
        if self.data.ndim != 4:
            raise DataError(f"feature map must be (T, C, H, W), got {tuple(self.data.shape)}")
        if not torch.all(torch.isfinite(self.data)):
            raise DataError("feature map contains non-finite values")
        if self.level not in (0, 1, 2):
            raise DataError(f"level must be in {{0, 1, 2}}, got {self.level}")


@dataclass
class FrequencySplit:
    """Low/high frequency decomposition; lf.data + hf.data reconstructs the input."""

    lf: FeatureMap
    hf: FeatureMap


def lowpass_kernel_1d() -> np.ndarray:
    """The binomial 5-tap low-pass filter [1, 4, 6, 4, 1] / 16."""
    return np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


def reflect_indices(n: int, pad: int) -> torch.Tensor:
    """Source indices for edge-excluding reflect padding of a length-n axis.

    Falls back to the periodic reflection continuation when pad >= n, so
    tiny bottleneck maps inside the generator stay well-defined.
    """
    if n == 1:
        return torch.zeros(1 + 2 * pad, dtype=torch.long)
    idx = torch.arange(-pad, n + pad)
    period = 2 * n - 2
    m = idx % period
    m = torch.where(m >= n, period - m, m)
    return m


def _pad_reflect2d(x: torch.Tensor, pad: int) -> torch.Tensor:
    h, w = x.shape[-2], x.shape[-1]
    x = x.index_select(-2, reflect_indices(h, pad).to(x.device))
    x = x.index_select(-1, reflect_indices(w, pad).to(x.device))
    return x


def lowpass2d_tensor(x: torch.Tensor) -> torch.Tensor:
    """Separable [1,4,6,4,1]/16 filtering of (..., H, W) with reflect padding."""
    k = torch.as_tensor(lowpass_kernel_1d(), dtype=x.dtype, device=x.device)
    shape = x.shape
    flat = x.reshape(-1, 1, shape[-2], shape[-1])
    flat = _pad_reflect2d(flat, 2)
    flat = F.conv2d(flat, k.view(1, 1, 5, 1))
    flat = F.conv2d(flat, k.view(1, 1, 1, 5))
    return flat.reshape(shape)


def lowpass2d(f: FeatureMap) -> FeatureMap:
    """Shape-preserving binomial low-pass of a feature map."""
    h, w = f.data.shape[-2], f.data.shape[-1]
    if h < 5 or w < 5:
        raise DataError(f"lowpass2d needs H, W >= 5, got {h}x{w}")
    return FeatureMap(lowpass2d_tensor(f.data), f.level)


def hf_decompose(f: FeatureMap) -> FrequencySplit:
    """Split into low-pass content and the high-frequency residual f - lowpass(f)."""
    lf = lowpass2d(f)
    hf = FeatureMap(f.data - lf.data, f.level)
    return FrequencySplit(lf=lf, hf=hf)


def blurpool_downsample(f: FeatureMap, conv: nn.Module | None = None) -> FeatureMap:
    """Anti-aliased 2x downsampling: stride-1 conv, low-pass, then subsample.

    `conv` is the encoder block's learnable stride-1 convolution; None means
    identity (useful for analyzing the downsampling path on its own).
    """
    h, w = f.data.shape[-2], f.data.shape[-1]
    if h % 2 or w % 2 or h < 6 or w < 6:
        raise DataError(f"blurpool_downsample needs even H, W >= 6, got {h}x{w}")
    x = f.data if conv is None else conv(f.data)
    x = lowpass2d_tensor(x)
    return FeatureMap(x[..., ::2, ::2], f.level)


class BlurPool2d(nn.Module):
    """Encoder downsampling block: 3x3 stride-1 conv + binomial blur + subsample."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, 3, stride=1, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.conv(x)
        x = lowpass2d_tensor(x)
        return x[..., ::2, ::2]


class StridedDown2d(nn.Module):
    """Plain strided-conv downsampling, the aliasing-prone baseline."""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.conv = nn.Conv2d(in_channels, out_channels, 3, stride=2, padding=1)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.conv(x)


# ---------------------------------------------------------------------------
# Shift-stability harness (fixed 32-signal suite)
# ---------------------------------------------------------------------------

def shift_stability_signals(size: int = 32):
    """The pinned periodic sinusoid suite used for the shift-stability check.

    Every signal aliases along x under plain stride-2 subsampling (x
    frequency above half the output Nyquist rate), which is exactly the
    regime BlurPool targets, and every signal varies along x so the 1-px
    test shift moves it. Orientations: horizontal, diagonal, tilted, and a
    phase variant, plus folding-frequency and two-component signals.
    """
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    signals = []
    for c in (9, 10, 11, 12, 13, 14, 15):
        w = 2.0 * np.pi * c / size
        signals.append((f"h{c}", np.sin(w * xx)))
        signals.append((f"d{c}", np.sin(w * xx + w * yy)))
        signals.append((f"t{c}", np.sin(w * xx + 0.5 * w * yy)))
        signals.append((f"p{c}", np.sin(w * xx + 0.7)))
    w = 2.0 * np.pi * 16 / size
    signals.append(("ny_h", np.cos(w * xx)))
    signals.append(("ny_d", np.cos(np.pi * (xx + yy))))
    signals.append(("mix_a", np.sin(2 * np.pi * 9 * xx / size) + 0.5 * np.sin(2 * np.pi * 13 * (xx + yy) / size)))
    signals.append(("mix_b", np.sin(2 * np.pi * 11 * (xx - yy) / size) + 0.5 * np.sin(2 * np.pi * 14 * xx / size)))
    assert len(signals) == 32
    return signals


def _fourier_shift_half(img: np.ndarray) -> np.ndarray:
    """Exact 0.5-px horizontal shift of a periodic image: the output-grid
    correction for a 1-px horizontal shift of the input."""
    w = img.shape[1]
    fx = np.fft.fftfreq(w)
    phase = np.exp(-2j * np.pi * fx * 0.5)
    return np.real(np.fft.ifft(np.fft.fft(img, axis=1) * phase[None, :], axis=1))


def shift_stability_scores(signals=None):
    """Per-signal L2 shift-instability of BlurPool vs plain stride-2 subsampling.

    Metric: build each signal s and its 1-px horizontal shift analytically,
    push both through the downsampler, and compare against the exact
    half-pixel Fourier shift of the unshifted output.
    Returns [(name, d_blurpool, d_strided)].
    """
    if signals is None:
        signals = shift_stability_signals()
    margin = 4
    results = []
    for name, img in signals:
        # Period of every suite signal divides the domain, so np.roll is the
        # exact 1-px horizontal shift of the underlying continuous signal.
        shifted = np.roll(img, 1, axis=1)
        d_pair = []
        for blur in (True, False):
            out = _downsample_np(img, blur)
            out_s = _downsample_np(shifted, blur)
            ref = _fourier_shift_half(out)
            diff = (out_s - ref)[margin:-margin, margin:-margin]
            d_pair.append(float(np.sqrt(np.sum(diff**2))))
        results.append((name, d_pair[0], d_pair[1]))
    return results


def _downsample_np(img: np.ndarray, blur: bool) -> np.ndarray:
    """Numpy reference of the downsampling path with an identity conv."""
    if blur:
        t = torch.from_numpy(img)[None, None]
        img = lowpass2d_tensor(t)[0, 0].numpy()
    return img[::2, ::2]
