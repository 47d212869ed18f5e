"""Video super-resolution laboratory.

A compact research codebase for 4x video upsampling built around five ideas:
a flow-guided recurrent feature adapter, temporal attention inflated into an
asymmetric image U-Net, anti-aliased downsampling, high-frequency skip
shuttling, and an adversarial training recipe with a reproducible evaluation
harness.
"""

from .errors import ConfigError, DataError, NumericalAbort, VsrlabError
from .videodata import (
    FlowField,
    OcclusionMask,
    SyntheticSceneSpec,
    VideoClip,
    bicubic_weights,
    degrade_bd,
    degrade_bi,
    gaussian_kernel_1d,
    load_frames,
    load_manifest,
    read_flo,
    synth_sequence,
    write_flo,
    write_frames,
    write_synthetic_clip,
)
from .antialias import (
    BlurPool2d,
    FeatureMap,
    FrequencySplit,
    StridedDown2d,
    blurpool_downsample,
    hf_decompose,
    lowpass2d,
    lowpass_kernel_1d,
    shift_stability_scores,
    shift_stability_signals,
)
from .flowops import (
    ClassicalEstimator,
    ExactEstimator,
    ExternalFlowEstimator,
    FlowEstimator,
    backward_warp,
    estimate_flow_classical,
    make_estimator,
    occlusion_mask,
    warp_features,
)
from .propagation import (
    FeatureExtractor,
    FlowGuidedPropagation,
    PixelLift,
    PropagationConfig,
)
from .generator import (
    ModelConfig,
    NoiseMap,
    VideoGenerator,
    VideoUNet,
    build_generator,
    chunked_inference,
    hf_shuttle_skip,
    load_checkpoint,
    make_noise,
    save_checkpoint,
    upsample_video,
)
from .adversarial import (
    Discriminator,
    ClipSample,
    LossWeights,
    TrainConfig,
    charbonnier,
    gan_losses,
    perceptual_distance,
    r1_penalty,
    total_loss,
    train,
)
from .metrics import (
    MetricReport,
    bt601_y,
    evaluate,
    load_report,
    psnr,
    ref_warping_error,
    ssim,
    warping_error,
    write_report,
)
from .ablation import (
    AblationVariant,
    ladder,
    make_translating_dataset,
    run_ablation,
)

__version__ = "0.1.0"

__all__ = [
    "AblationVariant",
    "BlurPool2d",
    "ClassicalEstimator",
    "ClipSample",
    "ConfigError",
    "DataError",
    "Discriminator",
    "ExactEstimator",
    "ExternalFlowEstimator",
    "FeatureExtractor",
    "FeatureMap",
    "FlowEstimator",
    "FlowField",
    "FlowGuidedPropagation",
    "FrequencySplit",
    "LossWeights",
    "MetricReport",
    "ModelConfig",
    "NoiseMap",
    "NumericalAbort",
    "OcclusionMask",
    "PixelLift",
    "PropagationConfig",
    "StridedDown2d",
    "SyntheticSceneSpec",
    "TrainConfig",
    "VideoClip",
    "VideoGenerator",
    "VideoUNet",
    "VsrlabError",
    "backward_warp",
    "bicubic_weights",
    "blurpool_downsample",
    "bt601_y",
    "build_generator",
    "charbonnier",
    "chunked_inference",
    "degrade_bd",
    "degrade_bi",
    "estimate_flow_classical",
    "evaluate",
    "gan_losses",
    "gaussian_kernel_1d",
    "hf_decompose",
    "hf_shuttle_skip",
    "ladder",
    "load_checkpoint",
    "load_frames",
    "load_manifest",
    "load_report",
    "lowpass2d",
    "lowpass_kernel_1d",
    "make_estimator",
    "make_noise",
    "make_translating_dataset",
    "occlusion_mask",
    "perceptual_distance",
    "psnr",
    "r1_penalty",
    "read_flo",
    "ref_warping_error",
    "run_ablation",
    "save_checkpoint",
    "shift_stability_scores",
    "shift_stability_signals",
    "ssim",
    "synth_sequence",
    "total_loss",
    "train",
    "upsample_video",
    "warp_features",
    "warping_error",
    "write_flo",
    "write_frames",
    "write_report",
    "write_synthetic_clip",
]
