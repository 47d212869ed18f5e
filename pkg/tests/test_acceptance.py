"""Package acceptance: identities, oracles, gradients, orderings, formats.

Everything here runs on the CPU from fixed seeds. The two training-based
checks at the end are the slow ones (several minutes each); all other tests
finish in seconds.
"""

import math

import numpy as np
import pytest
import torch

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from conftest import clip_from_scene_params, scene_from_params
from vsrlab.ablation import (
    ladder,
    make_translating_dataset,
    run_variant,
    toy_model_config,
    toy_train_config,
)
from vsrlab.adversarial import (
    Discriminator,
    TrainConfig,
    charbonnier,
    perceptual_distance,
    r1_penalty,
    train,
)
from vsrlab.antialias import FeatureMap, hf_decompose, shift_stability_scores
from vsrlab.cli import dump_resolved_config, run, _train_constants
from vsrlab.errors import DataError
from vsrlab.fixtures import blur_experiment_clips, oracle_bilinear_warp
from vsrlab.flowops import ClassicalEstimator, ExactEstimator, backward_warp
from vsrlab.generator import (
    ModelConfig,
    build_generator,
    chunked_inference,
    make_noise,
    upsample_video,
)
from vsrlab.metrics import ref_warping_error, warping_error
from vsrlab.videodata import read_flo, write_flo, write_frames


def test_frequency_split_identity_and_checkerboard():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        h = int(rng.integers(5, 20))
        w = int(rng.integers(5, 20))
        data = torch.from_numpy(rng.standard_normal((1, 2, h, w)))
        split = hf_decompose(FeatureMap(data))
        recon = split.lf.data + split.hf.data
        assert float((recon - data).abs().max()) < 1e-12

    # A perfect checkerboard sits at the kernel's Nyquist null: away from
    # the reflected border its low-pass half is exactly zero, so the whole
    # signal lands in the high-frequency residual.
    yy, xx = np.mgrid[0:16, 0:16]
    board = torch.from_numpy(((yy + xx) % 2 * 2.0 - 1.0)[None, None])
    split = hf_decompose(FeatureMap(board))
    assert float(split.lf.data[..., 2:-2, 2:-2].abs().max()) == 0.0
    assert torch.equal(split.hf.data[..., 2:-2, 2:-2], board[..., 2:-2, 2:-2])


def test_blurpool_beats_strided_on_every_suite_signal():
    scores = shift_stability_scores()
    assert len(scores) == 32
    for name, d_blurpool, d_strided in scores:
        assert d_blurpool < d_strided, name


def test_zero_initialized_video_model_matches_image_model():
    for seed in range(10):
        cfg = ModelConfig(k=2, base_channels=8, feat_channels=8,
                          extract_blocks=1, prop_blocks=1, propagation=False)
        model = build_generator(cfg, seed=seed)
        g = torch.Generator().manual_seed(500 + seed)
        frames = torch.rand(3, 3, 16, 16, generator=g)
        noise = make_noise(cfg, 3, 16, 16, seed=seed)
        with torch.no_grad():
            full = model(frames, None, None, noise)
            per = torch.cat([
                model(frames[t : t + 1], None, None,
                      noise.frame_slice(t, t + 1))
                for t in range(frames.shape[0])
            ])
        assert float((full - per).abs().max()) < 1e-5


def test_backward_warp_matches_bruteforce_oracle():
    rng = np.random.default_rng(4)
    for _ in range(100):
        h = int(rng.integers(4, 10))
        w = int(rng.integers(4, 10))
        img = rng.random((h, w))
        flow = rng.uniform(-2.0, 2.0, size=(h, w, 2))
        ours = backward_warp(img, flow)
        assert np.max(np.abs(ours - oracle_bilinear_warp(img, flow))) < 1e-6

    # Integer flows interpolate nothing, so the warp is exact indexing.
    img = rng.random((8, 8))
    flow = rng.integers(-2, 3, size=(8, 8, 2)).astype(np.float64)
    assert np.array_equal(backward_warp(img, flow),
                          oracle_bilinear_warp(img, flow))


def test_degenerate_metric_cases_rank_as_designed():
    from vsrlab.videodata import VideoClip

    scene = {"pattern": "translating-texture", "velocity": [2, 1],
             "T": 5, "H": 32, "W": 32, "seed": 13}
    gt, _, _ = clip_from_scene_params(scene)
    est = ClassicalEstimator(levels=2)
    black = VideoClip(np.zeros_like(gt.frames))
    # A frozen black output is perfectly self-consistent yet wrong: zero
    # self-warp error but a positive referenced error.
    assert warping_error(black, est) == 0.0
    assert ref_warping_error(gt, black, est) > 0.0

    gt48, blur = blur_experiment_clips(size=48, t_len=6, blur_sigma=2.0)
    est1 = ClassicalEstimator(levels=1)
    assert warping_error(blur, est1) < warping_error(gt48, est1)
    assert (ref_warping_error(gt48, blur, est1)
            > ref_warping_error(gt48, gt48, est1))


def test_self_scored_rwe_equals_warping_error_bitwise():
    scene = {"pattern": "translating-texture", "velocity": [2, 0],
             "T": 4, "H": 32, "W": 32, "seed": 19}
    clip, _, _ = clip_from_scene_params(scene)
    estimators = (ExactEstimator(scene_from_params(scene)),
                  ClassicalEstimator(levels=2))
    for est in estimators:
        assert ref_warping_error(clip, clip, est) == warping_error(clip, est)


def test_loss_gradients_match_finite_differences():
    rng = np.random.default_rng(7)

    # Charbonnier at 100 scalar points away from the eps-smoothed origin.
    xs = rng.uniform(0.01, 2.0, 100) * rng.choice([-1.0, 1.0], 100)
    for x0 in xs:
        x = torch.tensor([x0], dtype=torch.float64, requires_grad=True)
        (grad,) = torch.autograd.grad(charbonnier(x, torch.zeros_like(x)), x)
        h = 1e-6
        fd = (math.sqrt((x0 + h) ** 2 + 1e-6)
              - math.sqrt((x0 - h) ** 2 + 1e-6)) / (2 * h)
        assert abs(float(grad) - fd) / abs(fd) < 1e-3

    # R1 penalty of a small MLP against a per-coordinate FD reconstruction
    # of the input gradient, at 100 random inputs.
    torch.manual_seed(70)
    mlp = torch.nn.Sequential(torch.nn.Linear(4, 8), torch.nn.Tanh(),
                              torch.nn.Linear(8, 1)).double()
    disc = lambda v: mlp(v).squeeze(-1)
    h = 1e-5
    for _ in range(100):
        x0 = torch.from_numpy(rng.standard_normal((1, 4))).double()
        pen = float(r1_penalty(disc, x0).detach())
        acc = 0.0
        with torch.no_grad():
            for i in range(4):
                xp, xm = x0.clone(), x0.clone()
                xp[0, i] += h
                xm[0, i] -= h
                g = (float(mlp(xp)) - float(mlp(xm))) / (2 * h)
                acc += g * g
        assert abs(acc - pen) / abs(pen) < 1e-3

    # Perceptual distance: autograd partials against central differences
    # at 100 random coordinates of a fixed image pair.
    x = torch.from_numpy(rng.random((1, 3, 8, 8))).double().requires_grad_(True)
    y = torch.from_numpy(rng.random((1, 3, 8, 8))).double()
    (grad,) = torch.autograd.grad(perceptual_distance(x, y), x)
    xd = x.detach()
    h = 1e-6
    for _ in range(100):
        c = int(rng.integers(3))
        i = int(rng.integers(8))
        j = int(rng.integers(8))
        xp, xm = xd.clone(), xd.clone()
        xp[0, c, i, j] += h
        xm[0, c, i, j] -= h
        with torch.no_grad():
            fd = float(perceptual_distance(xp, y)
                       - perceptual_distance(xm, y)) / (2 * h)
        assert abs(float(grad[0, c, i, j]) - fd) / max(abs(fd), 1e-9) < 1e-3


def test_chunked_inference_contracts():
    cfg = ModelConfig(k=2, base_channels=8, feat_channels=8, extract_blocks=1,
                      prop_blocks=1, temporal_chunk=3)
    model = build_generator(cfg, seed=0)
    t_len = 5
    g = torch.Generator().manual_seed(2)
    frames = torch.rand(t_len, 3, 8, 8, generator=g)
    flow = torch.zeros(t_len - 1, 8, 8, 2)
    noise = make_noise(cfg, t_len, 8, 8, seed=3)
    with torch.no_grad():
        feats = model.adapter(frames, flow, -flow).feats
        full = model.unet(feats, frames, noise)
        # A chunk at least as long as the clip is one window: bitwise equal.
        whole = chunked_inference(model, feats, frames, noise, chunk=t_len + 2)
        assert torch.equal(whole, full)
        # Each emitted chunk equals a direct call on that sub-clip.
        chunked = chunked_inference(model, feats, frames, noise)
        for t0 in range(0, t_len, cfg.temporal_chunk):
            t1 = min(t0 + cfg.temporal_chunk, t_len)
            direct = model.unet(feats[t0:t1], frames[t0:t1],
                                noise.frame_slice(t0, t1))
            assert torch.equal(chunked[t0:t1], direct)

    scene = {"pattern": "translating-texture", "velocity": [1, 0],
             "T": 3, "H": 8, "W": 8, "seed": 21}
    clip, _, _ = clip_from_scene_params(scene)
    est = ExactEstimator(scene_from_params(scene))
    out_a = upsample_video(model, clip, estimator=est, noise_seed=11)
    out_b = upsample_video(model, clip, estimator=est, noise_seed=11)
    assert np.array_equal(out_a.frames, out_b.frames)


def test_flo_roundtrip_and_resolved_config_constants(tmp_path):
    rng = np.random.default_rng(31)
    flow = rng.standard_normal((9, 7, 2)).astype(np.float32)
    path = tmp_path / "x.flo"
    write_flo(flow, path)
    assert np.array_equal(read_flo(path), flow)

    # Degradation constants, spelled out by the degrade command.
    from conftest import random_clip
    in_dir = tmp_path / "hr"
    write_frames(random_clip(2, 32, 32, 3), in_dir)
    assert run(["degrade", str(in_dir), str(tmp_path / "lr")]) == 0
    resolved = tomllib.loads(
        (tmp_path / "lr" / "resolved_config.toml").read_text())
    assert resolved["degrade"]["scale"] == 4
    assert resolved["degrade"]["sigma"] == 1.6
    assert resolved["degrade"]["bicubic_a"] == -0.5

    # Training constants, as the train command resolves them when unset.
    dump_resolved_config(tmp_path / "train.toml",
                         {"train": _train_constants(TrainConfig())})
    tr = tomllib.loads((tmp_path / "train.toml").read_text())["train"]
    assert tr["lr"] == 5.0e-5
    assert tr["beta1"] == 0.0 and tr["beta2"] == 0.99
    assert tr["crop"] == 64
    assert tr["frames_per_clip"] == 10
    assert tr["weight_gan"] == 0.05
    assert tr["weight_r1"] == 0.2048
    assert tr["weight_perceptual"] == 5.0
    assert tr["weight_charbonnier"] == 10.0
    assert tr["charbonnier_eps"] == 1.0e-3

    from vsrlab.cli import _model_constants
    dump_resolved_config(tmp_path / "model.toml",
                         {"model": _model_constants(ModelConfig())})
    md = tomllib.loads((tmp_path / "model.toml").read_text())["model"]
    assert md["lowpass_kernel"] == [1, 4, 6, 4, 1]
    assert md["lowpass_kernel_divisor"] == 16
    assert md["scale"] == 4


def test_toy_training_halves_charbonnier(fx, tmp_path):
    entry = fx("adversarial/toy_convergence")
    p = entry["params"]
    data = make_translating_dataset(**p["dataset"])
    e0, e1 = p["early_window"]
    l0, l1 = p["late_window"]
    ratios = []
    for seed in p["seeds"]:
        cfg = toy_model_config()
        tcfg = toy_train_config(p["iters"], seed=seed)
        gen = build_generator(cfg, seed=seed)
        torch.manual_seed(1000 + seed)
        disc = Discriminator(cfg)
        result = train(gen, disc, data, tcfg, str(tmp_path / f"seed{seed}"))
        char = [row["L_char"] for row in result.curves]
        ratios.append(float(np.mean(char[l0:l1]) / np.mean(char[e0:e1])))
    assert float(np.median(ratios)) <= p["ratio_bound"], ratios


def test_feature_additions_improve_their_target_metrics(fx, tmp_path):
    entry = fx("propagation/v1v2_rwe_ordering")
    p = entry["params"]
    train_set = make_translating_dataset(**p["train_set"])
    eval_set = make_translating_dataset(**p["eval_set"])
    variants = {v.id: v for v in ladder()}
    seeds = tuple(p["seeds"])
    results = {}
    for vid in ("V1-temporal", "V2-propagation", "V3-blurpool", "V4-hfshuttle"):
        res = run_variant(variants[vid], train_set, eval_set, seeds,
                          p["iters"], str(tmp_path))
        assert not res.failed, res.failure
        results[vid] = res
    # Flow-guided propagation targets temporal consistency; the HF shuttle
    # targets detail fidelity. Each must move its own metric.
    assert (results["V2-propagation"].median("e_ref_warp")
            < results["V1-temporal"].median("e_ref_warp"))
    assert (results["V4-hfshuttle"].median("perceptual")
            < results["V3-blurpool"].median("perceptual"))
