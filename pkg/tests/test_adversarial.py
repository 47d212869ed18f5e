"""Loss terms, gradients, discriminator, and the training loop."""

import csv
import math
from pathlib import Path

import numpy as np
import pytest
import torch
import torch.nn as nn

from vsrlab.ablation import make_translating_dataset, toy_model_config
from vsrlab.adversarial import (
    ClipSample,
    Discriminator,
    LossTerms,
    LossWeights,
    TrainConfig,
    charbonnier,
    gan_losses,
    perceptual_distance,
    perceptual_distance_frames,
    r1_penalty,
    total_loss,
    train,
)
from vsrlab.errors import ConfigError, DataError, NumericalAbort
from vsrlab.generator import build_generator, load_checkpoint


def test_charbonnier_unit_diff_fixture(fx):
    entry = fx("adversarial/charbonnier_unit_diff")
    eps = entry["params"]["eps"]
    x = torch.ones(3, 4, dtype=torch.float64)
    y = torch.zeros(3, 4, dtype=torch.float64)
    assert abs(float(charbonnier(x, y, eps=eps)) - entry["value"]) < 1e-15
    # Equal inputs floor the loss at eps, not zero.
    assert abs(float(charbonnier(y, y, eps=eps)) - eps) < 1e-15
    with pytest.raises(DataError):
        charbonnier(x, torch.zeros(3, 5, dtype=torch.float64))


def test_charbonnier_grad_fd_fixture(fx):
    entry = fx("adversarial/charbonnier_grad_fd")
    p = entry["params"]
    rng = np.random.default_rng(p["seed"])
    xs = rng.uniform(0.01, 2.0, size=p["n_points"]) * rng.choice([-1.0, 1.0], size=p["n_points"])
    eps, h = p["eps"], p["h"]
    worst = 0.0
    for x0 in xs:
        x = torch.tensor([x0], dtype=torch.float64, requires_grad=True)
        loss = charbonnier(x, torch.zeros_like(x), eps=eps)
        (grad,) = torch.autograd.grad(loss, x)
        fd = (math.sqrt((x0 + h) ** 2 + eps * eps)
              - math.sqrt((x0 - h) ** 2 + eps * eps)) / (2 * h)
        worst = max(worst, abs(float(grad) - fd) / abs(fd))
    assert worst < p["bound"]


def test_gan_loss_ln2_fixture(fx):
    entry = fx("adversarial/gan_loss_ln2")
    zeros = torch.zeros(4, dtype=torch.float64)
    loss_g, loss_d = gan_losses(zeros, zeros)
    assert abs(float(loss_g) - entry["value"]) < 1e-12
    assert abs(float(loss_d) - 2 * entry["value"]) < 1e-12


def test_gan_loss_directions():
    big = torch.full((3,), 20.0, dtype=torch.float64)
    # A confident, correct critic drives its own loss toward zero and the
    # generator's loss up; a fooled critic does the reverse.
    loss_g_fooled, loss_d_fooled = gan_losses(-big, big)
    loss_g_beaten, loss_d_beaten = gan_losses(big, -big)
    assert float(loss_d_beaten) < 1e-6
    assert float(loss_g_beaten) > 10.0
    assert float(loss_g_fooled) < 1e-6
    assert float(loss_d_fooled) > 10.0


def test_r1_linear_disc_fixture(fx):
    entry = fx("adversarial/r1_linear_disc")
    p = entry["params"]
    w = np.random.default_rng(p["weight_seed"]).standard_normal(p["dim"]) * 0.3
    lin = nn.Linear(p["dim"], 1, bias=False).double()
    with torch.no_grad():
        lin.weight[:] = torch.from_numpy(w[None])
    x = torch.from_numpy(
        np.random.default_rng(p["input_seed"]).standard_normal((3, p["dim"]))
    ).double()
    pen = float(r1_penalty(lambda v: lin(v).squeeze(-1), x).detach())
    assert abs(pen - entry["value"]) < 1e-12
    assert abs(pen - float(np.dot(w, w))) < 1e-12


def test_r1_grad_fd_fixture(fx):
    entry = fx("adversarial/r1_grad_fd")
    p = entry["params"]
    torch.manual_seed(p["torch_seed"])
    mlp = nn.Sequential(nn.Linear(6, 8), nn.Tanh(), nn.Linear(8, 1)).double()
    x0 = torch.from_numpy(
        np.random.default_rng(p["input_seed"]).standard_normal((2, 6))
    ).double()
    pen = float(r1_penalty(lambda v: mlp(v).squeeze(-1), x0).detach())
    assert abs(pen - entry["value"]["measured_penalty"]) < 1e-6
    h = p["h"]
    fd_total = 0.0
    with torch.no_grad():
        for b in range(x0.shape[0]):
            acc = 0.0
            for i in range(x0.shape[1]):
                xp, xm = x0.clone(), x0.clone()
                xp[b, i] += h
                xm[b, i] -= h
                g = (float(mlp(xp[b : b + 1])) - float(mlp(xm[b : b + 1]))) / (2 * h)
                acc += g * g
            fd_total += acc
    fd_pen = fd_total / x0.shape[0]
    assert abs(fd_pen - pen) / abs(pen) < p["bound"]


def test_perceptual_identity_and_symmetry():
    rng = np.random.default_rng(9)
    a = torch.from_numpy(rng.random((2, 3, 12, 12))).double()
    b = torch.from_numpy(rng.random((2, 3, 12, 12))).double()
    assert float(perceptual_distance(a, a)) == 0.0
    assert abs(float(perceptual_distance(a, b)) - float(perceptual_distance(b, a))) < 1e-14
    with pytest.raises(ConfigError):
        perceptual_distance(a, b, backend="vgg")
    with pytest.raises(DataError):
        perceptual_distance(a, b[:1])
    with pytest.raises(DataError):
        perceptual_distance(a[:, :1], b[:, :1])


def test_perceptual_noise_monotone_fixture(fx):
    entry = fx("adversarial/perceptual_noise_monotone")
    p = entry["params"]
    base = np.random.default_rng(p["image_seed"]).random(tuple(p["shape"]))
    noise = np.random.default_rng(p["noise_seed"]).standard_normal(base.shape)
    dists = [perceptual_distance_frames(base, base + s * noise) for s in p["sigmas"]]
    assert np.allclose(dists, entry["value"]["measured"], rtol=1e-6)
    assert all(b > a for a, b in zip(dists, dists[1:]))


def test_total_loss_linearity_fixture(fx):
    entry = fx("adversarial/total_loss_linearity")
    p = entry["params"]
    torch.manual_seed(p["seed"])
    theta = torch.randn(10, dtype=torch.float64, requires_grad=True)
    mats = [torch.randn(10, 10, dtype=torch.float64) for _ in range(4)]
    fs = [((m @ theta) ** 2).mean() for m in mats]
    terms = LossTerms(gan=fs[0], r1=fs[1], perceptual=fs[2], charbonnier=fs[3])
    weights = LossWeights()
    total = total_loss(terms, weights)
    (g_total,) = torch.autograd.grad(total, theta, retain_graph=True)
    expected = torch.zeros_like(theta)
    for w_i, f_i in zip((weights.gan, weights.r1, weights.perceptual,
                         weights.charbonnier), fs):
        (g_i,) = torch.autograd.grad(f_i, theta, retain_graph=True)
        expected = expected + w_i * g_i
    rel = float((g_total - expected).abs().max() / expected.abs().max())
    assert rel < p["bound"]


def test_default_hyperparameters_match_recipe():
    cfg = TrainConfig()
    assert cfg.lr == 5.0e-5
    assert (cfg.beta1, cfg.beta2) == (0.0, 0.99)
    assert cfg.frames_per_clip == 10
    assert cfg.crop == 64
    assert cfg.charbonnier_eps == 1.0e-3
    w = LossWeights()
    assert (w.gan, w.r1, w.perceptual, w.charbonnier) == (0.05, 0.2048, 5.0, 10.0)


def test_train_config_validation():
    with pytest.raises(ConfigError):
        TrainConfig(iters=0)
    with pytest.raises(ConfigError):
        TrainConfig(crop=12)
    with pytest.raises(ConfigError):
        TrainConfig(lr=-1.0)


def test_discriminator_scores_one_logit_per_clip():
    cfg = toy_model_config()
    torch.manual_seed(0)
    disc = Discriminator(cfg)
    clips = torch.rand(2, 3, 3, 32, 32)
    out = disc(clips)
    assert out.shape == (2,)
    with pytest.raises(DataError):
        disc(torch.rand(2, 3, 32, 32))


def test_clip_sample_validation():
    lr = np.zeros((3, 8, 8, 3))
    hr = np.zeros((3, 32, 32, 3))
    flow = np.zeros((2, 8, 8, 2))
    sample = ClipSample(lr=lr, hr=hr, flow_fwd=flow, flow_bwd=flow)
    assert sample.scale == 4
    with pytest.raises(DataError):
        ClipSample(lr=lr, hr=np.zeros((3, 30, 30, 3)), flow_fwd=flow, flow_bwd=flow)
    with pytest.raises(DataError):
        ClipSample(lr=lr, hr=hr, flow_fwd=np.zeros((1, 8, 8, 2)), flow_bwd=flow)


def test_discriminator_clip_score_is_mean_frame_score_at_init():
    # The temporal mixer starts zeroed, so a fresh critic scores a clip
    # exactly like the average of its frames scored one at a time.
    torch.manual_seed(52)
    disc = Discriminator(toy_model_config())
    clip = torch.rand(2, 4, 3, 16, 16)
    whole = disc(clip)
    per_frame = torch.stack(
        [disc(clip[:, t:t + 1]) for t in range(clip.shape[1])]).mean(dim=0)
    assert torch.max(torch.abs(whole - per_frame)).item() < 1e-5


def _tiny_training_setup(seed: int = 0):
    dataset = make_translating_dataset(n_clips=2, t_len=4, lr_size=8, scale=4,
                                       seed=11)
    cfg = toy_model_config(extract_blocks=1, prop_blocks=1)
    gen = build_generator(cfg, seed=seed)
    torch.manual_seed(1000 + seed)
    disc = Discriminator(cfg)
    return dataset, cfg, gen, disc


def test_train_smoke_writes_logs_and_checkpoint(tmp_path):
    dataset, _, gen, disc = _tiny_training_setup()
    tcfg = TrainConfig(iters=2, seed=0, crop=8, frames_per_clip=3, batch=1,
                       checkpoint_every=2)
    result = train(gen, disc, dataset, tcfg, str(tmp_path / "run"))
    assert Path(result.checkpoint_path).is_file()
    rows = list(csv.reader(open(result.loss_csv_path)))
    assert rows[0] == ["iter", "L_GAN", "L_R1", "L_perc", "L_char", "total"]
    assert len(rows) == 1 + 2
    assert result.iters_run == 2
    assert all(np.isfinite(float(v)) for v in rows[1][1:])


def test_resume_bitwise_fixture(fx, tmp_path):
    entry = fx("adversarial/resume_bitwise")
    p = entry["params"]
    iters, every, seed = p["iters"], p["checkpoint_every"], p["seed"]

    dataset, _, gen_a, disc_a = _tiny_training_setup(seed)
    tcfg_full = TrainConfig(iters=iters, seed=seed, crop=8, frames_per_clip=3,
                            batch=1, checkpoint_every=every)
    full = train(gen_a, disc_a, dataset, tcfg_full, str(tmp_path / "full"))

    dataset_b, _, gen_b, disc_b = _tiny_training_setup(seed)
    tcfg_head = TrainConfig(iters=every, seed=seed, crop=8, frames_per_clip=3,
                            batch=1, checkpoint_every=every)
    head = train(gen_b, disc_b, dataset_b, tcfg_head, str(tmp_path / "head"))

    dataset_c, _, gen_c, disc_c = _tiny_training_setup(seed)
    resumed = train(gen_c, disc_c, dataset_c, tcfg_full, str(tmp_path / "tail"),
                    resume_from=head.checkpoint_path)
    assert resumed.iters_run == iters - every

    # The resumed run replays iterations every+1..iters bit for bit.
    full_rows = full.curves[every:]
    tail_rows = resumed.curves
    assert len(full_rows) == len(tail_rows)
    for ra, rb in zip(full_rows, tail_rows):
        assert ra == rb
    sd_a = load_checkpoint(full.checkpoint_path)[0].state_dict()
    sd_c = load_checkpoint(resumed.checkpoint_path)[0].state_dict()
    for key in sd_a:
        assert torch.equal(sd_a[key], sd_c[key]), key


def test_train_aborts_on_nonfinite_with_dump(tmp_path):
    dataset, _, gen, disc = _tiny_training_setup()
    poisoned = ClipSample(
        lr=dataset[0].lr.copy(), hr=dataset[0].hr.copy(),
        flow_fwd=dataset[0].flow_fwd.copy(), flow_bwd=dataset[0].flow_bwd.copy(),
    )
    poisoned.lr[:, 0, 0, 0] = np.nan
    tcfg = TrainConfig(iters=3, seed=0, crop=8, frames_per_clip=3, batch=1,
                       checkpoint_every=3)
    with pytest.raises(NumericalAbort) as err:
        train(gen, disc, [poisoned], tcfg, str(tmp_path / "bad"))
    assert err.value.dump_path is not None
    assert Path(err.value.dump_path).is_file()


def test_train_rejects_empty_dataset(tmp_path):
    _, _, gen, disc = _tiny_training_setup()
    with pytest.raises(DataError):
        train(gen, disc, [], TrainConfig(iters=1, crop=8), str(tmp_path / "x"))
