"""Train a tiny generator for a few iterations and score its output.

Runs the full adversarial loop (non-saturating GAN + R1 + perceptual +
Charbonnier) on synthetic 8 -> 32 px translating clips, then upsamples a
held-out clip and prints the metric report. Finishes in seconds; the point
is the plumbing, not the picture quality.
"""

import tempfile

import numpy as np
import torch

from vsrlab.ablation import (
    make_translating_dataset,
    toy_model_config,
    toy_train_config,
)
from vsrlab.adversarial import Discriminator, gan_losses, train
from vsrlab.flowops import ClassicalEstimator
from vsrlab.generator import build_generator, upsample_video
from vsrlab.metrics import evaluate
from vsrlab.videodata import VideoClip

ITERS = 20


def main():
    torch.set_num_threads(1)

    zeros = torch.zeros(1, dtype=torch.float64)
    loss_g, loss_d = gan_losses(zeros, zeros)
    print("coin-flip critic reference: "
          f"generator loss softplus(0) = {float(loss_g):.16f} (= ln 2), "
          f"critic loss = {float(loss_d):.16f}")
    print()

    data = make_translating_dataset(n_clips=2, t_len=6, lr_size=8, scale=4,
                                    seed=0)
    cfg = toy_model_config(extract_blocks=1, prop_blocks=1)
    gen = build_generator(cfg, seed=0)
    torch.manual_seed(1000)
    disc = Discriminator(cfg)

    with tempfile.TemporaryDirectory() as tmp:
        result = train(gen, disc, data, toy_train_config(ITERS, seed=0), tmp)
        print(f"trained {result.iters_run} iterations")
        for row in result.curves[:: max(1, ITERS // 5)]:
            print(f"  iter {row['iter']:>3}: charbonnier {row['L_char']:.4f} "
                  f"perceptual {row['L_perc']:.4f} gan {row['L_GAN']:.4f}")

    held_out = make_translating_dataset(n_clips=1, t_len=6, lr_size=8,
                                        scale=4, seed=9)[0]
    lr_clip = VideoClip(np.clip(held_out.lr, 0.0, 1.0))
    out = upsample_video(gen, lr_clip, estimator=ClassicalEstimator(levels=0),
                         noise_seed=0)
    report = evaluate(out, VideoClip(np.clip(held_out.hr, 0.0, 1.0)),
                      ClassicalEstimator(levels=2), clip_id="held-out")
    print()
    print(report.to_json())


if __name__ == "__main__":
    main()
