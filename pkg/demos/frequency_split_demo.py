"""Show the binomial low-pass/high-pass split on a checkerboard.

The separable [1, 4, 6, 4, 1] / 16 filter has a zero at the folding
frequency, so a perfect checkerboard (the strongest possible aliasing
pattern) lands entirely in the high-frequency residual: the low-pass half
is exactly zero away from the border.
"""

import numpy as np
import torch

from vsrlab.antialias import FeatureMap, hf_decompose, lowpass_kernel_1d


def main():
    taps = lowpass_kernel_1d()
    print("1D kernel taps:", ", ".join(f"{t:.6f}" for t in taps))
    print()

    print("5x5 impulse response (outer product of the taps):")
    table = np.outer(taps, taps)
    for row in table:
        print("  " + "  ".join(f"{v:.8f}" for v in row))
    print()

    yy, xx = np.mgrid[0:12, 0:12]
    board = ((yy + xx) % 2 * 2.0 - 1.0)[None, None]
    split = hf_decompose(FeatureMap(torch.from_numpy(board)))
    lf = split.lf.data[0, 0].numpy()
    hf = split.hf.data[0, 0].numpy()
    print("checkerboard input, interior (border 2 excluded):")
    print(f"  max |low-pass|      = {np.abs(lf[2:-2, 2:-2]).max():.1f}")
    print(f"  max |hf - input|    = {np.abs((hf - board[0, 0])[2:-2, 2:-2]).max():.1f}")
    recon = lf + hf
    print(f"  max |lf + hf - input| anywhere = {np.abs(recon - board[0, 0]).max():.1e}")


if __name__ == "__main__":
    main()
