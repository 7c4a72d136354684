"""A layer GAN asked to reproduce one fixed tile.

Trains on copies of a 16x16 star adjacency and reports how far thresholded
samples land from it. Pass a smaller iteration count as the first argument
for a quick look (the default 1000 takes a couple of minutes).
"""
import sys

import numpy as np

from gti.layer_gan import GanConfig, binarize, train_layer_gan

iters = int(sys.argv[1]) if len(sys.argv) > 1 else 1000
k = 16
star = np.zeros((k, k), dtype=np.uint8)
star[0, 1:] = star[1:, 0] = 1

model = train_layer_gan(np.repeat(star[None], 32, axis=0), GanConfig(iters=iters))
print(f"after {iters} iterations: d_loss={model.d_loss[-1]:.3f} g_loss={model.g_loss[-1]:.3f}")

draws = binarize(model.sample(16, np.random.default_rng(0)))
hamming = [(d != star).mean() for d in draws]
print("Hamming distance per draw:", " ".join(f"{h:.3f}" for h in hamming))
print(f"{sum(h <= 0.02 for h in hamming)}/16 draws within 2%")
best = draws[int(np.argmin(hamming))]
for row in best:
    print("  " + "".join(".#"[int(v)] for v in row))
