"""Recovering a Tucker-structured image stack from coded diffraction patterns.

Run with ``python3 demos/tspr_on_cdp.py``.  Takes a few seconds.
"""
import numpy as np

from tuckerpr import (RwfConfig, TsprConfig, gen_cdp, model_correct, observe, per_frame_dist,
                      relative_error, tensor_to_frames, tspr_init, tspr_run)
from tuckerpr.harness import synth_tensor

dims, ranks = (16, 16, 20), (4, 4, 3)
n = dims[0] * dims[1]

# A 16x16 video with 20 frames whose tensor has multilinear rank (4, 4, 3).
# Each frame has roughly unit energy: ||X||_F = sqrt(q).
X = synth_tensor(dims, ranks, seed=3)
print("truth", X.shape, "norm", round(float(np.linalg.norm(X)), 3))

# Two random quaternary masks per frame followed by an FFT: m = 2n magnitudes.
ens = gen_cdp(n, L=2, q=dims[2], seed=3)
ens = ens.with_observations(observe(ens, tensor_to_frames(X)))
print("measurements per frame", ens.m, "=", ens.m // n, "x n")

# The start: a truncated spectral estimate per frame, stacked and compressed by HOSVD.
# Each frame is only known up to its own global phase, so the start looks poor.
init = tspr_init(ens, dims, ranks)
print("relative error of the start", f"{relative_error(init.reconstruct(), X):.3f}")

# Alternate: rows of F by reduced RWF, phases, then D, E and the core by CGLS.
def report(t, f, obj):
    if t % 5 == 0:
        err = relative_error(f.reconstruct(), X)
        print(f"  outer {t:2d}  objective {obj:.3e}  rel. error {err:.2e}")

Xhat, state = tspr_run(ens, dims, TsprConfig(ranks, T=20), init=init, callback=report)

# Per-frame polishing with plain RWF. It only pays off once m >= n.
Xfix = model_correct(ens, Xhat, RwfConfig(iters=25))
before, after = per_frame_dist(Xhat, X), per_frame_dist(Xfix, X)
print("after TSPR       ", f"{relative_error(Xhat, X):.2e}")
print("after correction ", f"{relative_error(Xfix, X):.2e}",
      f"({np.sum(after < before)}/{dims[2]} frames improved)")
