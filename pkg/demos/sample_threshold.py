"""Where the spectral start stops being informative.

TSPR needs its starting subspaces to carry some signal.  The per-frame
truncated spectral estimate correlates with the truth roughly like
sqrt(m / n) for small m, and below about m = 1.5n the HOSVD of the stacked
estimates is dominated by noise.  This sweep prints the start quality and the
final error for a few sampling ratios.  About a minute.
"""
import numpy as np

from tuckerpr import TsprConfig, relative_error, spectral_frames, tspr_run
from tuckerpr.harness import simulate, synth_tensor
from tuckerpr.tensor import tensor_to_frames

dims, ranks = (16, 16, 20), (4, 4, 3)
ratios = (0.5, 1.0, 2.0, 4.0)
seeds = range(3)

print(f"{'m/n':>5}{'corr(start)':>13}{'final rel. error (per seed)':>32}")
for ratio in ratios:
    corr, errs = [], []
    for seed in seeds:
        X = synth_tensor(dims, ranks, seed)
        ens = simulate(X, "complex-gaussian", seed, m_ratio=ratio)
        x0 = spectral_frames(ens)[0]
        truth = tensor_to_frames(X)
        c = np.abs(np.sum(x0.conj() * truth, axis=1))
        c /= np.linalg.norm(x0, axis=1) * np.linalg.norm(truth, axis=1)
        corr.append(c.mean())
        Xhat, _ = tspr_run(ens, dims, TsprConfig(ranks))
        errs.append(relative_error(Xhat, X))
    print(f"{ratio:>5}{np.mean(corr):>13.2f}{'  '.join(f'{e:.1e}' for e in errs):>32}")
