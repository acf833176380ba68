"""Single-signal phase retrieval building blocks.

Truncated spectral initialization, power iteration and Reshaped Wirtinger
Flow (RWF).  Sensing maps are :class:`~tuckerpr.linop.LinearMap` objects
computing ``x -> A^H x``; the same routines therefore serve full frames and
the small reduced problems that arise inside alternating minimization.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .measurement import Kind, frame_rng, phase


__all__ = [
    "SpectralInitConfig",
    "RwfConfig",
    "EigResult",
    "leading_eigvec",
    "truncation_mask",
    "twf_init_frame",
    "rwf",
    "rwf_gradient",
    "rwf_batch",
    "spectral_frames",
]

_POWER_STREAM = 7
_FRAME_INIT_STREAM = 11


@dataclass(frozen=True)
class SpectralInitConfig:
    """Truncated spectral initialization settings.

    ``lambda_convention='magnitude'`` uses ``lambda = sqrt(mean(y))`` on the
    magnitudes; ``'intensity'`` uses ``sqrt(mean(y**2))`` instead.
    """

    alpha: float = 3.0
    power_iters: int = 200
    power_tol: float = 1e-6
    lambda_convention: str = "magnitude"
    seed: int = 0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.power_iters < 1:
            raise ValueError("power_iters must be at least 1")
        if self.lambda_convention not in ("magnitude", "intensity"):
            raise ValueError(
                f"unknown lambda_convention {self.lambda_convention!r}")


@dataclass(frozen=True)
class RwfConfig:
    iters: int = 25
    step: float = 0.8

    def __post_init__(self):
        if self.iters < 0:
            raise ValueError("iters must be nonnegative")
        if not self.step > 0:
            raise ValueError("step must be positive")


class EigResult(NamedTuple):
    vector: np.ndarray
    value: float
    iterations: int
    degenerate: bool


def leading_eigvec(apply, dim, cfg=None, rng=None, real=False):
    """Leading eigenvector of a Hermitian PSD operator by power iteration.

    Stops once ``||Y z - (z^H Y z) z|| <= power_tol * (z^H Y z)`` or after
    ``cfg.power_iters`` iterations.  A zero operator yields the random start
    with ``degenerate=True``.  ``real=True`` draws a real start, which keeps
    the iterates real for a real symmetric operator.
    """
    cfg = cfg or SpectralInitConfig()
    rng = rng if rng is not None else frame_rng(cfg.seed, _POWER_STREAM)
    z = rng.standard_normal(dim).astype(complex)
    if not real:
        z += 1j * rng.standard_normal(dim)
    z /= np.linalg.norm(z)
    yz = apply(z)
    value = np.vdot(z, yz).real
    if not np.any(yz):
        return EigResult(z, 0.0, 0, True)
    for it in range(1, cfg.power_iters + 1):
        nrm = np.linalg.norm(yz)
        if nrm == 0:
            return EigResult(z, 0.0, it, True)
        z = yz / nrm
        yz = apply(z)
        value = np.vdot(z, yz).real
        if np.linalg.norm(yz - value * z) <= cfg.power_tol * value:
            break
    return EigResult(z, value, it, False)


def truncation_mask(y, alpha, convention="magnitude"):
    """Indicator ``y_i^2 <= alpha^2 lambda^2`` and the scale ``lambda``."""
    y = np.asarray(y, dtype=float)
    if convention == "magnitude":
        lam = np.sqrt(np.mean(y))
    else:
        lam = np.sqrt(np.mean(y ** 2))
    return y ** 2 <= alpha ** 2 * lam ** 2, lam


def twf_init_frame(y, op, a_norms_sq, cfg=None, rng=None, real=False):
    """Truncated spectral estimate of one signal from its magnitudes.

    Parameters
    ----------
    y : ndarray, shape (m,)
        Observed magnitudes.
    op : LinearMap
        Sensing map ``x -> A^H x``.
    a_norms_sq : float
        ``sum_i ||a_i||^2`` over the ``m`` sampling vectors.
    cfg : SpectralInitConfig, optional
    real : bool
        Real power-iteration start, for real sampling vectors.  The
        surrogate is then real symmetric and the estimate stays real.

    Returns
    -------
    x0 : ndarray, shape (op.in_dim,)
    degenerate : bool
        True when every measurement was truncated away or ``y`` is zero.
    """
    cfg = cfg or SpectralInitConfig()
    y = np.asarray(y, dtype=float)
    m, n = op.out_dim, op.in_dim
    keep, lam = truncation_mask(y, cfg.alpha, cfg.lambda_convention)
    weights = np.where(keep, y ** 2, 0.0)

    def apply(v):
        return op.adjoint(weights * op.forward(v))

    eig = leading_eigvec(apply, n, cfg, rng, real)
    scale = np.sqrt(m * n / a_norms_sq) * lam if a_norms_sq > 0 else 0.0
    return scale * eig.vector, eig.degenerate


def spectral_frames(ens, cfg=None):
    """Per-frame truncated spectral estimates, shape ``(q, n)``.

    Also returns the boolean array of degenerate frames.
    """
    cfg = cfg or SpectralInitConfig()
    norms = ens.row_norms_sq()
    real = ens.kind is Kind.REAL_GAUSSIAN
    out = np.empty((ens.q, ens.n), dtype=complex)
    flags = np.zeros(ens.q, dtype=bool)
    for k in range(ens.q):
        # distinct power-iteration start per frame
        rng = frame_rng(cfg.seed, _FRAME_INIT_STREAM, k)
        out[k], flags[k] = twf_init_frame(ens.y[k], ens.frame_op(k), norms[k],
                                          cfg, rng, real)
    return out, flags


def rwf(y, op, x0, cfg=None, callback=None):
    """Reshaped Wirtinger Flow, warm-started at ``x0``.

    Each iteration applies ``x <- x - (step / m) A (A^H x - y * phase(A^H x))``.
    """
    cfg = cfg or RwfConfig()
    y = np.asarray(y, dtype=float)
    if y.shape != (op.out_dim,):
        raise ValueError(f"y has shape {y.shape}, expected ({op.out_dim},)")
    x = np.array(x0, dtype=complex)
    if x.shape != (op.in_dim,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({op.in_dim},)")
    scale = cfg.step / op.out_dim
    for it in range(cfg.iters):
        z = op.forward(x)
        x = x - scale * op.adjoint(z - y * phase(z))
        if callback is not None:
            callback(it, x)
    return x


def rwf_gradient(y, op, x):
    """Reshaped gradient ``(1/m) A (A^H x - y * phase(A^H x))``."""
    z = op.forward(x)
    return op.adjoint(z - y * phase(z)) / op.out_dim


def rwf_batch(ys, phis, x0s, cfg=None):
    """RWF run independently on many small dense problems at once.

    ``phis[k]`` is the ``m x r`` matrix of problem ``k`` (so its sampling
    vectors are the conjugated rows), ``ys`` is ``(q, m)`` and ``x0s`` is
    ``(q, r)``.  Equivalent to calling :func:`rwf` with
    :func:`~tuckerpr.linop.dense_map` of each ``phis[k]``.
    """
    cfg = cfg or RwfConfig()
    phis = np.asarray(phis)
    ys = np.asarray(ys, dtype=float)
    x = np.array(x0s, dtype=complex)
    phis_h = np.conj(np.swapaxes(phis, 1, 2))
    scale = cfg.step / phis.shape[1]
    for _ in range(cfg.iters):
        z = np.matmul(phis, x[:, :, None])[:, :, 0]
        resid = z - ys * phase(z)
        x = x - scale * np.matmul(phis_h, resid[:, :, None])[:, :, 0]
    return x
