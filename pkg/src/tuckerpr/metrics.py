"""Phase-invariant error metrics, parameter counts and model correction."""
import warnings
from dataclasses import dataclass, field

import numpy as np

from .pr import RwfConfig, rwf
from .tensor import frames_to_tensor, tensor_to_frames


__all__ = [
    "ReconstructionReport",
    "frame_dist",
    "per_frame_dist",
    "mat_dist",
    "relative_error",
    "param_count",
    "tucker_params",
    "matrix_params",
    "model_correct",
]


def frame_dist(xhat, x):
    """``min_phi ||x - exp(j phi) xhat||`` in closed form.

    The optimal rotation makes ``exp(j phi) <xhat, x>`` real and positive, so
    ``dist^2 = ||x||^2 + ||xhat||^2 - 2 |<xhat, x>|``.
    """
    xhat = np.ravel(xhat)
    x = np.ravel(x)
    if xhat.shape != x.shape:
        raise ValueError(f"length mismatch: {xhat.size} != {x.size}")
    d2 = (np.vdot(x, x).real + np.vdot(xhat, xhat).real
          - 2 * np.abs(np.vdot(xhat, x)))
    return float(np.sqrt(max(d2, 0.0)))


def per_frame_dist(Xhat, X):
    """Per-frame distances for two ``(n1, n2, q)`` tensors."""
    Xhat, X = np.asarray(Xhat), np.asarray(X)
    if Xhat.shape != X.shape:
        raise ValueError(f"shape mismatch: {Xhat.shape} != {X.shape}")
    a, b = tensor_to_frames(Xhat), tensor_to_frames(X)
    return np.array([frame_dist(u, v) for u, v in zip(a, b)])


def mat_dist(Xhat, X):
    """Root of the summed squared per-frame distances."""
    return float(np.sqrt(np.sum(per_frame_dist(Xhat, X) ** 2)))


def relative_error(Xhat, X):
    return mat_dist(Xhat, X) / float(np.linalg.norm(X))


def tucker_params(n1, n2, q, r1, r2, r3):
    return r1 * r2 * r3 + n1 * r1 + n2 * r2 + q * r3


def matrix_params(n, q, r):
    return (n + q) * r


def param_count(model, *args):
    """Unknowns in a ``'tucker'`` (n1, n2, q, r1, r2, r3) or ``'matrix'`` (n, q, r) model."""
    if model == "tucker":
        return tucker_params(*args)
    if model == "matrix":
        return matrix_params(*args)
    raise ValueError(f"unknown model {model!r}")


@dataclass
class ReconstructionReport:
    mat_dist: float
    per_frame_dist: np.ndarray
    relative_error: float
    param_count: int
    wall_time: float = 0.0
    objective_trace: list = field(default_factory=list)
    status: str = "ok"

    @classmethod
    def compare(cls, Xhat, X, param_count, wall_time=0.0, objective_trace=()):
        d = per_frame_dist(Xhat, X)
        md = float(np.sqrt(np.sum(d ** 2)))
        return cls(md, d, md / float(np.linalg.norm(X)), int(param_count),
                   float(wall_time), list(objective_trace))


def model_correct(ens, Xhat, cfg=None):
    """Refine every frame of ``Xhat`` with RWF warm-started at that frame.

    Meant for the over-determined regime; a warning is emitted when
    ``m < n``.  Returns a new ``(n1, n2, q)`` tensor.
    """
    cfg = cfg or RwfConfig()
    if ens.m < ens.n:
        warnings.warn(
            f"model correction with m={ens.m} < n={ens.n} is unlikely to help",
            RuntimeWarning, stacklevel=2)
    n1, n2, _ = Xhat.shape
    frames = tensor_to_frames(Xhat)
    out = np.array([rwf(ens.y[k], ens.frame_op(k), frames[k], cfg)
                    for k in range(ens.q)])
    return frames_to_tensor(out, n1, n2)
