"""Unstructured low-rank phase retrieval baselines: AltMinLowRaP and AltMinTrunc.

Frames are modelled as ``x_k = U b_k`` with ``U`` of shape ``n x r`` and the
coefficient vectors ``b_k`` stored as the rows of ``B`` (``q x r``), so the
``n x q`` frame matrix is ``U B^T``.
"""
from dataclasses import dataclass, field

import numpy as np

from .linop import CglsConfig, LinearMap, cgls, dense_map
from .measurement import frame_rng, phase
from .pr import RwfConfig, SpectralInitConfig, rwf_batch, spectral_frames, \
    twf_init_frame
from .tensor import unvec, vec


__all__ = [
    "AltMinConfig",
    "LowRankFactors",
    "DegenerateInit",
    "surrogate_weights",
    "init_U",
    "reduced_matrices",
    "init_B",
    "update_B",
    "update_phases",
    "u_operator",
    "update_U",
    "objective",
    "altmin_lowrap",
    "altmin_trunc",
]

_SUBSPACE_STREAM = 21


class DegenerateInit(RuntimeError):
    """Every measurement was discarded by the truncation rule."""


@dataclass(frozen=True)
class AltMinConfig:
    """Settings shared by both baselines.

    ``reorthonormalize`` re-applies a QR step to ``U`` after every
    least-squares update (off by default: the update is a plain LS step).
    """

    rank: int
    T: int = 20
    rwf: RwfConfig = field(default_factory=RwfConfig)
    cgls: CglsConfig = field(default_factory=CglsConfig)
    spectral: SpectralInitConfig = field(default_factory=SpectralInitConfig)
    subspace_tol: float = 1e-6
    reorthonormalize: bool = False

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be positive")
        if self.T < 0:
            raise ValueError("T must be nonnegative")


@dataclass
class LowRankFactors:
    U: np.ndarray
    B: np.ndarray

    def frames(self):
        """``(q, n)`` array whose row ``k`` is ``x_k = U b_k``."""
        return self.B @ self.U.T

    def matrix(self):
        return self.U @ self.B.T


def surrogate_weights(y, alpha):
    """``y^2`` masked by ``y^2 <= (alpha^2 / mq) sum y^2``, pooled over frames."""
    y = np.asarray(y, dtype=float)
    y2 = y ** 2
    keep = y2 <= alpha ** 2 * np.mean(y2)
    return np.where(keep, y2, 0.0)


def init_U(ens, r, cfg=None, max_iters=None, tol=1e-6):
    """Top-``r`` eigenvectors of the pooled truncated surrogate matrix.

    The surrogate ``(1/mq) sum_{i,k} w_{i,k} a_{i,k} a_{i,k}^H`` is applied
    matrix-free inside an orthogonal iteration started from a seeded random
    basis.
    """
    cfg = cfg or SpectralInitConfig()
    if not 1 <= r <= min(ens.n, ens.q):
        raise ValueError(f"rank {r} must lie in [1, min(n, q)]")
    w = surrogate_weights(ens.y, cfg.alpha)
    if not np.any(w):
        raise DegenerateInit("all measurements truncated away")
    scale = 1.0 / (ens.m * ens.q)

    def apply(V):
        z = ens.forward_columns(V) * w[:, :, None]
        return scale * ens.adjoint_columns(z).sum(axis=0)

    rng = frame_rng(cfg.seed, _SUBSPACE_STREAM)
    V = rng.standard_normal((ens.n, r)) + 1j * rng.standard_normal((ens.n, r))
    V, _ = np.linalg.qr(V)
    for _ in range(max_iters or cfg.power_iters):
        V_next, _ = np.linalg.qr(apply(V))
        # sin of the largest principal angle between successive bases
        gap = np.linalg.norm(V_next - V @ (V.conj().T @ V_next), 2)
        V = V_next
        if gap <= tol:
            break
    return V


def reduced_matrices(ens, U):
    """``A_k^H U`` for every frame, shape ``(q, m, r)``."""
    return ens.forward_columns(U)


def init_B(ens, U, cfg=None):
    """Spectral estimate of each ``b_k`` from its ``r``-dimensional problem."""
    cfg = cfg or SpectralInitConfig()
    phis = reduced_matrices(ens, U)
    r = U.shape[1]
    B = np.empty((ens.q, r), dtype=complex)
    for k in range(ens.q):
        rng = frame_rng(cfg.seed, _SUBSPACE_STREAM, k)
        norms = float(np.sum(np.abs(phis[k]) ** 2))
        B[k], _ = twf_init_frame(ens.y[k], dense_map(phis[k]), norms, cfg, rng)
    return B


def update_B(ens, U, B_prev, rwf_cfg=None):
    """RWF on each reduced problem ``y_k = |(U^H a_{i,k})^H b_k|``."""
    return rwf_batch(ens.y, reduced_matrices(ens, U), B_prev, rwf_cfg)


def update_phases(ens, frames):
    """``C_k = phase(A_k^H x_k)`` for all frames, shape ``(q, m)``."""
    return phase(ens.forward(frames))


def u_operator(ens, B):
    """Stacked map ``vec(U) -> [A_k^H U b_k]_k``."""
    n, r = ens.n, B.shape[1]
    B_c = B.conj()

    def forward(v):
        return ens.forward(B @ unvec(v, (n, r)).T).reshape(-1)

    def adjoint(z):
        P = ens.adjoint(z.reshape(ens.q, ens.m))
        return vec(P.T @ B_c)

    return LinearMap(n * r, ens.q * ens.m, forward, adjoint)


def update_U(ens, phases, B, U_prev, cgls_cfg=None):
    b = (phases * ens.y).reshape(-1)
    x = cgls(u_operator(ens, B), b, vec(U_prev), cgls_cfg)
    return unvec(x, U_prev.shape)


def objective(ens, phases, frames):
    """``sum_k ||C_k y_k - A_k^H x_k||^2``."""
    r = phases * ens.y - ens.forward(frames)
    return float(np.vdot(r, r).real)


def _alternate(ens, fac, cfg):
    trace = [objective(ens, update_phases(ens, fac.frames()), fac.frames())]
    U, B = fac.U, fac.B
    for _ in range(cfg.T):
        B = update_B(ens, U, B, cfg.rwf)
        phases = update_phases(ens, B @ U.T)
        U = update_U(ens, phases, B, U, cfg.cgls)
        if cfg.reorthonormalize:
            U, R = np.linalg.qr(U)
            B = B @ R.T
        trace.append(objective(ens, phases, B @ U.T))
    return LowRankFactors(U, B), trace


def altmin_lowrap(ens, cfg):
    """AltMinLowRaP: pooled spectral ``U``, reduced spectral ``B``, then alternate.

    Returns the ``n x q`` estimate, the final factors and the objective trace
    (entry 0 is the misfit of the start).
    """
    U = init_U(ens, cfg.rank, cfg.spectral, tol=cfg.subspace_tol)
    B = init_B(ens, U, cfg.spectral)
    fac, trace = _alternate(ens, LowRankFactors(U, B), cfg)
    return fac.matrix(), fac, trace


def altmin_trunc(ens, cfg):
    """AltMinTrunc: truncated SVD of per-frame spectral estimates, then alternate."""
    X0 = spectral_frames(ens, cfg.spectral)[0].T
    U = np.linalg.svd(X0, full_matrices=False)[0][:, :cfg.rank]
    B = (U.conj().T @ X0).T
    fac, trace = _alternate(ens, LowRankFactors(U, B), cfg)
    return fac.matrix(), fac, trace
