"""Tucker-structured phase retrieval (TSPR).

The image stack is modelled as ``X = G x1 D x2 E x3 F``.  Frame ``k`` is

    X_k = D G_k E^T,   G_k = sum_t F[k, t] G[:, :, t],

which is the matrix form of ``x_k = (f_k kron E kron D) vec(G)``.  After a
truncated spectral start and HOSVD, each outer iteration refreshes the rows of
``F`` with RWF on ``r3``-dimensional reduced problems, refreshes the
measurement phases, and then solves the phase-fixed least-squares problem for
``D``, ``E`` and ``G`` block by block with CGLS.  None of the Kronecker
operators is ever formed.
"""
from dataclasses import dataclass, field

import numpy as np

from .linop import CglsConfig, LinearMap, cgls
from .measurement import phase
from .pr import RwfConfig, SpectralInitConfig, rwf_batch, spectral_frames
from .tensor import TuckerFactors, frames_to_tensor, hosvd, matricize, unvec, vec


__all__ = [
    "TsprConfig",
    "TsprState",
    "NumericalAbort",
    "tspr_init",
    "core_slices",
    "frame_from_factors",
    "factor_frames",
    "effective_basis",
    "update_F",
    "update_phases_tspr",
    "d_operator",
    "e_operator",
    "g_operator",
    "update_D",
    "update_E",
    "update_G",
    "phase_objective",
    "rebalance",
    "tspr_run",
]


class NumericalAbort(RuntimeError):
    """Raised when an iterate or objective stops being finite."""


@dataclass(frozen=True)
class TsprConfig:
    """Settings for :func:`tspr_run`.

    ``order`` fixes the sequence of the block solves in each outer iteration.
    ``rebalance`` re-expresses the factors in an orthonormal gauge before the
    ``F`` update; the reconstructed tensor is unchanged but the reduced RWF
    problems are then well scaled for the default step.
    """

    ranks: tuple
    T: int = 20
    rwf: RwfConfig = field(default_factory=RwfConfig)
    cgls: CglsConfig = field(default_factory=CglsConfig)
    spectral: SpectralInitConfig = field(default_factory=SpectralInitConfig)
    order: tuple = ("D", "E", "G")
    rebalance: bool = True

    def __post_init__(self):
        if len(self.ranks) != 3 or min(self.ranks) < 1:
            raise ValueError("ranks must be three positive integers")
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if sorted(self.order) != ["D", "E", "G"]:
            raise ValueError("order must be a permutation of D, E, G")


@dataclass
class TsprState:
    factors: TuckerFactors
    phases: np.ndarray
    objective_trace: list = field(default_factory=list)


def _frames_matrix(xs):
    """``(q, n1, n2)`` stack to ``(q, n)`` rows of column-major vecs."""
    q = xs.shape[0]
    return xs.transpose(0, 2, 1).reshape(q, -1)


def _frames_stack(rows, n1, n2):
    return rows.reshape(rows.shape[0], n2, n1).transpose(0, 2, 1)


def tspr_init(ens, dims, ranks, cfg=None, frames=None):
    """Spectral start: per-frame estimates stacked into a tensor, then HOSVD.

    ``frames`` (shape ``(q, n)``) bypasses the spectral step, e.g. to start
    from known frames.
    """
    n1, n2, q = dims
    if n1 * n2 != ens.n or q != ens.q:
        raise ValueError(f"dims {dims} do not match ensemble n={ens.n}, q={ens.q}")
    if frames is None:
        frames, _ = spectral_frames(ens, cfg)
    return hosvd(frames_to_tensor(frames, n1, n2), ranks)


def core_slices(core, F):
    """``G_k = sum_t F[k, t] core[:, :, t]`` for all ``k``; shape ``(q, r1, r2)``."""
    return np.einsum("abt,kt->kab", core, F)


def factor_frames(f):
    """All frames ``vec(D G_k E^T)`` as a ``(q, n)`` array."""
    xs = f.D @ core_slices(f.core, f.F) @ f.E.T
    return _frames_matrix(xs)


def frame_from_factors(f, k):
    """Frame ``k`` (0-based) as a vector of length ``n1 n2``."""
    gk = np.tensordot(f.core, f.F[k], axes=(2, 0))
    return vec(f.D @ gk @ f.E.T)


def effective_basis(f):
    """``W = (E kron D) M_3(G)^T`` so that ``x_k = W f_k``; shape ``(n, r3)``.

    The reduced sampling vectors of frame ``k`` are ``W^H a_{i,k}``.
    """
    r3 = f.core.shape[2]
    cols = [vec(f.D @ f.core[:, :, t] @ f.E.T) for t in range(r3)]
    return np.stack(cols, axis=1)


def update_F(ens, f, rwf_cfg=None):
    """RWF refresh of every row ``f_k`` with the other factors fixed.

    The default step assumes ``W`` has roughly orthonormal columns, which
    :func:`rebalance` guarantees; far from that gauge RWF can diverge.
    """
    phis = ens.forward_columns(effective_basis(f))
    return rwf_batch(ens.y, phis, f.F, rwf_cfg)


def update_phases_tspr(ens, f):
    return phase(ens.forward(factor_frames(f)))


def _stacked(ens, n_in, to_frames, from_frames):
    """Stacked map ``v -> [A_k^H x_k(v)]_k`` from per-variable frame builders."""
    q, m = ens.q, ens.m

    def forward(v):
        return ens.forward(to_frames(v)).reshape(-1)

    def adjoint(z):
        return from_frames(ens.adjoint(z.reshape(q, m)))

    return LinearMap(n_in, q * m, forward, adjoint)


def d_operator(ens, f):
    """``vec(D) -> [A_k^H vec(D S_k)]_k`` with ``S_k = G_k E^T``."""
    n1, r1 = f.D.shape
    n2 = f.E.shape[0]
    S = core_slices(f.core, f.F) @ f.E.T
    S_h = S.conj()

    def to_frames(v):
        return _frames_matrix(unvec(v, (n1, r1)) @ S)

    def from_frames(p):
        P = _frames_stack(p, n1, n2)
        return vec(np.einsum("kij,kaj->ia", P, S_h))

    return _stacked(ens, n1 * r1, to_frames, from_frames)


def e_operator(ens, f):
    """``vec(E) -> [A_k^H vec((E V_k)^T)]_k`` with ``V_k = (D G_k)^T``."""
    n1 = f.D.shape[0]
    n2, r2 = f.E.shape
    V = (f.D @ core_slices(f.core, f.F)).transpose(0, 2, 1)
    V_h = V.conj()

    def to_frames(v):
        xs = (unvec(v, (n2, r2)) @ V).transpose(0, 2, 1)
        return _frames_matrix(xs)

    def from_frames(p):
        P = _frames_stack(p, n1, n2)
        return vec(np.einsum("kji,kaj->ia", P, V_h))

    return _stacked(ens, n2 * r2, to_frames, from_frames)


def g_operator(ens, f):
    """``vec(G) -> [A_k^H (f_k kron E kron D) vec(G)]_k``."""
    ranks = f.core.shape
    n1, n2 = f.D.shape[0], f.E.shape[0]
    D, E, F = f.D, f.E, f.F
    D_h, E_c, F_c = D.conj().T, E.conj(), F.conj()

    def to_frames(v):
        gk = core_slices(unvec(v, ranks), F)
        return _frames_matrix(D @ gk @ E.T)

    def from_frames(p):
        H = D_h @ _frames_stack(p, n1, n2) @ E_c
        return vec(np.einsum("kab,kt->abt", H, F_c))

    return _stacked(ens, int(np.prod(ranks)), to_frames, from_frames)


def _target(ens, phases):
    return (phases * ens.y).reshape(-1)


def update_D(ens, phases, f, cgls_cfg=None):
    x = cgls(d_operator(ens, f), _target(ens, phases), vec(f.D), cgls_cfg)
    return unvec(x, f.D.shape)


def update_E(ens, phases, f, cgls_cfg=None):
    x = cgls(e_operator(ens, f), _target(ens, phases), vec(f.E), cgls_cfg)
    return unvec(x, f.E.shape)


def update_G(ens, phases, f, cgls_cfg=None):
    x = cgls(g_operator(ens, f), _target(ens, phases), vec(f.core), cgls_cfg)
    return unvec(x, f.core.shape)


def phase_objective(ens, phases, frames):
    """``sum_k ||C_k y_k - A_k^H x_k||^2``."""
    r = phases * ens.y - ens.forward(frames)
    return float(np.vdot(r, r).real)


def rebalance(f):
    """Same tensor, orthonormal ``D``, ``E`` and orthonormal rows of ``M_3(G)``."""
    qd, rd = np.linalg.qr(f.D)
    qe, re = np.linalg.qr(f.E)
    core = np.einsum("ia,jb,abt->ijt", rd, re, f.core)
    r1, r2, r3 = core.shape
    qg, rg = np.linalg.qr(matricize(core, 3).T)
    core = unvec(qg, (r1, r2, r3))
    return TuckerFactors(core, qd, qe, f.F @ rg.T)


_UPDATES = {"D": update_D, "E": update_E, "G": update_G}


def tspr_run(ens, dims, cfg, init=None, callback=None):
    """Alternating minimization from the spectral start.

    Returns the reconstructed ``(n1, n2, q)`` tensor and the final
    :class:`TsprState`.  ``objective_trace[0]`` is the amplitude misfit of
    the start; entry ``t`` is the phase-fixed objective after outer
    iteration ``t``.
    """
    n1, n2, q = dims
    f = init.copy() if init is not None else tspr_init(
        ens, dims, cfg.ranks, cfg.spectral)
    phases = update_phases_tspr(ens, f)
    trace = [phase_objective(ens, phases, factor_frames(f))]
    for t in range(cfg.T):
        if cfg.rebalance:
            f = rebalance(f)
        f = TuckerFactors(f.core, f.D, f.E, update_F(ens, f, cfg.rwf))
        phases = update_phases_tspr(ens, f)
        for name in cfg.order:
            new = _UPDATES[name](ens, phases, f, cfg.cgls)
            if name == "D":
                f = TuckerFactors(f.core, new, f.E, f.F)
            elif name == "E":
                f = TuckerFactors(f.core, f.D, new, f.F)
            else:
                f = TuckerFactors(new, f.D, f.E, f.F)
        obj = phase_objective(ens, phases, factor_frames(f))
        if not np.isfinite(obj):
            raise NumericalAbort(f"non-finite objective at outer iteration {t + 1}")
        trace.append(obj)
        if callback is not None:
            callback(t + 1, f, obj)
    state = TsprState(f, phases, trace)
    return frames_to_tensor(factor_frames(f), n1, n2), state
