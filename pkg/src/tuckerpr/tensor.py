"""Dense 3-way tensor helpers: unfoldings, Kronecker identities, Tucker model.

Every vectorization in this package is column-major (Fortran order).  A frame
``X[:, :, k]`` of shape ``(n1, n2)`` maps to ``x_k = vec(X_k)`` of length
``n1 * n2`` with the row index running fastest.  Unfoldings follow the
convention in which

    X_(1) = D G_(1) (F kron E)^T
    X_(2) = E G_(2) (F kron D)^T
    X_(3) = F G_(3) (E kron D)^T

hold for ``X = G x1 D x2 E x3 F``.  Plain transposes are used throughout; over
the complex field these are the identities that are actually true.
"""
from dataclasses import dataclass

import numpy as np


__all__ = [
    "TuckerFactors",
    "vec",
    "unvec",
    "matricize",
    "fold",
    "kron",
    "vec_axb",
    "mode_product",
    "tucker_reconstruct",
    "hosvd",
    "tensor_to_frames",
    "frames_to_tensor",
]


def vec(a):
    """Column-major vectorization."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(x, shape):
    return np.asarray(x).reshape(shape, order="F")


def _check_mode(mode):
    if mode not in (1, 2, 3):
        raise ValueError(f"mode must be 1, 2 or 3, got {mode!r}")


def tensor_to_frames(t):
    """``(n1, n2, q)`` tensor to a ``(q, n1 n2)`` array whose row ``k`` is ``vec(X_k)``."""
    t = np.asarray(t)
    return t.reshape(-1, t.shape[2], order="F").T


def frames_to_tensor(frames, n1, n2):
    frames = np.asarray(frames)
    return frames.T.reshape(n1, n2, frames.shape[0], order="F")


def matricize(t, mode):
    """Mode-``mode`` unfolding of a 3-way array (modes are 1-based).

    Mode 1 gives ``n1 x (n2 q)``, mode 2 gives ``n2 x (n1 q)`` and mode 3
    gives ``q x (n1 n2)``.  Column order keeps the lower remaining mode
    fastest.
    """
    _check_mode(mode)
    t = np.asarray(t)
    if t.ndim != 3:
        raise ValueError(f"expected a 3-way array, got ndim={t.ndim}")
    moved = np.moveaxis(t, mode - 1, 0)
    return moved.reshape(t.shape[mode - 1], -1, order="F")


def fold(mat, mode, shape):
    """Inverse of :func:`matricize`."""
    _check_mode(mode)
    shape = tuple(shape)
    ax = mode - 1
    moved_shape = (shape[ax],) + tuple(s for i, s in enumerate(shape) if i != ax)
    mat = np.asarray(mat)
    if mat.size != np.prod(shape):
        raise ValueError(f"cannot fold {mat.shape} into {shape}")
    return np.moveaxis(mat.reshape(moved_shape, order="F"), 0, ax)


def kron(a, b):
    return np.kron(np.atleast_2d(a), np.atleast_2d(b))


def vec_axb(a, x, b):
    """Return ``vec(A X B)``; equals ``(B^T kron A) vec(X)``."""
    a, x, b = (np.atleast_2d(np.asarray(m)) for m in (a, x, b))
    if a.shape[1] != x.shape[0] or x.shape[1] != b.shape[0]:
        raise ValueError(
            f"non-conformable shapes {a.shape}, {x.shape}, {b.shape}")
    return vec(a @ x @ b)


def mode_product(t, mat, mode):
    """``t x_mode mat``: multiply every mode-``mode`` fiber of ``t`` by ``mat``."""
    _check_mode(mode)
    t = np.asarray(t)
    mat = np.asarray(mat)
    if mat.shape[1] != t.shape[mode - 1]:
        raise ValueError(
            f"factor has {mat.shape[1]} columns, tensor mode {mode} has "
            f"size {t.shape[mode - 1]}")
    out = np.tensordot(mat, t, axes=(1, mode - 1))
    return np.moveaxis(out, 0, mode - 1)


@dataclass
class TuckerFactors:
    """Tucker model ``X = core x1 D x2 E x3 F``.

    ``core`` has shape ``(r1, r2, r3)``; ``D``, ``E`` and ``F`` are
    ``n1 x r1``, ``n2 x r2`` and ``q x r3``.  Row ``k`` of ``F`` holds the
    temporal coefficients of frame ``k``.
    """

    core: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray

    def __post_init__(self):
        self.core = np.asarray(self.core)
        self.D, self.E, self.F = (np.atleast_2d(np.asarray(m))
                                  for m in (self.D, self.E, self.F))
        if self.core.ndim != 3:
            raise ValueError("core must be a 3-way array")
        ranks = self.core.shape
        for name, mat, r in zip("DEF", (self.D, self.E, self.F), ranks):
            if mat.shape[1] != r:
                raise ValueError(
                    f"factor {name} has {mat.shape[1]} columns but the core "
                    f"expects {r}")
            if r > mat.shape[0]:
                raise ValueError(
                    f"rank {r} of factor {name} exceeds its dimension "
                    f"{mat.shape[0]}")

    @property
    def ranks(self):
        return self.core.shape

    @property
    def dims(self):
        return (self.D.shape[0], self.E.shape[0], self.F.shape[0])

    def copy(self):
        return TuckerFactors(self.core.copy(), self.D.copy(), self.E.copy(),
                             self.F.copy())

    def reconstruct(self):
        return tucker_reconstruct(self)


def tucker_reconstruct(f):
    """Full ``n1 x n2 x q`` tensor from Tucker factors."""
    t = mode_product(f.core, f.D, 1)
    t = mode_product(t, f.E, 2)
    return mode_product(t, f.F, 3)


def hosvd(t, ranks):
    """Truncated higher-order SVD.

    Factors are the leading left singular vectors of the three unfoldings and
    the core is the projection ``t x1 D^H x2 E^H x3 F^H``.
    """
    t = np.asarray(t)
    ranks = tuple(int(r) for r in ranks)
    if t.ndim != 3 or len(ranks) != 3:
        raise ValueError("hosvd expects a 3-way tensor and three ranks")
    for mode, (r, n) in enumerate(zip(ranks, t.shape), start=1):
        if not 1 <= r <= n:
            raise ValueError(f"rank {r} invalid for mode {mode} of size {n}")
    dtype = np.result_type(t.dtype, np.complex128)
    t = t.astype(dtype, copy=False)
    factors = []
    for mode, r in enumerate(ranks, start=1):
        u, _, _ = np.linalg.svd(matricize(t, mode), full_matrices=False)
        factors.append(u[:, :r])
    core = t
    for mode, u in enumerate(factors, start=1):
        core = mode_product(core, u.conj().T, mode)
    return TuckerFactors(core, *factors)
