"""Magnitude-only sensing of image sequences.

Frame ``k`` is observed as ``y_k = |A_k^H x_k|`` where the ``m`` columns
``a_{i,k}`` of ``A_k`` are the sampling vectors, so ``y_{i,k} = |<a_{i,k},
x_k>|`` with ``<a, x> = a^H x``.  Three ensembles are supported: real
Gaussian, circular complex Gaussian and coded diffraction patterns (CDP).

All operators act on whole batches of frames: ``forward`` takes an array of
shape ``(q, n)`` (one vectorized frame per row) and returns ``(q, m)``.
"""
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .linop import LinearMap


__all__ = [
    "Kind",
    "CdpMasks",
    "MeasurementEnsemble",
    "frame_rng",
    "gen_gaussian",
    "gen_cdp",
    "observe",
    "phase",
]

MASK_ALPHABET = np.array([1, -1, 1j, -1j], dtype=complex)

# stream tags keep independent draws from colliding for the same (seed, k)
_GAUSSIAN_STREAM = 1
_CDP_STREAM = 2


class Kind(str, Enum):
    REAL_GAUSSIAN = "real-gaussian"
    COMPLEX_GAUSSIAN = "complex-gaussian"
    CDP = "cdp"


def frame_rng(seed, *keys):
    """Independent generator for ``(seed, *keys)``; order of creation is irrelevant."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def phase(z):
    """Elementwise ``z / |z|`` with ``phase(0) = 1``."""
    z = np.asarray(z)
    mag = np.abs(z)
    out = np.ones(z.shape, dtype=np.result_type(z, complex))
    nz = mag > 0
    out[nz] = z[nz] / mag[nz]
    return out


@dataclass(frozen=True)
class CdpMasks:
    """Per-frame diagonal masks, ``masks[k, l]`` of length ``n``."""

    masks: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masks)
        if m.ndim != 3:
            raise ValueError("masks must have shape (q, L, n)")
        if not np.all(np.isin(m, MASK_ALPHABET)):
            raise ValueError("mask entries must lie in {1, -1, j, -j}")

    @property
    def dft_size(self):
        return self.masks.shape[2]


@dataclass(frozen=True, eq=False)
class MeasurementEnsemble:
    """Sensing operators for ``q`` frames plus (optionally) their observations.

    ``matrices`` holds the dense ``A_k`` for the Gaussian kinds (shape
    ``(q, n, m)``); ``cdp`` holds the masks for the CDP kind.  The CDP
    operator uses the unnormalized DFT, so ``||forward(x)||^2 = n L ||x||^2``.
    """

    kind: Kind
    n: int
    m: int
    q: int
    seed: int
    matrices: np.ndarray = None
    cdp: CdpMasks = None
    observations: np.ndarray = None
    _ah: np.ndarray = field(default=None, init=False, repr=False)

    def __post_init__(self):
        if self.kind is Kind.CDP:
            if self.cdp is None:
                raise ValueError("CDP ensemble needs masks")
            if self.m % self.n:
                raise ValueError("CDP requires m = L n")
        else:
            if self.matrices is None or self.matrices.shape != (self.q, self.n, self.m):
                raise ValueError("Gaussian ensemble needs (q, n, m) matrices")
            object.__setattr__(
                self, "_ah",
                np.ascontiguousarray(self.matrices.conj().transpose(0, 2, 1)))
        if self.observations is not None:
            y = np.asarray(self.observations, dtype=float)
            if y.shape != (self.q, self.m):
                raise ValueError(
                    f"observations have shape {y.shape}, expected "
                    f"({self.q}, {self.m})")
            if np.any(y < 0):
                raise ValueError("observations must be nonnegative")
            object.__setattr__(self, "observations", y)

    @property
    def n_masks(self):
        return self.m // self.n if self.kind is Kind.CDP else None

    @property
    def y(self):
        if self.observations is None:
            raise ValueError("ensemble carries no observations")
        return self.observations

    def with_observations(self, y):
        return replace(self, observations=y)

    # batched application -------------------------------------------------

    def forward(self, xs):
        """``A_k^H x_k`` for every frame; ``xs`` has shape ``(q, n)``."""
        xs = np.asarray(xs)
        if xs.shape != (self.q, self.n):
            raise ValueError(f"expected frames of shape ({self.q}, {self.n}), got {xs.shape}")
        if self.kind is Kind.CDP:
            masked = self.cdp.masks * xs[:, None, :]
            return np.fft.fft(masked, axis=-1).reshape(self.q, self.m)
        return np.matmul(self._ah, xs[:, :, None])[:, :, 0]

    def adjoint(self, zs):
        """``A_k z_k`` for every frame; ``zs`` has shape ``(q, m)``."""
        zs = np.asarray(zs)
        if zs.shape != (self.q, self.m):
            raise ValueError(f"expected shape ({self.q}, {self.m}), got {zs.shape}")
        if self.kind is Kind.CDP:
            z = zs.reshape(self.q, self.n_masks, self.n)
            back = self.n * np.fft.ifft(z, axis=-1)
            return np.sum(self.cdp.masks.conj() * back, axis=1)
        return np.matmul(self.matrices, zs[:, :, None])[:, :, 0]

    def forward_columns(self, w):
        """``A_k^H W`` for a shared ``n x r`` matrix ``W``; shape ``(q, m, r)``."""
        w = np.asarray(w)
        if w.ndim != 2 or w.shape[0] != self.n:
            raise ValueError(f"expected an ({self.n}, r) matrix, got {w.shape}")
        if self.kind is Kind.CDP:
            out = np.fft.fft(self.cdp.masks[:, :, :, None] * w[None, None],
                             axis=2)
            return out.reshape(self.q, self.m, w.shape[1])
        return self._ah @ w

    def adjoint_columns(self, zs):
        """``A_k Z_k`` for a stack ``zs`` of shape ``(q, m, r)``; returns ``(q, n, r)``."""
        zs = np.asarray(zs)
        if zs.ndim != 3 or zs.shape[:2] != (self.q, self.m):
            raise ValueError(f"expected shape ({self.q}, {self.m}, r), got {zs.shape}")
        if self.kind is Kind.CDP:
            z = zs.reshape(self.q, self.n_masks, self.n, zs.shape[2])
            back = self.n * np.fft.ifft(z, axis=2)
            return np.sum(self.cdp.masks.conj()[:, :, :, None] * back, axis=1)
        return self.matrices @ zs

    # single-frame application --------------------------------------------

    def frame_forward(self, k, x):
        """``A_k^H x`` for a vector ``x`` or each column of an ``n x r`` matrix."""
        x = np.asarray(x)
        if x.shape[0] != self.n:
            raise ValueError(f"expected leading dimension {self.n}, got {x.shape[0]}")
        if self.kind is Kind.CDP:
            masks = self.cdp.masks[k]
            if x.ndim == 1:
                return np.fft.fft(masks * x, axis=-1).reshape(-1)
            out = np.fft.fft(masks[:, :, None] * x[None], axis=1)
            return out.reshape(self.m, x.shape[1])
        return self._ah[k] @ x

    def frame_adjoint(self, k, z):
        z = np.asarray(z)
        if z.shape != (self.m,):
            raise ValueError(f"expected shape ({self.m},), got {z.shape}")
        if self.kind is Kind.CDP:
            back = self.n * np.fft.ifft(z.reshape(self.n_masks, self.n), axis=-1)
            return np.sum(self.cdp.masks[k].conj() * back, axis=0)
        return self.matrices[k] @ z

    def frame_op(self, k):
        """Frame ``k`` sensing map ``x -> A_k^H x`` as a :class:`LinearMap`."""
        return LinearMap(self.n, self.m,
                         lambda x: self.frame_forward(k, x),
                         lambda z: self.frame_adjoint(k, z))

    def dense(self, k):
        """Explicit ``n x m`` matrix ``A_k`` (materializes CDP; tests only)."""
        if self.kind is not Kind.CDP:
            return self.matrices[k]
        L, n = self.n_masks, self.n
        dft = np.fft.fft(np.eye(n), axis=0)
        blocks = [dft * self.cdp.masks[k, l][None, :] for l in range(L)]
        return np.vstack(blocks).conj().T

    def row_norms_sq(self):
        """``sum_i ||a_{i,k}||^2`` for each frame, shape ``(q,)``."""
        if self.kind is Kind.CDP:
            return np.full(self.q, float(self.m * self.n))
        return np.sum(np.abs(self.matrices) ** 2, axis=(1, 2))


def _check_positive(**kw):
    for name, v in kw.items():
        if int(v) != v or v < 1:
            raise ValueError(f"{name} must be a positive integer, got {v!r}")


def gen_gaussian(n, m, q, complex=False, seed=0):
    """Dense i.i.d. Gaussian sampling vectors, one ``n x m`` matrix per frame.

    Complex entries are circular with unit variance (real and imaginary
    parts each ``N(0, 1/2)``).
    """
    _check_positive(n=n, m=m, q=q)
    mats = np.empty((q, n, m), dtype=np.complex128)
    for k in range(q):
        rng = frame_rng(seed, _GAUSSIAN_STREAM, k)
        if complex:
            mats[k] = (rng.standard_normal((n, m))
                       + 1j * rng.standard_normal((n, m))) / np.sqrt(2)
        else:
            mats[k] = rng.standard_normal((n, m))
    kind = Kind.COMPLEX_GAUSSIAN if complex else Kind.REAL_GAUSSIAN
    return MeasurementEnsemble(kind, n, m, q, int(seed), matrices=mats)


def gen_cdp(n, L, q, seed=0):
    """Coded diffraction patterns with ``L`` random quaternary masks per frame."""
    _check_positive(n=n, L=L, q=q)
    masks = np.empty((q, L, n), dtype=np.complex128)
    for k in range(q):
        for l in range(L):
            rng = frame_rng(seed, _CDP_STREAM, k, l)
            masks[k, l] = MASK_ALPHABET[rng.integers(0, 4, size=n)]
    return MeasurementEnsemble(Kind.CDP, n, L * n, q, int(seed),
                               cdp=CdpMasks(masks))


def observe(ens, frames):
    """Magnitudes ``|A_k^H x_k|``; ``frames`` has shape ``(q, n)``."""
    return np.abs(ens.forward(frames))
