"""Matrix-free linear maps and a CGLS least-squares solver."""
from dataclasses import dataclass
from typing import Callable

import numpy as np


__all__ = ["LinearMap", "CglsConfig", "dense_map", "stacked_map", "cgls"]


@dataclass(frozen=True)
class LinearMap:
    """A linear operator given by its forward and adjoint actions.

    ``forward`` maps vectors of length ``in_dim`` to length ``out_dim`` and
    ``adjoint`` must satisfy ``<forward(x), y> = <x, adjoint(y)>``.
    """

    in_dim: int
    out_dim: int
    forward: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("LinearMap dimensions must be positive")

    def __call__(self, x):
        return self.forward(x)

    def todense(self):
        """Materialize the operator column by column (for tests only)."""
        cols = [self.forward(e) for e in np.eye(self.in_dim, dtype=complex)]
        return np.stack(cols, axis=1)


def dense_map(mat):
    """Wrap an explicit matrix as a :class:`LinearMap`."""
    mat = np.atleast_2d(np.asarray(mat))
    mat_h = mat.conj().T
    return LinearMap(mat.shape[1], mat.shape[0],
                     lambda x: mat @ x, lambda y: mat_h @ y)


def stacked_map(maps):
    """Stack maps sharing an input space into one tall operator."""
    maps = list(maps)
    if not maps:
        raise ValueError("stacked_map needs at least one map")
    if len(maps) == 1:
        return maps[0]
    in_dim = maps[0].in_dim
    for op in maps:
        if op.in_dim != in_dim:
            raise ValueError(
                f"in_dim mismatch: {op.in_dim} != {in_dim}")
    bounds = np.cumsum([0] + [op.out_dim for op in maps])

    def forward(x):
        return np.concatenate([op.forward(x) for op in maps])

    def adjoint(y):
        return sum(op.adjoint(y[lo:hi])
                   for op, lo, hi in zip(maps, bounds[:-1], bounds[1:]))

    return LinearMap(in_dim, int(bounds[-1]), forward, adjoint)


@dataclass(frozen=True)
class CglsConfig:
    max_iters: int = 50
    rel_tolerance: float = 1e-8

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.rel_tolerance < 0:
            raise ValueError("rel_tolerance must be nonnegative")


def cgls(op, b, x0=None, config=None, callback=None):
    """Approximately minimize ``||b - op(x)||`` by conjugate gradients.

    Iterates on the normal equations implicitly, using only ``op.forward`` and
    ``op.adjoint``.  Stops after ``config.max_iters`` iterations or once
    ``||op^H (b - op x)|| <= rel_tolerance * ||op^H b||``.

    Parameters
    ----------
    op : LinearMap
    b : ndarray, shape (op.out_dim,)
    x0 : ndarray, optional
        Warm start; zeros when omitted.
    config : CglsConfig, optional
    callback : callable, optional
        Called as ``callback(iteration, x, residual_norm)`` once before the
        first iteration and after every iteration.

    Returns
    -------
    x : ndarray, shape (op.in_dim,)
    """
    config = config or CglsConfig()
    b = np.asarray(b)
    if b.shape != (op.out_dim,):
        raise ValueError(f"b has shape {b.shape}, expected ({op.out_dim},)")
    if x0 is None:
        x = np.zeros(op.in_dim, dtype=np.result_type(b, complex))
    else:
        x = np.array(x0, dtype=np.result_type(x0, b, complex))
        if x.shape != (op.in_dim,):
            raise ValueError(
                f"x0 has shape {x.shape}, expected ({op.in_dim},)")

    r = b - op.forward(x)
    s = op.adjoint(r)
    p = s.copy()
    gamma = np.vdot(s, s).real
    stop = config.rel_tolerance * np.linalg.norm(op.adjoint(b))
    if callback is not None:
        callback(0, x, np.linalg.norm(r))

    for it in range(1, config.max_iters + 1):
        if np.sqrt(gamma) <= stop:
            break
        w = op.forward(p)
        delta = np.vdot(w, w).real
        if delta == 0.0:
            break
        step = gamma / delta
        x += step * p
        r -= step * w
        s = op.adjoint(r)
        gamma_next = np.vdot(s, s).real
        p = s + (gamma_next / gamma) * p
        gamma = gamma_next
        if callback is not None:
            callback(it, x, np.linalg.norm(r))
    return x
