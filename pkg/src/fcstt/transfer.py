"""Transfer tensors for generalized dynamical maps.

On a uniform grid with stationary maps ``Lambda_n`` (``Lambda_0 = 1``)

    T_1 = Lambda_1,    T_n = Lambda_n - sum_{k=1}^{n-1} T_k Lambda_{n-k},

and the maps are recovered exactly by ``Lambda_n = sum_{k=1}^{n} T_k Lambda_{n-k}``.
Dropping tensors beyond lag ``m`` gives the truncated propagation scheme.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, IncompleteDataError
from .opcore import sup_norm_l2


@dataclass(frozen=True)
class TransferTensor:
    sup: np.ndarray
    lam: float
    n: int
    dt: float


@dataclass(frozen=True)
class TtFamily:
    """Tensors ``T_1..T_m`` stored as ``tensors[k - 1]``."""

    tensors: np.ndarray
    lam: float = 0.0
    dt: float = 0.02
    smoothing: int = 0
    provenance: str = "raw"

    @property
    def m(self) -> int:
        return self.tensors.shape[0]

    @property
    def t_m(self) -> float:
        return self.m * self.dt

    def __getitem__(self, n: int) -> TransferTensor:
        if not 1 <= n <= self.m:
            raise IndexError(f"lag {n} outside 1..{self.m}")
        return TransferTensor(self.tensors[n - 1], self.lam, n, self.dt)

    def truncated(self, m: int) -> "TtFamily":
        if not 1 <= m <= self.m:
            raise ValueError(f"cutoff {m} outside 1..{self.m}")
        return TtFamily(self.tensors[:m], self.lam, self.dt, self.smoothing, self.provenance)


def _as_series(maps) -> np.ndarray:
    maps = np.asarray(maps, dtype=complex)
    if maps.ndim != 3 or maps.shape[1] != maps.shape[2]:
        raise DimensionError(f"map series must have shape (n, D, D), got {maps.shape}")
    return maps


def tt_from_maps_stationary(maps, m: int | None = None, lam: float = 0.0, dt: float = 0.02,
                            smoothing: int = 0, provenance: str = "raw") -> TtFamily:
    """Transfer tensors from ``maps[n] = Lambda_n``, ``n = 0..``; ``maps[0]`` is ignored."""
    maps = _as_series(maps)
    top = maps.shape[0] - 1
    m = top if m is None else m
    if m < 1:
        raise IncompleteDataError("need at least Lambda_1")
    if m > top:
        raise IncompleteDataError(f"cutoff {m} needs maps up to lag {m}, have {top}")
    t = np.empty((m,) + maps.shape[1:], dtype=complex)
    for n in range(1, m + 1):
        acc = maps[n].copy()
        if n > 1:
            # sum_{k=1}^{n-1} T_k Lambda_{n-k}
            acc -= np.einsum("kab,kbc->ac", t[:n - 1], maps[n - 1:0:-1])
        t[n - 1] = acc
    return TtFamily(t, lam, dt, smoothing, provenance)


def reconstruct_maps(family: TtFamily, n_max: int) -> np.ndarray:
    """``Lambda_n`` for ``n = 0..n_max`` from the family; truncates beyond lag m."""
    t = family.tensors
    dim = t.shape[1]
    out = np.empty((n_max + 1, dim, dim), dtype=complex)
    out[0] = np.eye(dim)
    for n in range(1, n_max + 1):
        k = min(n, family.m)
        out[n] = np.einsum("kab,kbc->ac", t[:k], out[n - 1:n - k - 1 if n - k - 1 >= 0 else None:-1])
    return out


def propagate_truncated(family: TtFamily, zeta_history, n_steps: int) -> np.ndarray:
    """Extend a generalized-state series to ``n = 0..n_steps``.

    ``zeta_history[n]`` for ``n = 0..h`` is kept verbatim; later steps use
    ``zeta_n = sum_{k=1}^{min(n, m)} T_k zeta_{n-k}``.
    """
    hist = np.asarray(zeta_history, dtype=complex)
    if hist.ndim == 2:
        hist = hist[None]
    if hist.shape[0] < 1:
        raise IncompleteDataError("history must contain at least the initial state")
    d = hist.shape[1]
    if family.tensors.shape[1] != d * d:
        raise DimensionError(f"tensors act on dimension {family.tensors.shape[1]}, states are {d}x{d}")
    vec = np.zeros((n_steps + 1, d * d), dtype=complex)
    h = min(hist.shape[0], n_steps + 1)
    vec[:h] = hist[:h].reshape(h, -1)
    t = family.tensors
    for n in range(h, n_steps + 1):
        k = min(n, family.m)
        vec[n] = np.einsum("kab,kb->a", t[:k], vec[n - 1:n - k - 1 if n - k - 1 >= 0 else None:-1])
    return vec.reshape(n_steps + 1, d, d)


def smooth_maps(maps, n_window: int) -> np.ndarray:
    """Symmetric rolling mean over lags ``1..m`` with half-width ``min(N, n-1, m-n)``.

    ``maps[0]`` (the identity) is returned unchanged and never enters a window.
    """
    maps = _as_series(maps)
    if n_window < 0:
        raise ValueError("smoothing parameter must be non-negative")
    if n_window == 0:
        return maps.copy()
    m = maps.shape[0] - 1
    out = maps.copy()
    csum = np.concatenate([np.zeros((1,) + maps.shape[1:], dtype=complex),
                           np.cumsum(maps, axis=0)])
    for n in range(1, m + 1):
        w = min(n_window, n - 1, m - n)
        out[n] = (csum[n + w + 1] - csum[n - w]) / (2 * w + 1)
    return out


def tt_norm_series(family: TtFamily) -> np.ndarray:
    """Frobenius norm of ``T_n`` for ``n = 1..m``."""
    return np.array([sup_norm_l2(t) for t in family.tensors])


# -- general (non-uniform) grids ---------------------------------------------

def tt_from_maps_general(maps: dict) -> dict:
    """Transfer tensors on an arbitrary grid ``t_0 < t_1 < ... < t_J``.

    ``maps[(j, k)]`` is ``Lambda_{t_j:t_k}`` for every ``j > k``. Returns
    ``tensors[(j, n)] = T^{(n)}_{t_j:t_{j-n}}`` for ``1 <= n <= j``.
    """
    if not maps:
        raise IncompleteDataError("no maps supplied")
    top = max(j for j, _ in maps)
    for j in range(1, top + 1):
        for k in range(j):
            if (j, k) not in maps:
                raise IncompleteDataError(f"missing intermediate map ({j}, {k})")
    out = {}
    for j in range(1, top + 1):
        for n in range(1, j + 1):
            acc = np.array(maps[(j, j - n)], dtype=complex)
            for k in range(1, n):
                acc -= out[(j, k)] @ maps[(j - k, j - n)]
            out[(j, n)] = acc
    return out


def general_identity_residual(maps: dict, tensors: dict) -> float:
    """max over ``j > k`` of ``|Lambda_{j:k} - sum_l T^{(l)}_j Lambda_{j-l:k}|``."""
    worst = 0.0
    for (j, k), lam_jk in maps.items():
        dim = lam_jk.shape[0]
        acc = np.zeros((dim, dim), dtype=complex)
        for l in range(1, j - k + 1):
            prev = np.eye(dim) if j - l == k else maps[(j - l, k)]
            acc += tensors[(j, l)] @ prev
        worst = max(worst, float(np.abs(acc - lam_jk).max()))
    return worst
