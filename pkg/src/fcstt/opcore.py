"""Dense complex linear algebra on operators and superoperators.

Vectorization is row-major throughout the package: ``vec(X)[i*d + j] = X[i, j]``.
With this convention ``vec(A @ X @ B) = kron(A, B.T) @ vec(X)`` and
``vec(W).conj() @ vec(X) = Tr[W^dagger X]``. A superoperator ``S`` therefore
has entries ``S[i*d + j, k*d + l] = <i| S(|k><l|) |j>``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ModelTooLargeError, NotHermitianError
from .settings import MAX_DIM, TOL


@dataclass(frozen=True)
class TensorFactorization:
    """Split of a Hilbert space into system (first factor) and environment."""

    d_s: int
    d_e: int

    @property
    def dim(self) -> int:
        return self.d_s * self.d_e


def as_matrix(x) -> np.ndarray:
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {m.shape}")
    return m


def is_hermitian(h, tol: float = TOL.hermitian) -> bool:
    h = np.asarray(h)
    scale = np.abs(h).max() if h.size else 0.0
    return bool(np.abs(h - h.conj().T).max() <= tol * max(scale, 1.0))


def kron(a, b, max_dim: int = MAX_DIM) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > max_dim:
        raise ModelTooLargeError(f"kron result {rows}x{cols} exceeds maximum dimension {max_dim}")
    return np.kron(a, b)


def partial_trace_env(x, f: TensorFactorization) -> np.ndarray:
    """Trace out the environment factor of a (d_s*d_e)-square matrix."""
    x = as_matrix(x)
    if x.shape != (f.dim, f.dim):
        raise DimensionError(f"matrix shape {x.shape} does not match {f.d_s}x{f.d_e} factorization")
    return np.trace(x.reshape(f.d_s, f.d_e, f.d_s, f.d_e), axis1=1, axis2=3)


@dataclass(frozen=True)
class HermitianEig:
    """Cached eigendecomposition ``h = V diag(E) V^dagger``.

    Reusing one decomposition across a time grid makes each additional
    exponential an O(n^2) rescaling plus the basis change.
    """

    energies: np.ndarray
    vectors: np.ndarray

    @classmethod
    def of(cls, h, tol: float = TOL.hermitian) -> "HermitianEig":
        h = as_matrix(h)
        if h.shape[0] != h.shape[1]:
            raise DimensionError(f"expected a square matrix, got {h.shape}")
        if not is_hermitian(h, tol):
            raise NotHermitianError("matrix is not Hermitian within tolerance")
        e, v = np.linalg.eigh(0.5 * (h + h.conj().T))
        return cls(e, v)

    def expm(self, scale: complex) -> np.ndarray:
        return (self.vectors * np.exp(scale * self.energies)) @ self.vectors.conj().T

    def function(self, fn) -> np.ndarray:
        return (self.vectors * fn(self.energies)) @ self.vectors.conj().T


def herm_expm(h, scale: complex) -> np.ndarray:
    """``exp(scale * h)`` for Hermitian ``h`` via eigendecomposition."""
    return HermitianEig.of(h).expm(scale)


def vectorize(x) -> np.ndarray:
    return as_matrix(x).reshape(-1).copy()


def devectorize(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionError(f"vector length {v.size} is not a perfect square")
    return v.reshape(d, d).copy()


def superop_from_action(action, d: int) -> np.ndarray:
    """Liouville matrix of a linear map given as a function on d x d matrices."""
    s = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d):
        for l in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[k, l] = 1.0
            s[:, k * d + l] = vectorize(action(e))
    return s


def apply_superop(s, x) -> np.ndarray:
    return devectorize(np.asarray(s) @ vectorize(x))


def superop_dim(s) -> int:
    s = np.asarray(s)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionError(f"superoperator must be square, got {s.shape}")
    d = int(round(np.sqrt(s.shape[0])))
    if d * d != s.shape[0]:
        raise DimensionError(f"superoperator size {s.shape[0]} is not a perfect square")
    return d


def choi_form(s) -> np.ndarray:
    """Choi matrix ``sum_kl |k><l| (x) S(|k><l|)`` of a superoperator.

    Input index is the first tensor factor. The result is positive
    semi-definite iff the map is completely positive.
    """
    d = superop_dim(s)
    return np.asarray(s).reshape(d, d, d, d).transpose(2, 0, 3, 1).reshape(d * d, d * d)


def superop_from_choi(j) -> np.ndarray:
    d = superop_dim(j)
    return np.asarray(j).reshape(d, d, d, d).transpose(1, 3, 0, 2).reshape(d * d, d * d)


def sup_norm_l2(s) -> float:
    return float(np.linalg.norm(np.asarray(s)))


def identity_superop(d: int) -> np.ndarray:
    return np.eye(d * d, dtype=complex)


def unitary_superop(u) -> np.ndarray:
    u = as_matrix(u)
    return np.kron(u, u.conj())


def left_identity_row(d: int) -> np.ndarray:
    """Row vector <<I| so that ``left_identity_row(d) @ S`` gives trace functionals."""
    return vectorize(np.eye(d)).conj()
