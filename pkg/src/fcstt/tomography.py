"""Simulation-side process tomography of generalized dynamical maps.

Data points are ``L[beta, alpha] = Tr[Y_beta^dag Lambda(X_alpha)]``; with dual
bases the Liouville matrix is ``sum L[beta, alpha] |Y~_beta>><<X~_alpha|``.
For the self-dual basis ``{|mu><nu|}`` the data points are the Liouville
matrix itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import DimensionError, IncompleteDataError, SingularBasisError
from .opcore import choi_form, left_identity_row, superop_from_choi, vectorize
from .settings import TOL


@dataclass(frozen=True)
class DynamicalMap:
    sup: np.ndarray
    lam: float
    n: int
    dt: float

    @property
    def time(self) -> float:
        return self.n * self.dt

    @property
    def d(self) -> int:
        return int(round(np.sqrt(self.sup.shape[0])))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return (self.sup @ x.reshape(-1)).reshape(x.shape)


# -- bases -------------------------------------------------------------------

def selfdual_basis(d: int) -> list[np.ndarray]:
    basis = []
    for mu in range(d):
        for nu in range(d):
            e = np.zeros((d, d), dtype=complex)
            e[mu, nu] = 1.0
            basis.append(e)
    return basis


_PAULI = [np.eye(2, dtype=complex),
          np.array([[0, 1], [1, 0]], dtype=complex),
          np.array([[0, -1j], [1j, 0]], dtype=complex),
          np.array([[1, 0], [0, -1]], dtype=complex)]


def pauli_basis(d: int) -> list[np.ndarray]:
    """Tensor products of Pauli matrices; ``d`` must be a power of two."""
    k = int(round(np.log2(d)))
    if 2**k != d:
        raise DimensionError(f"Pauli basis needs a power-of-two dimension, got {d}")
    if k == 0:
        return [np.eye(1, dtype=complex)]
    out = []
    for idx in np.ndindex(*(4,) * k):
        out.append(reduce(np.kron, [_PAULI[i] for i in idx]))
    return out


BASES = {"selfdual": selfdual_basis, "pauli": pauli_basis}


def basis_by_name(name: str, d: int) -> list[np.ndarray]:
    try:
        return BASES[name](d)
    except KeyError:
        raise ValueError(f"unknown basis {name!r}; known: {sorted(BASES)}") from None


def _columns(basis) -> np.ndarray:
    return np.stack([vectorize(b) for b in basis], axis=1)


def dual_basis(basis) -> list[np.ndarray]:
    """Dual set with ``Tr[dual_a^dag basis_b] = delta_ab``."""
    basis = [np.asarray(b, dtype=complex) for b in basis]
    d = basis[0].shape[0]
    if len(basis) != d * d:
        raise DimensionError(f"need {d * d} basis elements, got {len(basis)}")
    cols = _columns(basis)
    gram = cols.conj().T @ cols
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularBasisError("basis is linearly dependent", cond)
    dual_cols = cols @ np.linalg.inv(gram)
    return [dual_cols[:, k].reshape(d, d) for k in range(d * d)]


# -- map construction --------------------------------------------------------

def build_map_series(propagator, lam: float, dt: float, n_steps: int) -> np.ndarray:
    """Self-dual Liouville matrices ``Lambda_{lam, n}`` for ``n = 0..n_steps``."""
    return propagator.map_series(lam, dt, n_steps)


def build_map_selfdual(propagator, lam: float, n: int, dt: float) -> DynamicalMap:
    sup = propagator.map_series_at(lam, [n * dt])[0]
    return DynamicalMap(sup, lam, n, dt)


def data_from_superop(sup, in_basis, out_basis) -> np.ndarray:
    """Data points ``Tr[Y_b^dag S(X_a)]`` of a known superoperator."""
    return _columns(out_basis).conj().T @ sup @ _columns(in_basis)


def superop_from_data(data, in_basis, out_basis) -> np.ndarray:
    """Assemble ``sum_{ba} L[b, a] |Y~_b>><<X~_a|`` from data points."""
    y_dual = _columns(dual_basis(out_basis))
    x_dual = _columns(dual_basis(in_basis))
    return y_dual @ np.asarray(data) @ x_dual.conj().T


def identity_data(in_basis: str, out_basis: str, d: int) -> np.ndarray:
    """Data points of the identity map (the ``n = 0`` slot of every dataset)."""
    if in_basis == out_basis == "selfdual":
        return np.eye(d * d, dtype=complex)
    return data_from_superop(np.eye(d * d), basis_by_name(in_basis, d), basis_by_name(out_basis, d))


def measure_map(propagator, lam: float, t: float, in_basis, out_basis) -> np.ndarray:
    """Data points obtained by propagating each input operator directly."""
    outs = [propagator.reduced_apply(lam, t, x) for x in in_basis]
    return np.array([[np.vdot(y, o) for o in outs] for y in out_basis])


@dataclass
class MapDataset:
    """Tomographic data ``L[lam_index, n, beta, alpha]`` on a uniform time grid.

    ``data[:, 0]`` holds the identity map in the chosen bases; only steps
    ``n >= 1`` are stored on disk.
    """

    lambdas: tuple
    dt: float
    n_steps: int
    d: int
    data: np.ndarray
    in_basis: str = "selfdual"
    out_basis: str = "selfdual"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=complex)
        expected = (len(self.lambdas), self.n_steps + 1, self.d**2, self.d**2)
        if self.data.shape != expected:
            raise IncompleteDataError(f"dataset has shape {self.data.shape}, expected {expected}")

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    def lambda_index(self, lam: float) -> int:
        for i, x in enumerate(self.lambdas):
            if abs(x - lam) <= 1e-12:
                return i
        raise KeyError(lam)


def dataset_from_propagator(propagator, lambdas, dt: float, n_steps: int,
                            in_basis: str = "selfdual", out_basis: str = "selfdual",
                            meta=None, executor=None) -> MapDataset:
    d = propagator.d_s

    def one(lam):
        maps = propagator.map_series(lam, dt, n_steps)
        if in_basis == out_basis == "selfdual":
            maps[0] = identity_data(in_basis, out_basis, d)
            return maps
        xb, yb = basis_by_name(in_basis, d), basis_by_name(out_basis, d)
        data = np.stack([data_from_superop(s, xb, yb) for s in maps])
        data[0] = identity_data(in_basis, out_basis, d)
        return data

    lambdas = tuple(float(x) for x in lambdas)
    runs = executor.map(one, lambdas) if executor is not None else map(one, lambdas)
    return MapDataset(lambdas, dt, n_steps, d, np.stack(list(runs)), in_basis, out_basis,
                      dict(meta or {}))


def build_map_from_dataset(ds: MapDataset) -> dict[float, np.ndarray]:
    """Liouville map series per counting field, ``maps[lam][n]``."""
    xb = basis_by_name(ds.in_basis, ds.d)
    yb = basis_by_name(ds.out_basis, ds.d)
    out = {}
    for i, lam in enumerate(ds.lambdas):
        if ds.in_basis == ds.out_basis == "selfdual":
            maps = ds.data[i].copy()
        else:
            maps = np.stack([superop_from_data(L, xb, yb) for L in ds.data[i]])
        maps[0] = np.eye(ds.d**2)
        out[lam] = maps
    return out


def inject_noise(maps, sigma: float, rng: np.random.Generator, skip_first: bool = True):
    """Add independent complex Gaussian noise (std ``sigma`` per real component)."""
    maps = np.array(maps, dtype=complex, copy=True)
    noise = sigma * (rng.standard_normal(maps.shape) + 1j * rng.standard_normal(maps.shape))
    if skip_first:
        noise[0] = 0.0
    return maps + noise


# -- diagnostics -------------------------------------------------------------

@dataclass(frozen=True)
class CptpReport:
    min_choi_eig: float
    tp_residual: float
    tol: float

    @property
    def cp(self) -> bool:
        return self.min_choi_eig >= -self.tol

    @property
    def tp(self) -> bool:
        return self.tp_residual <= self.tol

    @property
    def passed(self) -> bool:
        return self.cp and self.tp


def check_cptp(sup, tol: float = 1e-8) -> CptpReport:
    sup = sup.sup if isinstance(sup, DynamicalMap) else np.asarray(sup)
    d = int(round(np.sqrt(sup.shape[0])))
    j = choi_form(sup)
    min_eig = float(np.linalg.eigvalsh(0.5 * (j + j.conj().T)).min())
    row = left_identity_row(d)
    tp = float(np.linalg.norm(row @ sup - row))
    return CptpReport(min_eig, tp, tol)


def check_first_order_tp(sup, a_t, a_0, lam: float) -> float:
    """Norm of ``<<I|Lambda - <<I| - i lam (<<A_t| - <<A_0|)``.

    ``a_t`` and ``a_0`` are the environment-averaged Heisenberg counting
    operators; the residual is O(lam**2).
    """
    sup = sup.sup if isinstance(sup, DynamicalMap) else np.asarray(sup)
    d = int(round(np.sqrt(sup.shape[0])))
    row = left_identity_row(d)
    drift = vectorize(np.asarray(a_t) - np.asarray(a_0)).conj()
    return float(np.linalg.norm(row @ sup - row - 1j * lam * drift))


def project_cptp(sup, iters: int = 200, tol: float = TOL.propagation) -> np.ndarray:
    """Alternating projection of a Liouville matrix onto CP and TP maps."""
    sup = np.asarray(sup, dtype=complex)
    d = int(round(np.sqrt(sup.shape[0])))
    j = choi_form(sup)
    for _ in range(iters):
        j = 0.5 * (j + j.conj().T)
        w, v = np.linalg.eigh(j)
        j = (v * np.clip(w, 0.0, None)) @ v.conj().T
        # Choi index order is (input, output); TP means Tr_out J = I
        part = np.trace(j.reshape(d, d, d, d), axis1=1, axis2=3)
        defect = part - np.eye(d)
        if np.abs(defect).max() < tol and w.min() > -tol:
            break
        j = j - np.kron(defect, np.eye(d)) / d
    return superop_from_choi(j)
