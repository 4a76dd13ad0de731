"""Exact counting-field dynamics of a noninteracting resonant level.

When ``H`` and ``A`` are both quadratic, the modified evolution is a pair of
Gaussian (one-body) propagators ``u = exp(-i h_lam t)`` and
``w = exp(-i h_{-lam} t)`` and every map element reduces to determinants over
the single-particle space (Klich's trace formula):

    Tr[Gamma(X) rho] = det(1 - n + X n)

for a Gaussian state ``rho`` with one-body density matrix ``n``. This handles
baths with hundreds of levels, which the many-body propagator cannot.

Only a single impurity mode (system dimension 2) is supported. Mode 0 is the
impurity, modes 1.. are bath levels in lead-major order.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import ConfigError
from .models import (AndersonParams, ModelSpec, SPINLESS_LABELS, bath_occupations,
                     jordan_wigner_ops, number_op, system_state)
from .settings import MAX_MODES


@dataclass(frozen=True, eq=False)
class QuadraticModel:
    hopping: np.ndarray            # single-particle Hamiltonian, M x M
    counted: np.ndarray            # bool mask of modes summed in A
    occupations: np.ndarray        # thermal occupations of modes 1..M-1
    rho_s0: np.ndarray = field(default_factory=lambda: system_state("empty", False))
    name: str = "resonant-level"

    @property
    def n_modes(self) -> int:
        return self.hopping.shape[0]

    @property
    def d_s(self) -> int:
        return 2

    def with_initial_state(self, rho_s0) -> "QuadraticModel":
        return QuadraticModel(self.hopping, self.counted, self.occupations,
                              np.asarray(rho_s0, dtype=complex), self.name)

    def to_model_spec(self, max_modes: int = MAX_MODES) -> ModelSpec:
        """Equivalent many-body model (small baths only)."""
        m = self.n_modes
        a = jordan_wigner_ops(m, max_modes)
        h = sum(self.hopping[i, j] * a[i].conj().T @ a[j]
                for i in range(m) for j in range(m) if self.hopping[i, j] != 0)
        counting = sum(number_op(a[i]) for i in range(m) if self.counted[i])
        rho_e = reduce(np.kron, [np.diag([1.0 - f, f]).astype(complex) for f in self.occupations])
        return ModelSpec(h, counting, self.rho_s0, rho_e, SPINLESS_LABELS, name=self.name)


def build_resonant_level_quadratic(p: AndersonParams) -> QuadraticModel:
    if p.spinful:
        raise ConfigError("free-fermion backend supports the spinless resonant level only")
    if p.u != 0:
        raise ConfigError("free-fermion backend requires U = 0")
    bath = p.bath
    nb = p.n_b
    m = 1 + 2 * nb
    h = np.zeros((m, m))
    h[0, 0] = p.epsilon
    for lead in range(2):
        for k in range(nb):
            i = 1 + lead * nb + k
            h[i, i] = bath.energies[k]
            h[i, 0] = h[0, i] = bath.couplings[k]
    counted = np.zeros(m, dtype=bool)
    counted[1:1 + nb] = True
    return QuadraticModel(h, counted, bath_occupations(p),
                          system_state(p.initial_state, False), name="resonant-level")


class FreeFermionPropagator:
    def __init__(self, model: QuadraticModel):
        self.model = model
        self._eigs = {}

    @property
    def rho_s0(self) -> np.ndarray:
        return self.model.rho_s0

    @property
    def d_s(self) -> int:
        return 2

    def _eig(self, lam: float):
        key = float(lam)
        if key not in self._eigs:
            ph = np.exp(0.5j * lam * self.model.counted)
            h = ph[:, None] * self.model.hopping * ph.conj()[None, :]
            self._eigs[key] = np.linalg.eigh(h)
        return self._eigs[key]

    def one_body_propagator(self, lam: float, t: float) -> np.ndarray:
        e, v = self._eig(lam)
        return (v * np.exp(-1j * e * t)) @ v.conj().T

    def _density(self, impurity: float) -> np.ndarray:
        return np.concatenate([[impurity], self.model.occupations])

    def one_body_propagators(self, lam: float, times) -> np.ndarray:
        e, v = self._eig(lam)
        phases = np.exp(-1j * np.outer(times, e))
        return (v[None] * phases[:, None, :]) @ v.conj().T[None]

    def map_series_at(self, lam: float, times, chunk: int = 64) -> np.ndarray:
        """Self-dual Liouville matrices, same layout as the many-body propagator."""
        times = np.asarray(times, dtype=float)
        out = np.zeros((times.size, 4, 4), dtype=complex)
        for c in range(0, times.size, chunk):
            sl = slice(c, c + chunk)
            u = self.one_body_propagators(lam, times[sl])
            w = self.one_body_propagators(-lam, times[sl])
            out[sl] = self._maps(u, w)
        return out

    def _maps(self, u, w) -> np.ndarray:
        m = self.model.n_modes
        eye = np.eye(m)
        keep_bath = np.ones(m)
        keep_bath[0] = 0.0
        wh = w.conj().transpose(0, 2, 1)
        y = wh @ u
        # output projector onto an empty impurity
        yq = wh @ (keep_bath[None, :, None] * u)
        out = np.zeros((u.shape[0], 4, 4), dtype=complex)
        for col, impurity in ((0, 0.0), (3, 1.0)):
            n = self._density(impurity)
            base = eye - np.diag(n)
            total = np.linalg.det(base + y * n)
            p_empty = np.linalg.det(base + yq * n)
            out[:, 0, col] = p_empty
            out[:, 3, col] = total - p_empty
        n = self._density(1.0)
        out[:, 1, 1] = self._coherence(u, w, n)
        # |1><0| input: Hermitian pairing with the opposite counting field
        out[:, 2, 2] = np.conj(self._coherence(w, u, n))
        return out

    @staticmethod
    def _coherence(u, w, n) -> np.ndarray:
        """``<0| Lambda(|0><1|) |1>`` from the generalized Wick contraction.

        With ``Y = w^dag u`` and ``D = 1 - n + Y n`` this is
        ``det(D) [u^dag w K w^dag]_00`` where ``K = Y n D^{-1}``.
        """
        wh = w.conj().transpose(0, 2, 1)
        yn = (wh @ u) * n
        dmat = np.eye(n.size) - np.diag(n) + yn
        x = np.linalg.solve(dmat, wh[:, :, 0:1])
        row = u[:, :, 0].conj()[:, None, :] @ w
        return np.linalg.det(dmat) * (row @ (yn @ x))[:, 0, 0]

    def map_series(self, lam: float, dt: float, n_steps: int) -> np.ndarray:
        return self.map_series_at(lam, dt * np.arange(n_steps + 1))

    def counting_population(self, times) -> np.ndarray:
        """Mean counted population under ordinary evolution from rho_S0 (x) rho_E0."""
        n0 = np.diag(self._density(self.model.rho_s0[1, 1].real))
        res = []
        for t in np.asarray(times, dtype=float):
            u = self.one_body_propagator(0.0, t)
            nt = u @ n0 @ u.conj().T
            res.append(np.real(np.diag(nt))[self.model.counted].sum())
        return np.array(res)
