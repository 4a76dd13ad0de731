"""Finite fermionic impurity models.

Modes are ordered system first, then bath, so that the Jordan-Wigner Fock
space factorizes as ``H_S (x) H_E`` with the system as the leading factor.
Bath modes are grouped lead-major: left lead, then right lead; within a lead
spin-major (spinful case), then level index.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import reduce

import numpy as np

from .errors import ConfigError, DimensionError, ModelTooLargeError, NotHermitianError
from .opcore import HermitianEig, is_hermitian
from .settings import MAX_MODES, TOL

_SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_PARITY = np.diag([1.0, -1.0]).astype(complex)
_ID2 = np.eye(2, dtype=complex)


def jordan_wigner_ops(n_modes: int, max_modes: int = MAX_MODES) -> list[np.ndarray]:
    """Annihilation operators ``a_0 ... a_{n-1}`` on the 2**n Fock space.

    Mode 0 is the most significant tensor factor; ``|1>`` means occupied.
    """
    if n_modes < 1:
        raise ValueError("n_modes must be positive")
    if n_modes > max_modes:
        raise ModelTooLargeError(f"{n_modes} modes exceeds maximum of {max_modes}")
    ops = []
    for j in range(n_modes):
        factors = [_PARITY] * j + [_SIGMA_MINUS] + [_ID2] * (n_modes - j - 1)
        ops.append(reduce(np.kron, factors))
    return ops


def number_op(a: np.ndarray) -> np.ndarray:
    return a.conj().T @ a


def hybridization(omega, gamma: float = 1.0, omega_c: float = 10.0, nu: float = 10.0):
    """Soft-edged flat coupling-strength function Gamma(omega)."""
    omega = np.asarray(omega, dtype=float)
    # logaddexp keeps the edges finite for large nu*|omega|
    upper = np.logaddexp(0.0, nu * (omega - omega_c))
    lower = np.logaddexp(0.0, -nu * (omega + omega_c))
    return gamma * np.exp(-upper - lower)


@dataclass(frozen=True)
class BathDiscretization:
    gamma: float
    omega_c: float
    nu: float
    levels_per_lead: int
    energies: np.ndarray = field(repr=False)
    couplings: np.ndarray = field(repr=False)

    @property
    def spacing(self) -> float:
        return 2.0 * (self.omega_c + 3.0 / self.nu) / self.levels_per_lead

    @property
    def recurrence_time(self) -> float:
        return 2.0 * np.pi / self.spacing


def discretize_bath(gamma: float = 1.0, omega_c: float = 10.0, nu: float = 10.0,
                    n_b: int = 1) -> BathDiscretization:
    """Midpoint grid of ``n_b`` levels on ``[-omega_c - 3/nu, omega_c + 3/nu]``.

    Couplings follow ``v_k**2 = Gamma(eps_k) * d_omega`` so that
    ``sum_k v_k**2 delta(w - eps_k)`` approximates Gamma(w).
    """
    if n_b < 1:
        raise ValueError("n_b must be at least 1")
    half = omega_c + 3.0 / nu
    dw = 2.0 * half / n_b
    eps = -half + dw * (np.arange(n_b) + 0.5)
    v = np.sqrt(hybridization(eps, gamma, omega_c, nu) * dw)
    return BathDiscretization(gamma, omega_c, nu, n_b, eps, v)


def fermi(x, beta: float):
    """Fermi function 1/(1+exp(beta*x)), stable for large arguments."""
    x = np.asarray(x, dtype=float)
    if beta == np.inf:
        return np.where(x < 0, 1.0, np.where(x > 0, 0.0, 0.5))
    return 0.5 * (1.0 - np.tanh(0.5 * beta * x))


def thermal_state(h_e, beta: float, mu_per_lead, n_ops_per_lead) -> np.ndarray:
    """Normalized ``exp(-beta (H_E - sum_l mu_l N_l))`` on the environment space."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    k = np.asarray(h_e, dtype=complex).copy()
    for mu, n_op in zip(mu_per_lead, n_ops_per_lead):
        k -= mu * np.asarray(n_op)
    eig = HermitianEig.of(k)
    w = np.exp(-beta * (eig.energies - eig.energies.min()))
    rho = (eig.vectors * (w / w.sum())) @ eig.vectors.conj().T
    return 0.5 * (rho + rho.conj().T)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """System + environment model with time-independent H and counting operator.

    Invariants (checked on construction): H and A Hermitian, initial states
    unit-trace positive semi-definite, and ``[A, rho_S0 (x) rho_E0] = 0``.
    """

    hamiltonian: np.ndarray
    counting: np.ndarray
    rho_s0: np.ndarray
    rho_e0: np.ndarray
    labels: tuple = ()
    name: str = ""

    def __post_init__(self):
        h, a = self.hamiltonian, self.counting
        d_s, d_e = self.rho_s0.shape[0], self.rho_e0.shape[0]
        n = d_s * d_e
        if h.shape != (n, n) or a.shape != (n, n):
            raise DimensionError(f"operators must be {n}x{n}")
        if not is_hermitian(h):
            raise NotHermitianError("Hamiltonian is not Hermitian")
        if not is_hermitian(a):
            raise NotHermitianError("counting operator is not Hermitian")
        for rho, what in ((self.rho_s0, "rho_S0"), (self.rho_e0, "rho_E0")):
            if abs(np.trace(rho) - 1.0) > 1e-10:
                raise ValueError(f"{what} does not have unit trace")
            if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() < -1e-10:
                raise ValueError(f"{what} is not positive semi-definite")
        rho = self.rho0
        comm = a @ rho - rho @ a
        if np.abs(comm).max() > TOL.structural * max(1.0, np.abs(a).max()):
            raise ValueError("counting operator does not commute with the initial state")

    @property
    def d_s(self) -> int:
        return self.rho_s0.shape[0]

    @property
    def d_e(self) -> int:
        return self.rho_e0.shape[0]

    @property
    def dim(self) -> int:
        return self.d_s * self.d_e

    @property
    def rho0(self) -> np.ndarray:
        return np.kron(self.rho_s0, self.rho_e0)

    def with_initial_state(self, rho_s0) -> "ModelSpec":
        return replace(self, rho_s0=np.asarray(rho_s0, dtype=complex))


@dataclass(frozen=True)
class AndersonParams:
    epsilon: float = -2.5
    u: float = 5.0
    beta: float = 10.0
    voltage: float = 5.0
    gamma: float = 1.0
    omega_c: float = 10.0
    nu: float = 10.0
    n_b: int = 1
    spinful: bool = True
    initial_state: str = "empty"

    @property
    def bath(self) -> BathDiscretization:
        return discretize_bath(self.gamma, self.omega_c, self.nu, self.n_b)

    @property
    def chemical_potentials(self) -> tuple[float, float]:
        return 0.5 * self.voltage, -0.5 * self.voltage


SPINFUL_LABELS = ("empty", "down", "up", "double")
SPINLESS_LABELS = ("empty", "occupied")


def system_state(label: str, spinful: bool) -> np.ndarray:
    """Initial impurity density matrix by name.

    Spinful basis order is ``|n_up n_down>`` = empty, down, up, double.
    ``half`` is the particle-hole symmetric singly-occupied mixture
    (spinful) or the maximally mixed state (spinless).
    """
    labels = SPINFUL_LABELS if spinful else SPINLESS_LABELS
    d = len(labels)
    rho = np.zeros((d, d), dtype=complex)
    if label == "half":
        if spinful:
            rho[1, 1] = rho[2, 2] = 0.5
        else:
            rho[0, 0] = rho[1, 1] = 0.5
        return rho
    aliases = {"unoccupied": "empty", "magnetized": "up"}
    label = aliases.get(label, label)
    if label not in labels:
        raise ConfigError(f"unknown initial state {label!r}; choose from {labels + ('half',)}")
    i = labels.index(label)
    rho[i, i] = 1.0
    return rho


def bath_occupations(p: AndersonParams) -> np.ndarray:
    """Fermi occupations of the bath modes in mode order (lead, spin, level)."""
    bath = p.bath
    n_spin = 2 if p.spinful else 1
    occ = [fermi(bath.energies - mu, p.beta) for mu in p.chemical_potentials for _ in range(n_spin)]
    return np.concatenate(occ)


def _mode_layout(p: AndersonParams):
    n_spin = 2 if p.spinful else 1
    n_sys = n_spin
    layout = []  # (mode index, lead, spin, level)
    idx = n_sys
    for lead in range(2):
        for s in range(n_spin):
            for k in range(p.n_b):
                layout.append((idx, lead, s, k))
                idx += 1
    return n_sys, layout


def build_anderson(p: AndersonParams, max_modes: int = MAX_MODES) -> ModelSpec:
    """Impurity coupled to a discretized two-lead bath; counts left-lead particles.

    With ``spinful=False`` the interaction term is absent and the model is
    the spinless resonant level.
    """
    n_sys, layout = _mode_layout(p)
    n_modes = n_sys + len(layout)
    if n_modes > max_modes:
        raise ModelTooLargeError(f"model needs {n_modes} modes, maximum is {max_modes}")
    a = jordan_wigner_ops(n_modes, max_modes)
    n = [number_op(x) for x in a]
    bath = p.bath

    h = p.epsilon * sum(n[s] for s in range(n_sys))
    if p.spinful:
        h = h + p.u * n[0] @ n[1]
    counting = np.zeros_like(h)
    for idx, lead, s, k in layout:
        hop = bath.couplings[k] * a[idx].conj().T @ a[s]
        h = h + bath.energies[k] * n[idx] + hop + hop.conj().T
        if lead == 0:
            counting = counting + n[idx]

    # environment factor built on its own Fock space; number operators carry no strings
    n_bath = len(layout)
    ae = jordan_wigner_ops(n_bath, max_modes)
    ne = [number_op(x) for x in ae]
    h_e = sum(bath.energies[k] * ne[i] for i, (_, _, _, k) in enumerate(layout))
    n_left = sum(ne[i] for i, (_, lead, _, _) in enumerate(layout) if lead == 0)
    n_right = sum(ne[i] for i, (_, lead, _, _) in enumerate(layout) if lead == 1)
    rho_e = thermal_state(h_e, p.beta, p.chemical_potentials, (n_left, n_right))

    rho_s = system_state(p.initial_state, p.spinful)
    labels = SPINFUL_LABELS if p.spinful else SPINLESS_LABELS
    kind = "anderson" if p.spinful else "resonant-level"
    return ModelSpec(h, counting, rho_s, rho_e, labels, name=kind)


def total_number(model: ModelSpec) -> np.ndarray:
    """Total particle number operator, read off the diagonal Fock basis."""
    dim = model.dim
    n_modes = int(round(np.log2(dim)))
    counts = np.array([bin(i).count("1") for i in range(dim)], dtype=float)
    if 2**n_modes != dim:
        raise DimensionError("model dimension is not a power of two")
    return np.diag(counts).astype(complex)


def impurity_number_ops(model: ModelSpec) -> list[np.ndarray]:
    """Occupation operators of the impurity modes embedded in the full space."""
    n_sys = int(round(np.log2(model.d_s)))
    n_modes = int(round(np.log2(model.dim)))
    a = jordan_wigner_ops(n_modes, max_modes=n_modes)
    return [number_op(a[s]) for s in range(n_sys)]


# ---------------------------------------------------------------------------
# presets

PRESETS = {
    # spinful Anderson level, V = 5 Gamma, one bath level per lead, dim 64
    "anderson-paper": AndersonParams(),
    # spinless level, two levels per lead, dim 32
    "resonant-level-small": AndersonParams(epsilon=0.0, u=0.0, n_b=2, spinful=False),
    # spinless level on a 64-level-per-lead bath (recurrence ~19.5/Gamma); free-fermion only
    "resonant-level-wide": AndersonParams(epsilon=0.0, u=0.0, n_b=64, spinful=False),
}

FREE_FERMION_PRESETS = {"resonant-level-wide"}


def preset(name: str, **overrides) -> AndersonParams:
    if name not in PRESETS:
        raise ConfigError(f"unknown model preset {name!r}; known: {sorted(PRESETS)}")
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(PRESETS[name], **overrides)
