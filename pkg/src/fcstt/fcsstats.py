"""Generating functions, moments, cumulants, currents and the memory-cutoff sweep."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IncompleteDataError, StencilError, ZeroCrossingError
from .transfer import propagate_truncated, smooth_maps, tt_from_maps_stationary

# central-difference weights for d^m/dlam^m at offsets (-2, -1, 0, 1, 2) * h
_STENCILS = {
    (1, 2): np.array([0.0, -0.5, 0.0, 0.5, 0.0]),
    (2, 2): np.array([0.0, 1.0, -2.0, 1.0, 0.0]),
    (1, 4): np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
    (2, 4): np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0,
}
_OFFSETS = np.arange(-2, 3)


@dataclass(frozen=True)
class FcsSeries:
    """Generating-function values ``z[i, j] = Z(lambdas[i], times[j])``."""

    lambdas: np.ndarray
    times: np.ndarray
    z: np.ndarray
    provenance: str = "exact"

    def at(self, lam: float, tol: float = 1e-12) -> np.ndarray:
        hits = np.flatnonzero(np.abs(self.lambdas - lam) <= tol)
        if hits.size == 0:
            raise StencilError(f"counting field {lam:g} not on the grid {self.lambdas.tolist()}")
        return self.z[hits[0]]


@dataclass(frozen=True)
class FdSeries:
    """Real part of a finite-difference derivative plus its imaginary residue."""

    times: np.ndarray
    values: np.ndarray
    residue: np.ndarray


@dataclass(frozen=True)
class CurrentSeries:
    times: np.ndarray
    values: np.ndarray
    se: np.ndarray | None = None


def generating_function(zetas, lambdas, times, provenance: str = "exact") -> FcsSeries:
    """``Z = Tr zeta`` for ``zetas`` of shape ``(n_lambda, n_t, d, d)``."""
    zetas = np.asarray(zetas)
    z = np.trace(zetas, axis1=-2, axis2=-1)
    return FcsSeries(np.asarray(lambdas, dtype=float), np.asarray(times, dtype=float), z, provenance)


def _derivative(series: FcsSeries, order: int, h: float, accuracy: int, transform) -> FdSeries:
    if (order, accuracy) not in _STENCILS:
        raise ValueError(f"unsupported derivative order {order} / accuracy {accuracy}")
    weights = _STENCILS[(order, accuracy)]
    acc = np.zeros(series.times.size, dtype=complex)
    for off, w in zip(_OFFSETS, weights):
        if w == 0.0:
            continue
        lam = off * h
        acc += w * transform(series.at(lam), lam)
    # d/d(i lam) = -i d/dlam
    val = acc / (1j * h) ** order
    return FdSeries(series.times, val.real.copy(), val.imag.copy())


def moments_fd(series: FcsSeries, order: int, h: float = 1e-2, accuracy: int = 2) -> FdSeries:
    """``<(Delta A)^order>`` from central differences of Z in ``i lam``."""
    return _derivative(series, order, h, accuracy, lambda z, lam: z)


def cumulants_fd(series: FcsSeries, order: int, h: float = 1e-2, accuracy: int = 2) -> FdSeries:
    """Cumulants from central differences of ``ln Z`` in ``i lam``."""
    def log_z(z, lam):
        small = np.flatnonzero(np.abs(z) < 1e-300)
        if small.size:
            raise ZeroCrossingError(lam, float(series.times[small[0]]))
        return np.log(z)
    return _derivative(series, order, h, accuracy, log_z)


def current(c1, dt: float) -> CurrentSeries:
    """Particle flow out of the counted reservoir, ``I = -dC1/dt``.

    Central differences inside the grid, one-sided at the ends. With the
    left-lead number as counting operator this is the left current, positive
    for transport from left to right.
    """
    if isinstance(c1, FdSeries):
        times, vals = c1.times, c1.values
    else:
        vals = np.asarray(c1, dtype=float)
        times = dt * np.arange(vals.size)
    if vals.size < 3:
        raise IncompleteDataError("current needs at least three time points")
    return CurrentSeries(np.asarray(times), -np.gradient(vals, dt))


def steady_state(c: CurrentSeries, tail_start: float | None = None) -> tuple[float, float]:
    """Mean and standard error of the current for ``t >= tail_start``.

    The default tail is the final eighth of the time grid.
    """
    t = np.asarray(c.times)
    if tail_start is None:
        tail_start = t[0] + 0.875 * (t[-1] - t[0])
    tail = np.asarray(c.values)[t >= tail_start - 1e-12]
    if tail.size < 10:
        raise IncompleteDataError(f"tail has {tail.size} points, need at least 10")
    return float(tail.mean()), float(tail.std(ddof=1) / np.sqrt(tail.size))


# -- reconstruction pipeline -------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    t_m: float
    i_ss: float
    se: float
    flag: str = ""

    @property
    def inv_t_m(self) -> float:
        return 1.0 / self.t_m


def reconstruct_z(maps_by_lam: dict, rho_s0, dt: float, m: int, n_steps: int,
                  smoothing: int = 0) -> FcsSeries:
    """Truncated TT propagation of ``rho_s0`` for every counting field.

    Maps ``0..m`` are smoothed, converted to tensors ``T_1..T_m`` and the
    generalized state is propagated from ``rho_s0`` to ``n_steps``.
    """
    lambdas = sorted(maps_by_lam)
    z = np.empty((len(lambdas), n_steps + 1), dtype=complex)
    for i, lam in enumerate(lambdas):
        maps = np.asarray(maps_by_lam[lam])
        if maps.shape[0] <= m:
            raise IncompleteDataError(f"cutoff {m} exceeds data horizon {maps.shape[0] - 1}")
        sm = smooth_maps(maps[:m + 1], smoothing)
        fam = tt_from_maps_stationary(sm, lam=lam, dt=dt, smoothing=smoothing)
        zeta = propagate_truncated(fam, rho_s0, n_steps)
        z[i] = np.trace(zeta, axis1=1, axis2=2)
    prov = f"reconstructed(m={m},N={smoothing})"
    return FcsSeries(np.array(lambdas, dtype=float), dt * np.arange(n_steps + 1), z, prov)


def current_from_series(series: FcsSeries, dt: float, h: float = 1e-2, accuracy: int = 2) -> CurrentSeries:
    c1 = cumulants_fd(series, 1, h, accuracy)
    return current(c1, dt)


def cutoff_sweep_maps(maps_by_lam: dict, rho_s0, dt: float, cutoffs, horizon: float,
                      smoothing: int = 0, h: float = 1e-2, accuracy: int = 2,
                      tail_start: float | None = None) -> list[SweepRow]:
    """Steady-state current versus memory cutoff from a fixed map dataset."""
    n_steps = int(round(horizon / dt))
    rows = []
    for t_m in cutoffs:
        m = int(round(t_m / dt))
        series = reconstruct_z(maps_by_lam, rho_s0, dt, m, n_steps, smoothing)
        try:
            cur = current_from_series(series, dt, h, accuracy)
            mean, se = steady_state(cur, tail_start)
            flag = "" if np.isfinite(mean) else "nonfinite"
        except ZeroCrossingError as exc:
            mean, se, flag = float("nan"), float("nan"), f"zero-crossing at t={exc.time:g}"
        rows.append(SweepRow(m * dt, mean, se, flag))
    return rows


def cutoff_sweep(propagator, lambdas, dt: float, cutoffs, horizon: float,
                 smoothing: int = 0, h: float = 1e-2, accuracy: int = 2,
                 tail_start: float | None = None) -> list[SweepRow]:
    """Exact short-time tomography up to the largest cutoff, then :func:`cutoff_sweep_maps`."""
    m_max = int(round(max(cutoffs) / dt))
    if max(cutoffs) > horizon + 1e-12:
        raise ValueError("cutoffs must not exceed the horizon")
    maps = {float(lam): propagator.map_series(lam, dt, m_max) for lam in lambdas}
    return cutoff_sweep_maps(maps, propagator.rho_s0, dt, cutoffs, horizon, smoothing, h,
                             accuracy, tail_start)


def exact_series(propagator, lambdas, times) -> FcsSeries:
    """Exact ``Z(lam, t)`` via the map series applied to ``rho_s0``."""
    rho = np.asarray(propagator.rho_s0).reshape(-1)
    z = []
    for lam in lambdas:
        maps = propagator.map_series_at(lam, times)
        d = propagator.d_s
        zeta = (maps @ rho).reshape(-1, d, d)
        z.append(np.trace(zeta, axis1=1, axis2=2))
    return FcsSeries(np.asarray(lambdas, dtype=float), np.asarray(times, dtype=float), np.array(z))
