"""Fast invariant checks run by ``fcstt selftest``."""
from __future__ import annotations

import numpy as np

from .fcsprop import ExactPropagator
from .fcsstats import FcsSeries, cumulants_fd, moments_fd
from .models import build_anderson, preset
from .tomography import check_cptp
from .transfer import propagate_truncated, reconstruct_maps, tt_from_maps_stationary, tt_norm_series


def _checks():
    model = build_anderson(preset("resonant-level-small"))
    prop = ExactPropagator(model)
    rng = np.random.default_rng(7)
    dt, n = 0.02, 100
    times = dt * np.arange(n + 1)

    dev = 0.0
    for lam in (0.0, 0.3, 0.6):
        for t in (0.0, 1.3, 4.0):
            dev = max(dev, np.abs(prop.sandwich(lam, t, model.rho0) - prop.tilted(lam, t, model.rho0)).max())
    yield "sandwich and tilted propagation agree", dev <= 1e-10, dev

    dev = 0.0
    for lam in (0.0, 0.6):
        for _ in range(5):
            t = rng.uniform(0.1, 4.0)
            dev = max(dev, prop.divisibility_residual(lam, t, rng.uniform(0.0, t)))
    yield "divisibility", dev <= 1e-10, dev

    maps0 = prop.map_series(0.0, dt, n)
    worst = min(check_cptp(s).min_choi_eig for s in maps0)
    tp = max(check_cptp(s).tp_residual for s in maps0)
    yield "lambda=0 maps are CPTP", worst >= -1e-8 and tp <= 1e-8, max(-worst, tp)

    maps = prop.map_series(0.3, dt, n)
    fam = tt_from_maps_stationary(maps, m=40, lam=0.3, dt=dt)
    dev = np.abs(reconstruct_maps(fam, 40) - maps[:41]).max()
    yield "transfer-tensor identity", dev <= 1e-10, dev

    full = tt_from_maps_stationary(maps, lam=0.3, dt=dt)
    zeta = propagate_truncated(full, model.rho_s0, n)
    exact = (maps @ model.rho_s0.reshape(-1)).reshape(-1, 2, 2)
    dev = np.abs(zeta - exact).max()
    yield "untruncated propagation is exact", dev <= 1e-10, dev

    markov = np.stack([np.linalg.matrix_power(maps[1], k) for k in range(6)])
    dev = tt_norm_series(tt_from_maps_stationary(markov))[1:].max()
    yield "Markovian maps have no memory", dev <= 1e-12, dev

    h = 1e-3
    lams = np.array([0.0, h, -h, 2 * h, -2 * h])
    z = np.array([np.trace((prop.map_series(l, dt, n) @ model.rho_s0.reshape(-1)).reshape(-1, 2, 2),
                           axis1=1, axis2=2) for l in lams])
    series = FcsSeries(lams, times, z)
    m1 = moments_fd(series, 1, h, 4).values
    c1 = cumulants_fd(series, 1, h, 4).values
    pop = prop.counting_population(times)
    dev = np.abs(m1 - (pop - pop[0])).max()
    yield "first moment equals population change", dev <= 1e-6, dev
    dev = np.abs(c1 - m1).max()
    yield "first cumulant equals first moment", dev <= 1e-8, dev


def run_selftest(verbose: bool = True) -> bool:
    ok = True
    for name, passed, value in _checks():
        ok &= bool(passed)
        if verbose:
            print(f"{'PASS' if passed else 'FAIL'}  {name}  ({value:.3g})")
    return ok
