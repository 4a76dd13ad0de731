import numpy as np
import pytest

from fcstt.errors import DimensionError, IncompleteDataError
from fcstt.transfer import (general_identity_residual, propagate_truncated,
                            reconstruct_maps, smooth_maps, tt_from_maps_general,
                            tt_from_maps_stationary, tt_norm_series)

from pinned import NORM_DECAY_RATIO_BOUND, NORM_LAMBDA_REL_BOUND


def markov_family(rng, n=12, dim=4):
    l1 = np.eye(dim) + 0.1 * (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return np.stack([np.linalg.matrix_power(l1, k) for k in range(n + 1)])


@pytest.fixture(scope="module")
def rl_maps(request):
    prop = request.getfixturevalue("rl_prop")
    return {lam: prop.map_series(lam, 0.02, 100) for lam in (0.0, 0.3)}


def test_single_lag(rng):
    maps = markov_family(rng, 3)
    fam = tt_from_maps_stationary(maps, m=1)
    assert fam.m == 1 and np.abs(fam.tensors[0] - maps[1]).max() == 0
    assert fam[1].n == 1


def test_markovian_collapse(rng):
    maps = markov_family(rng)
    fam = tt_from_maps_stationary(maps)
    assert tt_norm_series(fam)[1:].max() < 1e-12
    assert np.abs(reconstruct_maps(fam.truncated(1), 12) - maps).max() < 1e-12
    rho = np.diag([0.6, 0.4]).astype(complex)
    exact = (maps @ rho.reshape(-1)).reshape(-1, 2, 2)
    for m in (1, 3, 12):
        assert np.abs(propagate_truncated(fam.truncated(m), rho, 12) - exact).max() < 1e-12


def test_reconstruct_identity(rl_maps):
    for lam, maps in rl_maps.items():
        fam = tt_from_maps_stationary(maps, m=40, lam=lam, dt=0.02)
        rec = reconstruct_maps(fam, 40)
        assert np.abs(rec - maps[:41]).max() < 1e-10
        assert np.abs(rec[1] - maps[1]).max() == 0


def test_untruncated_propagation_exact(rl_maps, rl_prop):
    maps = rl_maps[0.3]
    fam = tt_from_maps_stationary(maps, lam=0.3, dt=0.02)
    zeta = propagate_truncated(fam, rl_prop.rho_s0, 100)
    exact = (maps @ rl_prop.rho_s0.reshape(-1)).reshape(-1, 2, 2)
    assert np.abs(zeta - exact).max() < 1e-10
    # a longer exact history is used verbatim
    zeta2 = propagate_truncated(fam.truncated(20), exact[:60], 100)
    assert np.abs(zeta2[:60] - exact[:60]).max() == 0


def test_lambda_free_recursion(rl_maps, rl_prop):
    # ordinary three-lag transfer tensors written out by hand
    l = rl_maps[0.0]
    t1 = l[1]
    t2 = l[2] - t1 @ l[1]
    t3 = l[3] - t1 @ l[2] - t2 @ l[1]
    fam = tt_from_maps_stationary(l, m=3)
    for a, b in zip(fam.tensors, (t1, t2, t3)):
        assert np.abs(a - b).max() < 1e-12
    rho = [rl_prop.rho_s0.reshape(-1)]
    for n in range(1, 30):
        nxt = sum(t @ rho[n - k] for k, t in enumerate((t1, t2, t3), start=1) if n - k >= 0)
        rho.append(nxt)
    ref = np.array(rho).reshape(-1, 2, 2)
    assert np.abs(propagate_truncated(fam, rl_prop.rho_s0, 29) - ref).max() < 1e-12


def test_errors(rng):
    maps = markov_family(rng, 3)
    with pytest.raises(IncompleteDataError):
        tt_from_maps_stationary(maps, m=5)
    with pytest.raises(DimensionError):
        tt_from_maps_stationary(maps[:, :3])
    fam = tt_from_maps_stationary(maps)
    with pytest.raises(DimensionError):
        propagate_truncated(fam, np.eye(3), 5)


def test_general_grid_two_points(rng):
    lam = rng.normal(size=(4, 4))
    out = tt_from_maps_general({(1, 0): lam})
    assert list(out) == [(1, 1)] and np.abs(out[(1, 1)] - lam).max() == 0
    with pytest.raises(IncompleteDataError):
        tt_from_maps_general({(2, 0): lam, (1, 0): lam})


def test_general_grid_uniform(rl_maps):
    maps = rl_maps[0.3]
    j_max = 6
    grid = {(j, k): maps[j - k] for j in range(1, j_max + 1) for k in range(j)}
    gen = tt_from_maps_general(grid)
    fam = tt_from_maps_stationary(maps, m=j_max)
    for (j, n), t in gen.items():
        assert np.abs(t - fam.tensors[n - 1]).max() < 1e-12


def test_general_grid_nonuniform(rl_prop):
    times = [0.0, 0.1, 0.35, 0.4]
    grid = {}
    for j in range(1, 4):
        for k in range(j):
            grid[(j, k)] = rl_prop.map_series_at(0.6, [times[j] - times[k]])[0]
    tensors = tt_from_maps_general(grid)
    assert general_identity_residual(grid, tensors) < 1e-10


def test_smoothing_trivial(rng):
    maps = markov_family(rng, 10)
    assert np.array_equal(smooth_maps(maps, 0), maps)
    const = np.broadcast_to(maps[3], maps.shape).copy()
    const[0] = np.eye(4)
    assert np.abs(smooth_maps(const, 6) - const).max() < 1e-14
    with pytest.raises(ValueError):
        smooth_maps(maps, -1)


def test_smoothing_windows():
    # scalar ramp makes every window mean equal to the window centre
    vals = np.arange(11.0) ** 2
    maps = vals[:, None, None] * np.ones((1, 1, 1))
    out = smooth_maps(maps, 3)[:, 0, 0].real
    m = 10
    for n in range(1, m + 1):
        w = min(3, n - 1, m - n)
        assert abs(out[n] - vals[n - w:n + w + 1].mean()) < 1e-12
    assert out[0] == 0.0


def test_smoothing_noise_reduction():
    base = np.zeros((41, 4, 4), dtype=complex)
    errs_raw, errs_sm = [], []
    for seed in range(200):
        g = np.random.default_rng(seed)
        noise = 1e-3 * (g.normal(size=base.shape) + 1j * g.normal(size=base.shape))
        noise[0] = 0
        sm = smooth_maps(base + noise, 6)
        errs_raw.append(np.abs(noise[10:31]) ** 2)
        errs_sm.append(np.abs(sm[10:31]) ** 2)
    ratio = np.sqrt(np.mean(errs_sm) / np.mean(errs_raw))
    assert abs(ratio - 1 / np.sqrt(13)) < 0.01


def test_norms(rng):
    maps = markov_family(rng, 5)
    fam = tt_from_maps_stationary(maps)
    norms = tt_norm_series(fam)
    assert abs(norms[0] - np.linalg.norm(maps[1])) < 1e-14
    assert norms[1:].max() < 1e-12


@pytest.fixture(scope="module")
def wide_norms(request):
    prop = request.getfixturevalue("wide_prop")
    return {lam: tt_norm_series(tt_from_maps_stationary(prop.map_series(lam, 0.02, 100)))
            for lam in (0.0, 0.3)}


def test_norm_decay_wide(wide_norms):
    n0 = wide_norms[0.0]
    tail = n0[50:].max()
    assert tail * 10 < n0[0]
    assert tail / n0[0] < NORM_DECAY_RATIO_BOUND


def test_norm_weak_lambda_dependence(wide_norms):
    rel = np.abs(wide_norms[0.3] - wide_norms[0.0]) / wide_norms[0.0]
    assert rel.max() < NORM_LAMBDA_REL_BOUND
