import numpy as np
import pytest

from fcstt.errors import DimensionError, IncompleteDataError, SingularBasisError
from fcstt.tomography import (MapDataset, build_map_from_dataset, build_map_selfdual, check_cptp,
                              check_first_order_tp, data_from_superop, dataset_from_propagator,
                              dual_basis, inject_noise, measure_map, pauli_basis,
                              project_cptp, selfdual_basis, superop_from_data)


def test_dual_of_selfdual():
    b = selfdual_basis(3)
    for x, y in zip(b, dual_basis(b)):
        assert np.abs(x - y).max() < 1e-14


def test_dual_of_pauli():
    b = pauli_basis(2)
    for x, y in zip(b, dual_basis(b)):
        assert np.abs(y - x / 2).max() < 1e-14


def test_dual_pairing_random(rng):
    b = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4)]
    dual = dual_basis(b)
    gram = np.array([[np.trace(w.conj().T @ x) for x in b] for w in dual])
    assert np.abs(gram - np.eye(4)).max() < 1e-10


def test_dual_singular():
    b = selfdual_basis(2)
    b[3] = b[0] + b[1]
    with pytest.raises(SingularBasisError) as info:
        dual_basis(b)
    assert info.value.condition_number > 1e12
    with pytest.raises(DimensionError):
        dual_basis(b[:3])
    with pytest.raises(DimensionError):
        pauli_basis(3)


def test_selfdual_map(rl_prop):
    m0 = build_map_selfdual(rl_prop, 0.3, 0, 0.02)
    assert np.abs(m0.sup - np.eye(4)).max() < 1e-14
    rep = check_cptp(build_map_selfdual(rl_prop, 0.0, 50, 0.02))
    assert rep.passed and rep.min_choi_eig > -1e-10 and rep.tp_residual < 1e-10
    m = build_map_selfdual(rl_prop, 0.3, 25, 0.02)
    zeta = rl_prop.reduced_zeta(0.3, 0.5).matrix
    assert np.abs(m(rl_prop.rho_s0) - zeta).max() < 1e-10


def test_linearity(rl_prop, rng):
    m = build_map_selfdual(rl_prop, 0.6, 40, 0.02)
    x, y = rng.normal(size=(2, 2)) + 0j, rng.normal(size=(2, 2)) * 1j
    assert np.abs(m(2 * x - 3j * y) - (2 * m(x) - 3j * m(y))).max() < 1e-12


def test_hermiticity_pairing(rl_prop):
    mp = build_map_selfdual(rl_prop, 0.3, 60, 0.02)
    mm = build_map_selfdual(rl_prop, -0.3, 60, 0.02)
    for x in selfdual_basis(2):
        assert np.abs(mm(x.conj().T).conj().T - mp(x)).max() < 1e-10


def test_pauli_dataset_matches_selfdual(rl_prop):
    t = 1.3
    pb = pauli_basis(2)
    data = measure_map(rl_prop, 0.3, t, pb, pb)
    sup = superop_from_data(data, pb, pb)
    direct = rl_prop.map_series_at(0.3, [t])[0]
    assert np.abs(sup - direct).max() < 1e-10


def test_mixed_bases_round_trip(rng):
    s = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    xb = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(4)]
    yb = pauli_basis(2)
    assert np.abs(superop_from_data(data_from_superop(s, xb, yb), xb, yb) - s).max() < 1e-10


def test_dataset_routes(rl_prop):
    sd = dataset_from_propagator(rl_prop, [0.0, 0.3], 0.02, 10)
    pl = dataset_from_propagator(rl_prop, [0.0, 0.3], 0.02, 10, "pauli", "pauli")
    a, b = build_map_from_dataset(sd), build_map_from_dataset(pl)
    for lam in (0.0, 0.3):
        assert np.abs(a[lam] - rl_prop.map_series(lam, 0.02, 10)).max() < 1e-12
        assert np.abs(a[lam] - b[lam]).max() < 1e-10


def test_identity_dataset():
    data = np.broadcast_to(np.eye(4), (1, 6, 4, 4))
    ds = MapDataset((0.0,), 0.1, 5, 2, data)
    maps = build_map_from_dataset(ds)[0.0]
    assert np.abs(maps - np.eye(4)).max() == 0
    with pytest.raises(IncompleteDataError):
        MapDataset((0.0,), 0.1, 5, 2, data[:, :3])


def test_cptp_identity():
    rep = check_cptp(np.eye(4))
    assert abs(rep.min_choi_eig) < 1e-15 and rep.tp_residual == 0


def test_noise_breaks_positivity(rl_prop):
    # the n = 0 map has a rank-one Choi matrix, so noise of size sigma pushes
    # its smallest eigenvalue below zero by O(sigma)
    sup = rl_prop.map_series_at(0.0, [0.0])[0]
    eigs = []
    for seed in range(200):
        noisy = inject_noise(sup[None], 1e-3, np.random.default_rng(seed), skip_first=False)[0]
        eigs.append(check_cptp(noisy).min_choi_eig)
    eigs = np.array(eigs)
    assert (eigs < 0).mean() > 0.9
    assert 1e-4 < np.median(-eigs) < 1e-2


def test_noise_statistics():
    maps = np.zeros((2000, 4, 4), dtype=complex)
    noisy = inject_noise(maps, 1e-3, np.random.default_rng(1))
    assert np.abs(noisy[0]).max() == 0
    assert abs(noisy[1:].real.std() - 1e-3) < 2e-5 and abs(noisy[1:].imag.std() - 1e-3) < 2e-5
    again = inject_noise(maps, 1e-3, np.random.default_rng(1))
    assert np.array_equal(noisy, again)


def test_first_order_trace_condition(rl_prop):
    t = 1.0
    a_t, a_0 = rl_prop.heisenberg_counting_reduced(t), rl_prop.heisenberg_counting_reduced(0.0)
    sup0 = rl_prop.map_series_at(0.0, [t])[0]
    assert check_first_order_tp(sup0, a_t, a_0, 0.0) < 1e-10
    r = [check_first_order_tp(rl_prop.map_series_at(lam, [t])[0], a_t, a_0, lam) for lam in (0.1, 0.05)]
    assert 3.5 < r[0] / r[1] < 4.5


def test_first_order_trace_conserved_counting(rng):
    from fcstt.fcsprop import ExactPropagator
    from fcstt.models import ModelSpec
    h = np.kron(np.diag([0.0, 1.0]), np.eye(2)) + np.kron(np.eye(2), np.diag([0.3, -0.2]))
    a = np.kron(np.eye(2), np.diag([0.0, 1.0]))
    m = ModelSpec(h.astype(complex), a.astype(complex), np.diag([1.0, 0.0]).astype(complex),
                  np.diag([0.5, 0.5]).astype(complex))
    prop = ExactPropagator(m)
    a_t, a_0 = prop.heisenberg_counting_reduced(2.0), prop.heisenberg_counting_reduced(0.0)
    assert np.abs(a_t - a_0).max() < 1e-12
    sup = prop.map_series_at(0.4, [2.0])[0]
    assert check_first_order_tp(sup, a_t, a_0, 0.4) < 1e-12


def test_project_cptp(rl_prop):
    sup = rl_prop.map_series_at(0.0, [0.0])[0]
    noisy = inject_noise(sup[None], 1e-3, np.random.default_rng(3), skip_first=False)[0]
    fixed = project_cptp(noisy)
    rep = check_cptp(fixed, tol=1e-8)
    assert rep.passed
    assert np.abs(fixed - sup).max() < 1e-2
