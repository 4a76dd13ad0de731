import numpy as np
import pytest

from fcstt.dataio import read_dataset, read_families, write_dataset, write_families
from fcstt.errors import IncompleteDataError
from fcstt.tomography import dataset_from_propagator
from fcstt.transfer import tt_from_maps_stationary


@pytest.fixture(scope="module")
def small_ds(request):
    prop = request.getfixturevalue("rl_prop")
    return dataset_from_propagator(prop, [0.0, 0.3, -0.3], 0.02, 12, meta={"note": "x"})


def test_round_trip_bit_stable(small_ds, tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    write_dataset(a, small_ds)
    back = read_dataset(a)
    assert np.array_equal(back.data, small_ds.data)
    assert back.lambdas == small_ds.lambdas and back.dt == small_ds.dt
    assert back.meta == {"note": "x"}
    write_dataset(b, back)
    assert a.read_bytes() == b.read_bytes()


def test_record_count(small_ds, tmp_path):
    path = tmp_path / "d.txt"
    write_dataset(path, small_ds)
    records = [l for l in path.read_text().splitlines() if l.startswith("L,")]
    assert len(records) == 2**4 * 3 * 12


def test_pauli_round_trip(rl_prop, tmp_path):
    ds = dataset_from_propagator(rl_prop, [0.3], 0.02, 4, "pauli", "pauli")
    write_dataset(tmp_path / "p.txt", ds)
    back = read_dataset(tmp_path / "p.txt")
    assert np.array_equal(back.data[:, 1:], ds.data[:, 1:])
    assert np.abs(back.data - ds.data).max() < 1e-14


def test_incomplete(small_ds, tmp_path):
    path = tmp_path / "d.txt"
    write_dataset(path, small_ds)
    lines = path.read_text().splitlines()
    (tmp_path / "cut.txt").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(IncompleteDataError):
        read_dataset(tmp_path / "cut.txt")
    (tmp_path / "bad.txt").write_text("hello\n")
    with pytest.raises(IncompleteDataError):
        read_dataset(tmp_path / "bad.txt")
    with pytest.raises(IncompleteDataError):
        read_families(path)


def test_families_round_trip(small_ds, tmp_path):
    fams = [tt_from_maps_stationary(small_ds.data[i], lam=lam, dt=0.02, smoothing=2)
            for i, lam in enumerate(small_ds.lambdas)]
    write_families(tmp_path / "t.txt", fams)
    back = read_families(tmp_path / "t.txt")
    for f, g in zip(fams, back):
        assert np.array_equal(f.tensors, g.tensors) and f.lam == g.lam and g.smoothing == 2
    assert (tmp_path / "t.txt").read_text().splitlines()[3].startswith("T,0,1,")
