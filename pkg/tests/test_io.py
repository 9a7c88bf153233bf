import numpy as np
import pytest

from sls import io
from sls.errors import ValidationError
from sls.graph import adjacency_from_edges
from sls.laplacian import build_laplacian
from sls.solver import SlsHyperparams, fit


def test_adjacency_round_trip(tmp_path):
    adj = adjacency_from_edges([(0, 1, 0.25, 1), (2, 4, 1 / 3, -1)], 6)
    io.write_adjacency(adj, tmp_path / "a.txt")
    back = io.read_adjacency(tmp_path / "a.txt")
    assert back.p == 6
    np.testing.assert_array_equal(back.signed().toarray(), adj.signed().toarray())


def test_laplacian_round_trip(tmp_path):
    lap = build_laplacian(adjacency_from_edges([(0, 1, 0.25, 1), (1, 2, 2.0, -1)], 4),
                          normalized=True)
    io.write_laplacian(lap, tmp_path / "l.txt")
    back = io.read_laplacian(tmp_path / "l.txt")
    assert back.normalized
    np.testing.assert_array_equal(back.toarray(), lap.toarray())


def test_bad_adjacency_line(tmp_path):
    (tmp_path / "a.txt").write_text("0 1 1.0\n")
    with pytest.raises(ValidationError, match=":1:"):
        io.read_adjacency(tmp_path / "a.txt")


def test_support_file(tmp_path):
    (tmp_path / "s.txt").write_text("0, 3\n5\n")
    assert io.read_support(tmp_path / "s.txt", 6) == [0, 3, 5]
    with pytest.raises(ValidationError):
        io.read_support(tmp_path / "s.txt", 4)


def test_fit_dict(small_ds):
    res = fit(small_ds, None, SlsHyperparams(0.1))
    d = io.fit_to_dict(res, small_ds)
    assert d["support"] == [int(j) for j in np.flatnonzero(res.beta)]
    assert set(d["coefficients"]) == {f"x{j + 1}" for j in range(6)}
    assert '"converged": true' in io.dump_json(d)
