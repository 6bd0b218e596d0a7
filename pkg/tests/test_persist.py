import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings

from cascade_interaction.cascades import CascadeSet
from cascade_interaction.network import all_link_indices, build_network
from cascade_interaction.persist import (
    PersistError,
    load_matrix,
    load_quantification,
    read_network_weights,
    read_triplets,
    read_vector,
    save_quantification,
    write_network,
    write_triplets,
    write_vector,
)
from cascade_interaction.quantify import quantify

from conftest import cascade_lists


def test_triplets_sorted_and_exact(tmp_path):
    B = sp.csr_matrix(([0.1, 1 / 3, 0.7], ([2, 0, 0], [1, 2, 1])), shape=(3, 3))
    write_triplets(tmp_path / "B.csv", B)
    lines = (tmp_path / "B.csv").read_text().splitlines()
    assert lines[0] == "i,j,value"
    assert [tuple(line.split(",")[:2]) for line in lines[1:]] == [("0", "1"), ("0", "2"), ("2", "1")]
    back = read_triplets(tmp_path / "B.csv", 3)
    assert np.array_equal(back.toarray(), B.toarray())


def test_bad_files(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("a,b\n")
    with pytest.raises(PersistError, match="header"):
        read_triplets(p, 3)
    p.write_text("i,j,value\n0,5,0.1\n")
    with pytest.raises(PersistError, match="outside"):
        read_triplets(p, 3)
    p.write_text("i,j,value\n0,1\n")
    with pytest.raises(PersistError, match="line 2"):
        read_triplets(p, 3)
    p.write_text("i,value\n1,0.5\n")
    with pytest.raises(PersistError, match="indices"):
        read_vector(p)


def test_vector_round_trip(tmp_path):
    v = np.array([0.0, 1e-17, 0.25, 1 / 7])
    write_vector(tmp_path / "v.csv", v)
    assert np.array_equal(read_vector(tmp_path / "v.csv"), v)


def test_load_matrix_validates(tmp_path):
    write_triplets(tmp_path / "B.csv", sp.csr_matrix(([1.5], ([0], [1])), shape=(2, 2)))
    write_vector(tmp_path / "tau.csv", [0.1, 0.1])
    with pytest.raises(PersistError):
        load_matrix(tmp_path / "B.csv", tmp_path / "tau.csv")


def test_network_file(tmp_path):
    q = quantify(CascadeSet.from_lists(3, [[[0], [1], [2]], [[0], [1]]]))
    net = all_link_indices(build_network(q.matrix), q.counts)
    write_network(tmp_path / "net.csv", net)
    assert read_network_weights(tmp_path / "net.csv") == net.weight_map()


@settings(max_examples=40, deadline=None)
@given(cascade_lists())
def test_quantification_round_trip(tmp_path_factory, data):
    n, lists = data
    q = quantify(CascadeSet.from_lists(n, lists))
    d = tmp_path_factory.mktemp("q")
    save_quantification(d, q)
    back = load_quantification(d)
    for a, b in ((q.counts.A, back.counts.A), (q.counts.A_prime, back.counts.A_prime), (q.matrix.B, back.matrix.B)):
        assert (a != b).nnz == 0
    for name in ("N", "N0", "f0"):
        assert np.array_equal(getattr(q.counts, name), getattr(back.counts, name))
    assert np.array_equal(q.matrix.tau, back.matrix.tau)
    assert back.r_id == q.r_id
