import numpy as np
import pytest

from scmavlc.exceptions import (
    CapacityError,
    DimensionError,
    DomainError,
    ImmutabilityError,
)
from scmavlc.model import (
    Codebook,
    CodebookSet,
    FactorGraph,
    SystemParams,
    build_factor_graph,
    codeword,
    enumerate_superimposed,
    mapping_from_graph,
    natural_binary_labels,
    power,
    scale_codebook_set,
)


def test_params_defaults_and_derived():
    params = SystemParams()
    assert (params.K, params.J, params.M, params.N) == (4, 6, 4, 2)
    assert params.bits_per_symbol == 2
    assert params.load_factor == 1.5
    assert params.n_points == 4096
    assert params.replace(J=3).n_points == 64


@pytest.mark.parametrize(
    "changes, error",
    [
        ({"J": 7}, DimensionError),
        ({"N": 5}, DimensionError),
        ({"M": 3}, DomainError),
        ({"sigma2": 0.0}, DomainError),
        ({"varsigma2": -1.0}, DomainError),
        ({"Pe": 0.0}, DomainError),
    ],
)
def test_params_validation(changes, error):
    with pytest.raises(error):
        SystemParams(**changes)


def test_params_type_checks():
    with pytest.raises(TypeError):
        SystemParams(J=3.0)
    with pytest.raises(TypeError):
        SystemParams(sigma2="0.01")


def test_params_immutability():
    params = SystemParams()
    with pytest.raises(ImmutabilityError):
        params.J = 3
    with pytest.raises(ImmutabilityError):
        del params.Pe


def test_full_factor_graph():
    graph = build_factor_graph(4, 6, 2)
    assert graph.F.sum(axis=0).tolist() == [2] * 6
    assert graph.df_per_rn.tolist() == [3, 3, 3, 3]
    assert graph.vn_neighbors[0] == (1, 3)
    assert graph.vn_neighbors[2] == (0, 1)
    assert graph.rn_neighbors[0] == (1, 2, 4)
    assert graph.is_regular
    assert not graph.is_tree


def test_three_user_graph_is_a_tree():
    graph = build_factor_graph(4, 3, 2)
    assert np.array_equal(graph.F, build_factor_graph(4, 6, 2).F[:, :3])
    assert graph.df_per_rn.tolist() == [2, 2, 1, 1]
    assert not graph.is_regular
    assert graph.is_tree
    assert graph.diameter >= 4


def test_too_many_users():
    with pytest.raises(DimensionError):
        build_factor_graph(4, 7, 2)


def test_generic_supports_are_lexicographic():
    graph = build_factor_graph(5, 3, 2)
    assert graph.vn_neighbors == ((0, 1), (0, 2), (0, 3))


def test_factor_graph_rejects_bad_matrices():
    with pytest.raises(DomainError):
        FactorGraph([[2, 0], [0, 1]])
    with pytest.raises(DimensionError):
        FactorGraph([[1, 1], [0, 1]])
    with pytest.raises(DimensionError):
        FactorGraph([[1, 1], [1, 1]])


def test_mapping_matrices():
    graph = build_factor_graph(4, 6, 2)
    V0 = mapping_from_graph(graph, 0).V
    assert np.flatnonzero(V0.sum(axis=1)).tolist() == [1, 3]
    V2 = mapping_from_graph(graph, 2).V
    assert np.flatnonzero(V2.sum(axis=1)).tolist() == [0, 1]
    for j in range(6):
        V = mapping_from_graph(graph, j).V
        assert np.array_equal(V.T @ V, np.eye(2))
        assert np.array_equal(np.diag(V @ V.T), graph.F[:, j])
    with pytest.raises(IndexError):
        mapping_from_graph(graph, 6)
    with pytest.raises(IndexError):
        mapping_from_graph(graph, -1)


def test_codeword(ls_j3):
    x = codeword(ls_j3, 0, 0)
    assert x.tolist() == [0.0, 2.7712, 0.0, 4.4089]
    assert np.flatnonzero(x).tolist() == [1, 3]
    with pytest.raises(IndexError):
        codeword(ls_j3, 0, 4)
    with pytest.raises(IndexError):
        codeword(ls_j3, 3, 0)


def test_zero_codeword():
    params = SystemParams(J=3)
    graph = build_factor_graph(4, 3, 2)
    books = [np.zeros((2, 4)) for _ in range(3)]
    assert not codeword(CodebookSet(params, graph, books), 1, 2).any()


def test_enumerate_superimposed(ls_j3):
    constellation = enumerate_superimposed(ls_j3)
    assert len(constellation) == 64
    assert constellation.index_tuples[27].tolist() == [1, 2, 3]
    np.testing.assert_allclose(
        constellation.points[0], [0.02, 2.7812, 0.01, 4.4089], rtol=0, atol=1e-12
    )
    assert (constellation.points >= 0).all()
    for i in (0, 5, 63):
        total = sum(
            codeword(ls_j3, j, m) for j, m in enumerate(constellation.index_tuples[i])
        )
        assert np.array_equal(total, constellation.points[i])


def test_labels_follow_point_index(ls_j3):
    constellation = enumerate_superimposed(ls_j3)
    weights = 2 ** np.arange(5, -1, -1)
    assert (constellation.bit_labels @ weights).tolist() == list(range(64))
    assert natural_binary_labels(np.array([0, 1, 2, 3]), 2).tolist() == [
        [0, 0],
        [0, 1],
        [1, 0],
        [1, 1],
    ]


def test_covariances(ls_j3):
    constellation = enumerate_superimposed(ls_j3)
    params = ls_j3.params
    expected = params.varsigma2 * params.sigma2 * constellation.points + params.sigma2
    assert np.array_equal(constellation.covariances, expected)
    assert (constellation.covariances >= params.sigma2).all()


def test_enumeration_is_linear_per_user(ls_j3):
    base = enumerate_superimposed(ls_j3).points
    books = [book.C for book in ls_j3.books]
    books[1] = 2 * books[1]
    doubled = enumerate_superimposed(ls_j3.with_books(books)).points
    symbols = enumerate_superimposed(ls_j3).index_tuples[:, 1]
    contribution = np.stack([codeword(ls_j3, 1, m) for m in symbols])
    np.testing.assert_allclose(doubled - base, contribution, rtol=0, atol=1e-12)


def test_enumeration_capacity(ls_j6):
    assert len(enumerate_superimposed(ls_j6)) == 4096
    with pytest.raises(CapacityError):
        enumerate_superimposed(ls_j6, max_points=1000)


def test_power(dr_j3):
    assert power(dr_j3.books[0]) == pytest.approx(29.93, abs=5e-3)
    assert power(np.zeros((2, 4))) == 0
    C = dr_j3.books[2].C
    assert power(3 * C) == pytest.approx(9 * power(C))


def test_scale_codebook_set(dr_j3):
    same = scale_codebook_set(dr_j3, dr_j3.max_power())
    np.testing.assert_allclose(same.books[0].C, dr_j3.books[0].C, rtol=1e-15)

    quarter = scale_codebook_set(dr_j3, dr_j3.max_power() / 4)
    np.testing.assert_allclose(quarter.books[1].C, dr_j3.books[1].C / 2, rtol=1e-12)

    scaled = scale_codebook_set(dr_j3, 15.0)
    assert scaled.max_power() == pytest.approx(15.0, abs=1e-9)
    assert scaled.params.Pe == 15.0


def test_scale_zero_set():
    params = SystemParams(J=3)
    graph = build_factor_graph(4, 3, 2)
    books = [np.zeros((2, 4)) for _ in range(3)]
    with pytest.raises(DomainError):
        scale_codebook_set(CodebookSet(params, graph, books), 10.0)


def test_codebook_set_checks(ls_j3):
    params = ls_j3.params
    with pytest.raises(DimensionError):
        CodebookSet(params, ls_j3.graph, [book.C for book in ls_j3.books[:2]])
    with pytest.raises(DimensionError):
        CodebookSet(params, ls_j3.graph, [np.zeros((2, 3))] * 3)
    with pytest.raises(DimensionError):
        CodebookSet(params, build_factor_graph(4, 4, 2), ls_j3.books)
    with pytest.raises(DomainError):
        Codebook([[-1.0, 0.0]], 0)


def test_arrays_are_read_only(ls_j3):
    with pytest.raises(ValueError):
        ls_j3.books[0].C[0, 0] = 1.0
    with pytest.raises(ValueError):
        ls_j3.graph.F[0, 0] = 1
