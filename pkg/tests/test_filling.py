import warnings

import numpy as np
import pytest

from besovfill import (DomainError, FillingWarning, ParseError, PointCloudSpace,
                       build_filling, check_filling, generate_space, greedy_net,
                       load_filling, partition_of_unity, save_filling)

from conftest import quiet_filling


def test_level_blocks(grid64):
    _, fl = grid64
    assert list(fl.levels) == list(range(0, 7))
    assert np.all(np.diff(fl.level) >= 0)
    assert fl.level[0] == 0 and fl.level[-1] == 6


def test_two_point_single_level_edge():
    two = PointCloudSpace("matrix", [1.0, 1.0], distances=[[0, 1], [1, 0]])
    fl = quiet_filling(two, 0, 0)
    assert fl.n_vertices == 2
    assert fl.n_edges == 1
    np.testing.assert_array_equal(fl.members(0), [0])


def test_one_point_space_has_no_edges():
    one = PointCloudSpace("euclidean", [1.0], points=[0.0])
    fl = build_filling(one, 0, 0)
    assert check_filling(fl).max_degree == 0


def test_greedy_net_is_maximal_and_separated(grid64):
    space, _ = grid64
    net = greedy_net(space.distances, 0.1)
    d = space.distances[np.ix_(net, net)]
    assert d[~np.eye(len(net), dtype=bool)].min() >= 0.1
    assert space.distances[net].min(axis=0).max() < 0.1


def test_orientation(grid64):
    _, fl = grid64
    lt, lh = fl.level[fl.tail], fl.level[fl.head]
    assert np.all(lh - lt >= 0) and np.all(lh - lt <= 1)
    same = lt == lh
    assert np.all(fl.tail[same] < fl.head[same])


def test_structure_report_on_grid256():
    space = generate_space("grid1d", 256)
    rep = check_filling(quiet_filling(space, 0, 7))
    assert rep.ok
    assert max(rep.max_overlap) <= 4
    assert rep.max_degree <= 32


def test_invalid_levels():
    with pytest.raises(DomainError):
        build_filling(generate_space("grid1d", 8), 5, 2)


def test_precondition_warnings():
    with pytest.warns(FillingWarning, match="finest radius"):
        build_filling(generate_space("cantor", 5), 0, 9)
    with pytest.warns(FillingWarning, match="coarsest radius"):
        build_filling(generate_space("grid1d", 8), 3, 4)


def test_single_vertex_level_is_one():
    space = generate_space("grid1d", 9)
    fl = quiet_filling(space, -2, 2)
    pou = partition_of_unity(fl, space, -2)
    assert pou.values.shape[0] == 1
    np.testing.assert_allclose(pou.dense(), 1.0)


def test_tent_values_grid9():
    # level 2 of grid1d(9): every point is a center, tents of half-width 1/4
    space = generate_space("grid1d", 9)
    fl = quiet_filling(space, 0, 2)
    pou = partition_of_unity(fl, space, 2).dense()
    assert pou.shape == (9, 9)
    # interior point 1/8 sees centers 0, 1/8, 1/4 with tents 1/2, 1, 1/2
    np.testing.assert_allclose(pou[:, 1], [0.25, 0.5, 0.25, 0, 0, 0, 0, 0, 0])
    # endpoint 0 sees centers 0, 1/8 with tents 1, 1/2
    np.testing.assert_allclose(pou[:2, 0], [2 / 3, 1 / 3])
    np.testing.assert_allclose(pou.sum(axis=0), 1.0)


def test_isolated_center_gets_one():
    space = PointCloudSpace("euclidean", np.ones(3), points=[0.0, 0.6, 0.65])
    fl = quiet_filling(space, 1, 1)
    pou = partition_of_unity(fl, space, 1).dense()
    assert pou[0, 0] == pytest.approx(1.0)


def test_partition_level_out_of_range(grid64):
    space, fl = grid64
    with pytest.raises(DomainError):
        partition_of_unity(fl, space, 9)


def test_pou_lipschitz(grid64):
    space, fl = grid64
    for n in fl.levels:
        assert partition_of_unity(fl, space, n).lipschitz_bound <= 6 * 2.0 ** n


def test_save_load_round_trip(tmp_path, grid64):
    space, fl = grid64
    path = tmp_path / "f.json"
    save_filling(fl, path)
    back = load_filling(path, space)
    np.testing.assert_array_equal(back.center, fl.center)
    np.testing.assert_array_equal(back.tail, fl.tail)
    np.testing.assert_allclose(back.measure, fl.measure)


def test_load_rejects_mismatched_measure(grid64):
    space, fl = grid64
    data = fl.to_dict()
    data["vertices"][3]["measure"] += 0.5
    with pytest.raises(ParseError, match="measures"):
        load_filling(data, space)


def test_determinism():
    space = generate_space("cantor", 4)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        a, b = build_filling(space, 0, 6), build_filling(space, 0, 6)
    assert a.to_dict() == b.to_dict()
