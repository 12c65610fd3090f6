import json

import numpy as np
import pytest

from besovfill import (DomainError, ParseError, PointCloudSpace, ball_measure,
                       estimate_doubling, generate_space, load_point_cloud,
                       parse_space_spec)


def test_csv_line_total_mass(tmp_path):
    path = tmp_path / "line.csv"
    path.write_text("0.0,1\n0.5,1\n1.0,1\n")
    space = load_point_cloud(path)
    assert space.n_points == 3
    assert space.total_mass == pytest.approx(3.0)
    np.testing.assert_allclose(space.coordinate(), [0.0, 0.5, 1.0])


def test_csv_header_selects_weight_column(tmp_path):
    path = tmp_path / "pts.csv"
    path.write_text("x,y\n0,0\n3,4\n")
    space = load_point_cloud(path)
    assert space.points.shape == (2, 2)
    assert space.distances[0, 1] == pytest.approx(5.0)
    assert space.total_mass == pytest.approx(2.0)


def test_json_distance_matrix(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"metric": "matrix", "distances": [[0, 1], [1, 0]],
                                "weights": [2, 3]}))
    space = load_point_cloud(path)
    assert space.n_points == 2
    assert space.total_mass == pytest.approx(5.0)


def test_negative_weight_names_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("0.0,1\n0.5,-1\n")
    with pytest.raises(DomainError, match=r"row\(s\) \[2\]"):
        load_point_cloud(path)


def test_ragged_csv_names_row(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("0,1\n1,1,1\n")
    with pytest.raises(ParseError, match="row 2"):
        load_point_cloud(path)


def test_matrix_triangle_violation():
    d = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    with pytest.raises(DomainError, match="triangle"):
        PointCloudSpace("matrix", np.ones(3), distances=d)


@pytest.mark.parametrize("d", [
    [[0, 1], [2, 0]],
    [[1, 1], [1, 0]],
    [[0, 0], [0, 0]],
])
def test_matrix_axioms(d):
    with pytest.raises(DomainError):
        PointCloudSpace("matrix", np.ones(2), distances=d)


def test_generators():
    g = generate_space("grid1d", 2)
    np.testing.assert_allclose(g.coordinate(), [0, 1])
    np.testing.assert_allclose(g.weights, [0.5, 0.5])
    c = generate_space("cantor", 1)
    np.testing.assert_allclose(c.coordinate(), [0, 2 / 3])
    np.testing.assert_allclose(c.weights, [0.5, 0.5])
    circ = generate_space("circle", 4)
    off = circ.distances[~np.eye(4, dtype=bool)]
    assert set(np.round(off, 12)) == {0.25, 0.5}
    assert generate_space("gridd", 3, 2).n_points == 9


@pytest.mark.parametrize("args", [("grid1d", 1), ("cantor", 0), ("circle", 1), ("blob", 3)])
def test_generator_errors(args):
    with pytest.raises(DomainError):
        generate_space(*args)


def test_parse_space_spec():
    assert parse_space_spec("gridd:4:2").n_points == 16
    with pytest.raises(DomainError):
        parse_space_spec("grid1d:abc")


def test_ball_measure():
    g = generate_space("grid1d", 5)
    assert ball_measure(g, 2, 0.3) == pytest.approx(0.6)
    assert ball_measure(g, 0, g.diameter + 1) == pytest.approx(1.0)
    two = PointCloudSpace("matrix", [2.0, 3.0], distances=[[0, 1], [1, 0]])
    assert ball_measure(two, 0, 1.0) == pytest.approx(2.0)
    with pytest.raises(DomainError):
        ball_measure(g, 0, 0.0)


@pytest.mark.parametrize("space,lo,hi", [
    (generate_space("grid1d", 1024), 0.8, 1.2),
    (generate_space("gridd", 32, 2), 1.7, 2.3),
    (generate_space("cantor", 6), 0.5, 0.8),
])
def test_doubling_exponent(space, lo, hi):
    est = estimate_doubling(space)
    assert lo <= est.Q <= hi
    assert est.C >= 1


def test_doubling_bound_holds_everywhere():
    space = generate_space("cantor", 4)
    est = estimate_doubling(space)
    d = space.distances
    for c in range(space.n_points):
        for r in np.unique(d[c])[1:]:
            for lam in (1.5, 2.0, 4.0):
                big = space.weights[d[c] < lam * r].sum()
                small = space.weights[d[c] < r].sum()
                assert big <= est.bound(lam) * small * (1 + 1e-12)


def test_doubling_single_point():
    with pytest.raises(DomainError):
        estimate_doubling(PointCloudSpace("euclidean", [1.0], points=[0.0]))


def test_dict_round_trip():
    space = generate_space("circle", 8)
    back = PointCloudSpace.from_dict(space.to_dict())
    np.testing.assert_array_equal(back.distances, space.distances)
