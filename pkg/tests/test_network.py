"""Tests for random geometric networks, weights algebra and the edge-list format."""
import numpy as np
import pytest

from netdiff import DataValidationError, InvalidArgumentError, ParseError
from netdiff.network.geometry import (
    build_network,
    eigen_bounds,
    generate_random_geometric,
    row_normalize,
)
from netdiff.network.io import network_io, read_network, write_network


class TestGenerateRandomGeometric:
    def test_single_node(self):
        net = generate_random_geometric(1, 5.0, seed=7)
        assert net.n == 1
        assert net.edge_count == 0
        assert np.all(net.weights == 0)

    def test_mean_degree_near_target(self):
        net = generate_random_geometric(250, 5.0, seed=3)
        assert abs(net.mean_degree - 5.0) <= 0.5

    def test_ties_follow_the_radius(self):
        net = generate_random_geometric(60, 5.0, seed=1)
        diff = net.coords[:, None, :] - net.coords[None, :, :]
        distances = np.sqrt((diff**2).sum(axis=2))
        expected = (distances <= net.radius).astype(int)
        np.fill_diagonal(expected, 0)
        np.testing.assert_array_equal(net.adjacency, expected)

    def test_adjacency_symmetric(self):
        net = generate_random_geometric(80, 4.0, seed=5)
        np.testing.assert_array_equal(net.adjacency, net.adjacency.T)

    def test_same_seed_same_network(self):
        a = generate_random_geometric(50, 5.0, seed=9)
        b = generate_random_geometric(50, 5.0, seed=9)
        np.testing.assert_array_equal(a.coords, b.coords)
        np.testing.assert_array_equal(a.adjacency, b.adjacency)
        assert a.radius == b.radius

    def test_different_seed_different_points(self):
        a = generate_random_geometric(50, 5.0, seed=9)
        b = generate_random_geometric(50, 5.0, seed=10)
        assert not np.array_equal(a.coords, b.coords)

    def test_zero_nodes_rejected(self):
        with pytest.raises(InvalidArgumentError):
            generate_random_geometric(0, 5.0, seed=1)

    def test_unreachable_target_rejected(self):
        with pytest.raises(InvalidArgumentError):
            generate_random_geometric(5, 4.0, seed=1)

    def test_arrays_are_read_only(self):
        net = generate_random_geometric(10, 2.0, seed=1)
        with pytest.raises(ValueError):
            net.weights[0, 0] = 1.0


class TestRowNormalize:
    def test_path_middle_row(self, path3):
        np.testing.assert_array_equal(path3.weights[1], [0.5, 0.0, 0.5])

    def test_zero_matrix_unchanged(self):
        np.testing.assert_array_equal(row_normalize(np.zeros((4, 4))), np.zeros((4, 4)))

    def test_rows_with_neighbours_sum_to_one(self):
        net = generate_random_geometric(40, 4.0, seed=2)
        sums = net.weights.sum(axis=1)
        np.testing.assert_allclose(sums[net.degrees > 0], 1.0, atol=1e-12)

    def test_idempotent_on_normalized_rows(self, path3):
        adjacency = (path3.weights > 0).astype(float)
        np.testing.assert_array_equal(row_normalize(adjacency), path3.weights)

    def test_nonsquare_rejected(self):
        with pytest.raises(InvalidArgumentError):
            row_normalize(np.zeros((2, 3)))

    def test_nonzero_diagonal_rejected(self):
        with pytest.raises(InvalidArgumentError):
            row_normalize(np.eye(3))


class TestEigenBounds:
    def test_dyad(self, dyad):
        lo, hi = eigen_bounds(dyad.weights)
        assert lo == pytest.approx(-1.0)
        assert hi == pytest.approx(1.0)

    def test_zero_matrix(self):
        assert eigen_bounds(np.zeros((3, 3))) == (0.0, 0.0)

    def test_perron_root_of_row_stochastic(self, ring):
        _, hi = eigen_bounds(ring.weights)
        assert hi == pytest.approx(1.0, abs=1e-8)


class TestNetworkFile:
    def test_write_then_read(self, tmp_path):
        net = generate_random_geometric(30, 4.0, seed=4)
        path = tmp_path / "net.txt"
        write_network(path, net, header_lines=["netdiff config_hash=abc master_seed=1"])
        back = read_network(path)
        np.testing.assert_array_equal(back.adjacency, net.adjacency)
        np.testing.assert_array_equal(back.coords, net.coords)
        assert back.radius == net.radius

    def test_self_loop_rejected(self, tmp_path):
        path = tmp_path / "net.txt"
        path.write_text("n 4\nedges\n3 3\n")
        with pytest.raises(DataValidationError, match="self-loop"):
            read_network(path)

    def test_one_way_edge_rejected(self, tmp_path):
        path = tmp_path / "net.txt"
        path.write_text("n 3\nedges\n1 2\n")
        with pytest.raises(DataValidationError):
            read_network(path)

    def test_sym_block_mirrors_edges(self, tmp_path):
        path = tmp_path / "net.txt"
        path.write_text("# comment\nn 3\nedges sym\n0 1\n1 2\n")
        net = read_network(path)
        np.testing.assert_array_equal(net.weights[1], [0.5, 0.0, 0.5])

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "net.txt"
        path.write_text("n 3\nedges\n1 two\n")
        with pytest.raises(ParseError) as exc_info:
            read_network(path)
        assert exc_info.value.line_no == 3

    def test_missing_header(self, tmp_path):
        path = tmp_path / "net.txt"
        path.write_text("edges\n0 1\n")
        with pytest.raises(ParseError):
            read_network(path)

    def test_missing_file_is_a_data_error(self, tmp_path):
        with pytest.raises(DataValidationError, match="cannot read"):
            read_network(tmp_path / "absent.txt")

    def test_network_io_dispatch(self, tmp_path, path3):
        path = tmp_path / "net.txt"
        assert network_io(path, "write", path3) is None
        assert network_io(path, "read").edge_count == 2
        with pytest.raises(InvalidArgumentError):
            network_io(path, "write")

    def test_build_network_rejects_asymmetric(self):
        adjacency = np.array([[0, 1], [0, 0]])
        with pytest.raises(ValueError):
            build_network(adjacency)
