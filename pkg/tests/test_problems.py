import numpy as np
import pytest

from deflamg.errors import PartitionError
from deflamg.problems import GridSpec, boxes_for, poisson3d, saddle_point
from deflamg.sparse import matvec, transpose


def lex_poisson_dense(n):
    """kron-built 7-point operator in pure lexicographic ordering."""
    T = 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)
    eye = np.eye(n)
    return (
        np.kron(eye, np.kron(eye, T))
        + np.kron(eye, np.kron(T, eye))
        + np.kron(T, np.kron(eye, eye))
    )


class TestBoxesFor:
    def test_perfect_cubes(self):
        assert boxes_for(1) == (1, 1, 1)
        assert boxes_for(8) == (2, 2, 2)
        assert boxes_for(27) == (3, 3, 3)
        assert boxes_for(64) == (4, 4, 4)

    def test_non_cubes_become_slabs(self):
        assert boxes_for(2) == (1, 1, 2)
        assert boxes_for(6) == (1, 1, 6)
        assert boxes_for(12) == (1, 1, 12)

    def test_nonpositive_rejected(self):
        with pytest.raises(PartitionError):
            boxes_for(0)


class TestPoisson:
    def test_single_node(self):
        prob = poisson3d(1)
        np.testing.assert_array_equal(prob.matrix.to_dense(), [[6.0]])
        np.testing.assert_array_equal(prob.rhs, [0.25])
        np.testing.assert_allclose(prob.coords, [[0.5, 0.5, 0.5]])

    def test_two_cubed_rows(self):
        prob = poisson3d(2)
        dense = prob.matrix.to_dense()
        for i in range(8):
            row = dense[i]
            assert row[i] == 6.0
            off = np.delete(row, i)
            assert sorted(off.tolist()) == [-1.0, -1.0, -1.0] + [0.0] * 4

    def test_matches_kron_oracle_in_lex_ordering(self):
        for n in (2, 3):
            prob = poisson3d(n)  # single box -> pure lexicographic
            np.testing.assert_array_equal(prob.matrix.to_dense(), lex_poisson_dense(n))

    def test_symmetric(self):
        prob = poisson3d(3, boxes=(1, 1, 3))
        At = transpose(prob.matrix)
        np.testing.assert_array_equal(At.to_dense(), prob.matrix.to_dense())

    def test_rhs_is_h_squared(self):
        prob = poisson3d(4)
        assert prob.rhs.shape == (64,)
        h = prob.spec.h
        assert h == 0.2
        np.testing.assert_array_equal(prob.rhs, np.full(64, h * h))

    def test_coords_inside_open_unit_cube(self):
        prob = poisson3d((3, 4, 5))
        assert prob.coords.shape == (60, 3)
        assert prob.coords.min() > 0.0 and prob.coords.max() < 1.0

    def test_box_ordering_makes_subdomains_contiguous(self):
        prob = poisson3d(4, boxes=(2, 1, 1))
        assert prob.partition.ranges == ((0, 32), (32, 64))
        # subdomain 0 holds the ix in {0,1} half: x-coordinates below 1/2
        assert prob.coords[:32, 0].max() < 0.5
        assert prob.coords[32:, 0].min() > 0.5

    def test_box_ordering_is_a_permutation_of_lex(self):
        plain = poisson3d(4)
        boxed = poisson3d(4, boxes=(2, 2, 1))
        # same spectrum signature: row sums counted by value
        rs_a = np.sort(plain.matrix.to_dense().sum(axis=1))
        rs_b = np.sort(boxed.matrix.to_dense().sum(axis=1))
        np.testing.assert_array_equal(rs_a, rs_b)
        # coordinates are the same point set
        pa = {tuple(c) for c in plain.coords}
        pb = {tuple(c) for c in boxed.coords}
        assert pa == pb

    def test_uneven_boxes(self):
        prob = poisson3d(5, boxes=(1, 1, 2))
        sizes = [e - b for b, e in prob.partition.ranges]
        assert sizes == [75, 50]  # 3 z-planes then 2

    def test_too_many_boxes_rejected(self):
        with pytest.raises(PartitionError):
            poisson3d(2, boxes=(3, 1, 1))

    def test_spec_h(self):
        assert GridSpec(3, 3, 3).h == 0.25
        assert GridSpec(3, 4, 5).spacing() == (0.25, 0.2, 1.0 / 6.0)


class TestSaddlePoint:
    def test_shapes_and_mask(self):
        prob = saddle_point(2)
        assert prob.matrix.nrows == 32
        assert prob.mask.tolist() == [False, False, False, True] * 8
        assert prob.rhs.shape == (32,)

    def test_monolithic_matrix_is_symmetric(self):
        prob = saddle_point(2)
        np.testing.assert_array_equal(
            transpose(prob.matrix).to_dense(), prob.matrix.to_dense()
        )

    def test_velocity_block_is_shifted_laplacian(self):
        prob = saddle_point(2, boxes=(1, 1, 1))
        dense = prob.matrix.to_dense()
        u = ~prob.mask
        K = dense[np.ix_(u, u)]
        h2 = prob.spec.h**2
        L = lex_poisson_dense(2)
        expect = np.zeros_like(K)
        for c in range(3):
            expect[c::3, c::3] = L + h2 * np.eye(8)
        np.testing.assert_array_equal(K, expect)

    def test_divergence_is_exact_transpose_of_gradient(self):
        prob = saddle_point(3)
        dense = prob.matrix.to_dense()
        p = prob.mask
        G = dense[np.ix_(~p, p)]
        D = dense[np.ix_(p, ~p)]
        np.testing.assert_array_equal(D, G.T)

    def test_gradient_entries_are_half_h(self):
        prob = saddle_point(3)
        dense = prob.matrix.to_dense()
        p = prob.mask
        G = dense[np.ix_(~p, p)]
        mags = np.unique(np.abs(G[G != 0.0]))
        np.testing.assert_array_equal(mags, [prob.spec.h / 2.0])

    def test_stabilization_block(self):
        prob = saddle_point(2)
        dense = prob.matrix.to_dense()
        p = prob.mask
        S = dense[np.ix_(p, p)]
        h = prob.spec.h
        np.testing.assert_array_equal(S, 1e-2 * h * h * np.eye(8))

    def test_rhs_manufactured_from_known_solution(self):
        prob = saddle_point(2)
        expect = np.sin(0.37 * (np.arange(32) + 1.0)) + 1.5
        np.testing.assert_array_equal(prob.solution, expect)
        np.testing.assert_array_equal(prob.rhs, matvec(prob.matrix, prob.solution))

    def test_unknown_partition_is_four_times_node_partition(self):
        prob = saddle_point(4, boxes=(1, 1, 2))
        assert prob.node_partition.ranges == ((0, 32), (32, 64))
        assert prob.unknown_partition.ranges == ((0, 128), (128, 256))

    def test_interleaving_keeps_subdomain_unknowns_contiguous(self):
        prob = saddle_point(2, boxes=(2, 1, 1))
        # each of the two boxes owns 4 nodes -> 16 contiguous unknowns
        assert prob.unknown_partition.ranges == ((0, 16), (16, 32))
