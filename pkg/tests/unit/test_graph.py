"""Pose graph bookkeeping, loop closure, optimization and export."""

import math

import numpy as np
import pytest
from scipy.optimize import least_squares

from rotcam_slam.kinematics.pose import Pose2D
from rotcam_slam.slam.export import graph_to_g2o, write_g2o, write_occupancy_pgm, write_pgm
from rotcam_slam.slam.graph import (
    EdgeKind,
    GraphEdge,
    NodePolicy,
    PoseGraph,
    compound_covariance,
    detect_loop_closure,
    maybe_add_node,
    signature_overlap,
)
from rotcam_slam.slam.occupancy import OccupancyGrid
from rotcam_slam.slam.optimizer import edge_error, optimize_graph, total_chi2
from rotcam_slam.utility.config import SlamConfig
from rotcam_slam.utility.exceptions import GraphOptimizationError, InvalidInputError
from rotcam_slam.utility.pure import wrap_angle

INFO = np.diag([100.0, 100.0, 400.0])


def edge(source, target, dx, dy, dth, info=INFO, kind=EdgeKind.ODOMETRY):
    return GraphEdge(source, target, Pose2D(dx, dy, dth), info, kind)


class TestNodes:
    def test_first_node_always_inserted(self):
        graph = PoseGraph()
        node = maybe_add_node(graph, Pose2D(1.0, 1.0, 0.0))
        assert node.id == 0
        assert graph.edges == []

    def test_policy_thresholds(self):
        graph = PoseGraph()
        maybe_add_node(graph, Pose2D())
        assert maybe_add_node(graph, Pose2D(0.1, 0.0, 0.1)) is None
        node = maybe_add_node(graph, Pose2D(0.3, 0.0, 0.0))
        assert node.id == 1
        assert maybe_add_node(graph, Pose2D(0.3, 0.0, 0.35)).id == 2
        assert [e.kind for e in graph.edges] == [EdgeKind.ODOMETRY, EdgeKind.ODOMETRY]

    def test_edge_measures_relative_pose(self):
        graph = PoseGraph()
        maybe_add_node(graph, Pose2D(1.0, 1.0, math.pi / 2))
        maybe_add_node(graph, Pose2D(1.0, 1.5, math.pi / 2))
        delta = graph.edges[0].delta
        assert (delta.x, delta.y, delta.theta) == pytest.approx((0.5, 0.0, 0.0), abs=1e-12)

    def test_default_information_without_odometry(self):
        graph = PoseGraph()
        maybe_add_node(graph, Pose2D())
        maybe_add_node(graph, Pose2D(0.5, 0.0, 0.0))
        info = graph.edges[0].information
        assert np.diag(info) == pytest.approx([2500.0, 2500.0, 10000.0], rel=1e-6)

    def test_information_from_accumulated_odometry(self):
        graph = PoseGraph()
        maybe_add_node(graph, Pose2D())
        for _ in range(5):
            graph.accumulate_odometry(Pose2D(0.1, 0.0, 0.0), np.eye(3) * 1e-4)
        maybe_add_node(graph, Pose2D(0.5, 0.0, 0.0))
        cov = np.linalg.inv(graph.edges[0].information)
        assert cov[0, 0] == pytest.approx(5e-4, rel=1e-6)
        # heading uncertainty leaks into the lateral direction
        assert cov[1, 1] > 5e-4

    def test_from_config(self):
        policy = NodePolicy.from_config(SlamConfig(node_translation=0.5, node_rotation=0.1))
        assert (policy.translation, policy.rotation) == (0.5, 0.1)


class TestCompound:
    def test_rotates_step_covariance(self):
        cov = compound_covariance(Pose2D(0.0, 0.0, math.pi / 2), np.zeros((3, 3)),
                                  Pose2D(), np.diag([1.0, 0.0, 0.0]))
        assert np.diag(cov) == pytest.approx([0.0, 1.0, 0.0], abs=1e-12)

    def test_heading_lever_arm(self):
        cov = compound_covariance(Pose2D(), np.diag([0.0, 0.0, 1.0]), Pose2D(2.0, 0.0, 0.0), np.zeros((3, 3)))
        assert cov[1, 1] == pytest.approx(4.0)
        assert cov[1, 2] == pytest.approx(2.0)


class TestEdges:
    def test_self_edge(self):
        with pytest.raises(InvalidInputError):
            edge(1, 1, 0.0, 0.0, 0.0)

    def test_bad_information_shape(self):
        with pytest.raises(InvalidInputError):
            GraphEdge(0, 1, Pose2D(), np.eye(2))

    def test_missing_node(self):
        graph = PoseGraph()
        graph.add_node(Pose2D())
        with pytest.raises(InvalidInputError):
            graph.add_edge(edge(0, 1, 0.1, 0.0, 0.0))

    def test_loop_edges_counted(self):
        graph = PoseGraph()
        graph.add_node(Pose2D())
        graph.add_node(Pose2D(1.0, 0.0, 0.0))
        graph.add_edge(edge(0, 1, 1.0, 0.0, 0.0, kind=EdgeKind.LOOP))
        assert graph.loop_count == 1


def ring(n: int, signature_of) -> PoseGraph:
    graph = PoseGraph()
    for i in range(n):
        angle = 2.0 * math.pi * i / n
        pose = Pose2D(2.0 * math.cos(angle), 2.0 * math.sin(angle), wrap_angle(angle + math.pi / 2))
        graph.add_node(pose, float(i), signature_of(i), pose)
    return graph


class TestLoopClosure:
    def test_revisit_closes_loop(self):
        graph = ring(25, lambda i: frozenset(range(10 * i, 10 * i + 10)))
        node = graph.add_node(Pose2D(2.05, 0.0, math.pi / 2), 25.0, frozenset(range(0, 10)),
                              Pose2D(2.0, 0.0, math.pi / 2))
        closure = detect_loop_closure(graph, node)
        assert closure is not None
        assert (closure.source, closure.target, closure.kind) == (0, 25, EdgeKind.LOOP)
        assert (closure.delta.x, closure.delta.y, closure.delta.theta) == pytest.approx((0.0, 0.0, 0.0), abs=1e-12)
        assert graph.loop_count == 1

    def test_noise_from_rng(self):
        graph = ring(25, lambda i: frozenset(range(10)))
        node = graph.add_node(Pose2D(2.0, 0.0, math.pi / 2), 25.0, frozenset(range(10)),
                              Pose2D(2.0, 0.0, math.pi / 2))
        closure = detect_loop_closure(graph, node, SlamConfig(), np.random.default_rng(0))
        assert closure is not None
        assert closure.delta.x != 0.0
        assert np.diag(closure.information) == pytest.approx([2500.0, 2500.0, 10000.0])

    def test_recent_nodes_ignored(self):
        graph = ring(10, lambda i: frozenset(range(10)))
        node = graph.add_node(Pose2D(2.0, 0.0, 0.0), 10.0, frozenset(range(10)), Pose2D(2.0, 0.0, 0.0))
        assert detect_loop_closure(graph, node) is None

    def test_low_overlap_ignored(self):
        graph = ring(25, lambda i: frozenset(range(10 * i, 10 * i + 10)))
        node = graph.add_node(Pose2D(2.0, 0.0, 0.0), 25.0, frozenset(range(6, 14)) | frozenset(range(1000, 1010)),
                              Pose2D(2.0, 0.0, 0.0))
        assert detect_loop_closure(graph, node) is None

    def test_needs_truth(self):
        graph = ring(25, lambda i: frozenset(range(10)))
        node = graph.add_node(Pose2D(2.0, 0.0, 0.0), 25.0, frozenset(range(10)))
        assert detect_loop_closure(graph, node) is None

    def test_signature_overlap(self):
        assert signature_overlap(frozenset(), frozenset({1})) == 0.0
        assert signature_overlap(frozenset({1, 2, 3, 4}), frozenset({1, 2})) == 0.5


def whitened_residuals(free, fixed, edges):
    poses = np.vstack([fixed, free.reshape(-1, 3)])
    out = []
    for e in edges:
        chol = np.linalg.cholesky(e.information)
        out.append(chol.T @ edge_error(poses[e.source], poses[e.target], e))
    return np.concatenate(out)


class TestOptimizer:
    def test_three_nodes_match_dense_least_squares(self):
        graph = PoseGraph()
        graph.add_node(Pose2D(0.0, 0.0, 0.0))
        graph.add_node(Pose2D(1.1, 0.1, 0.05))
        graph.add_node(Pose2D(2.0, 0.3, 0.1))
        graph.add_edge(edge(0, 1, 1.0, 0.0, 0.0))
        graph.add_edge(edge(1, 2, 1.0, 0.0, 0.1))
        graph.add_edge(edge(0, 2, 1.9, 0.1, 0.15, info=np.diag([50.0, 80.0, 200.0])))
        start = graph.poses().copy()

        result = optimize_graph(graph)

        reference = least_squares(whitened_residuals, start[1:].reshape(-1), args=(start[0], graph.edges),
                                  xtol=1e-14, ftol=1e-14, gtol=1e-14)
        assert result.converged
        assert result.poses[0].tolist() == [0.0, 0.0, 0.0]
        assert result.poses[1:].reshape(-1) == pytest.approx(reference.x, abs=1e-6)
        assert result.final_chi2 == pytest.approx(2.0 * reference.cost, rel=1e-6, abs=1e-12)

    def test_ring_with_heading_drift(self):
        n = 20
        truth = []
        for i in range(n):
            angle = 2.0 * math.pi * i / n
            truth.append(Pose2D(2.0 * math.cos(angle), 2.0 * math.sin(angle), wrap_angle(angle + math.pi / 2)))
        rng = np.random.default_rng(5)
        graph = PoseGraph()
        graph.add_node(truth[0])
        estimate = truth[0]
        odo_info = np.diag([1.0 / 0.02 ** 2, 1.0 / 0.02 ** 2, 1.0 / 0.02 ** 2])
        for i in range(1, n):
            rel = truth[i].relative_to(truth[i - 1])
            noisy = Pose2D(rel.x + rng.normal(0.0, 0.01), rel.y + rng.normal(0.0, 0.01), rel.theta + 0.03)
            estimate = estimate.compose(noisy)
            graph.add_node(estimate)
            graph.add_edge(GraphEdge(i - 1, i, noisy, odo_info))
        loop = truth[n - 1].relative_to(truth[0])
        graph.add_edge(GraphEdge(0, n - 1, loop, np.diag([1e4, 1e4, 1e4]), EdgeKind.LOOP))

        def rmse(poses):
            return math.sqrt(np.mean([(p[0] - t.x) ** 2 + (p[1] - t.y) ** 2 for p, t in zip(poses, truth)]))

        before = rmse(graph.poses())
        result = optimize_graph(graph)
        after = rmse(graph.poses())
        assert after <= 0.5 * before
        assert all(b <= a + 1e-9 for a, b in zip(result.chi2_trace, result.chi2_trace[1:]))
        assert np.all(np.linalg.eigvalsh(result.last_covariance) > 0.0)

    def test_consistent_graph_does_not_move(self):
        graph = PoseGraph()
        graph.add_node(Pose2D())
        graph.add_node(Pose2D(1.0, 0.0, 0.0))
        graph.add_edge(edge(0, 1, 1.0, 0.0, 0.0))
        result = optimize_graph(graph)
        assert result.final_chi2 == pytest.approx(0.0, abs=1e-20)
        assert graph.poses()[1] == pytest.approx([1.0, 0.0, 0.0])

    def test_apply_false_leaves_graph(self):
        graph = PoseGraph()
        graph.add_node(Pose2D())
        graph.add_node(Pose2D(1.2, 0.0, 0.0))
        graph.add_edge(edge(0, 1, 1.0, 0.0, 0.0))
        result = optimize_graph(graph, apply=False)
        assert graph.poses()[1, 0] == 1.2
        assert result.poses[1, 0] == pytest.approx(1.0)

    def test_single_node(self):
        graph = PoseGraph()
        graph.add_node(Pose2D(0.5, 0.5, 0.0))
        result = optimize_graph(graph)
        assert result.iterations == 0
        assert np.array_equal(result.last_covariance, np.zeros((3, 3)))

    def test_disconnected(self):
        graph = PoseGraph()
        for x in (0.0, 1.0, 2.0):
            graph.add_node(Pose2D(x, 0.0, 0.0))
        graph.add_edge(edge(0, 1, 1.0, 0.0, 0.0))
        with pytest.raises(GraphOptimizationError):
            optimize_graph(graph)

    def test_total_chi2(self):
        poses = np.array([[0.0, 0.0, 0.0], [1.1, 0.0, 0.0]])
        assert total_chi2(poses, [edge(0, 1, 1.0, 0.0, 0.0)]) == pytest.approx(100.0 * 0.01)


class TestExport:
    def test_g2o_text(self, tmp_path):
        graph = PoseGraph()
        graph.add_node(Pose2D(1.0, 0.5, 0.25))
        graph.add_node(Pose2D(1.5, 0.5, 0.25))
        graph.add_edge(edge(0, 1, 0.5, 0.0, 0.0))
        lines = graph_to_g2o(graph).splitlines()
        assert lines[0] == 'VERTEX_SE2 0 1 0.5 0.25'
        assert lines[2] == 'EDGE_SE2 0 1 0.5 0 0 100 0 0 100 0 400'
        path = write_g2o(tmp_path / 'out' / 'graph.g2o', graph)
        assert path.read_text() == graph_to_g2o(graph)

    def test_map_pgm(self, tmp_path):
        grid = OccupancyGrid.from_probabilities([[0.1, 0.9, 0.5], [0.5, 0.5, 0.5]],
                                                observed=[[True, True, True], [False, False, False]])
        data = write_pgm(tmp_path / 'map.pgm', grid).read_bytes()
        assert data.startswith(b'P5\n3 2\n255\n')
        # bottom grid row is the last image row
        assert list(data[-6:]) == [128, 128, 128, 255, 0, 128]

    def test_environment_pgm(self, tmp_path, box_env):
        data = write_occupancy_pgm(tmp_path / 'env.pgm', box_env.occupied).read_bytes()
        header = b'P5\n80 80\n255\n'
        assert data.startswith(header)
        pixels = np.frombuffer(data[len(header):], dtype=np.uint8)
        assert int((pixels == 0).sum()) == int(box_env.occupied.sum())
