#!/usr/bin/env python3

"""
Pose graph of camera poses with odometry and loop-closure edges.

Nodes are inserted by a displacement policy; the odometry edge to the new node
carries the inverse of the relative covariance compounded since the previous
node. Loop closures are detected geometrically (estimated distance plus
overlap of the observed cell sets) and measured from ground truth with
additive noise, standing in for appearance-based place recognition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from rotcam_slam.estimation.gaussian import check_psd
from rotcam_slam.kinematics.pose import Pose2D
from rotcam_slam.utility.config import SlamConfig
from rotcam_slam.utility.exceptions import InvalidInputError
from rotcam_slam.utility.logging_config import Subject, get_sim_logger
from rotcam_slam.utility.pure import require_finite, wrap_angle

_COV_FLOOR = np.eye(3) * 1e-12


class EdgeKind(str, Enum):
    ODOMETRY = 'odometry'
    LOOP = 'loop'


@dataclass
class GraphNode:
    """Estimated camera pose at insertion time and the cells seen from it."""
    id: int
    pose: Pose2D
    time: float = 0.0
    signature: frozenset[int] = frozenset()
    truth: Pose2D | None = None

    def __post_init__(self) -> None:
        require_finite('node pose', self.pose.x, self.pose.y, self.pose.theta)
        self.pose = Pose2D(self.pose.x, self.pose.y, wrap_angle(self.pose.theta))


@dataclass(frozen=True, eq=False)
class GraphEdge:
    """Relative pose of ``target`` in the frame of ``source`` with its information matrix."""
    source: int
    target: int
    delta: Pose2D
    information: np.ndarray
    kind: EdgeKind = EdgeKind.ODOMETRY

    def __post_init__(self) -> None:
        if self.source == self.target:
            raise InvalidInputError(f'Edge must connect two different nodes, got {self.source} twice')
        info = np.asarray(self.information, dtype=float)
        if info.shape != (3, 3):
            raise InvalidInputError(f'Edge information must be 3x3, got {info.shape}')
        object.__setattr__(self, 'information', check_psd(info, 'edge information'))


@dataclass(frozen=True)
class NodePolicy:
    """When to insert a node, and the odometry covariance used when none was accumulated."""
    translation: float = 0.3
    rotation: float = 0.3
    default_sigma: tuple[float, float, float] = (0.02, 0.02, 0.01)

    @classmethod
    def from_config(cls, cfg: SlamConfig) -> NodePolicy:
        return cls(cfg.node_translation, cfg.node_rotation)

    def due(self, last: Pose2D, pose: Pose2D) -> bool:
        return (last.distance_to(pose) >= self.translation
                or abs(wrap_angle(pose.theta - last.theta)) >= self.rotation)


def compound_covariance(rel: Pose2D, rel_cov: np.ndarray, step: Pose2D, step_cov: np.ndarray) -> np.ndarray:
    """
    Covariance of rel (+) step from independent covariances of both terms.

    Uses the first-order Jacobians of the planar pose composition.
    """
    c, s = math.cos(rel.theta), math.sin(rel.theta)
    j_rel = np.array([
        [1.0, 0.0, -s * step.x - c * step.y],
        [0.0, 1.0, c * step.x - s * step.y],
        [0.0, 0.0, 1.0],
    ])
    j_step = np.array([
        [c, -s, 0.0],
        [s, c, 0.0],
        [0.0, 0.0, 1.0],
    ])
    return j_rel @ rel_cov @ j_rel.T + j_step @ step_cov @ j_step.T


class PoseGraph:
    """Nodes, edges and the odometry accumulated since the newest node."""

    def __init__(self, trial: str | None = None):
        self.nodes: list[GraphNode] = []
        self.edges: list[GraphEdge] = []
        self.loop_count = 0
        self._rel = Pose2D()
        self._rel_cov = np.zeros((3, 3))
        self._steps = 0
        self.logger = get_sim_logger(Subject.SLAM, trial)

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def last(self) -> GraphNode | None:
        return self.nodes[-1] if self.nodes else None

    def poses(self) -> np.ndarray:
        return np.array([n.pose.as_array() for n in self.nodes]).reshape(-1, 3)

    def set_poses(self, poses: np.ndarray) -> None:
        for node, row in zip(self.nodes, poses):
            node.pose = Pose2D(float(row[0]), float(row[1]), float(row[2]))

    def add_node(self, pose: Pose2D, time: float = 0.0, signature: frozenset[int] = frozenset(),
                 truth: Pose2D | None = None) -> GraphNode:
        node = GraphNode(len(self.nodes), pose, time, signature, truth)
        self.nodes.append(node)
        self.reset_odometry()
        return node

    def add_edge(self, edge: GraphEdge) -> GraphEdge:
        n = len(self.nodes)
        if not (0 <= edge.source < n and 0 <= edge.target < n):
            raise InvalidInputError(f'Edge {edge.source}->{edge.target} references a missing node')
        self.edges.append(edge)
        if edge.kind is EdgeKind.LOOP:
            self.loop_count += 1
        return edge

    def accumulate_odometry(self, step: Pose2D, step_cov: np.ndarray) -> None:
        """Compound one estimated step (in the previous step's frame) into the pending relative motion."""
        self._rel_cov = compound_covariance(self._rel, self._rel_cov, step, np.asarray(step_cov, dtype=float))
        self._rel = self._rel.compose(step)
        self._steps += 1

    def reset_odometry(self) -> None:
        self._rel = Pose2D()
        self._rel_cov = np.zeros((3, 3))
        self._steps = 0

    def pending_covariance(self, policy: NodePolicy) -> np.ndarray:
        if self._steps == 0:
            return np.diag(np.square(policy.default_sigma))
        return self._rel_cov


def maybe_add_node(graph: PoseGraph, est_pose: Pose2D, cell_signature=frozenset(),
                   policy: NodePolicy | None = None, time: float = 0.0,
                   truth: Pose2D | None = None) -> GraphNode | None:
    """
    Insert a node when the estimated pose moved far enough from the newest one.

    The first call always inserts node 0. Later nodes get an odometry edge
    whose information is the inverse of the compounded relative covariance.

    :return: The new node, or None when nothing was inserted
    """
    policy = policy or NodePolicy()
    last = graph.last
    if last is not None and not policy.due(last.pose, est_pose):
        return None
    cov = graph.pending_covariance(policy) if last is not None else None
    node = graph.add_node(est_pose, time, frozenset(cell_signature), truth)
    if last is not None:
        delta = node.pose.relative_to(last.pose)
        graph.add_edge(GraphEdge(last.id, node.id, delta, np.linalg.inv(cov + _COV_FLOOR), EdgeKind.ODOMETRY))
        graph.logger.debug(f'Node {node.id} at ({node.pose.x:.2f}, {node.pose.y:.2f}, {node.pose.theta:.2f})')
    return node


def signature_overlap(new: frozenset[int], old: frozenset[int]) -> float:
    """|new & old| / |new|, 0 for an empty new signature."""
    if not new:
        return 0.0
    return len(new & old) / len(new)


def detect_loop_closure(graph: PoseGraph, node: GraphNode, cfg: SlamConfig | None = None,
                        rng: np.random.Generator | None = None) -> GraphEdge | None:
    """
    Close a loop between ``node`` and an older node it revisits.

    Candidates are at least ``loop_min_separation`` ids older, within
    ``loop_radius`` by estimate and share at least ``loop_overlap`` of the
    new node's cells. The best overlap wins, then the lowest id. The edge runs
    from the old node to the new one and measures the true relative pose with
    additive Gaussian noise.

    :return: The appended loop edge, or None
    """
    cfg = cfg or SlamConfig()
    if node.truth is None:
        return None
    best: GraphNode | None = None
    best_overlap = -1.0
    for old in graph.nodes[:max(0, node.id - cfg.loop_min_separation + 1)]:
        if old.truth is None or old.pose.distance_to(node.pose) > cfg.loop_radius:
            continue
        overlap = signature_overlap(node.signature, old.signature)
        if overlap >= cfg.loop_overlap and overlap > best_overlap:
            best, best_overlap = old, overlap
    if best is None:
        return None

    sigma = np.asarray(cfg.loop_sigma, dtype=float)
    truth = node.truth.relative_to(best.truth)
    noise = (rng.normal(0.0, 1.0, size=3) if rng is not None else np.zeros(3)) * sigma
    delta = Pose2D(truth.x + float(noise[0]), truth.y + float(noise[1]), wrap_angle(truth.theta + float(noise[2])))
    edge = graph.add_edge(GraphEdge(best.id, node.id, delta, np.diag(1.0 / sigma ** 2), EdgeKind.LOOP))
    graph.logger.info(f'Loop closure {best.id} -> {node.id} (overlap {best_overlap:.2f})')
    return edge

