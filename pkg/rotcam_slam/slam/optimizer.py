#!/usr/bin/env python3

"""
Gauss-Newton optimization of a planar pose graph.

Residual of an edge i -> j with measurement z:

    e_xy = R(theta_z)^T (R(theta_i)^T (t_j - t_i) - t_z)
    e_th = wrap(theta_j - theta_i - theta_z)

The first node is held fixed. Normal equations are sparse and factorized
with SuperLU; a singular system or an increase of chi2 switches to
Levenberg damping for that iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.sparse.linalg import splu

from rotcam_slam.slam.graph import GraphEdge, PoseGraph
from rotcam_slam.utility.exceptions import GraphOptimizationError
from rotcam_slam.utility.logging_config import Subject, get_sim_logger
from rotcam_slam.utility.pure import wrap_angle

MAX_DAMPING_RETRIES = 10


@dataclass
class OptimizationResult:
    poses: np.ndarray
    iterations: int = 0
    initial_chi2: float = 0.0
    final_chi2: float = 0.0
    chi2_trace: list[float] = field(default_factory=list)
    converged: bool = True
    last_covariance: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))


def _rot(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def edge_error(xi: np.ndarray, xj: np.ndarray, edge: GraphEdge) -> np.ndarray:
    z = edge.delta
    ri_t = _rot(xi[2]).T
    rz_t = _rot(z.theta).T
    e_xy = rz_t @ (ri_t @ (xj[:2] - xi[:2]) - np.array([z.x, z.y]))
    return np.array([e_xy[0], e_xy[1], wrap_angle(xj[2] - xi[2] - z.theta)])


def edge_jacobians(xi: np.ndarray, xj: np.ndarray, edge: GraphEdge) -> tuple[np.ndarray, np.ndarray]:
    """d e / d x_i and d e / d x_j."""
    c, s = math.cos(xi[2]), math.sin(xi[2])
    ri_t = np.array([[c, s], [-s, c]])
    dri_t = np.array([[-s, c], [-c, -s]])
    rz_t = _rot(edge.delta.theta).T
    dt = xj[:2] - xi[:2]
    A = np.zeros((3, 3))
    B = np.zeros((3, 3))
    A[:2, :2] = -rz_t @ ri_t
    A[:2, 2] = rz_t @ dri_t @ dt
    A[2, 2] = -1.0
    B[:2, :2] = rz_t @ ri_t
    B[2, 2] = 1.0
    return A, B


def total_chi2(poses: np.ndarray, edges: list[GraphEdge]) -> float:
    chi2 = 0.0
    for edge in edges:
        e = edge_error(poses[edge.source], poses[edge.target], edge)
        chi2 += float(e @ edge.information @ e)
    return chi2


def _normal_equations(poses: np.ndarray, edges: list[GraphEdge]) -> tuple[sparse.csc_matrix, np.ndarray]:
    """Reduced H and b with the first node removed."""
    n = poses.shape[0]
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    b = np.zeros(3 * n)
    block = np.arange(3)
    for edge in edges:
        i, j = edge.source, edge.target
        e = edge_error(poses[i], poses[j], edge)
        A, B = edge_jacobians(poses[i], poses[j], edge)
        omega = edge.information
        jac = {i: A, j: B}
        for p, Jp in jac.items():
            b[3 * p:3 * p + 3] += Jp.T @ omega @ e
            for q, Jq in jac.items():
                rows.append(np.repeat(3 * p + block, 3))
                cols.append(np.tile(3 * q + block, 3))
                vals.append((Jp.T @ omega @ Jq).reshape(-1))
    H = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(3 * n, 3 * n)).tocsc()
    return H[3:, 3:], b[3:]


def _require_connected(n: int, edges: list[GraphEdge]) -> None:
    if n <= 1:
        return
    src = [e.source for e in edges]
    dst = [e.target for e in edges]
    adjacency = sparse.coo_matrix((np.ones(len(edges)), (src, dst)), shape=(n, n))
    count, _ = csgraph.connected_components(adjacency, directed=False)
    if count != 1:
        raise GraphOptimizationError(f'Pose graph is not connected ({count} components)')


def _solve(H: sparse.csc_matrix, rhs: np.ndarray, damping: float):
    system = H + sparse.identity(H.shape[0], format='csc') * damping if damping > 0 else H
    lu = splu(system.tocsc())
    step = lu.solve(rhs)
    if not np.all(np.isfinite(step)):
        raise RuntimeError('non-finite step')
    return step, lu


def _bump(damping: float, H: sparse.csc_matrix) -> float:
    return max(damping * 10.0, 1e-6 * max(1.0, float(H.diagonal().mean())))


def _wrap_outside(theta: np.ndarray) -> np.ndarray:
    """Wrap only the angles outside (-pi, pi] so in-range values stay bit-identical."""
    outside = (theta > math.pi) | (theta <= -math.pi)
    return np.where(outside, wrap_angle(theta), theta)


def marginal_covariance(poses: np.ndarray, edges: list[GraphEdge], index: int) -> np.ndarray:
    """Covariance of one node from the gauge-fixed Hessian; zero for the fixed first node."""
    if index == 0 or poses.shape[0] <= 1:
        return np.zeros((3, 3))
    H, _ = _normal_equations(poses, edges)
    damping = 0.0
    for _ in range(MAX_DAMPING_RETRIES):
        try:
            lu = splu((H + sparse.identity(H.shape[0], format='csc') * damping).tocsc())
            break
        except RuntimeError:
            damping = max(damping * 10.0, 1e-9)
    else:
        raise GraphOptimizationError('Hessian is singular')
    unit = np.zeros((H.shape[0], 3))
    offset = 3 * (index - 1)
    unit[offset:offset + 3, :] = np.eye(3)
    cov = lu.solve(unit)[offset:offset + 3, :]
    return 0.5 * (cov + cov.T)


def optimize_graph(graph: PoseGraph, max_iterations: int = 50, tolerance: float = 1e-8,
                   trial: str | None = None, apply: bool = True) -> OptimizationResult:
    """
    Optimize node poses by Gauss-Newton with the first node fixed.

    Iterates until the largest update component falls below ``tolerance`` or
    ``max_iterations`` is reached. Accepted iterations never increase chi2.

    :param graph: Graph to optimize
    :param max_iterations: Iteration cap
    :param tolerance: Stop when max |delta| < tolerance
    :param apply: Write the optimized poses back into the graph
    :raise GraphOptimizationError: Disconnected graph, or singular even with damping
    :return: OptimizationResult with the marginal covariance of the newest node
    """
    logger = get_sim_logger(Subject.SLAM, trial)
    poses = graph.poses().copy()
    n = poses.shape[0]
    edges = graph.edges
    _require_connected(n, edges)
    chi2 = total_chi2(poses, edges)
    result = OptimizationResult(poses, 0, chi2, chi2, [chi2])
    if n <= 1 or not edges:
        return result

    damping = 0.0
    converged = False
    for iteration in range(1, max_iterations + 1):
        H, b = _normal_equations(poses, edges)
        accepted = False
        solved = False
        for _ in range(MAX_DAMPING_RETRIES + 1):
            try:
                step, _ = _solve(H, -b, damping)
            except RuntimeError:
                damping = _bump(damping, H)
                logger.warning(f'Singular normal equations, retrying with damping {damping:.3g}')
                continue
            solved = True
            candidate = poses.copy()
            candidate[1:] += step.reshape(-1, 3)
            candidate[1:, 2] = _wrap_outside(candidate[1:, 2])
            new_chi2 = total_chi2(candidate, edges)
            if new_chi2 <= chi2:
                accepted = True
                break
            damping = _bump(damping, H)

        if not solved:
            raise GraphOptimizationError('Normal equations stay singular under damping')
        if not accepted:
            # no damped step lowers chi2 any more
            converged = True
            result.iterations = iteration
            break

        poses, chi2 = candidate, new_chi2
        result.chi2_trace.append(chi2)
        result.iterations = iteration
        damping = damping / 10.0 if damping > 1e-12 else 0.0
        if float(np.max(np.abs(step))) < tolerance:
            converged = True
            break

    result.poses = poses
    result.final_chi2 = chi2
    result.converged = converged
    result.last_covariance = marginal_covariance(poses, edges, n - 1)
    if apply:
        graph.set_poses(poses)
    logger.debug(f'Graph optimized: {n} nodes, chi2 {result.initial_chi2:.4g} -> {chi2:.4g} '
                 f'in {result.iterations} iterations')
    return result
