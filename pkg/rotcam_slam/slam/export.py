#!/usr/bin/env python3

"""
Map and graph snapshots: binary PGM images and g2o-style text.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from rotcam_slam.slam.graph import PoseGraph
from rotcam_slam.slam.occupancy import CellClass, OccupancyGrid, classify_labels
from rotcam_slam.utility.pure import format_float

PIXEL = {CellClass.FREE: 255, CellClass.OCCUPIED: 0, CellClass.UNKNOWN: 128}


def labels_to_image(labels: np.ndarray) -> np.ndarray:
    """Class labels to 8-bit pixels, top image row = largest y."""
    image = np.full(labels.shape, PIXEL[CellClass.UNKNOWN], dtype=np.uint8)
    image[labels == CellClass.FREE] = PIXEL[CellClass.FREE]
    image[labels == CellClass.OCCUPIED] = PIXEL[CellClass.OCCUPIED]
    return np.flipud(image)


def encode_pgm(image: np.ndarray) -> bytes:
    rows, cols = image.shape
    header = f'P5\n{cols} {rows}\n255\n'.encode('ascii')
    return header + np.ascontiguousarray(image, dtype=np.uint8).tobytes()


def write_labels_pgm(path: str | Path, labels: np.ndarray) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_pgm(labels_to_image(labels)))
    return path


def write_pgm(path: str | Path, grid: OccupancyGrid, free_threshold: float = 0.35,
              occupied_threshold: float = 0.65) -> Path:
    """Write the classified map: 255 free, 0 occupied, 128 unknown."""
    return write_labels_pgm(path, classify_labels(grid, free_threshold, occupied_threshold))


def write_occupancy_pgm(path: str | Path, occupied: np.ndarray) -> Path:
    """Write a boolean occupancy array (an environment) with 0 occupied and 255 free."""
    labels = np.where(occupied, CellClass.OCCUPIED, CellClass.FREE)
    return write_labels_pgm(path, labels)


def graph_to_g2o(graph: PoseGraph) -> str:
    """
    ``VERTEX_SE2 id x y theta`` lines, then
    ``EDGE_SE2 from to dx dy dtheta i11 i12 i13 i22 i23 i33`` lines.
    """
    lines = []
    for node in graph.nodes:
        p = node.pose
        lines.append(' '.join(['VERTEX_SE2', str(node.id), format_float(p.x), format_float(p.y),
                               format_float(p.theta)]))
    upper = np.triu_indices(3)
    for edge in graph.edges:
        d = edge.delta
        info = [format_float(v) for v in edge.information[upper]]
        lines.append(' '.join(['EDGE_SE2', str(edge.source), str(edge.target), format_float(d.x),
                               format_float(d.y), format_float(d.theta), *info]))
    return '\n'.join(lines) + '\n'


def write_g2o(path: str | Path, graph: PoseGraph) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(graph_to_g2o(graph), encoding='utf-8')
    return path
