import math
from hashlib import sha256

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from pf_nucleation.app.constants import BOUNDARY_SETS, CRACK_THRESHOLD

# Pairs of outer edges that a crack band must join to split the domain in two.
SEPARATING_PAIRS = [("left", "right"), ("top", "bottom")]


def crack_components(mesh, d, threshold=CRACK_THRESHOLD):
    """
    Connected groups of broken nodes.

    Two broken nodes are connected when they share a triangle edge.

    Args:
        mesh (Mesh): the mesh
        d (numpy.ndarray): nodal phase field
        threshold (float): nodes with ``d >= threshold`` are broken

    Returns:
        list: one sorted index array per component, largest first

    """
    broken = np.asarray(d) >= threshold
    if not broken.any():
        return []
    triangles = mesh.triangles
    edges = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    edges = edges[broken[edges].all(axis=1)]
    graph = sparse.coo_matrix(
        (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(mesh.n_nodes, mesh.n_nodes)
    )
    _count, labels = connected_components(graph, directed=False)
    components = [np.flatnonzero(broken & (labels == label)) for label in np.unique(labels[broken])]
    return sorted(components, key=lambda nodes: (-nodes.size, nodes[0]))


def touched_sets(mesh, nodes, names=None):
    """
    Boundary node sets that share at least one node with ``nodes``.

    Args:
        mesh (Mesh): the mesh
        nodes (numpy.ndarray): node indices
        names (list): candidate set names, defaults to ``BOUNDARY_SETS``

    Returns:
        list: set names in the order of ``names``

    """
    names = BOUNDARY_SETS if names is None else names
    return [
        name
        for name in names
        if name in mesh.node_sets and np.intersect1d(mesh.node_sets[name], nodes).size
    ]


def crack_sets(mesh, d, threshold=CRACK_THRESHOLD):
    """Boundary sets touched by any crack band, in ``BOUNDARY_SETS`` order."""
    touched = set()
    for nodes in crack_components(mesh, d, threshold):
        touched.update(touched_sets(mesh, nodes))
    return [name for name in BOUNDARY_SETS if name in touched]


def crack_separates_domain(mesh, d, threshold=CRACK_THRESHOLD):
    """
    Whether one crack band joins two opposite outer edges.

    Args:
        mesh (Mesh): the mesh
        d (numpy.ndarray): nodal phase field
        threshold (float): crack threshold

    """
    for nodes in crack_components(mesh, d, threshold):
        touched = set(touched_sets(mesh, nodes))
        if any(first in touched and second in touched for first, second in SEPARATING_PAIRS):
            return True
    return False


def crack_direction_angle(mesh, d, threshold=0.5, window=None):
    """
    Direction of the crack band near the centre of the domain.

    The direction is the principal axis of the d-weighted covariance of the nodes with
    ``d >= threshold`` inside the central square of half-width ``window``.

    Args:
        mesh (Mesh): the mesh
        d (numpy.ndarray): nodal phase field
        threshold (float): lowest phase-field value taken into account
        window (float): half-width of the central square, defaults to a quarter of the extent

    Returns:
        float: angle in degrees in (-180, 0], or None if fewer than three nodes qualify

    """
    d = np.asarray(d, dtype=float)
    if window is None:
        window = 0.25 * mesh.extent
    coords = mesh.node_coords
    centre = 0.5 * (coords.max(axis=0) + coords.min(axis=0))
    inside = np.all(np.abs(coords - centre) <= window, axis=1) & (d >= threshold)
    if np.count_nonzero(inside) < 3:
        return None
    weights = d[inside]
    points = coords[inside]
    mean = np.average(points, axis=0, weights=weights)
    offsets = points - mean
    covariance = (weights[:, None] * offsets).T @ offsets / weights.sum()
    _values, vectors = np.linalg.eigh(covariance)
    direction = vectors[:, -1]
    angle = math.degrees(math.atan2(direction[1], direction[0]))
    if angle > 0.0:
        angle -= 180.0
    return angle


def get_sha256(file_path):
    """
    Get sha256 of file.

    Args:
        file_path(string): path of file

    Returns:
        String: SHA256 of file, or None if the file does not exist

    """
    try:
        with open(file_path, "rb") as file_obj:
            return sha256(file_obj.read()).hexdigest()
    except FileNotFoundError:
        return None
