import logging
import math
from gettext import gettext as _

import numpy as np
from scipy.spatial import Delaunay

from pf_nucleation.app.exceptions import MeshError
from pf_nucleation.app.models import Mesh

log = logging.getLogger(__name__)

# Boundary membership tolerance, relative to the side length.
EDGE_TOLERANCE = 1e-9

# Grid nodes closer than this many element sizes to the circle are replaced by circle nodes.
HOLE_CLEARANCE = 0.6


def _grid(L, h):
    if not (L > 0 and math.isfinite(L)):
        raise MeshError(_("Side length must be positive, got {}").format(L))
    if not (0 < h < L):
        raise MeshError(_("Element size must satisfy 0 < h < L, got h={}, L={}").format(h, L))
    n = max(1, int(round(L / h)))
    ticks = np.linspace(-L / 2.0, L / 2.0, n + 1)
    xx, yy = np.meshgrid(ticks, ticks)
    return n, np.column_stack([xx.ravel(), yy.ravel()])


def _structured_triangles(n):
    """Two triangles per grid cell with alternating diagonals."""
    i, j = np.meshgrid(np.arange(n), np.arange(n))
    i, j = i.ravel(), j.ravel()
    n0 = j * (n + 1) + i
    n1 = n0 + 1
    n2 = n1 + n + 1
    n3 = n0 + n + 1
    even = (i + j) % 2 == 0
    first = np.where(even[:, None], np.column_stack([n0, n1, n2]), np.column_stack([n0, n1, n3]))
    second = np.where(even[:, None], np.column_stack([n0, n2, n3]), np.column_stack([n1, n2, n3]))
    return np.stack([first, second], axis=1).reshape(-1, 3)


def _orient(coords, triangles):
    x = coords[triangles]
    area = 0.5 * (
        (x[:, 1, 0] - x[:, 0, 0]) * (x[:, 2, 1] - x[:, 0, 1])
        - (x[:, 2, 0] - x[:, 0, 0]) * (x[:, 1, 1] - x[:, 0, 1])
    )
    triangles = triangles.copy()
    flip = area < 0
    triangles[flip] = triangles[flip][:, [0, 2, 1]]
    return triangles, np.abs(area)


def _edge_sets(coords, L, exclude=None):
    """
    Outer boundary node sets; corners go to the horizontal edges.

    Args:
        coords (numpy.ndarray): node coordinates
        L (float): side length
        exclude (numpy.ndarray): boolean mask of nodes that must not be tagged

    """
    tol = EDGE_TOLERANCE * L
    half = L / 2.0
    x, y = coords[:, 0], coords[:, 1]
    allowed = np.ones(len(coords), dtype=bool) if exclude is None else ~exclude
    top = allowed & (np.abs(y - half) <= tol)
    bottom = allowed & (np.abs(y + half) <= tol)
    horizontal = top | bottom
    left = allowed & ~horizontal & (np.abs(x + half) <= tol)
    right = allowed & ~horizontal & (np.abs(x - half) <= tol)
    return {
        "top": np.flatnonzero(top),
        "bottom": np.flatnonzero(bottom),
        "left": np.flatnonzero(left),
        "right": np.flatnonzero(right),
    }


def check_conforming(mesh):
    """
    Check that neighbouring triangles meet along whole edges.

    Every edge may belong to at most two triangles, and every node must touch either no
    boundary edge or exactly two. A node in the middle of a neighbour's edge breaks the second
    rule.

    Args:
        mesh (Mesh): the mesh

    Raises:
        MeshError: naming the first offending node or edge

    """
    triangles = mesh.triangles
    edges = np.sort(
        np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]]), axis=1
    )
    unique, counts = np.unique(edges, axis=0, return_counts=True)
    if np.any(counts > 2):
        a, b = unique[np.argmax(counts > 2)]
        raise MeshError(_("Edge ({}, {}) is shared by more than two triangles").format(a, b))
    boundary = unique[counts == 1]
    degree = np.bincount(boundary.ravel(), minlength=mesh.n_nodes)
    bad = np.flatnonzero((degree != 0) & (degree != 2))
    if bad.size:
        raise MeshError(
            _("Mesh is not conforming at node {} ({:.6g}, {:.6g})").format(
                bad[0], *mesh.node_coords[bad[0]]
            )
        )


def generate_square(L, h, with_hole=None, hole_set="hole"):
    """
    Triangulate the square (-L/2, L/2)^2, optionally minus a centred disk.

    Without a hole the result is a structured criss-cross grid. With a hole, grid nodes near
    the disk are replaced by nodes on the circle and the result is re-triangulated.

    Args:
        L (float): side length
        h (float): target element size
        with_hole (float): radius of the centred hole, or None
        hole_set (str): name of the node set on the circle

    Returns:
        Mesh: the triangulation with "top", "bottom", "left", "right" (and hole) node sets

    Raises:
        MeshError: for degenerate parameters

    """
    n, coords = _grid(L, h)
    h_actual = L / n
    if with_hole is None:
        triangles = _structured_triangles(n)
        return Mesh(coords, triangles, _edge_sets(coords, L), h_actual)

    R = float(with_hole)
    if not 0 < R < L / 2.0:
        raise MeshError(_("Hole radius must satisfy 0 < R < L/2, got R={}").format(R))
    if R + h_actual > L / 2.0:
        raise MeshError(
            _("Hole radius {R} leaves less than one element (h={h}) to the outer edge").format(
                R=R, h=h_actual
            )
        )
    radius = np.hypot(coords[:, 0], coords[:, 1])
    coords = coords[radius >= R + HOLE_CLEARANCE * h_actual]
    n_circle = max(8, int(math.ceil(2.0 * math.pi * R / h_actual)))
    n_circle += -n_circle % 4
    angles = 2.0 * math.pi * np.arange(n_circle) / n_circle
    circle = R * np.column_stack([np.cos(angles), np.sin(angles)])
    coords = np.vstack([coords, circle])
    on_circle = np.zeros(len(coords), dtype=bool)
    on_circle[-n_circle:] = True

    simplices = Delaunay(coords).simplices
    simplices = simplices[~on_circle[simplices].all(axis=1)]
    simplices = np.sort(simplices, axis=1)
    simplices = simplices[np.lexsort(simplices.T[::-1])]
    triangles, areas = _orient(coords, simplices)
    keep = areas > 1e-12 * h_actual**2
    if not np.all(keep):
        log.debug(_("Dropping {} degenerate triangle(s)").format(int(np.count_nonzero(~keep))))
    triangles = triangles[keep]

    node_sets = _edge_sets(coords, L, exclude=on_circle)
    node_sets[hole_set] = np.flatnonzero(on_circle)
    mesh = Mesh(coords, triangles, node_sets, h_actual)
    check_conforming(mesh)
    log.debug(
        _("Holed square mesh: {} nodes, {} triangles, {} circle nodes").format(
            mesh.n_nodes, mesh.n_elements, n_circle
        )
    )
    return mesh


def generate_fiber_composite(L, R, h):
    """
    Square matrix around a rigid circular fiber; the circle nodes form the "fiber" set.

    Args:
        L (float): side length
        R (float): fiber radius
        h (float): target element size

    """
    return generate_square(L, h, with_hole=R, hole_set="fiber")


def split_top_edge(mesh):
    """
    Split the top edge at x = 0 into "top_left_half" and "top_right_half".

    A node sitting exactly on the midline is duplicated: elements whose centroid lies at x > 0
    switch to the copy, so the two halves can carry opposite displacements. The original and
    its copy belong to neither half.

    Args:
        mesh (Mesh): mesh with a "top" node set

    Returns:
        Mesh: a new mesh with the two extra node sets

    Raises:
        MeshError: if the mesh has no "top" set

    """
    if "top" not in mesh.node_sets:
        raise MeshError(_("Cannot split the top edge of a mesh without a 'top' node set"))
    top = mesh.node_sets["top"]
    coords = mesh.node_coords
    triangles = np.array(mesh.triangles)
    node_sets = dict(mesh.node_sets)
    tol = EDGE_TOLERANCE * max(mesh.extent, 1.0)
    x_top = coords[top, 0]
    midline = top[np.abs(x_top) <= tol]
    left = top[x_top < -tol]
    right = top[x_top > tol]

    if midline.size:
        centroid_x = coords[triangles].mean(axis=1)[:, 0]
        new_coords = [coords]
        new_top = [top]
        for offset, node in enumerate(midline):
            duplicate = mesh.n_nodes + offset
            new_coords.append(coords[node][None, :])
            new_top.append([duplicate])
            swap = (centroid_x > 0) & (triangles == node).any(axis=1)
            triangles[swap] = np.where(triangles[swap] == node, duplicate, triangles[swap])
        coords = np.vstack(new_coords)
        node_sets["top"] = np.concatenate(new_top)
        log.debug(_("Duplicated {} midline node(s) on the top edge").format(midline.size))

    node_sets["top_left_half"] = left
    node_sets["top_right_half"] = right
    return Mesh(coords, triangles, node_sets, mesh.h)


def aspect_ratios(mesh):
    """
    Longest edge over 2*sqrt(3)*inradius for every element (1 for an equilateral triangle).

    Args:
        mesh (Mesh): the mesh

    """
    x = mesh.node_coords[mesh.triangles]
    edges = np.linalg.norm(x[:, [1, 2, 0]] - x, axis=2)
    perimeter = edges.sum(axis=1)
    inradius = 2.0 * mesh.signed_areas / perimeter
    return edges.max(axis=1) / (2.0 * math.sqrt(3.0) * inradius)


def mesh_quality(mesh):
    """
    Summary statistics of a mesh.

    Args:
        mesh (Mesh): the mesh

    Returns:
        dict: node and element counts, total area, h, aspect-ratio range, node set sizes

    """
    ratios = aspect_ratios(mesh) if mesh.n_elements else np.array([float("nan")])
    return {
        "n_nodes": mesh.n_nodes,
        "n_elements": mesh.n_elements,
        "area": mesh.area,
        "h": mesh.h,
        "min_aspect_ratio": float(ratios.min()),
        "max_aspect_ratio": float(ratios.max()),
        "node_sets": {name: int(nodes.size) for name, nodes in sorted(mesh.node_sets.items())},
    }


def write_mesh(mesh, path):
    """
    Write a mesh in the plain text format read by :func:`read_mesh`.

    Args:
        mesh (Mesh): the mesh
        path (str): destination file

    """
    with open(path, "w") as mesh_file:
        mesh_file.write("nodes {} elems {}\n".format(mesh.n_nodes, mesh.n_elements))
        for x, y in mesh.node_coords:
            mesh_file.write("{!r} {!r}\n".format(float(x), float(y)))
        for i, j, k in mesh.triangles:
            mesh_file.write("{} {} {}\n".format(i, j, k))
        for name, nodes in sorted(mesh.node_sets.items()):
            members = " ".join(str(int(node)) for node in nodes)
            mesh_file.write("set {} {} {}\n".format(name, nodes.size, members).rstrip() + "\n")


def read_mesh(path):
    """
    Read a text mesh.

    The header is ``nodes N elems M``, followed by N lines ``x y``, M lines ``i j k`` and any
    number of ``set <name> n i1 ... in`` lines. Indices are 0-based. Blank lines and lines
    starting with ``#`` are ignored. The element size is taken as sqrt(2 * mean area).

    Args:
        path (str): the mesh file

    Returns:
        Mesh: the mesh

    Raises:
        MeshError: if the file is malformed

    """
    try:
        with open(path) as mesh_file:
            raw = mesh_file.read().splitlines()
    except OSError as exc:
        raise MeshError(_("Cannot read mesh file {}: {}").format(path, exc))
    lines = [
        (number, line.split())
        for number, line in enumerate(raw, start=1)
        if line.strip() and not line.lstrip().startswith("#")
    ]

    def fail(number, message):
        raise MeshError(_("{path}, line {line}: {msg}").format(path=path, line=number, msg=message))

    if not lines:
        raise MeshError(_("Mesh file {} is empty").format(path))
    number, header = lines[0]
    if len(header) != 4 or header[0] != "nodes" or header[2] != "elems":
        fail(number, _("expected 'nodes N elems M'"))
    try:
        n_nodes, n_elems = int(header[1]), int(header[3])
    except ValueError:
        fail(number, _("node and element counts must be integers"))
    body = lines[1:]
    if len(body) < n_nodes + n_elems:
        raise MeshError(_("Mesh file {} ends before all nodes and elements").format(path))

    coords = np.empty((n_nodes, 2))
    for row, (number, fields) in enumerate(body[:n_nodes]):
        try:
            coords[row] = [float(fields[0]), float(fields[1])]
        except (ValueError, IndexError):
            fail(number, _("expected 'x y'"))
    triangles = np.empty((n_elems, 3), dtype=np.int64)
    for row, (number, fields) in enumerate(body[n_nodes : n_nodes + n_elems]):
        try:
            triangles[row] = [int(value) for value in fields[:3]]
        except ValueError:
            fail(number, _("expected 'i j k'"))
        if len(fields) != 3:
            fail(number, _("expected 'i j k'"))

    node_sets = {}
    for number, fields in body[n_nodes + n_elems :]:
        if fields[0] != "set" or len(fields) < 3:
            fail(number, _("expected 'set <name> n i1 ... in'"))
        try:
            count = int(fields[2])
            members = [int(value) for value in fields[3:]]
        except ValueError:
            fail(number, _("node set entries must be integers"))
        if len(members) != count:
            fail(number, _("set '{}' declares {} nodes but lists {}").format(
                fields[1], count, len(members)
            ))
        node_sets[fields[1]] = members

    if n_elems and (triangles.min() < 0 or triangles.max() >= n_nodes):
        raise MeshError(_("Mesh file {} references a node outside the mesh").format(path))
    h = 0.0
    if n_elems:
        triangles, areas = _orient(coords, triangles)
        h = math.sqrt(2.0 * float(areas.mean()))
    return Mesh(coords, triangles, node_sets, h)
