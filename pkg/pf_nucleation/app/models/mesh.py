from dataclasses import dataclass, field
from gettext import gettext as _

import numpy as np

from pf_nucleation.app.exceptions import MeshError


@dataclass(frozen=True, eq=False)
class Mesh:
    """
    A conforming mesh of linear triangles.

    The arrays are made read-only on construction, so a Mesh can be shared between threads.

    Attributes:
        node_coords (numpy.ndarray): (n_nodes, 2) nodal coordinates
        triangles (numpy.ndarray): (n_elements, 3) counter-clockwise node indices
        node_sets (dict): set name -> sorted array of node indices
        h (float): characteristic element size

    """

    node_coords: np.ndarray
    triangles: np.ndarray
    node_sets: dict = field(default_factory=dict)
    h: float = 0.0

    def __post_init__(self):
        """Freeze the arrays and check connectivity."""
        coords = np.array(self.node_coords, dtype=float).reshape(-1, 2)
        triangles = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        node_sets = {
            name: np.unique(np.asarray(nodes, dtype=np.int64))
            for name, nodes in dict(self.node_sets).items()
        }
        for array in [coords, triangles, *node_sets.values()]:
            array.setflags(write=False)
        object.__setattr__(self, "node_coords", coords)
        object.__setattr__(self, "triangles", triangles)
        object.__setattr__(self, "node_sets", node_sets)
        object.__setattr__(self, "h", float(self.h))
        self.validate()

    @property
    def n_nodes(self):
        """Number of nodes."""
        return self.node_coords.shape[0]

    @property
    def n_elements(self):
        """Number of triangles."""
        return self.triangles.shape[0]

    @property
    def signed_areas(self):
        """Signed area of every triangle (positive for counter-clockwise ordering)."""
        x = self.node_coords[self.triangles]
        return 0.5 * (
            (x[:, 1, 0] - x[:, 0, 0]) * (x[:, 2, 1] - x[:, 0, 1])
            - (x[:, 2, 0] - x[:, 0, 0]) * (x[:, 1, 1] - x[:, 0, 1])
        )

    @property
    def area(self):
        """Total area of the meshed domain."""
        return float(self.signed_areas.sum())

    @property
    def extent(self):
        """Largest side of the bounding box, used as the characteristic domain size."""
        if self.n_nodes == 0:
            return 0.0
        span = self.node_coords.max(axis=0) - self.node_coords.min(axis=0)
        return float(span.max())

    def node_set(self, name):
        """
        Return the node indices of a named set.

        Args:
            name (str): node set name, e.g. "top"

        Raises:
            MeshError: if the set does not exist

        """
        try:
            return self.node_sets[name]
        except KeyError:
            raise MeshError(
                _("Mesh has no node set named '{name}' (available: {names})").format(
                    name=name, names=", ".join(sorted(self.node_sets)) or "none"
                )
            )

    def validate(self):
        """
        Check index ranges and element orientation.

        Raises:
            MeshError: if an index is out of range or a triangle is not strictly positive

        """
        n_nodes = self.n_nodes
        if self.triangles.size and (self.triangles.min() < 0 or self.triangles.max() >= n_nodes):
            raise MeshError(_("Triangle connectivity references a node outside the mesh"))
        for name, nodes in self.node_sets.items():
            if nodes.size and (nodes.min() < 0 or nodes.max() >= n_nodes):
                raise MeshError(
                    _("Node set '{}' references a node outside the mesh").format(name)
                )
        if self.triangles.size:
            areas = self.signed_areas
            if np.any(areas <= 0.0):
                raise MeshError(
                    _("{} triangle(s) have non-positive signed area").format(
                        int(np.count_nonzero(areas <= 0.0))
                    )
                )
