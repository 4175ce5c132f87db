import math
import os
import tempfile
from unittest import TestCase

import numpy as np

from pf_nucleation.app.exceptions import MeshError
from pf_nucleation.app.mesh import (
    aspect_ratios,
    check_conforming,
    generate_fiber_composite,
    generate_square,
    mesh_quality,
    read_mesh,
    split_top_edge,
    write_mesh,
)
from pf_nucleation.app.models import Mesh


def inscribed_polygon_area(R, n):
    return 0.5 * n * R**2 * math.sin(2.0 * math.pi / n)


class TestGenerateSquare(TestCase):
    """Test the structured square mesh."""

    def test_two_by_two_cells(self):
        """L=2, h=1 gives 9 nodes and 8 triangles of area 0.5."""
        mesh = generate_square(2.0, 1.0)
        self.assertEqual(mesh.n_nodes, 9)
        self.assertEqual(mesh.n_elements, 8)
        np.testing.assert_allclose(mesh.signed_areas, 0.5)
        self.assertAlmostEqual(mesh.area, 4.0)
        self.assertEqual(mesh.h, 1.0)

    def test_edge_sets(self):
        """Corners belong to the horizontal edges only."""
        mesh = generate_square(2.0, 0.5)
        self.assertEqual(mesh.node_set("top").size, 5)
        self.assertEqual(mesh.node_set("bottom").size, 5)
        self.assertEqual(mesh.node_set("left").size, 3)
        self.assertEqual(mesh.node_set("right").size, 3)
        np.testing.assert_allclose(mesh.node_coords[mesh.node_set("top"), 1], 1.0)
        np.testing.assert_allclose(mesh.node_coords[mesh.node_set("left"), 0], -1.0)

    def test_area_is_conserved(self):
        """The triangles tile the square exactly."""
        mesh = generate_square(1.0, 0.1)
        self.assertAlmostEqual(mesh.area, 1.0, places=12)
        self.assertTrue(np.all(mesh.signed_areas > 0))

    def test_degenerate_parameters(self):
        """Non-positive sizes and h >= L are refused."""
        with self.assertRaises(MeshError):
            generate_square(0.0, 0.1)
        with self.assertRaises(MeshError):
            generate_square(1.0, 0.0)
        with self.assertRaises(MeshError):
            generate_square(1.0, 2.0)


class TestHoledSquare(TestCase):
    """Test squares with a circular hole or fiber."""

    def test_hole_area(self):
        """The mesh covers the square minus the inscribed polygon of the hole."""
        mesh = generate_square(2.0, 0.1, with_hole=0.4)
        hole = mesh.node_set("hole")
        self.assertEqual(hole.size, 28)
        expected = 4.0 - inscribed_polygon_area(0.4, 28)
        self.assertAlmostEqual(mesh.area, expected, delta=1e-8)
        radius = np.hypot(mesh.node_coords[:, 0], mesh.node_coords[:, 1])
        np.testing.assert_allclose(radius[hole], 0.4)
        self.assertGreaterEqual(radius.min(), 0.4 - 1e-12)

    def test_hole_nodes_not_on_edges(self):
        """Outer edge sets are kept and do not contain circle nodes."""
        mesh = generate_square(2.0, 0.1, with_hole=0.4)
        for name in ("top", "bottom", "left", "right"):
            self.assertEqual(np.intersect1d(mesh.node_set(name), mesh.node_set("hole")).size, 0)
        self.assertEqual(mesh.node_set("top").size, 21)

    def test_hole_too_large(self):
        """A hole reaching within one element of the edge is refused."""
        with self.assertRaises(MeshError):
            generate_square(2.0, 0.1, with_hole=0.95)
        with self.assertRaises(MeshError):
            generate_square(2.0, 0.1, with_hole=1.2)

    def test_fiber_set(self):
        """The fiber composite names its circle nodes 'fiber'."""
        mesh = generate_fiber_composite(3.0, 0.5, 0.25)
        self.assertIn("fiber", mesh.node_sets)
        self.assertNotIn("hole", mesh.node_sets)
        self.assertTrue(np.all(aspect_ratios(mesh) >= 1.0 - 1e-12))

    def test_holed_meshes_conform(self):
        """Generated holes leave no node in the middle of a neighbour's edge."""
        for L, h, R in ((2.0, 0.1, 0.4), (1.0, 0.1, 0.25), (3.0, 0.5, 0.25)):
            with self.subTest(L=L, h=h, R=R):
                check_conforming(generate_square(L, h, with_hole=R))


class TestCheckConforming(TestCase):
    """Test the conformity check."""

    coords = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]]

    def test_fan(self):
        """Four triangles around the centre node conform."""
        mesh = Mesh(self.coords, [[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]], {}, 1.0)
        check_conforming(mesh)
        check_conforming(generate_square(1.0, 0.25))

    def test_hanging_node(self):
        """A node in the middle of the diagonal of a neighbour is refused."""
        mesh = Mesh(self.coords, [[0, 1, 3], [1, 2, 4], [2, 3, 4]], {}, 1.0)
        with self.assertRaisesRegex(MeshError, "not conforming at node 1"):
            check_conforming(mesh)

    def test_overlapping_triangles(self):
        """An edge shared by three triangles is refused."""
        mesh = Mesh(self.coords, [[0, 1, 4], [0, 1, 2], [0, 1, 3]], {}, 1.0)
        with self.assertRaisesRegex(MeshError, "Edge \\(0, 1\\)"):
            check_conforming(mesh)


class TestSplitTopEdge(TestCase):
    """Test the split of the top edge for the anti-plane tear."""

    def test_midline_node_duplicated(self):
        """The node at x=0 on the top edge is duplicated and belongs to neither half."""
        base = generate_square(2.0, 0.5)
        mesh = split_top_edge(base)
        self.assertEqual(mesh.n_nodes, base.n_nodes + 1)
        self.assertAlmostEqual(mesh.area, base.area)
        left = mesh.node_set("top_left_half")
        right = mesh.node_set("top_right_half")
        self.assertEqual(left.size, 2)
        self.assertEqual(right.size, 2)
        self.assertTrue(np.all(mesh.node_coords[left, 0] < 0))
        self.assertTrue(np.all(mesh.node_coords[right, 0] > 0))
        duplicate = base.n_nodes
        np.testing.assert_allclose(mesh.node_coords[duplicate], [0.0, 1.0])
        self.assertIn(duplicate, mesh.node_set("top"))

    def test_right_elements_use_duplicate(self):
        """Elements right of the midline no longer touch the original midline node."""
        base = generate_square(2.0, 0.5)
        mesh = split_top_edge(base)
        original = int(
            np.flatnonzero(
                np.all(np.isclose(base.node_coords, [0.0, 1.0]), axis=1)
            )[0]
        )
        centroid_x = mesh.node_coords[mesh.triangles].mean(axis=1)[:, 0]
        touching = (mesh.triangles == original).any(axis=1)
        self.assertTrue(np.all(centroid_x[touching] < 0))

    def test_requires_top(self):
        """A mesh without a top set cannot be split."""
        mesh = Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
        with self.assertRaises(MeshError):
            split_top_edge(mesh)


class TestMeshFiles(TestCase):
    """Test the text mesh format."""

    def setUp(self):
        """Create a scratch directory."""
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def _path(self, name, content=None):
        path = os.path.join(self.tmp.name, name)
        if content is not None:
            with open(path, "w") as mesh_file:
                mesh_file.write(content)
        return path

    def test_written_mesh_reads_back(self):
        """Nodes, triangles, node sets and h survive a write and a read."""
        mesh = generate_square(2.0, 1.0)
        path = self._path("square.msh")
        write_mesh(mesh, path)
        loaded = read_mesh(path)
        np.testing.assert_allclose(loaded.node_coords, mesh.node_coords)
        np.testing.assert_array_equal(loaded.triangles, mesh.triangles)
        self.assertEqual(sorted(loaded.node_sets), sorted(mesh.node_sets))
        np.testing.assert_array_equal(loaded.node_set("left"), mesh.node_set("left"))
        self.assertAlmostEqual(loaded.h, 1.0)

    def test_clockwise_input_is_oriented(self):
        """Triangles given clockwise are reordered."""
        path = self._path("cw.msh", "nodes 3 elems 1\n0 0\n1 0\n0 1\n0 2 1\nset top 1 2\n")
        mesh = read_mesh(path)
        self.assertGreater(mesh.signed_areas[0], 0)
        np.testing.assert_array_equal(mesh.node_set("top"), [2])

    def test_comments_and_blank_lines(self):
        """Comment and blank lines are skipped."""
        path = self._path("c.msh", "# a comment\n\nnodes 3 elems 1\n0 0\n1 0\n\n0 1\n0 1 2\n")
        self.assertEqual(read_mesh(path).n_elements, 1)

    def test_bad_header(self):
        """A malformed header is reported with its line number."""
        path = self._path("bad.msh", "points 3\n")
        with self.assertRaisesRegex(MeshError, "line 1"):
            read_mesh(path)

    def test_bad_node_line(self):
        """A non-numeric coordinate is reported with its line number."""
        path = self._path("bad.msh", "nodes 3 elems 1\n0 0\n1 x\n0 1\n0 1 2\n")
        with self.assertRaisesRegex(MeshError, "line 3"):
            read_mesh(path)

    def test_set_count_mismatch(self):
        """A node set whose count disagrees with its members is refused."""
        path = self._path("bad.msh", "nodes 3 elems 1\n0 0\n1 0\n0 1\n0 1 2\nset top 2 2\n")
        with self.assertRaisesRegex(MeshError, "line 6"):
            read_mesh(path)

    def test_index_out_of_range(self):
        """Triangles referencing missing nodes are refused."""
        path = self._path("bad.msh", "nodes 3 elems 1\n0 0\n1 0\n0 1\n0 1 5\n")
        with self.assertRaises(MeshError):
            read_mesh(path)

    def test_truncated_file(self):
        """A file that ends early is refused."""
        path = self._path("bad.msh", "nodes 3 elems 1\n0 0\n1 0\n")
        with self.assertRaises(MeshError):
            read_mesh(path)

    def test_missing_file(self):
        """A missing file raises MeshError."""
        with self.assertRaises(MeshError):
            read_mesh(self._path("missing.msh"))


class TestMeshQuality(TestCase):
    """Test the quality report."""

    def test_structured_grid(self):
        """All right isosceles triangles share one aspect ratio."""
        report = mesh_quality(generate_square(1.0, 0.25))
        expected = math.sqrt(2.0) / (math.sqrt(3.0) * (2.0 - math.sqrt(2.0)))
        self.assertEqual(report["n_nodes"], 25)
        self.assertEqual(report["n_elements"], 32)
        self.assertAlmostEqual(report["min_aspect_ratio"], expected)
        self.assertAlmostEqual(report["max_aspect_ratio"], expected)
        self.assertAlmostEqual(report["area"], 1.0)
        self.assertEqual(report["node_sets"]["top"], 5)
