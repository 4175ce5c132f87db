from unittest import TestCase

import numpy as np

from pf_nucleation.app.constants import UNIVERSE_LABELS
from pf_nucleation.app.exceptions import MeshError
from pf_nucleation.app.mesh import generate_square
from pf_nucleation.app.models import (
    BacktrackRecord,
    DirichletBC,
    DirichletCondition,
    FieldState,
    LoadSchedule,
    Mesh,
    RunTrace,
    StepRecord,
    Universe,
)


class TestMesh(TestCase):
    """Test the Mesh value type."""

    def test_arrays_are_read_only(self):
        """Coordinates and connectivity cannot be modified in place."""
        mesh = Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], {"corner": [0]})
        with self.assertRaises(ValueError):
            mesh.node_coords[0, 0] = 5.0
        with self.assertRaises(ValueError):
            mesh.node_sets["corner"][0] = 1

    def test_clockwise_triangle_rejected(self):
        """A triangle with negative signed area is refused."""
        with self.assertRaises(MeshError):
            Mesh([[0, 0], [1, 0], [0, 1]], [[0, 2, 1]])

    def test_index_out_of_range(self):
        """Connectivity and node sets must reference existing nodes."""
        with self.assertRaises(MeshError):
            Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 3]])
        with self.assertRaises(MeshError):
            Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], {"bad": [7]})

    def test_unknown_node_set(self):
        """Looking up a missing node set names the available ones."""
        mesh = Mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]], {"corner": [0]})
        with self.assertRaisesRegex(MeshError, "corner"):
            mesh.node_set("top")


class TestFieldState(TestCase):
    """Test FieldState and Universe."""

    def test_non_finite_rejected(self):
        """NaN entries are refused."""
        with self.assertRaises(ValueError):
            FieldState([0.0, np.nan], [0.0])

    def test_cracked_threshold(self):
        """A state is cracked once some node reaches d = 0.9."""
        self.assertFalse(FieldState([0.0], [0.0, 0.89]).is_cracked)
        self.assertTrue(FieldState([0.0], [0.0, 0.9]).is_cracked)

    def test_cracked_label_needs_crack(self):
        """A universe cannot be labelled cracked while max d < 0.9."""
        state = FieldState([0.0], [0.2])
        with self.assertRaises(ValueError):
            Universe(state, 1.0, 0.0, label=UNIVERSE_LABELS.CRACKED)
        universe = Universe(state, 1.0, 0.5)
        self.assertEqual(universe.pi_total, 1.5)
        self.assertFalse(universe.is_cracked)


class TestLoading(TestCase):
    """Test Dirichlet templates and load schedules."""

    def setUp(self):
        """Build a 3x3 node grid."""
        self.mesh = generate_square(2.0, 1.0)

    def test_linear_schedule(self):
        """A linear schedule starts one step above zero and ends at u_max."""
        schedule = LoadSchedule.linear(1.0, 4, ())
        np.testing.assert_allclose(schedule.loads, [0.25, 0.5, 0.75, 1.0])
        self.assertEqual(len(schedule), 4)
        self.assertAlmostEqual(schedule.step_size, 0.25)

    def test_invalid_schedules(self):
        """Empty, negative and non-increasing schedules are refused."""
        with self.assertRaises(ValueError):
            LoadSchedule(())
        with self.assertRaises(ValueError):
            LoadSchedule((-0.1, 0.2))
        with self.assertRaises(ValueError):
            LoadSchedule((0.1, 0.1))
        with self.assertRaises(ValueError):
            LoadSchedule.linear(1.0, 0, ())

    def test_bc_values_scale_with_load(self):
        """Prescribed values are factor times the load."""
        bc = DirichletBC(
            self.mesh,
            [DirichletCondition("top", 1, 1.0), DirichletCondition("bottom", 1, -1.0)],
            2,
        )
        top = self.mesh.node_set("top")
        self.assertEqual(bc.dofs.size, 6)
        u = bc.apply(np.zeros(2 * self.mesh.n_nodes), 0.3)
        np.testing.assert_allclose(u[2 * top + 1], 0.3)
        np.testing.assert_allclose(u[2 * top], 0.0)
        self.assertEqual(int(np.count_nonzero(bc.free_mask)), 2 * self.mesh.n_nodes - 6)

    def test_conflicting_conditions(self):
        """Two different values on one dof are refused."""
        with self.assertRaises(ValueError):
            DirichletBC(
                self.mesh,
                [DirichletCondition("top", 0, 1.0), DirichletCondition("top", 0, 0.0)],
                2,
            )

    def test_bad_component_and_set(self):
        """Components beyond the model and unknown sets are refused."""
        with self.assertRaises(ValueError):
            DirichletBC(self.mesh, [DirichletCondition("top", 1, 1.0)], 1)
        with self.assertRaises(MeshError):
            DirichletBC(self.mesh, [DirichletCondition("fiber", 0, 0.0)], 2)


class TestRunTrace(TestCase):
    """Test trace milestones."""

    def _records(self):
        return [
            StepRecord(step=0, u_b=0.1, pi_nc_elastic=1.0, pi_nc_surface=0.0),
            StepRecord(step=1, u_b=0.2, vigilance=True, pi_nc_elastic=4.0, pi_nc_surface=0.0),
            StepRecord(
                step=2,
                u_b=0.3,
                vigilance=True,
                pi_nc_elastic=9.0,
                pi_nc_surface=0.0,
                pi_c_elastic=1.0,
                pi_c_surface=3.0,
                accepted=UNIVERSE_LABELS.CRACKED,
                crack_sets=("right",),
            ),
        ]

    def test_milestones(self):
        """Vigilance, critical and boundary-arrival loads are recorded once."""
        trace = RunTrace(driver="parallel_universe")
        for record in self._records():
            trace.append(record)
        self.assertEqual(trace.vigilance_load, 0.2)
        self.assertEqual(trace.critical_load, 0.3)
        self.assertEqual(trace.nucleation_load, 0.3)
        self.assertEqual(trace.boundary_arrivals, {"right": 0.3})
        self.assertEqual(trace.last.accepted_total, 4.0)

    def test_truncate_recomputes(self):
        """Dropping records forgets the milestones they carried."""
        trace = RunTrace(driver="backtracking")
        for record in self._records():
            trace.append(record)
        trace.truncate(2)
        self.assertEqual(len(trace.records), 2)
        self.assertIsNone(trace.critical_load)
        self.assertEqual(trace.boundary_arrivals, {})
        self.assertEqual(trace.vigilance_load, 0.2)

    def test_normalized_energies(self):
        """Both curves are divided by the last accepted total energy."""
        trace = RunTrace(driver="parallel_universe")
        for record in self._records():
            trace.append(record)
        rows = trace.normalized_energies()
        self.assertEqual(rows[0], (0.1, 0.25, None))
        self.assertEqual(rows[2], (0.3, 2.25, 1.0))

    def test_scaled_energy(self):
        """A solution found at load t_i is rescaled to t_j with (t_j / t_i)^2."""
        record = BacktrackRecord(step=0, load=1.0, pi_elastic=2.0, pi_surface=0.0)
        self.assertAlmostEqual(record.scaled_energy(2.0, 8.0, 0.5), 2.5)
