import math
from unittest import TestCase, mock

import numpy as np

from pf_nucleation.app import assembly
from pf_nucleation.app.config import BOUNDARY_CONDITIONS
from pf_nucleation.app.constants import DRIVERS, LOADINGS, UNIVERSE_LABELS
from pf_nucleation.app.exceptions import CrackedGuessError
from pf_nucleation.app.mesh import generate_square
from pf_nucleation.app.models import (
    DirichletBC,
    FieldState,
    LoadSchedule,
    MaterialParams,
    Universe,
)
from pf_nucleation.app.staggered import SolveSettings, StaggeredResult
from pf_nucleation.app.tasks import ParallelUniverseRun, RunObserver, standard_newton_run
from pf_nucleation.app.tasks.nucleation import (
    applicability_bound,
    check_applicability,
    closed_form_vigilance_load,
    find_cracked_guess,
    reduce_gc_until_cracked,
    theoretical_critical_load,
    vigilance_stress,
    vigilance_triggered,
)

NUCLEATION = "pf_nucleation.app.tasks.nucleation"


class TestCriteria(TestCase):
    """Test the vigilance criterion and the closed-form loads."""

    def setUp(self):
        """Steel-like material of the homogeneous square benchmark."""
        self.mat = MaterialParams.from_engineering(210000.0, 0.3, 6.75, 40.0)

    def test_vigilance_stress(self):
        """The threshold is sigma_c / alpha and alpha must be positive."""
        self.assertAlmostEqual(
            vigilance_stress(self.mat, 2.0), 0.5 * vigilance_stress(self.mat, 1.0)
        )
        with self.assertRaises(ValueError):
            vigilance_stress(self.mat, 0.0)
        with self.assertRaises(ValueError):
            vigilance_stress(self.mat, -1.0)

    def test_vigilance_triggered(self):
        """The criterion fires once the largest principal stress reaches the threshold."""
        mesh = generate_square(1.0, 0.25)
        mat = MaterialParams.from_engineering(1.0, 0.3, 1.0, 0.1)
        u = np.column_stack([np.zeros(mesh.n_nodes), 0.01 * mesh.node_coords[:, 1]]).ravel()
        state = FieldState(u, np.zeros(mesh.n_nodes))
        sigma = assembly.max_principal_stress(mesh, state, mat)
        strength = vigilance_stress(mat, 1.0)
        fired, sigma_max = vigilance_triggered(mesh, state, mat, strength / (0.5 * sigma))
        self.assertTrue(fired)
        self.assertAlmostEqual(sigma_max, sigma)
        fired, _sigma = vigilance_triggered(mesh, state, mat, strength / (2.0 * sigma))
        self.assertFalse(fired)

    def test_theoretical_critical_load(self):
        """sqrt(Gc L / (2 E)) for the 1000 x 1000 square."""
        self.assertAlmostEqual(theoretical_critical_load(1000.0, self.mat), 0.126773, places=6)

    def test_closed_form_vigilance_load(self):
        """The load at which 2 E K u / L reaches sigma_c / alpha."""
        L, K_conc, alpha = 1000.0, 1.5, 2.0
        load = closed_form_vigilance_load(L, self.mat, K_conc, alpha)
        sigma = 2.0 * self.mat.E * K_conc * load / L
        self.assertAlmostEqual(sigma, vigilance_stress(self.mat, alpha))
        self.assertAlmostEqual(closed_form_vigilance_load(L, self.mat), 0.152589, places=5)

    def test_bound_equates_the_loads(self):
        """At L / ell equal to the bound the vigilance and critical loads coincide."""
        bound = applicability_bound(self.mat)
        self.assertAlmostEqual(bound, 512.0 * 0.91 / 27.0)
        L = bound * self.mat.ell
        self.assertAlmostEqual(
            closed_form_vigilance_load(L, self.mat), theoretical_critical_load(L, self.mat)
        )

    def test_check_applicability(self):
        """L / ell = 25 exceeds the bound and warns; L / ell = 10 passes."""
        with self.assertLogs(NUCLEATION, level="WARNING") as logs:
            self.assertFalse(check_applicability(1000.0, self.mat))
        self.assertIn("exceeds", logs.output[0])
        self.assertTrue(check_applicability(400.0, self.mat))
        with self.assertRaises(ValueError):
            check_applicability(400.0, self.mat, K_conc=0.5)


class FakeSolver:
    """
    Stand-in for the staggered solve.

    The displacement is the load everywhere. A crackless start gets energy ``u_b^2``; a cracked
    start keeps its phase field and gets ``cracked_factor * u_b^2 + cracked_surface``.
    """

    def __init__(self, cracked_factor=0.1, cracked_surface=0.5, heal_at=None):
        self.cracked_factor = cracked_factor
        self.cracked_surface = cracked_surface
        self.heal_at = heal_at
        self.calls = []

    def energies(self, u_b, cracked):
        if cracked:
            return assembly.Energies(self.cracked_factor * u_b**2, self.cracked_surface)
        return assembly.Energies(u_b**2, 0.0)

    def __call__(self, mesh, init, mat, bc, settings, u_b=None):
        self.calls.append((u_b, init.is_cracked, settings))
        d = init.d
        if self.heal_at is not None and u_b >= self.heal_at:
            d = np.zeros_like(d)
        state = FieldState(np.full(init.u.size, u_b), d)
        energies = self.energies(u_b, init.is_cracked)
        return StaggeredResult(state, energies, 1, [energies.total], 0)

    def cracked_guess(self, mesh, state, mat, bc, settings, on_guess=None, **kwargs):
        d = np.zeros(mesh.n_nodes)
        d[0] = 1.0
        if on_guess is not None:
            on_guess(FieldState(state.u, d), 3)
        u_b = float(state.u[0])
        energies = self.energies(u_b, True)
        return Universe(
            FieldState(state.u, d),
            energies.elastic,
            energies.surface,
            label=UNIVERSE_LABELS.CRACKED,
            iterations=1,
        )


def fake_vigilance(mesh, state, mat, alpha):
    return state.u[0] >= 0.45, float(state.u[0])


class RecordingObserver(RunObserver):
    """Keeps every callback."""

    def __init__(self):
        self.steps = []
        self.guesses = []

    def on_step(self, record, state, events):
        self.steps.append((record.step, set(events)))

    def on_cracked_guess(self, u_b, state):
        self.guesses.append((u_b, state.max_d))


class DriverTestCase(TestCase):
    """Run the driver against the fake solver with loads 0.1, 0.2, ..., 1.0."""

    def setUp(self):
        """Patch the solver, the vigilance test and the cracked-guess search."""
        self.mesh = generate_square(1.0, 0.5)
        self.mat = MaterialParams.from_engineering(1.0, 0.3, 1.0, 0.1)
        self.schedule = LoadSchedule(
            tuple(np.linspace(0.1, 1.0, 10)), BOUNDARY_CONDITIONS[LOADINGS.TENSION]
        )
        self.solver = FakeSolver()
        self.observer = RecordingObserver()
        self.guess = mock.Mock(side_effect=self.solver.cracked_guess)
        for name, target in (
            ("staggered_solve", self.solver),
            ("vigilance_triggered", fake_vigilance),
            ("find_cracked_guess", self.guess),
        ):
            patcher = mock.patch("{}.{}".format(NUCLEATION, name), target)
            patcher.start()
            self.addCleanup(patcher.stop)

    def run_driver(self, **kwargs):
        kwargs.setdefault("stop_on_fracture", False)
        driver = ParallelUniverseRun(
            self.mesh, self.mat, self.schedule, observer=self.observer, **kwargs
        )
        return driver, driver.run()


class TestParallelUniverseRun(DriverTestCase):
    """Test candidate tracking and acceptance."""

    def test_milestones(self):
        """Vigilance fires at 0.5 and the cracked candidate wins at 0.8."""
        driver, trace = self.run_driver()
        self.assertEqual(trace.driver, DRIVERS.PARALLEL_UNIVERSE)
        self.assertEqual(len(trace.records), 10)
        self.assertAlmostEqual(trace.vigilance_load, 0.5)
        self.assertAlmostEqual(trace.critical_load, 0.8)
        self.assertAlmostEqual(trace.nucleation_load, 0.8)
        self.assertEqual(trace.guess_gc_stages, 3)
        self.assertEqual(self.guess.call_count, 1)
        self.assertEqual(trace.monotonicity_violations, 0)
        self.assertFalse(trace.aborted)
        self.assertTrue(driver.final_state.is_cracked)

    def test_energies_of_both_candidates(self):
        """Both energies are recorded while both candidates live."""
        _driver, trace = self.run_driver()
        records = trace.records
        self.assertIsNone(records[3].pi_c_total)
        self.assertAlmostEqual(records[4].pi_nc_total, 0.25)
        self.assertAlmostEqual(records[4].pi_c_total, 0.525)
        self.assertEqual(records[4].accepted, UNIVERSE_LABELS.CRACKLESS)
        self.assertAlmostEqual(records[6].pi_nc_total, 0.49)
        self.assertAlmostEqual(records[7].pi_nc_total, 0.64)
        self.assertAlmostEqual(records[7].pi_c_total, 0.564)
        self.assertEqual(records[7].accepted, UNIVERSE_LABELS.CRACKED)
        self.assertTrue(all(record.vigilance for record in records[4:]))
        self.assertFalse(any(record.vigilance for record in records[:4]))

    def test_crackless_discarded_after_acceptance(self):
        """After acceptance only the cracked candidate is solved, with a floor on d."""
        _driver, trace = self.run_driver()
        for record in trace.records[8:]:
            self.assertIsNone(record.pi_nc_total)
            self.assertEqual(record.accepted, UNIVERSE_LABELS.CRACKED)
        after = [call for call in self.solver.calls if call[0] > 0.85]
        self.assertEqual(len(after), 2)
        self.assertTrue(all(cracked and settings.irreversible for _u, cracked, settings in after))
        before = [call for call in self.solver.calls if call[0] < 0.75]
        self.assertFalse(any(settings.irreversible for _u, _c, settings in before))

    def test_observer_events(self):
        """Events mark vigilance, acceptance and the final step."""
        self.run_driver()
        events = dict(self.observer.steps)
        self.assertEqual(events[4], {"vigilance"})
        self.assertEqual(events[7], {"acceptance"})
        self.assertEqual(events[9], {"final"})
        self.assertEqual(events[5], set())
        self.assertEqual(len(self.observer.guesses), 1)
        self.assertAlmostEqual(self.observer.guesses[0][0], 0.5)
        self.assertEqual(self.observer.guesses[0][1], 1.0)

    def test_tie_keeps_crackless(self):
        """Equal energies keep the crackless candidate."""
        self.solver.cracked_factor, self.solver.cracked_surface = 1.0, 0.0
        _driver, trace = self.run_driver()
        self.assertIsNone(trace.critical_load)
        self.assertTrue(
            all(record.accepted == UNIVERSE_LABELS.CRACKLESS for record in trace.records)
        )
        self.assertAlmostEqual(trace.records[-1].pi_c_total, 1.0)

    def test_healed_guess_is_not_retried(self):
        """A guess that heals is dropped and the run goes on with the crackless candidate."""
        self.guess.side_effect = CrackedGuessError("healed", healed=True)
        _driver, trace = self.run_driver()
        self.assertEqual(self.guess.call_count, 1)
        self.assertEqual(trace.guess_failure, "healed")
        self.assertIsNone(trace.critical_load)
        self.assertFalse(trace.aborted)
        self.assertEqual(len(trace.records), 10)
        self.assertTrue(all(record.pi_c_total is None for record in trace.records))

    def test_healed_candidate_is_not_rebuilt(self):
        """A cracked candidate that heals later is not replaced by a second search."""
        self.solver.heal_at = 0.55
        _driver, trace = self.run_driver()
        self.assertEqual(self.guess.call_count, 1)
        self.assertAlmostEqual(trace.records[4].pi_c_total, 0.525)
        self.assertTrue(all(record.pi_c_total is None for record in trace.records[5:]))
        self.assertIn("healed", trace.guess_failure)
        self.assertIsNone(trace.critical_load)

    def test_failed_guess_aborts(self):
        """An exhausted Gc reduction aborts the run with the partial trace attached."""
        self.guess.side_effect = CrackedGuessError("no cracked field")
        driver = ParallelUniverseRun(self.mesh, self.mat, self.schedule, stop_on_fracture=False)
        with self.assertRaises(CrackedGuessError) as context:
            driver.run()
        trace = context.exception.trace
        self.assertIs(trace, driver.trace)
        self.assertTrue(trace.aborted)
        self.assertIn("no cracked field", trace.abort_reason)
        self.assertEqual(len(trace.records), 4)
        self.assertIsNone(driver.final_state)

    def test_standard_branch_never_searches(self):
        """Without the cracked branch no guess is built."""
        _driver, trace = self.run_driver(cracked_branch=False)
        self.assertEqual(trace.driver, DRIVERS.STANDARD)
        self.guess.assert_not_called()
        self.assertIsNone(trace.critical_load)
        self.assertAlmostEqual(trace.vigilance_load, 0.5)

    def test_threaded_candidates(self):
        """Solving both candidates on two threads gives the same trace."""
        _driver, trace = self.run_driver(workers=2)
        self.assertAlmostEqual(trace.critical_load, 0.8)
        self.assertAlmostEqual(trace.records[7].pi_c_total, 0.564)


class TestSmallLoads(TestCase):
    """Below the vigilance load the driver reduces to plain load stepping."""

    def test_matches_standard_run(self):
        """Accepted energies agree with the standard driver and no guess is built."""
        mesh = generate_square(1.0, 0.25)
        mat = MaterialParams.from_engineering(1.0, 0.3, 1.0, 0.1)
        schedule = LoadSchedule.linear(0.05, 3, BOUNDARY_CONDITIONS[LOADINGS.TENSION])
        settings = SolveSettings(tol_stagger=1e-10)
        with mock.patch("{}.find_cracked_guess".format(NUCLEATION)) as guess:
            trace = ParallelUniverseRun(mesh, mat, schedule, settings).run()
        guess.assert_not_called()
        standard = standard_newton_run(mesh, mat, schedule, settings)
        self.assertIsNone(trace.vigilance_load)
        self.assertEqual(standard.driver, DRIVERS.STANDARD)
        for ours, theirs in zip(trace.accepted_energies(), standard.accepted_energies()):
            self.assertAlmostEqual(ours[0], theirs[0])
            self.assertTrue(math.isclose(ours[1], theirs[1], rel_tol=1e-9))
        self.assertEqual(len(trace.records), 3)


class HomogeneousTestCase(TestCase):
    """
    Unit square in tension with nu = 0, solved for real.

    The fields stay homogeneous, so d = e^2 / (e^2 + Gc / ell) with e = 2 u_b.
    """

    def setUp(self):
        """Build the mesh, the material and the tension constraints."""
        self.mesh = generate_square(1.0, 0.25)
        self.mat = MaterialParams.from_engineering(1.0, 0.0, 1.0, 0.1)
        self.bc = DirichletBC(self.mesh, BOUNDARY_CONDITIONS[LOADINGS.TENSION], 2)
        self.settings = SolveSettings(tol_stagger=1e-10, tol_newton_u=1e-10)

    def loaded(self, u_b):
        n_nodes = self.mesh.n_nodes
        return FieldState(self.bc.apply(np.zeros(2 * n_nodes), u_b), np.zeros(n_nodes))


class TestGcReduction(HomogeneousTestCase):
    """Test the search for a cracked candidate with the staggered solver."""

    def test_reduction_cracks(self):
        """At u_b = 0.5 the second tenfold reduction gives d = 1 / 1.1."""
        state, stages = reduce_gc_until_cracked(
            self.mesh, self.loaded(0.5), self.mat, self.bc, self.settings, reduction=0.1
        )
        self.assertEqual(stages, 2)
        self.assertTrue(state.is_cracked)
        np.testing.assert_allclose(state.d, 1.0 / 1.1, rtol=1e-8)

    def test_stage_cap(self):
        """One stage is not enough and the error is not a healing."""
        with self.assertRaises(CrackedGuessError) as context:
            reduce_gc_until_cracked(
                self.mesh,
                self.loaded(0.5),
                self.mat,
                self.bc,
                self.settings,
                reduction=0.1,
                max_stages=1,
            )
        self.assertIn("No cracked field after 1 Gc reductions", str(context.exception))
        self.assertFalse(context.exception.healed)
        self.assertEqual(context.exception.error_code, "PFN0005")

    def test_guess_survives_true_gc(self):
        """At u_b = 5 the candidate stays cracked once Gc is restored."""
        on_guess = mock.Mock()
        universe = find_cracked_guess(
            self.mesh,
            self.loaded(5.0),
            self.mat,
            self.bc,
            self.settings,
            reduction=0.1,
            on_guess=on_guess,
        )
        self.assertEqual(universe.label, UNIVERSE_LABELS.CRACKED)
        np.testing.assert_allclose(universe.state.d, 100.0 / 110.0, rtol=1e-8)
        on_guess.assert_called_once()
        guess, stages = on_guess.call_args[0]
        self.assertEqual(stages, 1)
        np.testing.assert_allclose(guess.d, 100.0 / 101.0, rtol=1e-8)

    def test_guess_heals_at_true_gc(self):
        """At u_b = 0.5 the candidate drops to d = 1 / 11 and is reported as healed."""
        with self.assertRaises(CrackedGuessError) as context:
            find_cracked_guess(
                self.mesh, self.loaded(0.5), self.mat, self.bc, self.settings, reduction=0.1
            )
        self.assertTrue(context.exception.healed)


class TestHomogeneousRun(HomogeneousTestCase):
    """Run both drivers end to end past the vigilance load."""

    def test_healed_guess_matches_standard_run(self):
        """Vigilance fires at u_b = 0.3, the candidate heals and the run tracks the standard one."""
        schedule = LoadSchedule.linear(0.5, 5, BOUNDARY_CONDITIONS[LOADINGS.TENSION])
        trace = ParallelUniverseRun(self.mesh, self.mat, schedule, self.settings, alpha=2.0).run()
        standard = standard_newton_run(self.mesh, self.mat, schedule, self.settings, alpha=2.0)
        self.assertAlmostEqual(trace.vigilance_load, 0.3)
        self.assertAlmostEqual(standard.vigilance_load, 0.3)
        self.assertIsNotNone(trace.guess_gc_stages)
        self.assertIn("healed", trace.guess_failure)
        self.assertIsNone(trace.critical_load)
        self.assertIsNone(standard.critical_load)
        self.assertFalse(trace.aborted)
        self.assertEqual(len(trace.records), 5)
        self.assertTrue(all(record.pi_c_total is None for record in trace.records))
        for ours, theirs in zip(trace.accepted_energies(), standard.accepted_energies()):
            self.assertAlmostEqual(ours[0], theirs[0])
            self.assertTrue(math.isclose(ours[1], theirs[1], rel_tol=1e-9))
        e = 1.0
        expected_d = e**2 / (e**2 + 10.0)
        self.assertAlmostEqual(trace.records[-1].max_d, expected_d, places=8)
