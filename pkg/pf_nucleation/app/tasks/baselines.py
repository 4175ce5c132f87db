import logging
import os
import time
from gettext import gettext as _

from pf_nucleation.app import assembly, shared_utils
from pf_nucleation.app.conf import get_setting
from pf_nucleation.app.constants import DRIVERS
from pf_nucleation.app.exceptions import BacktrackingError, PhaseFieldException
from pf_nucleation.app.models import (
    BacktrackRecord,
    FieldState,
    RetraceEvent,
    RunTrace,
    StepRecord,
)
from pf_nucleation.app.output import read_state, write_state
from pf_nucleation.app.staggered import SolveSettings, staggered_solve
from pf_nucleation.app.tasks.nucleation import ParallelUniverseRun, RunObserver, universe_label

log = logging.getLogger(__name__)


def standard_newton_run(mesh, mat, schedule, settings=None, **kwargs):
    """
    Plain load stepping: every step starts from the previous step's solution.

    The nucleation load is the first step whose solution has a node with d >= 0.9.

    Args:
        mesh (Mesh): the mesh
        mat (MaterialParams): material
        schedule (LoadSchedule): load levels and Dirichlet template
        settings (SolveSettings): solver settings
        kwargs: further :class:`ParallelUniverseRun` options

    Returns:
        RunTrace: the step history

    """
    kwargs["cracked_branch"] = False
    return ParallelUniverseRun(mesh, mat, schedule, settings, **kwargs).run()


class CheckpointStore:
    """
    Keeps the accepted state of every step, in memory or as ``.npz`` files.

    Args:
        directory (str): where to write checkpoints; None keeps them in memory

    """

    def __init__(self, directory=None):
        self.directory = directory
        if directory:
            os.makedirs(directory, exist_ok=True)

    def save(self, step, state):
        """Return a checkpoint handle for ``state``."""
        if not self.directory:
            return state
        path = os.path.join(self.directory, "step_{:05d}.npz".format(step))
        write_state(state, path)
        return path

    def load(self, handle):
        """Return the state behind a handle made by :meth:`save`."""
        if isinstance(handle, FieldState):
            return handle
        return read_state(handle)


class BacktrackingRun:
    """
    Load stepping that revisits earlier steps when a new solution, rescaled, beats them.

    After step i converges, the stored optimum of every earlier step j is compared with
    ``(t_j / t_i)^2 * elastic_i + surface_i``. If the smallest such j is beaten by more than
    the tolerance, the run restarts at j from the rescaled displacement and the unchanged phase
    field, and all records after j are discarded.

    Args:
        mesh (Mesh): the mesh
        mat (MaterialParams): material
        schedule (LoadSchedule): proportional load levels and Dirichlet template
        settings (SolveSettings): solver settings
        tol (float): relative improvement needed to retrace
        max_retraces (int): retrace cap
        checkpoint_dir (str): on-disk checkpoint directory, None keeps checkpoints in memory
        observer (RunObserver): receives step events
        stop_on_fracture (bool): end the run once the domain is completely fractured

    """

    def __init__(
        self,
        mesh,
        mat,
        schedule,
        settings=None,
        tol=None,
        max_retraces=None,
        checkpoint_dir=None,
        observer=None,
        stop_on_fracture=True,
    ):
        self.mesh = mesh
        self.mat = mat
        self.schedule = schedule
        self.settings = settings or SolveSettings()
        self.tol = float(tol if tol is not None else get_setting("BACKTRACK_TOLERANCE"))
        self.max_retraces = int(
            max_retraces if max_retraces is not None else get_setting("BACKTRACK_MAX_RETRACES")
        )
        self.store = CheckpointStore(checkpoint_dir)
        self.observer = observer or RunObserver()
        self.stop_on_fracture = stop_on_fracture
        self.bc = schedule.bc(mesh, mat.dofs_per_node)
        self.trace = RunTrace(driver=DRIVERS.BACKTRACKING)
        self.records = []
        self.final_state = None

    def retrace_target(self, load, pi_elastic, pi_surface):
        """
        Smallest earlier step whose stored energy the rescaled solution beats.

        Args:
            load (float): load the new solution was found at
            pi_elastic (float): its elastic energy
            pi_surface (float): its surface energy

        Returns:
            BacktrackRecord: the record to restart from, or None

        """
        for record in self.records[:-1]:
            scaled = record.scaled_energy(load, pi_elastic, pi_surface)
            if scaled < record.pi_total - self.tol * abs(record.pi_total):
                return record
        return None

    def _settings_for(self, step):
        if step == 0:
            return self.settings.with_floor(None)
        previous = self.store.load(self.records[step - 1].checkpoint)
        return self.settings.with_floor(previous.d if previous.is_cracked else None)

    def _fractured(self, state):
        if not self.stop_on_fracture or not shared_utils.crack_separates_domain(
            self.mesh, state.d
        ):
            return False
        steps = int(get_setting("FRACTURE_PLATEAU_STEPS"))
        tolerance = float(get_setting("FRACTURE_PLATEAU_TOLERANCE"))
        surfaces = [record.pi_surface for record in self.records[-(steps + 1) :]]
        if len(surfaces) < steps + 1:
            return False
        return all(abs(b - a) <= tolerance * abs(b) for a, b in zip(surfaces, surfaces[1:]))

    def run(self, init=None):
        """
        Step through the schedule, retracing as needed.

        Args:
            init (FieldState): initial fields, undeformed and undamaged by default

        Returns:
            RunTrace: the final (retraced) step history; ``retraces`` lists every restart

        Raises:
            BacktrackingError: when the retrace cap is exceeded
            PhaseFieldException: any solver failure, with the partial trace attached

        """
        trace = self.trace
        loads = self.schedule.loads
        guess = init or FieldState.zeros(self.mesh, self.mat)
        step = 0
        started = time.perf_counter()
        log.info(_("Starting backtracking run: {} load steps").format(len(loads)))
        try:
            while step < len(loads):
                step_started = time.perf_counter()
                u_b = loads[step]
                result = staggered_solve(
                    self.mesh, guess, self.mat, self.bc, self._settings_for(step), u_b=u_b
                )
                trace.monotonicity_violations += result.monotonicity_violations
                state, energies = result.state, result.energies
                del self.records[step:]
                self.records.append(
                    BacktrackRecord(
                        step, u_b, energies.elastic, energies.surface, self.store.save(step, state)
                    )
                )
                record = self._step_record(step, u_b, state, energies, result.iterations)
                record.wall_s = time.perf_counter() - step_started
                trace.truncate(step)
                trace.append(record)

                target = self.retrace_target(u_b, energies.elastic, energies.surface)
                if target is not None:
                    if len(trace.retraces) >= self.max_retraces:
                        raise BacktrackingError(
                            _("More than {} retraces; last from u_b = {:.6g} to {:.6g}").format(
                                self.max_retraces, u_b, target.load
                            )
                        )
                    trace.retraces.append(RetraceEvent(step, u_b, target.step, target.load))
                    log.info(
                        _("Retracing from u_b = {:.6g} back to u_b = {:.6g}").format(
                            u_b, target.load
                        )
                    )
                    guess = FieldState(state.u * (target.load / u_b), state.d)
                    step = target.step
                    continue

                events = set()
                if state.is_cracked and trace.critical_load == u_b:
                    events.add("acceptance")
                fractured = state.is_cracked and self._fractured(state)
                if fractured or step == len(loads) - 1:
                    events.add("final")
                self.observer.on_step(record, state, events)
                log.info(
                    _("Step {}: u_b = {:.6g}, energy {:.6e}, max d {:.3f}").format(
                        step, u_b, energies.total, record.max_d
                    )
                )
                if fractured:
                    trace.stopped_on_fracture = True
                    break
                guess = state
                step += 1
        except PhaseFieldException as exc:
            trace.aborted = True
            trace.abort_reason = str(exc)
            trace.wall_s = time.perf_counter() - started
            exc.trace = trace
            log.error(_("Run aborted: {}").format(exc))
            raise
        trace.wall_s = time.perf_counter() - started
        self.final_state = self.store.load(self.records[-1].checkpoint) if self.records else None
        return trace

    def _step_record(self, step, u_b, state, energies, iterations):
        label = universe_label(state)
        record = StepRecord(
            step=step,
            u_b=u_b,
            sigma_max=assembly.max_principal_stress(self.mesh, state, self.mat),
            accepted=label,
            max_d=state.max_d,
            stagger_iterations=iterations,
            crack_sets=tuple(shared_utils.crack_sets(self.mesh, state.d)),
        )
        if state.is_cracked:
            record.pi_c_elastic, record.pi_c_surface = energies.elastic, energies.surface
        else:
            record.pi_nc_elastic, record.pi_nc_surface = energies.elastic, energies.surface
        return record


def backtracking_run(mesh, mat, schedule, settings=None, **kwargs):
    """
    Run the backtracking driver.

    Args:
        mesh (Mesh): the mesh
        mat (MaterialParams): material
        schedule (LoadSchedule): proportional load levels and Dirichlet template
        settings (SolveSettings): solver settings
        kwargs: further :class:`BacktrackingRun` options

    Returns:
        RunTrace: the final step history

    """
    return BacktrackingRun(mesh, mat, schedule, settings, **kwargs).run()
