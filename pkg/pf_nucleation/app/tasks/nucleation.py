import logging
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from gettext import gettext as _

from pf_nucleation.app import assembly, shared_utils
from pf_nucleation.app.conf import get_setting
from pf_nucleation.app.constants import DRIVERS, UNIVERSE_LABELS
from pf_nucleation.app.exceptions import CrackedGuessError, PhaseFieldException
from pf_nucleation.app.material import critical_stress
from pf_nucleation.app.models import FieldState, RunTrace, StepRecord, Universe
from pf_nucleation.app.staggered import SolveSettings, staggered_solve

log = logging.getLogger(__name__)


def vigilance_stress(mat, alpha):
    """
    Stress level that triggers the search for a cracked candidate.

    Args:
        mat (MaterialParams): material
        alpha (float): safety factor, > 0

    """
    if not alpha > 0:
        raise ValueError(_("The safety factor alpha must be positive, got {}").format(alpha))
    return critical_stress(mat) / alpha


def vigilance_triggered(mesh, state, mat, alpha):
    """
    Test the vigilance criterion ``sigma_max >= sigma_c / alpha``.

    In anti-plane shear the largest shear stress magnitude is compared with the shear strength.

    Args:
        mesh (Mesh): the mesh
        state (FieldState): current fields
        mat (MaterialParams): material
        alpha (float): safety factor

    Returns:
        tuple: ``(triggered, sigma_max)``

    """
    threshold = vigilance_stress(mat, alpha)
    sigma_max = assembly.max_principal_stress(mesh, state, mat)
    return sigma_max >= threshold, sigma_max


def theoretical_critical_load(L, mat):
    """
    Load at which a homogeneous square of side ``L`` breaks in the sharp-crack limit.

    Args:
        L (float): side length
        mat (MaterialParams): material

    """
    return math.sqrt(mat.Gc * L / (2.0 * mat.E))


def closed_form_vigilance_load(L, mat, K_conc=1.0, alpha=1.0):
    """
    Vigilance load estimated from ``sigma_max = 2 E K u / L``.

    Args:
        L (float): side length
        mat (MaterialParams): material
        K_conc (float): stress-concentration factor
        alpha (float): safety factor

    """
    return math.sqrt(
        27.0
        * L**2
        * mat.Gc
        / (1024.0 * alpha**2 * mat.E * K_conc**2 * mat.ell * (1.0 - mat.nu**2))
    )


def applicability_bound(mat, K_conc=1.0, alpha=1.0):
    """Largest ``L / ell`` for which the vigilance load is guaranteed below the critical load."""
    return 512.0 * (1.0 - mat.nu**2) * K_conc**2 * alpha**2 / 27.0


def check_applicability(L, mat, K_conc=1.0, alpha=1.0):
    """
    Advisory test that the vigilance load precedes the critical load.

    Args:
        L (float): side length
        mat (MaterialParams): material
        K_conc (float): stress-concentration factor, >= 1
        alpha (float): safety factor

    Returns:
        bool: True if ``L / ell`` does not exceed :func:`applicability_bound`

    """
    if K_conc < 1.0:
        raise ValueError(_("The stress-concentration factor must be at least 1"))
    bound = applicability_bound(mat, K_conc, alpha)
    ratio = L / mat.ell
    if ratio <= bound:
        return True
    log.warning(
        _(
            "L/ell = {ratio:.4g} exceeds the sufficient bound {bound:.4g}; the vigilance load "
            "is not guaranteed to precede the critical load"
        ).format(ratio=ratio, bound=bound)
    )
    return False


def universe_label(state):
    return UNIVERSE_LABELS.CRACKED if state.is_cracked else UNIVERSE_LABELS.CRACKLESS


def _universe(result, label=None):
    return Universe(
        state=result.state,
        pi_elastic=result.energies.elastic,
        pi_surface=result.energies.surface,
        label=label or universe_label(result.state),
        iterations=result.iterations,
    )


def reduce_gc_until_cracked(mesh, state, mat, bc, settings, reduction=None, max_stages=None):
    """
    Lower Gc geometrically until the staggered solution has a node with d >= 0.9.

    Each stage starts from the solution of the previous one. Irreversibility is off.

    Args:
        mesh (Mesh): the mesh
        state (FieldState): start point, with the current Dirichlet values applied
        mat (MaterialParams): material with the true Gc
        bc (DirichletBC): constrained dofs
        settings (SolveSettings): solver settings
        reduction (float): factor applied to Gc per stage
        max_stages (int): stage cap

    Returns:
        tuple: ``(cracked state, stages used)``

    Raises:
        CrackedGuessError: if the cap is reached without a cracked state

    """
    reduction = reduction or float(get_setting("GC_REDUCTION_FACTOR"))
    max_stages = max_stages or int(get_setting("GC_REDUCTION_MAX_STAGES"))
    free = settings.with_floor(None)
    for stage in range(1, max_stages + 1):
        reduced = mat.with_gc(mat.Gc0 * reduction**stage)
        state = staggered_solve(mesh, state, reduced, bc, free).state
        log.debug(
            _("Gc stage {}: Gc = {:.4e}, max d = {:.4f}").format(stage, reduced.Gc0, state.max_d)
        )
        if state.is_cracked:
            return state, stage
    raise CrackedGuessError(
        _("No cracked field after {} Gc reductions (final Gc = {:.3e})").format(
            max_stages, mat.Gc0 * reduction**max_stages
        )
    )


def find_cracked_guess(
    mesh, state_at_trigger, mat, bc, settings, reduction=None, max_stages=None, on_guess=None
):
    """
    Build the cracked candidate at the load where vigilance fired.

    Gc is reduced until the staggered solution cracks; the true Gc is then restored and the
    cracked field is solved once more.

    Args:
        mesh (Mesh): the mesh
        state_at_trigger (FieldState): crackless solution at the current load
        mat (MaterialParams): material
        bc (DirichletBC): constrained dofs
        settings (SolveSettings): solver settings
        reduction (float): Gc factor per stage
        max_stages (int): stage cap
        on_guess (callable): called with ``(guess_state, stages)`` before Gc is restored

    Returns:
        Universe: the converged cracked candidate

    Raises:
        CrackedGuessError: when the stage cap is exhausted or the guess heals at the true Gc

    """
    guess, stages = reduce_gc_until_cracked(
        mesh, state_at_trigger, mat, bc, settings, reduction, max_stages
    )
    log.info(_("Cracked initial guess found after {} Gc reduction(s)").format(stages))
    if on_guess is not None:
        on_guess(guess, stages)
    result = staggered_solve(mesh, guess, mat, bc, settings.with_floor(None))
    if not result.state.is_cracked:
        log.warning(
            _("Cracked guess healed when Gc was restored (max d = {:.3f})").format(
                result.state.max_d
            )
        )
        raise CrackedGuessError(_("Cracked guess healed at the true Gc"), healed=True)
    return _universe(result, UNIVERSE_LABELS.CRACKED)


class RunObserver:
    """Receives driver events; the default implementation ignores them."""

    def on_step(self, record, state, events):
        """
        Called after every accepted step.

        Args:
            record (StepRecord): the step record
            state (FieldState): the accepted state
            events (set): any of "vigilance", "acceptance", "final"

        """

    def on_cracked_guess(self, u_b, state):
        """Called with the cracked initial guess before Gc is restored."""


class ParallelUniverseRun:
    """
    Load stepping with a crackless and, after vigilance fires, a cracked candidate.

    At every step both live candidates are solved from their own previous states and the one
    with lower total energy is accepted. Once a cracked candidate wins, the crackless one is
    dropped for good and the phase field becomes irreversible.
    The cracked-guess search runs at most once; if its candidate heals, the run goes on with
    the crackless candidate alone.

    With ``cracked_branch=False`` the loop is the standard load stepping: a single candidate
    solved from the previous step, relabelled cracked when it nucleates by itself.

    Args:
        mesh (Mesh): the mesh
        mat (MaterialParams): material
        schedule (LoadSchedule): load levels and Dirichlet template
        settings (SolveSettings): solver settings, defaults from configuration
        alpha (float): vigilance safety factor
        cracked_branch (bool): whether to build and track the cracked candidate
        observer (RunObserver): receives step events
        reference_length (float): if given, the applicability bound is checked for it
        stop_on_fracture (bool): end the run once the domain is completely fractured
        workers (int): threads used to solve both candidates; 1 solves them in turn

    """

    def __init__(
        self,
        mesh,
        mat,
        schedule,
        settings=None,
        alpha=None,
        cracked_branch=True,
        observer=None,
        reference_length=None,
        stop_on_fracture=True,
        workers=None,
    ):
        self.mesh = mesh
        self.mat = mat
        self.schedule = schedule
        self.settings = settings or SolveSettings()
        self.alpha = float(alpha if alpha is not None else get_setting("VIGILANCE_SAFETY_FACTOR"))
        vigilance_stress(mat, self.alpha)
        self.cracked_branch = cracked_branch
        self.observer = observer or RunObserver()
        self.reference_length = reference_length
        self.stop_on_fracture = stop_on_fracture
        self.workers = int(workers or get_setting("PARALLEL_UNIVERSE_WORKERS"))
        self.bc = schedule.bc(mesh, mat.dofs_per_node)
        self.tie_tolerance = float(get_setting("ACCEPTANCE_TIE_TOLERANCE"))
        driver = DRIVERS.PARALLEL_UNIVERSE if cracked_branch else DRIVERS.STANDARD
        self.trace = RunTrace(driver=driver)
        self.final_state = None
        self._lock = threading.Lock()

    def _solve(self, state, u_b, settings):
        result = staggered_solve(self.mesh, state, self.mat, self.bc, settings, u_b=u_b)
        with self._lock:
            self.trace.monotonicity_violations += result.monotonicity_violations
        return _universe(result)

    def _solve_both(self, crackless, cracked, u_b, settings):
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=2) as executor:
                first = executor.submit(self._solve, crackless.state, u_b, settings)
                second = executor.submit(self._solve, cracked.state, u_b, settings)
                return first.result(), second.result()
        return (
            self._solve(crackless.state, u_b, settings),
            self._solve(cracked.state, u_b, settings),
        )

    def _fractured(self, state):
        if not self.stop_on_fracture or not shared_utils.crack_separates_domain(
            self.mesh, state.d
        ):
            return False
        steps = int(get_setting("FRACTURE_PLATEAU_STEPS"))
        tolerance = float(get_setting("FRACTURE_PLATEAU_TOLERANCE"))
        surfaces = [r.accepted_surface for r in self.trace.records[-(steps + 1) :]]
        if len(surfaces) < steps + 1 or any(value is None for value in surfaces):
            return False
        return all(
            abs(b - a) <= tolerance * abs(b) for a, b in zip(surfaces, surfaces[1:])
        )

    def run(self, init=None):
        """
        Step through the schedule.

        Args:
            init (FieldState): initial fields, undeformed and undamaged by default

        Returns:
            RunTrace: the step history

        Raises:
            PhaseFieldException: any solver failure; the partial trace is attached to the
                exception as ``trace``

        """
        trace = self.trace
        if self.reference_length is not None and not self.mat.is_antiplane:
            check_applicability(self.reference_length, self.mat, alpha=self.alpha)
        crackless = Universe(init or FieldState.zeros(self.mesh, self.mat), 0.0, 0.0)
        cracked = None
        searched = False
        settings = self.settings.with_floor(None)
        started = time.perf_counter()
        log.info(
            _("Starting {driver} run: {steps} load steps, {nodes} nodes").format(
                driver=trace.driver, steps=len(self.schedule), nodes=self.mesh.n_nodes
            )
        )
        try:
            for step, u_b in enumerate(self.schedule.loads):
                step_started = time.perf_counter()
                events = set()
                iterations = 0
                if crackless is not None and cracked is not None:
                    crackless, cracked = self._solve_both(crackless, cracked, u_b, settings)
                    iterations += crackless.iterations + cracked.iterations
                elif crackless is not None:
                    crackless = self._solve(crackless.state, u_b, settings)
                    iterations += crackless.iterations
                else:
                    cracked = self._solve(cracked.state, u_b, settings)
                    iterations += cracked.iterations

                if crackless is not None and cracked is not None and not cracked.is_cracked:
                    trace.guess_failure = _("Cracked candidate healed at u_b = {:.6g}").format(u_b)
                    log.warning(trace.guess_failure)
                    cracked = None

                measured = crackless if crackless is not None else cracked
                fired, sigma_max = vigilance_triggered(
                    self.mesh, measured.state, self.mat, self.alpha
                )
                if fired and trace.vigilance_load is None:
                    events.add("vigilance")
                    log.info(
                        _("Vigilance fired at u_b = {:.6g} (sigma_max = {:.4e})").format(
                            u_b, sigma_max
                        )
                    )
                vigilant = fired or trace.vigilance_load is not None

                if (
                    self.cracked_branch
                    and vigilant
                    and not searched
                    and cracked is None
                    and crackless is not None
                    and not crackless.is_cracked
                ):
                    # one search per run; a lost candidate is not rebuilt
                    searched = True
                    try:
                        cracked = find_cracked_guess(
                            self.mesh,
                            crackless.state,
                            self.mat,
                            self.bc,
                            settings,
                            on_guess=lambda state, stages, u_b=u_b: self._on_guess(
                                u_b, state, stages
                            ),
                        )
                        iterations += cracked.iterations
                    except CrackedGuessError as exc:
                        if not exc.healed:
                            raise
                        trace.guess_failure = str(exc)
                        log.warning(
                            _("Continuing with the crackless candidate only: {}").format(exc)
                        )

                record = StepRecord(step=step, u_b=u_b, sigma_max=sigma_max, vigilance=vigilant)
                if crackless is not None:
                    record.pi_nc_elastic = crackless.pi_elastic
                    record.pi_nc_surface = crackless.pi_surface
                if cracked is not None:
                    record.pi_c_elastic = cracked.pi_elastic
                    record.pi_c_surface = cracked.pi_surface

                accepted = self._accept(crackless, cracked)
                if accepted.is_cracked and trace.critical_load is None:
                    events.add("acceptance")
                    log.info(_("Cracked solution accepted at u_b = {:.6g}").format(u_b))
                if accepted.is_cracked:
                    if accepted is crackless and cracked is not None:
                        record.pi_c_elastic = accepted.pi_elastic
                        record.pi_c_surface = accepted.pi_surface
                    crackless, cracked = None, accepted
                    settings = self.settings.with_floor(accepted.state.d)
                record.accepted = accepted.label
                record.max_d = accepted.state.max_d
                record.stagger_iterations = iterations
                record.crack_sets = tuple(shared_utils.crack_sets(self.mesh, accepted.state.d))
                record.wall_s = time.perf_counter() - step_started
                trace.append(record)
                log.info(
                    _(
                        "Step {step}: u_b = {u_b:.6g}, accepted {label}, energy {pi:.6e}, "
                        "max d {d:.3f}"
                    ).format(
                        step=step,
                        u_b=u_b,
                        label=accepted.label,
                        pi=accepted.pi_total,
                        d=accepted.state.max_d,
                    )
                )
                fractured = accepted.is_cracked and self._fractured(accepted.state)
                last = fractured or step == len(self.schedule) - 1
                if last:
                    events.add("final")
                self.observer.on_step(record, accepted.state, events)
                if fractured:
                    trace.stopped_on_fracture = True
                    log.info(_("Domain completely fractured at u_b = {:.6g}").format(u_b))
                    break
        except PhaseFieldException as exc:
            trace.aborted = True
            trace.abort_reason = str(exc)
            trace.wall_s = time.perf_counter() - started
            exc.trace = trace
            log.error(_("Run aborted: {}").format(exc))
            raise
        trace.wall_s = time.perf_counter() - started
        self.final_state = (cracked or crackless).state
        return trace

    def _accept(self, crackless, cracked):
        if crackless is None:
            return cracked
        if cracked is None:
            return crackless
        if cracked.pi_total < crackless.pi_total * (1.0 - self.tie_tolerance):
            return cracked
        return crackless

    def _on_guess(self, u_b, state, stages):
        self.trace.guess_gc_stages = stages
        self.observer.on_cracked_guess(u_b, state)


def parallel_universe_run(mesh, mat, schedule, settings=None, alpha=None, **kwargs):
    """
    Run the parallel-universe driver.

    Args:
        mesh (Mesh): the mesh
        mat (MaterialParams): material
        schedule (LoadSchedule): load levels and Dirichlet template
        settings (SolveSettings): solver settings
        alpha (float): vigilance safety factor
        kwargs: further :class:`ParallelUniverseRun` options

    Returns:
        RunTrace: the step history

    """
    return ParallelUniverseRun(mesh, mat, schedule, settings, alpha, **kwargs).run()
