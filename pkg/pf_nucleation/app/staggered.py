"""
Staggered minimization of the phase-field energy at a fixed load.

The displacement is found by damped Newton iteration at fixed phase field and the phase field by
one projected linear solve at fixed displacement. The two alternate until the total energy stops
changing.
"""
import logging
from dataclasses import dataclass, replace
from gettext import gettext as _
from typing import NamedTuple

import numpy as np

from pf_nucleation.app import assembly
from pf_nucleation.app.conf import get_setting
from pf_nucleation.app.constants import ENERGY_MONOTONICITY_SLACK
from pf_nucleation.app.exceptions import NonConvergenceError

log = logging.getLogger(__name__)

# Relative slack of the line search acceptance test.
LINE_SEARCH_SLACK = 1e-14


@dataclass(frozen=True, eq=False)
class SolveSettings:
    """
    Tolerances and caps of one staggered solve.

    Attributes:
        tol_stagger (float): relative change of the total energy that ends the alternation
        tol_newton_u (float): relative residual reduction of the displacement Newton solve
        max_stagger (int): alternation cap
        max_newton_u (int): Newton cap
        d_floor (numpy.ndarray): lower bound on the phase field, or None when irreversibility
            is off
        linear_solver (str): one of ``LINEAR_SOLVERS``

    """

    tol_stagger: float = None
    tol_newton_u: float = None
    max_stagger: int = None
    max_newton_u: int = None
    d_floor: np.ndarray = None
    linear_solver: str = None

    def __post_init__(self):
        defaults = {
            "tol_stagger": "TOL_STAGGER",
            "tol_newton_u": "TOL_NEWTON_U",
            "max_stagger": "MAX_STAGGER",
            "max_newton_u": "MAX_NEWTON_U",
            "linear_solver": "LINEAR_SOLVER",
        }
        for attribute, setting in defaults.items():
            if getattr(self, attribute) is None:
                object.__setattr__(self, attribute, get_setting(setting))
        object.__setattr__(self, "tol_stagger", float(self.tol_stagger))
        object.__setattr__(self, "tol_newton_u", float(self.tol_newton_u))
        object.__setattr__(self, "max_stagger", int(self.max_stagger))
        object.__setattr__(self, "max_newton_u", int(self.max_newton_u))
        if self.tol_stagger <= 0 or self.tol_newton_u <= 0:
            raise ValueError(_("Solver tolerances must be positive"))
        if self.max_stagger < 1 or self.max_newton_u < 1:
            raise ValueError(_("Iteration caps must be at least 1"))
        if self.d_floor is not None:
            floor = np.array(self.d_floor, dtype=float)
            floor.setflags(write=False)
            object.__setattr__(self, "d_floor", floor)

    @property
    def irreversible(self):
        return self.d_floor is not None

    def with_floor(self, d_floor):
        """Copy with irreversibility switched to a lower bound (``None`` switches it off)."""
        return replace(self, d_floor=d_floor)


class SubproblemResult(NamedTuple):
    state: object
    iterations: int
    residuals: list


class StaggeredResult(NamedTuple):
    """
    Outcome of :func:`staggered_solve`.

    Attributes:
        state (FieldState): converged fields
        energies (Energies): elastic and surface energy of ``state``
        iterations (int): alternations performed
        history (list): total energy before the first and after every alternation
        monotonicity_violations (int): alternations that raised the energy beyond round-off

    """

    state: object
    energies: assembly.Energies
    iterations: int
    history: list
    monotonicity_violations: int


def _elastic_energy(mesh, state, mat):
    elastic, _surface = assembly.element_energies(mesh, state, mat)
    return float(elastic.sum())


def solve_u_subproblem(mesh, state, mat, bc, settings):
    """
    Minimize the energy over the displacement at fixed phase field.

    Constrained dofs keep the values they have in ``state``. Each Newton step is damped by
    halving until the elastic energy does not increase.

    Args:
        mesh (Mesh): the mesh
        state (FieldState): start point, with the Dirichlet values already applied
        mat (MaterialParams): material
        bc (DirichletBC): constrained dofs
        settings (SolveSettings): tolerances

    Returns:
        SubproblemResult: the new state, Newton steps taken and residual norms

    Raises:
        NonConvergenceError: when ``max_newton_u`` steps do not reach the tolerance, or when
            the line search finds no step that lowers the energy

    """
    halvings = int(get_setting("LINE_SEARCH_HALVINGS"))
    residual = assembly.assemble_residual_u(mesh, state, mat, bc)
    initial = np.linalg.norm(residual.vector)
    residuals = [initial]
    energy = None
    for iteration in range(settings.max_newton_u + 1):
        norm = residuals[-1]
        reference = max(initial, np.linalg.norm(residual.reactions))
        if norm <= settings.tol_newton_u * reference:
            return SubproblemResult(state, iteration, residuals)
        if iteration == settings.max_newton_u:
            break
        K = assembly.assemble_K_u(mesh, state, mat).with_constraints(bc.dofs)
        step = assembly.solve_spd(K, -residual.vector, method=settings.linear_solver)
        if energy is None:
            energy = _elastic_energy(mesh, state, mat)
        scale = 1.0
        for _halving in range(halvings + 1):
            trial = state.with_u(state.u + scale * step)
            trial_energy = _elastic_energy(mesh, trial, mat)
            if trial_energy <= energy + LINE_SEARCH_SLACK * abs(energy):
                break
            scale *= 0.5
        else:
            raise NonConvergenceError(
                _(
                    "Line search found no descent after {} halvings at Newton step {} "
                    "(residual {:.3e})"
                ).format(halvings, iteration + 1, norm),
                state=state,
                history=residuals,
            )
        state, energy = trial, trial_energy
        residual = assembly.assemble_residual_u(mesh, state, mat, bc)
        residuals.append(np.linalg.norm(residual.vector))
        log.debug(
            _("Newton step {}: residual {:.3e}, step scale {}").format(
                iteration + 1, residuals[-1], scale
            )
        )
    raise NonConvergenceError(
        _("Displacement Newton solve did not converge in {} steps").format(
            settings.max_newton_u
        ),
        state=state,
        history=residuals,
    )


def project_phase_field(d, settings):
    """Clamp to [0, 1] and apply the irreversibility floor."""
    d = np.clip(d, 0.0, 1.0)
    if settings.irreversible:
        d = np.maximum(d, settings.d_floor)
    return d


def solve_d_subproblem(mesh, state, mat, settings):
    """
    Minimize the energy over the phase field at fixed displacement.

    The energy is quadratic in ``d``, so one linear solve gives the unconstrained minimizer,
    which is then projected onto the admissible box.

    Args:
        mesh (Mesh): the mesh
        state (FieldState): current fields
        mat (MaterialParams): material
        settings (SolveSettings): linear solver and irreversibility floor

    Returns:
        FieldState: the state with the new phase field

    """
    K = assembly.assemble_K_d(mesh, state, mat)
    residual = assembly.assemble_residual_d(mesh, state, mat)
    step = assembly.solve_spd(K, -residual, method=settings.linear_solver)
    return state.with_d(project_phase_field(state.d + step, settings))


def staggered_solve(mesh, init, mat, bc, settings, u_b=None):
    """
    Alternate exact displacement and phase-field minimizations until the energy settles.

    Args:
        mesh (Mesh): the mesh
        init (FieldState): start point
        mat (MaterialParams): material
        bc (DirichletBC): constrained dofs
        settings (SolveSettings): tolerances, caps and irreversibility
        u_b (float): load level to apply to the constrained dofs; if None the values in
            ``init`` are kept

    Returns:
        StaggeredResult: the converged state and its energies

    Raises:
        NonConvergenceError: when ``max_stagger`` alternations do not converge; carries the
            last state and the energy history

    """
    state = init
    if u_b is not None:
        state = state.with_u(bc.apply(state.u, u_b))
    if settings.irreversible:
        state = state.with_d(project_phase_field(state.d, settings))
    previous = assembly.total_energy(mesh, state, mat).total
    history = [previous]
    violations = 0
    for iteration in range(1, settings.max_stagger + 1):
        state = solve_u_subproblem(mesh, state, mat, bc, settings).state
        state = solve_d_subproblem(mesh, state, mat, settings)
        energies = assembly.total_energy(mesh, state, mat)
        current = energies.total
        history.append(current)
        if current > previous + ENERGY_MONOTONICITY_SLACK * abs(previous):
            violations += 1
            log.warning(
                _("Staggered energy rose from {:.12e} to {:.12e} at alternation {}").format(
                    previous, current, iteration
                )
            )
        if abs(current - previous) <= settings.tol_stagger * abs(current):
            log.debug(
                _("Staggered solve converged after {} alternation(s), energy {:.6e}").format(
                    iteration, current
                )
            )
            return StaggeredResult(state, energies, iteration, history, violations)
        previous = current
    raise NonConvergenceError(
        _("Staggered solve did not converge in {} alternations").format(settings.max_stagger),
        state=state,
        history=history,
    )
