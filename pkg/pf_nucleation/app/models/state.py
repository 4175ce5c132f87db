from dataclasses import dataclass
from gettext import gettext as _

import numpy as np

from pf_nucleation.app.constants import CRACK_THRESHOLD, UNIVERSE_LABELS


@dataclass(frozen=True, eq=False)
class FieldState:
    """
    Nodal displacement and phase field at one load level.

    Attributes:
        u (numpy.ndarray): displacement, node-major (``[u_x0, u_y0, u_x1, ...]`` in plane
            strain, ``[u_z0, u_z1, ...]`` in anti-plane shear)
        d (numpy.ndarray): phase field, one value per node

    """

    u: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=float).ravel()
        d = np.array(self.d, dtype=float).ravel()
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(d))):
            raise ValueError(_("Field state contains non-finite values"))
        u.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "d", d)

    @classmethod
    def zeros(cls, mesh, mat):
        """
        Undeformed, undamaged state.

        Args:
            mesh (Mesh): the mesh
            mat (MaterialParams): decides the number of displacement components

        """
        return cls(np.zeros(mesh.n_nodes * mat.dofs_per_node), np.zeros(mesh.n_nodes))

    @property
    def max_d(self):
        """Largest nodal phase-field value."""
        return float(self.d.max()) if self.d.size else 0.0

    @property
    def is_cracked(self):
        """Whether some node has reached the crack threshold."""
        return self.max_d >= CRACK_THRESHOLD

    def with_u(self, u):
        return FieldState(u, self.d)

    def with_d(self, d):
        return FieldState(self.u, d)

    def check_sizes(self, mesh, mat):
        """
        Raise ValueError unless the vectors match the mesh.

        Args:
            mesh (Mesh): the mesh
            mat (MaterialParams): decides the number of displacement components

        """
        if self.d.size != mesh.n_nodes or self.u.size != mesh.n_nodes * mat.dofs_per_node:
            raise ValueError(
                _("State sizes (u={u}, d={d}) do not match a mesh of {n} nodes").format(
                    u=self.u.size, d=self.d.size, n=mesh.n_nodes
                )
            )


@dataclass(frozen=True)
class Universe:
    """
    A candidate solution at one load level, labelled cracked or crackless.

    Attributes:
        state (FieldState): the converged fields
        pi_elastic (float): elastic energy
        pi_surface (float): surface energy
        label (str): one of ``UNIVERSE_LABELS``
        converged (bool): whether the staggered solve met its tolerance
        iterations (int): staggered alternations spent

    """

    state: FieldState
    pi_elastic: float
    pi_surface: float
    label: str = UNIVERSE_LABELS.CRACKLESS
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        if self.label == UNIVERSE_LABELS.CRACKED and not self.state.is_cracked:
            raise ValueError(
                _("A cracked universe needs max d >= {}").format(CRACK_THRESHOLD)
            )

    @property
    def pi_total(self):
        return self.pi_elastic + self.pi_surface

    @property
    def is_cracked(self):
        return self.label == UNIVERSE_LABELS.CRACKED
