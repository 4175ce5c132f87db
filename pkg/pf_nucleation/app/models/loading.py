from dataclasses import dataclass
from gettext import gettext as _

import numpy as np


@dataclass(frozen=True)
class DirichletCondition:
    """
    One prescribed displacement component on a named node set.

    The prescribed value at load level ``u_b`` is ``factor * u_b``, so every condition scales
    with the single load parameter.

    Attributes:
        node_set (str): name of the node set
        component (int): 0 for u_x (or u_z in anti-plane shear), 1 for u_y
        factor (float): multiplier of the load parameter

    """

    node_set: str
    component: int
    factor: float = 0.0


class DirichletBC:
    """
    Constrained degrees of freedom of a mesh and their values per unit load.

    Args:
        mesh (Mesh): the mesh the conditions refer to
        conditions (list): list of :class:`DirichletCondition`
        dofs_per_node (int): 2 in plane strain, 1 in anti-plane shear

    Raises:
        MeshError: if a condition names a node set the mesh does not have
        ValueError: if two conditions prescribe different values on the same dof

    """

    def __init__(self, mesh, conditions, dofs_per_node):
        self.conditions = list(conditions)
        self.dofs_per_node = dofs_per_node
        self.n_dofs = mesh.n_nodes * dofs_per_node
        values = {}
        for condition in self.conditions:
            if not 0 <= condition.component < dofs_per_node:
                raise ValueError(
                    _("Component {} is not available in a model with {} dof(s) per node").format(
                        condition.component, dofs_per_node
                    )
                )
            nodes = mesh.node_set(condition.node_set)
            for dof in nodes * dofs_per_node + condition.component:
                dof = int(dof)
                if dof in values and values[dof] != condition.factor:
                    raise ValueError(
                        _("Conflicting Dirichlet values on dof {} (set '{}')").format(
                            dof, condition.node_set
                        )
                    )
                values[dof] = condition.factor
        self.dofs = np.array(sorted(values), dtype=np.int64)
        self.unit_values = np.array([values[dof] for dof in self.dofs], dtype=float)
        self.free_mask = np.ones(self.n_dofs, dtype=bool)
        self.free_mask[self.dofs] = False
        for array in (self.dofs, self.unit_values, self.free_mask):
            array.setflags(write=False)

    def values(self, u_b):
        """
        Prescribed values at load level ``u_b``.

        Args:
            u_b (float): load parameter

        Returns:
            numpy.ndarray: one value per entry of ``self.dofs``

        """
        return u_b * self.unit_values

    def apply(self, u, u_b):
        """Return a copy of ``u`` with the constrained entries set for load ``u_b``."""
        u = np.array(u, dtype=float)
        u[self.dofs] = self.values(u_b)
        return u


@dataclass(frozen=True)
class LoadSchedule:
    """
    Monotone sequence of load levels with the Dirichlet template they drive.

    Attributes:
        loads (tuple): strictly increasing, non-negative load levels
        conditions (tuple): :class:`DirichletCondition` template

    """

    loads: tuple
    conditions: tuple = ()

    def __post_init__(self):
        loads = tuple(float(value) for value in self.loads)
        if not loads:
            raise ValueError(_("A load schedule needs at least one load level"))
        if loads[0] < 0.0:
            raise ValueError(_("Load levels must be non-negative"))
        if any(b <= a for a, b in zip(loads, loads[1:])):
            raise ValueError(_("Load levels must be strictly increasing"))
        object.__setattr__(self, "loads", loads)
        object.__setattr__(self, "conditions", tuple(self.conditions))

    @classmethod
    def linear(cls, u_max, steps, conditions, u_start=None):
        """
        Equally spaced schedule ending at ``u_max``.

        Args:
            u_max (float): final load
            steps (int): number of load steps
            conditions (list): Dirichlet template
            u_start (float): first load, defaults to ``u_max / steps``

        """
        if steps < 1:
            raise ValueError(_("A load schedule needs at least one step"))
        if u_start is None:
            u_start = u_max / steps
        return cls(tuple(np.linspace(u_start, u_max, steps)), tuple(conditions))

    def __len__(self):
        return len(self.loads)

    def bc(self, mesh, dofs_per_node):
        """Build the :class:`DirichletBC` of this schedule on ``mesh``."""
        return DirichletBC(mesh, self.conditions, dofs_per_node)

    @property
    def step_size(self):
        """Largest gap between consecutive loads (the first gap is measured from zero)."""
        return float(np.max(np.diff((0.0,) + self.loads)))
