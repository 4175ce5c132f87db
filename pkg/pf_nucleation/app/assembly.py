"""
Global residuals, tangents and energies on linear triangles.

Every element quantity is evaluated for all elements at once with numpy. The degradation of an
element is the exact element average of ``(1 - d)^2`` (plus ``k_res``), so that the assembled
residuals are the exact gradients of the discrete energy and the tangents are their exact
derivatives wherever no element changes the sign of its volumetric strain.
"""
import logging
import threading
import weakref
from dataclasses import dataclass, field
from gettext import gettext as _
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from pf_nucleation.app import material
from pf_nucleation.app.conf import get_setting
from pf_nucleation.app.constants import LINEAR_SOLVERS
from pf_nucleation.app.exceptions import LinearSolverError

log = logging.getLogger(__name__)

SOLVE_RTOL = 1e-8

# LU pivots smaller than this fraction of the largest one mark the matrix as singular.
PIVOT_RATIO_FLOOR = 1e-13

_geometry_cache = weakref.WeakKeyDictionary()
_geometry_lock = threading.Lock()


class Energies(NamedTuple):
    elastic: float
    surface: float

    @property
    def total(self):
        return self.elastic + self.surface


class Residual(NamedTuple):
    """
    A residual vector split into its free part and the reaction channel.

    Attributes:
        vector (numpy.ndarray): residual with constrained entries set to zero
        reactions (numpy.ndarray): residual entries at the constrained dofs

    """

    vector: np.ndarray
    reactions: np.ndarray


@dataclass(frozen=True, eq=False)
class SparseSym:
    """
    Symmetric sparse matrix plus the dofs eliminated before solving.

    Attributes:
        matrix (scipy.sparse.csr_matrix): the assembled matrix
        constrained (numpy.ndarray): indices of Dirichlet dofs

    """

    matrix: sparse.csr_matrix
    constrained: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def with_constraints(self, dofs):
        return SparseSym(self.matrix, np.asarray(dofs, dtype=np.int64))

    def asymmetry(self):
        """Largest |K - K^T| entry relative to the largest |K| entry."""
        scale = abs(self.matrix).max() if self.matrix.nnz else 0.0
        if scale == 0.0:
            return 0.0
        diff = self.matrix - self.matrix.T
        return (abs(diff).max() if diff.nnz else 0.0) / scale


class _Geometry:
    """Per-mesh element data: areas, shape-function gradients and dof maps."""

    def __init__(self, mesh):
        x = mesh.node_coords[mesh.triangles]
        x0, x1, x2 = x[:, 0], x[:, 1], x[:, 2]
        self.areas = mesh.signed_areas
        b = np.stack([x1[:, 1] - x2[:, 1], x2[:, 1] - x0[:, 1], x0[:, 1] - x1[:, 1]], axis=1)
        c = np.stack([x2[:, 0] - x1[:, 0], x0[:, 0] - x2[:, 0], x1[:, 0] - x0[:, 0]], axis=1)
        two_area = 2.0 * self.areas[:, None]
        # (ne, 3 nodes, 2 derivatives)
        self.dN = np.stack([b / two_area, c / two_area], axis=2)
        ne = mesh.n_elements
        self.B = np.zeros((ne, 3, 6))
        self.B[:, 0, 0::2] = self.dN[:, :, 0]
        self.B[:, 1, 1::2] = self.dN[:, :, 1]
        self.B[:, 2, 0::2] = self.dN[:, :, 1]
        self.B[:, 2, 1::2] = self.dN[:, :, 0]
        self.mass = (self.areas / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))
        self.d_dofs = np.asarray(mesh.triangles)
        self.vector_dofs = np.stack(
            [2 * self.d_dofs, 2 * self.d_dofs + 1], axis=2
        ).reshape(ne, 6)
        self.n_nodes = mesh.n_nodes


def geometry(mesh):
    """Return the cached element data of ``mesh``."""
    with _geometry_lock:
        geo = _geometry_cache.get(mesh)
        if geo is None:
            geo = _Geometry(mesh)
            _geometry_cache[mesh] = geo
        return geo


def _u_dofs(geo, mat):
    return geo.d_dofs if mat.is_antiplane else geo.vector_dofs


def _scatter(dofs, local, n):
    return np.bincount(dofs.ravel(), weights=local.ravel(), minlength=n)


def _sparse(dofs, local, n):
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).ravel()
    cols = np.tile(dofs, (1, k)).ravel()
    return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _element_fields(mesh, state, mat):
    """Element degradation, tensile/compressive energy densities and the element strains."""
    state.check_sizes(mesh, mat)
    geo = geometry(mesh)
    d_e = state.d[geo.d_dofs]
    intact = 1.0 - d_e
    quad = np.einsum("ea,eab,eb->e", intact, geo.mass, intact)
    g = quad / geo.areas + mat.k_res
    u_e = state.u[_u_dofs(geo, mat)]
    if mat.is_antiplane:
        strain = np.einsum("eai,ea->ei", geo.dN, u_e)
        psi_plus, _tau = material.antiplane_psi(strain, 0.0, mat)
        psi_minus = np.zeros_like(psi_plus)
    else:
        strain = np.einsum("eij,ej->ei", geo.B, u_e)
        psi_plus, psi_minus = material.psi_split(strain, mat)
    return geo, d_e, g, strain, psi_plus, psi_minus


def _element_stress(geo, strain, g, mat):
    if mat.is_antiplane:
        return g[:, None] * mat.mu * strain
    return material.degraded_stress(strain, g, mat)


def split_residual(r, bc):
    """
    Separate the constrained entries of a residual.

    Args:
        r (numpy.ndarray): full residual
        bc (DirichletBC): the constraints, or None

    Returns:
        Residual: free part and reactions

    """
    if bc is None:
        return Residual(r, np.zeros(0))
    reactions = r[bc.dofs].copy()
    r = r.copy()
    r[bc.dofs] = 0.0
    return Residual(r, reactions)


def assemble_residual_u(mesh, state, mat, bc=None):
    """
    Gradient of the total energy with respect to the displacement dofs.

    Args:
        mesh (Mesh): the mesh
        state (FieldState): current fields
        mat (MaterialParams): material
        bc (DirichletBC): constraints whose entries go to the reaction channel

    Returns:
        Residual: free residual and reactions

    """
    geo, _d, g, strain, _p, _m = _element_fields(mesh, state, mat)
    sigma = _element_stress(geo, strain, g, mat)
    if mat.is_antiplane:
        local = np.einsum("eai,ei->ea", geo.dN, sigma)
    else:
        local = np.einsum("eij,ei->ej", geo.B, sigma)
    local *= geo.areas[:, None]
    r = _scatter(_u_dofs(geo, mat), local, state.u.size)
    return split_residual(r, bc)


def assemble_residual_d(mesh, state, mat):
    """
    Gradient of the total energy with respect to the nodal phase field.

    Args:
        mesh (Mesh): the mesh
        state (FieldState): current fields
        mat (MaterialParams): material

    Returns:
        numpy.ndarray: one entry per node

    """
    geo, d_e, _g, _s, psi_plus, _m = _element_fields(mesh, state, mat)
    A = material.anisotropy_matrix(mat)
    driving = -2.0 * psi_plus[:, None] * np.einsum("eab,eb->ea", geo.mass, 1.0 - d_e)
    local_mass = mat.Gc0 / mat.ell * np.einsum("eab,eb->ea", geo.mass, d_e)
    grad_d = np.einsum("eai,ea->ei", geo.dN, d_e)
    gradient = (mat.Gc0 * mat.ell * geo.areas)[:, None] * np.einsum(
        "eai,ij,ej->ea", geo.dN, A, grad_d
    )
    return _scatter(geo.d_dofs, driving + local_mass + gradient, mesh.n_nodes)


def assemble_K_u(mesh, state, mat):
    """
    Tangent of :func:`assemble_residual_u`.

    Returns:
        SparseSym: the displacement stiffness, without constraints attached

    """
    geo, _d, g, strain, _p, _m = _element_fields(mesh, state, mat)
    if mat.is_antiplane:
        local = (g * mat.mu * geo.areas)[:, None, None] * np.einsum(
            "eai,ebi->eab", geo.dN, geo.dN
        )
    else:
        C = material.degraded_tangent(strain, g, mat)
        local = geo.areas[:, None, None] * np.einsum("eki,ekl,elj->eij", geo.B, C, geo.B)
    return SparseSym(_sparse(_u_dofs(geo, mat), local, state.u.size))


def assemble_K_d(mesh, state, mat):
    """
    Tangent of :func:`assemble_residual_d`; constant in ``d`` at fixed ``u``.

    Returns:
        SparseSym: the phase-field stiffness

    """
    geo, _d, _g, _s, psi_plus, _m = _element_fields(mesh, state, mat)
    A = material.anisotropy_matrix(mat)
    local = (2.0 * psi_plus + mat.Gc0 / mat.ell)[:, None, None] * geo.mass
    local = local + (mat.Gc0 * mat.ell * geo.areas)[:, None, None] * np.einsum(
        "eai,ij,ebj->eab", geo.dN, A, geo.dN
    )
    return SparseSym(_sparse(geo.d_dofs, local, mesh.n_nodes))


def element_energies(mesh, state, mat):
    """
    Elastic and surface energy of every element.

    Returns:
        tuple: two arrays of length ``n_elements``

    """
    geo, d_e, g, _s, psi_plus, psi_minus = _element_fields(mesh, state, mat)
    elastic = geo.areas * (g * psi_plus + psi_minus)
    grad_d = np.einsum("eai,ea->ei", geo.dN, d_e)
    A = material.anisotropy_matrix(mat)
    local = np.einsum("ea,eab,eb->e", d_e, geo.mass, d_e)
    gradient = mat.ell**2 * geo.areas * np.einsum("ei,ij,ej->e", grad_d, A, grad_d)
    surface = mat.Gc0 / (2.0 * mat.ell) * (local + gradient)
    return elastic, surface


def total_energy(mesh, state, mat):
    """
    Elastic and surface parts of the total energy.

    Returns:
        Energies: ``(elastic, surface)`` with a ``total`` property

    """
    elastic, surface = element_energies(mesh, state, mat)
    return Energies(float(elastic.sum()), float(surface.sum()))


def element_stresses(mesh, state, mat):
    """Degraded Voigt stress (plane strain) or shear stress vector (anti-plane) per element."""
    geo, _d, g, strain, _p, _m = _element_fields(mesh, state, mat)
    return _element_stress(geo, strain, g, mat)


def max_principal_stress(mesh, state, mat):
    """
    Largest principal stress over all elements (largest |tau| in anti-plane shear).

    The value is negative when every element is in compression.

    Args:
        mesh (Mesh): the mesh
        state (FieldState): current fields
        mat (MaterialParams): material

    """
    sigma = element_stresses(mesh, state, mat)
    if sigma.shape[0] == 0:
        return 0.0
    if mat.is_antiplane:
        values = np.linalg.norm(sigma, axis=1)
    else:
        values = material.principal_stress(sigma)
    return float(values.max())


def _relative_residual(A, x, b):
    norm_b = np.linalg.norm(b)
    return np.linalg.norm(A @ x - b) / norm_b if norm_b > 0 else 0.0


def _solve_direct(A, b):
    try:
        lu = splinalg.splu(A.tocsc())
    except RuntimeError as exc:
        raise LinearSolverError(_("Sparse LU factorization failed: {}").format(exc))
    pivots = np.abs(lu.U.diagonal())
    if pivots.size and pivots.min() <= PIVOT_RATIO_FLOOR * pivots.max():
        raise LinearSolverError(_("Matrix is singular to working precision"))
    x = lu.solve(b)
    if _relative_residual(A, x, b) > SOLVE_RTOL:
        x = x + lu.solve(b - A @ x)
    return x


def _solve_cg(A, b):
    diagonal = A.diagonal()
    if np.any(diagonal <= 0.0):
        raise LinearSolverError(_("Matrix has a non-positive diagonal entry"))
    preconditioner = sparse.diags(1.0 / diagonal)
    x, info = splinalg.cg(
        A, b, rtol=SOLVE_RTOL, atol=0.0, maxiter=10 * A.shape[0], M=preconditioner
    )
    if info != 0:
        raise LinearSolverError(
            _("Conjugate gradients stopped with status {}").format(info),
            residual=_relative_residual(A, x, b),
        )
    return x


def solve_spd(K, rhs, prescribed=None, method=None):
    """
    Solve ``K x = rhs`` with the constrained dofs of ``K`` eliminated.

    Constrained entries of ``x`` take the ``prescribed`` values (zero by default), and their
    coupling is moved to the right-hand side. The free part satisfies
    ``|K_ff x_f - b_f| <= 1e-8 |b_f|``.

    Args:
        K (SparseSym): matrix and constrained dofs
        rhs (numpy.ndarray): right-hand side
        prescribed (numpy.ndarray): values at ``K.constrained``
        method (str): one of ``LINEAR_SOLVERS``, defaults to the ``LINEAR_SOLVER`` setting

    Returns:
        numpy.ndarray: the full solution vector

    Raises:
        LinearSolverError: on singular matrices, breakdown or a missed residual contract

    """
    method = method or get_setting("LINEAR_SOLVER")
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (K.dim,):
        raise ValueError(
            _("Right-hand side of size {} does not match a {}x{} matrix").format(
                rhs.size, K.dim, K.dim
            )
        )
    x = np.zeros(K.dim)
    free = np.ones(K.dim, dtype=bool)
    free[K.constrained] = False
    if prescribed is not None and K.constrained.size:
        x[K.constrained] = prescribed
    if not free.any():
        return x
    b = rhs[free] - K.matrix[free][:, ~free] @ x[~free]
    A = K.matrix[free][:, free]
    if method == LINEAR_SOLVERS.CG:
        x_free = _solve_cg(A, b)
    elif method == LINEAR_SOLVERS.DIRECT:
        x_free = _solve_direct(A, b)
    else:
        raise ValueError(_("Unknown linear solver '{}'").format(method))
    if not np.all(np.isfinite(x_free)):
        raise LinearSolverError(_("Linear solve produced non-finite values"))
    residual = _relative_residual(A, x_free, b)
    if residual > SOLVE_RTOL:
        raise LinearSolverError(_("Linear solve missed its residual tolerance"), residual)
    x[free] = x_free
    log.debug(_("{} solve of {} dofs, relative residual {:.2e}").format(method, b.size, residual))
    return x
