"""
Pointwise constitutive laws.

Strains are Voigt vectors ``(e_xx, e_yy, g_xy)`` with engineering shear ``g_xy = 2 e_xy``.
Every function accepts a single strain or an array of shape ``(..., 3)`` and broadcasts ``d``
against the leading dimensions, so the assembly layer can evaluate all elements at once.
"""
import math

import numpy as np

ONE = np.array([1.0, 1.0, 0.0])

# Voigt matrix of the 3D deviatoric projector (e_zz = 0) acting on engineering strains.
DEV = np.array(
    [
        [2.0 / 3.0, -1.0 / 3.0, 0.0],
        [-1.0 / 3.0, 2.0 / 3.0, 0.0],
        [0.0, 0.0, 0.5],
    ]
)

VOL = np.outer(ONE, ONE)


def degradation(d, mat):
    """Degradation function ``(1 - d)^2 + k_res``."""
    return (1.0 - np.asarray(d, dtype=float)) ** 2 + mat.k_res


def _trace(eps):
    eps = np.asarray(eps, dtype=float)
    return eps, eps[..., 0] + eps[..., 1]


def deviator_norm_sq(eps):
    """
    Squared tensor norm of the 3D strain deviator of a plane-strain state.

    Args:
        eps (numpy.ndarray): Voigt strain(s)

    """
    eps, tr = _trace(eps)
    third = tr / 3.0
    in_plane = (eps[..., 0] - third) ** 2 + (eps[..., 1] - third) ** 2
    return in_plane + third**2 + 0.5 * eps[..., 2] ** 2


def psi_split(eps, mat):
    """
    Tensile and compressive parts of the strain energy density (volumetric/deviatoric split).

    Args:
        eps (numpy.ndarray): Voigt strain(s)
        mat (MaterialParams): material

    Returns:
        tuple: ``(psi_plus, psi_minus)``

    """
    eps, tr = _trace(eps)
    tr_plus = np.maximum(tr, 0.0)
    tr_minus = np.minimum(tr, 0.0)
    psi_plus = 0.5 * mat.K * tr_plus**2 + mat.mu * deviator_norm_sq(eps)
    psi_minus = 0.5 * mat.K * tr_minus**2
    return psi_plus, psi_minus


def stress_parts(eps, mat):
    """
    Undegraded tensile stress and compressive stress, whose weighted sum is the stress.

    Returns:
        tuple: ``(sigma_plus, sigma_minus)`` Voigt stresses

    """
    eps, tr = _trace(eps)
    dev = np.stack(
        [eps[..., 0] - tr / 3.0, eps[..., 1] - tr / 3.0, 0.5 * eps[..., 2]], axis=-1
    )
    sigma_plus = mat.K * np.maximum(tr, 0.0)[..., None] * ONE + 2.0 * mat.mu * dev
    sigma_minus = mat.K * np.minimum(tr, 0.0)[..., None] * ONE
    return sigma_plus, sigma_minus


def stress(eps, d, mat):
    """
    Degraded Voigt stress ``(s_xx, s_yy, s_xy)``.

    Args:
        eps (numpy.ndarray): Voigt strain(s)
        d (float or numpy.ndarray): phase field
        mat (MaterialParams): material

    """
    return degraded_stress(eps, degradation(d, mat), mat)


def degraded_stress(eps, g, mat):
    """Stress for a given degradation value ``g`` instead of a phase field."""
    sigma_plus, sigma_minus = stress_parts(eps, mat)
    return np.asarray(g, dtype=float)[..., None] * sigma_plus + sigma_minus


def tangent_C(eps, d, mat):
    """
    Consistent tangent of :func:`stress` with respect to the Voigt strain.

    The volumetric switch uses H(0) = 1, so at zero trace the tensile branch is taken.

    Returns:
        numpy.ndarray: ``(..., 3, 3)`` symmetric matrices

    """
    return degraded_tangent(eps, degradation(d, mat), mat)


def degraded_tangent(eps, g, mat):
    """Tangent for a given degradation value ``g`` instead of a phase field."""
    eps, tr = _trace(eps)
    tensile = (tr >= 0.0).astype(float)[..., None, None]
    g = np.broadcast_to(g, tr.shape)[..., None, None]
    return g * (tensile * mat.K * VOL + 2.0 * mat.mu * DEV) + (1.0 - tensile) * mat.K * VOL


def anisotropy_matrix(mat):
    """
    Symmetric 2x2 weight of the gradient term of the surface energy.

    ``grad_d . A grad_d = |grad d|^2 + xi (cos 2b (d_x^2 - d_y^2) - 2 sin 2b d_x d_y)``; the
    eigenvalues are ``1 - xi`` and ``1 + xi``.
    """
    c, s = math.cos(2.0 * mat.beta), math.sin(2.0 * mat.beta)
    return np.eye(2) + mat.xi * np.array([[c, -s], [-s, -c]])


def surface_energy_density(d, grad_d, mat):
    """
    Regularized crack surface energy density.

    Args:
        d (float or numpy.ndarray): phase field
        grad_d (numpy.ndarray): gradient(s) of the phase field, shape ``(..., 2)``
        mat (MaterialParams): material

    """
    d = np.asarray(d, dtype=float)
    grad_d = np.asarray(grad_d, dtype=float)
    quad = np.einsum("...i,ij,...j->...", grad_d, anisotropy_matrix(mat), grad_d)
    return mat.Gc0 * (d**2 + mat.ell**2 * quad) / (2.0 * mat.ell)


def antiplane_psi(grad_uz, d, mat):
    """
    Energy density and degraded shear stress of the anti-plane model.

    There is no tension/compression split, so the whole energy is degraded.

    Args:
        grad_uz (numpy.ndarray): gradient(s) of the out-of-plane displacement
        d (float or numpy.ndarray): phase field
        mat (MaterialParams): material

    Returns:
        tuple: ``(psi_plus, tau)``

    """
    grad_uz = np.asarray(grad_uz, dtype=float)
    psi_plus = 0.5 * mat.mu * np.sum(grad_uz**2, axis=-1)
    tau = (degradation(d, mat) * mat.mu)[..., None] * grad_uz
    return psi_plus, tau


def principal_stress(sigma):
    """Largest eigenvalue of Voigt stress(es) ``(s_xx, s_yy, s_xy)``."""
    sigma = np.asarray(sigma, dtype=float)
    mean = 0.5 * (sigma[..., 0] + sigma[..., 1])
    radius = np.hypot(0.5 * (sigma[..., 0] - sigma[..., 1]), sigma[..., 2])
    return mean + radius


def sigma_c(mat):
    """
    Tensile strength of the regularized model under uniaxial plane strain.

    Args:
        mat (MaterialParams): material

    """
    return math.sqrt(27.0 * mat.Gc * mat.E / (256.0 * mat.ell * (1.0 - mat.nu**2)))


def tau_c(mat):
    """Shear strength used for the anti-plane model (E/(1 - nu^2) replaced by 2 mu)."""
    return math.sqrt(27.0 * mat.Gc * 2.0 * mat.mu / (256.0 * mat.ell))


def critical_stress(mat):
    """Strength matching the model kind of ``mat``."""
    return tau_c(mat) if mat.is_antiplane else sigma_c(mat)
