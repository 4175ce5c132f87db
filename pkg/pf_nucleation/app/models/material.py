import math
from dataclasses import dataclass, replace
from gettext import gettext as _

from pf_nucleation.app.constants import MODEL_KINDS
from pf_nucleation.app.settings import K_RES

# Relative tolerance between the given moduli and those implied by E and nu.
MODULUS_RTOL = 1e-9


@dataclass(frozen=True)
class MaterialParams:
    """
    Elastic, fracture and anisotropy parameters of one material.

    Use :meth:`from_engineering` or :meth:`from_shear_modulus` rather than the bare constructor
    so that ``mu`` and ``K`` stay consistent with ``E`` and ``nu``.

    Attributes:
        E (float): Young's modulus
        nu (float): Poisson's ratio
        mu (float): shear modulus
        K (float): bulk modulus
        Gc0 (float): critical energy release rate (reference value for anisotropic materials)
        ell (float): regularization length scale
        k_res (float): residual stiffness
        xi (float): anisotropy strength in [0, 1]
        beta (float): weakest material angle in radians
        kind (str): one of ``MODEL_KINDS``

    """

    E: float
    nu: float
    mu: float
    K: float
    Gc0: float
    ell: float
    k_res: float = K_RES
    xi: float = 0.0
    beta: float = 0.0
    kind: str = MODEL_KINDS.PLANE_STRAIN

    def __post_init__(self):
        """Validate the parameter ranges and the consistency of the elastic moduli."""
        checks = [
            (self.E > 0, _("E must be positive")),
            (-1.0 < self.nu < 0.5, _("nu must lie in (-1, 0.5)")),
            (self.mu > 0, _("mu must be positive")),
            (self.K > 0, _("K must be positive")),
            (self.Gc0 > 0, _("Gc0 must be positive")),
            (self.ell > 0, _("ell must be positive")),
            (0.0 <= self.k_res < 1.0, _("k_res must lie in [0, 1)")),
            (0.0 <= self.xi <= 1.0, _("xi must lie in [0, 1]")),
            (
                self.kind in (MODEL_KINDS.PLANE_STRAIN, MODEL_KINDS.ANTI_PLANE),
                _("unknown model kind '{}'").format(self.kind),
            ),
        ]
        for ok, message in checks:
            if not ok:
                raise ValueError(message)
        for value in (self.E, self.nu, self.mu, self.K, self.Gc0, self.ell, self.beta):
            if not math.isfinite(value):
                raise ValueError(_("Material parameters must be finite"))
        mu = self.E / (2.0 * (1.0 + self.nu))
        K = self.E / (3.0 * (1.0 - 2.0 * self.nu))
        if not math.isclose(self.mu, mu, rel_tol=MODULUS_RTOL):
            raise ValueError(_("mu = {} does not match E/(2(1+nu)) = {}").format(self.mu, mu))
        if not math.isclose(self.K, K, rel_tol=MODULUS_RTOL):
            raise ValueError(_("K = {} does not match E/(3(1-2nu)) = {}").format(self.K, K))

    @classmethod
    def from_engineering(cls, E, nu, Gc0, ell, **kwargs):
        """
        Build parameters from Young's modulus and Poisson's ratio.

        Args:
            E (float): Young's modulus
            nu (float): Poisson's ratio
            Gc0 (float): critical energy release rate
            ell (float): length scale
            kwargs: ``k_res``, ``xi``, ``beta``, ``kind``

        Returns:
            MaterialParams: with ``mu = E/(2(1+nu))`` and ``K = E/(3(1-2nu))``

        """
        if not -1.0 < nu < 0.5:
            raise ValueError(_("nu must lie in (-1, 0.5)"))
        mu = E / (2.0 * (1.0 + nu))
        K = E / (3.0 * (1.0 - 2.0 * nu))
        return cls(E=E, nu=nu, mu=mu, K=K, Gc0=Gc0, ell=ell, **kwargs)

    @classmethod
    def from_shear_modulus(cls, mu, nu, Gc0, ell, **kwargs):
        """
        Build parameters from the shear modulus, as used by the anti-plane model.

        Args:
            mu (float): shear modulus
            nu (float): Poisson's ratio
            Gc0 (float): critical energy release rate
            ell (float): length scale
            kwargs: ``k_res``, ``xi``, ``beta``, ``kind``

        """
        return cls.from_engineering(2.0 * mu * (1.0 + nu), nu, Gc0, ell, **kwargs)

    @property
    def Gc(self):
        """Isotropic critical energy release rate (equal to ``Gc0``)."""
        return self.Gc0

    @property
    def is_antiplane(self):
        return self.kind == MODEL_KINDS.ANTI_PLANE

    @property
    def dofs_per_node(self):
        """Displacement unknowns per node: 2 in plane strain, 1 in anti-plane shear."""
        return 1 if self.is_antiplane else 2

    def with_gc(self, Gc0):
        """
        Return a copy with a different critical energy release rate.

        Args:
            Gc0 (float): the new value

        """
        return replace(self, Gc0=Gc0)
