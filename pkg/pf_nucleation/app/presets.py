"""
Benchmark parameter sets.

ex1 is nondimensional. ex2 and ex3 use N, mm and MPa (E = 210 GPa = 210000 MPa,
Gc = 6750 N/m = 6.75 N/mm). The ex4 rows are anti-plane shear with mu = 1 and nu = 0.
"""
import copy
import math
from gettext import gettext as _

from pf_nucleation.app.exceptions import ConfigError

_EX3_THEORY_LOAD = math.sqrt(6.75 * 1000.0 / (2.0 * 210000.0))

_PRESET_SOLVER = {"max_stagger": 1000}


def _antiplane(xi, beta_deg, description):
    return {
        "description": description,
        "geometry": {"kind": "antiplane_square", "L": 2.0, "h": 0.02},
        "material": {
            "kind": "anti_plane",
            "mu": 1.0,
            "nu": 0.0,
            "Gc": 1.0,
            "ell": 0.04,
            "xi": xi,
            "beta_deg": beta_deg,
        },
        "schedule": {"u_max": 2.0, "steps": 100, "bc": "antiplane_tear"},
        "solver": dict(_PRESET_SOLVER),
    }


PRESETS = {
    "ex1": {
        "description": _("Tension of a matrix around a rigid fiber"),
        "geometry": {"kind": "fiber_composite", "L": 3.0, "R": 0.5, "h": 0.05},
        "material": {"kind": "plane_strain", "E": 4000.0, "nu": 0.2, "Gc": 100.0, "ell": 0.1},
        "schedule": {"u_max": 0.5, "steps": 100, "bc": "fiber_pull"},
        "solver": dict(_PRESET_SOLVER),
    },
    "ex2": {
        "description": _("Plane-strain square with a central hole (mm, N, MPa)"),
        "geometry": {"kind": "holed_square", "L": 2000.0, "R": 200.0, "h": 20.0},
        "material": {"kind": "plane_strain", "E": 210000.0, "nu": 0.3, "Gc": 6.75, "ell": 40.0},
        "schedule": {"u_max": 0.25, "steps": 100, "bc": "tension"},
        "solver": dict(_PRESET_SOLVER),
    },
    "ex3": {
        "description": _("Homogeneous plane-strain square (mm, N, MPa)"),
        "reference_length": 1000.0,
        "geometry": {"kind": "square", "L": 1000.0, "h": 20.0},
        "material": {"kind": "plane_strain", "E": 210000.0, "nu": 0.3, "Gc": 6.75, "ell": 40.0},
        "schedule": {"u_max": 2.5 * _EX3_THEORY_LOAD, "steps": 100, "bc": "tension"},
        "solver": dict(_PRESET_SOLVER),
    },
    "ex4a": _antiplane(0.2, -45.0, _("Anisotropic anti-plane tear, xi = 0.2, beta = -45 deg")),
    "ex4b": _antiplane(0.2, -22.5, _("Anisotropic anti-plane tear, xi = 0.2, beta = -22.5 deg")),
    "ex4c": _antiplane(0.2, -67.5, _("Anisotropic anti-plane tear, xi = 0.2, beta = -67.5 deg")),
    "ex4d": _antiplane(0.5, -45.0, _("Anisotropic anti-plane tear, xi = 0.5, beta = -45 deg")),
    "ex4e": _antiplane(0.8, -45.0, _("Anisotropic anti-plane tear, xi = 0.8, beta = -45 deg")),
}


def get_preset(name):
    """
    Return a copy of a preset without its description.

    Args:
        name (str): preset name

    Raises:
        ConfigError: for an unknown name

    """
    try:
        preset = copy.deepcopy(PRESETS[name])
    except KeyError:
        raise ConfigError(
            _("Unknown preset '{}' (available: {})").format(name, ", ".join(sorted(PRESETS)))
        )
    preset.pop("description", None)
    return preset
