"""
Run configuration files.

A configuration is a sequence of ``key = value`` lines. Keys of a section are written as
``section.key`` (e.g. ``material.E = 210000``); ``#`` starts a comment line. A ``preset``
provides every section and explicit keys override it::

    preset = ex3
    driver = parallel_universe
    schedule.steps = 40
"""
import copy
import logging
import math
import os
from gettext import gettext as _

from jsonschema import Draft7Validator

from pf_nucleation.app import conf, mesh as meshing
from pf_nucleation.app.conf import get_setting
from pf_nucleation.app.constants import DRIVERS, GEOMETRY_KINDS, LOADINGS, MODEL_KINDS
from pf_nucleation.app.exceptions import ConfigError
from pf_nucleation.app.models import DirichletCondition, LoadSchedule, MaterialParams
from pf_nucleation.app.presets import get_preset
from pf_nucleation.app.schema import RUN_CONFIG_SCHEMA
from pf_nucleation.app.staggered import SolveSettings
from pf_nucleation.app.tasks import BacktrackingRun, ParallelUniverseRun, nucleation

log = logging.getLogger(__name__)

SECTIONS = [
    name for name, prop in RUN_CONFIG_SCHEMA["properties"].items() if prop.get("type") == "object"
]

REQUIRED_GEOMETRY = {
    GEOMETRY_KINDS.SQUARE: ("L", "h"),
    GEOMETRY_KINDS.HOLED_SQUARE: ("L", "R", "h"),
    GEOMETRY_KINDS.FIBER_COMPOSITE: ("L", "R", "h"),
    GEOMETRY_KINDS.ANTIPLANE_SQUARE: ("L", "h"),
    GEOMETRY_KINDS.MESH_FILE: ("mesh_file",),
}

REQUIRED_MATERIAL = {
    MODEL_KINDS.PLANE_STRAIN: ("E", "nu"),
    MODEL_KINDS.ANTI_PLANE: ("mu",),
}

BOUNDARY_CONDITIONS = {
    LOADINGS.TENSION: (
        DirichletCondition("top", 0, 0.0),
        DirichletCondition("top", 1, 1.0),
        DirichletCondition("bottom", 0, 0.0),
        DirichletCondition("bottom", 1, -1.0),
    ),
    LOADINGS.FIBER_PULL: (
        DirichletCondition("fiber", 0, 0.0),
        DirichletCondition("fiber", 1, 0.0),
        DirichletCondition("top", 0, 0.0),
        DirichletCondition("top", 1, 1.0),
    ),
    LOADINGS.ANTIPLANE_TEAR: (
        DirichletCondition("top_left_half", 0, 1.0),
        DirichletCondition("top_right_half", 0, -1.0),
    ),
}


def _typed(value):
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def _known_key(parts):
    properties = RUN_CONFIG_SCHEMA["properties"]
    if len(parts) == 1:
        return parts[0] in properties and parts[0] not in SECTIONS
    if len(parts) == 2:
        return parts[0] in SECTIONS and parts[1] in properties[parts[0]]["properties"]
    return False


def _merge(base, overrides):
    merged = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict):
            merged[key] = _merge(merged.get(key, {}), value)
        else:
            merged[key] = value
    return merged


def _tokenize(text):
    """
    Split config text into a nested dict and remember the line of every key.

    Returns:
        tuple: ``(data, lines)`` where ``lines`` maps dotted keys to 1-based line numbers

    """
    data = {}
    lines = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(_("expected 'key = value', got '{}'").format(line), number)
        if not value:
            raise ConfigError(_("missing value for '{}'").format(key), number)
        parts = key.split(".")
        if not _known_key(parts):
            raise ConfigError(_("unknown key '{}'").format(key), number)
        if key in lines:
            raise ConfigError(
                _("duplicate key '{}' (first set on line {})").format(key, lines[key]), number
            )
        lines[key] = number
        target = data
        for part in parts[:-1]:
            target = target.setdefault(part, {})
        typed = _typed(value)
        if isinstance(typed, float) and not math.isfinite(typed):
            raise ConfigError(_("'{}' must be a finite number, got {}").format(key, value), number)
        target[parts[-1]] = typed
    return data, lines


def _error_line(error, lines):
    path = [str(part) for part in error.absolute_path]
    while path:
        if ".".join(path) in lines:
            return lines[".".join(path)]
        path.pop()
    return None


def validate_config(data, lines=None, base_dir=None):
    """
    Validate a merged configuration dict against the run schema and cross-field rules.

    Args:
        data (dict): the merged configuration
        lines (dict): dotted key to line number, used in error messages
        base_dir (str): directory relative mesh file paths are resolved against

    Raises:
        ConfigError: on the first problem found

    """
    lines = lines or {}
    validator = Draft7Validator(RUN_CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=str)
    if errors:
        error = errors[0]
        where = ".".join(str(part) for part in error.absolute_path) or _("config")
        raise ConfigError("{}: {}".format(where, error.message), _error_line(error, lines))

    geometry, material, schedule = data["geometry"], data["material"], data["schedule"]
    for key in REQUIRED_GEOMETRY[geometry["kind"]]:
        if key not in geometry:
            raise ConfigError(
                _("geometry.{} is required for geometry '{}'").format(key, geometry["kind"]),
                lines.get("geometry.kind"),
            )
    for key in REQUIRED_MATERIAL[material["kind"]]:
        if key not in material:
            raise ConfigError(
                _("material.{} is required for material '{}'").format(key, material["kind"]),
                lines.get("material.kind"),
            )
    antiplane_model = material["kind"] == MODEL_KINDS.ANTI_PLANE
    if antiplane_model != (schedule["bc"] == LOADINGS.ANTIPLANE_TEAR):
        raise ConfigError(
            _("loading '{}' cannot drive a '{}' material").format(
                schedule["bc"], material["kind"]
            ),
            lines.get("schedule.bc"),
        )
    if "u_start" in schedule and schedule["u_start"] > schedule["u_max"]:
        raise ConfigError(
            _("schedule.u_start must not exceed schedule.u_max"), lines.get("schedule.u_start")
        )
    if geometry["kind"] == GEOMETRY_KINDS.MESH_FILE:
        path = geometry["mesh_file"]
        if base_dir and not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        if not os.path.isfile(path):
            raise ConfigError(
                _("mesh file '{}' does not exist").format(path), lines.get("geometry.mesh_file")
            )
        geometry["mesh_file"] = path


def parse_config(text, base_dir=None):
    """
    Parse and validate configuration text.

    Args:
        text (str): configuration in the ``key = value`` format
        base_dir (str): directory relative mesh file paths are resolved against

    Returns:
        RunConfig: the validated configuration

    Raises:
        ConfigError: for malformed lines, unknown or duplicate keys, a missing driver or a
            configuration that fails validation

    """
    explicit, lines = _tokenize(text)
    if "driver" not in explicit:
        raise ConfigError(_("missing driver"))
    data = {}
    if "preset" in explicit:
        try:
            data = get_preset(explicit["preset"])
        except ConfigError as exc:
            raise ConfigError(exc.msg, lines["preset"])
    data = _merge(data, explicit)
    validate_config(data, lines, base_dir)
    return RunConfig(data)


def load_config(path):
    """
    Read and parse a configuration file; relative mesh paths are taken from its directory.

    Args:
        path (str): the configuration file

    Returns:
        RunConfig: the validated configuration

    """
    try:
        with open(path, encoding="utf-8") as config_file:
            text = config_file.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(_("Cannot read config file {}: {}").format(path, exc))
    return parse_config(text, base_dir=os.path.dirname(os.path.abspath(path)))


class RunConfig:
    """
    A validated run configuration and the objects it describes.

    Args:
        data (dict): configuration that passed :func:`validate_config`

    """

    def __init__(self, data):
        self.data = data

    def to_dict(self):
        return copy.deepcopy(self.data)

    @property
    def driver(self):
        return self.data["driver"]

    @property
    def preset(self):
        return self.data.get("preset")

    @property
    def alpha(self):
        return float(self.data.get("alpha", get_setting("VIGILANCE_SAFETY_FACTOR")))

    @property
    def dump_stride(self):
        return int(self.data.get("dump_stride", get_setting("FIELD_DUMP_STRIDE")))

    @property
    def reference_length(self):
        return self.data.get("reference_length")

    @property
    def output_dir(self):
        """The ``PF_NUCLEATION_OUTPUT_DIR`` environment variable wins over the file."""
        from_env = conf.settings.get("OUTPUT_DIR")
        if from_env:
            return str(from_env)
        return self.data.get("output_dir", get_setting("OUTPUT_DIR"))

    def build_mesh(self):
        """
        Generate or read the mesh.

        Raises:
            MeshError: for degenerate geometry or a malformed mesh file

        """
        geometry = self.data["geometry"]
        kind = geometry["kind"]
        if kind == GEOMETRY_KINDS.SQUARE:
            mesh = meshing.generate_square(geometry["L"], geometry["h"])
        elif kind == GEOMETRY_KINDS.HOLED_SQUARE:
            mesh = meshing.generate_square(geometry["L"], geometry["h"], with_hole=geometry["R"])
        elif kind == GEOMETRY_KINDS.FIBER_COMPOSITE:
            mesh = meshing.generate_fiber_composite(geometry["L"], geometry["R"], geometry["h"])
        elif kind == GEOMETRY_KINDS.ANTIPLANE_SQUARE:
            mesh = meshing.split_top_edge(meshing.generate_square(geometry["L"], geometry["h"]))
        else:
            mesh = meshing.read_mesh(geometry["mesh_file"])
            if (
                self.data["schedule"]["bc"] == LOADINGS.ANTIPLANE_TEAR
                and "top_left_half" not in mesh.node_sets
            ):
                mesh = meshing.split_top_edge(mesh)
        log.info(
            _("Mesh ready: {} nodes, {} elements, h = {:.4g}").format(
                mesh.n_nodes, mesh.n_elements, mesh.h
            )
        )
        return mesh

    def build_material(self):
        """
        Raises:
            ConfigError: if the parameters are out of range

        """
        material = self.data["material"]
        options = {
            "kind": material["kind"],
            "xi": material.get("xi", 0.0),
            "beta": math.radians(material.get("beta_deg", 0.0)),
        }
        if "k_res" in material:
            options["k_res"] = material["k_res"]
        try:
            if material["kind"] == MODEL_KINDS.ANTI_PLANE:
                return MaterialParams.from_shear_modulus(
                    material["mu"],
                    material.get("nu", 0.0),
                    material["Gc"],
                    material["ell"],
                    **options,
                )
            return MaterialParams.from_engineering(
                material["E"], material["nu"], material["Gc"], material["ell"], **options
            )
        except ValueError as exc:
            raise ConfigError(_("material: {}").format(exc))

    def build_schedule(self):
        schedule = self.data["schedule"]
        return LoadSchedule.linear(
            schedule["u_max"],
            schedule["steps"],
            BOUNDARY_CONDITIONS[schedule["bc"]],
            u_start=schedule.get("u_start"),
        )

    def build_settings(self):
        return SolveSettings(**self.data.get("solver", {}))

    def theory(self, mat):
        """
        Closed-form reference loads for the summary, when a reference length is configured.

        Args:
            mat (MaterialParams): the material

        Returns:
            dict: empty for anti-plane runs or without ``reference_length``

        """
        L = self.reference_length
        if L is None or mat.is_antiplane:
            return {}
        return {
            "reference_length": L,
            "theoretical_critical_load": nucleation.theoretical_critical_load(L, mat),
            "closed_form_vigilance_load": nucleation.closed_form_vigilance_load(
                L, mat, alpha=self.alpha
            ),
            "applicability_bound": nucleation.applicability_bound(mat, alpha=self.alpha),
        }

    def build_driver(self, mesh, mat, observer=None):
        """
        Instantiate the configured driver.

        Args:
            mesh (Mesh): the mesh
            mat (MaterialParams): the material
            observer (RunObserver): receives step events

        Returns:
            ParallelUniverseRun or BacktrackingRun: call ``run()`` on it

        """
        schedule = self.build_schedule()
        settings = self.build_settings()
        if self.driver == DRIVERS.BACKTRACKING:
            options = self.data.get("backtracking", {})
            return BacktrackingRun(
                mesh,
                mat,
                schedule,
                settings,
                tol=options.get("tol"),
                max_retraces=options.get("max_retraces"),
                checkpoint_dir=options.get("checkpoint_dir"),
                observer=observer,
            )
        return ParallelUniverseRun(
            mesh,
            mat,
            schedule,
            settings,
            alpha=self.alpha,
            cracked_branch=self.driver == DRIVERS.PARALLEL_UNIVERSE,
            observer=observer,
            reference_length=self.reference_length,
        )
