import logging
import os
from gettext import gettext as _

from pf_nucleation.app import output, shared_utils
from pf_nucleation.app.config import load_config
from pf_nucleation.app.exceptions import ConfigError, MeshError, PhaseFieldException
from pf_nucleation.app.management import BaseCommand, CommandError

log = logging.getLogger(__name__)


class Command(BaseCommand):
    """
    Run one load-stepping simulation described by a configuration file.

    The output directory receives ``trace.csv`` (energies and decisions per step),
    ``summary.json`` (milestone loads, timings and the configuration echo) and VTK field dumps
    under ``fields/``. If the solver fails, the trace computed so far is still written and the
    exit code is 2.
    """

    help = _("Run a simulation from a configuration file")

    def add_arguments(self, parser):
        """Set up arguments."""
        parser.add_argument("config", help=_("Path to the run configuration file"))

    def handle(self, *args, **options):
        """Implement the command."""
        path = options["config"]
        try:
            config = load_config(path)
            mesh = config.build_mesh()
            mat = config.build_material()
            output_dir = config.output_dir
            os.makedirs(output_dir, exist_ok=True)
            dumper = output.FieldDumper(
                mesh, os.path.join(output_dir, "fields"), config.dump_stride
            )
            driver = config.build_driver(mesh, mat, observer=dumper)
        except (ConfigError, MeshError, ValueError) as exc:
            raise CommandError(str(exc), returncode=1)

        failure = None
        try:
            trace = driver.run()
        except PhaseFieldException as exc:
            failure = exc
            trace = getattr(exc, "trace", None) or driver.trace

        extra = config.theory(mat)
        extra["config_sha256"] = shared_utils.get_sha256(path)
        extra["config_path"] = os.path.abspath(path)
        if extra.get("theoretical_critical_load") and trace.critical_load is not None:
            extra["critical_load_ratio"] = trace.critical_load / extra["theoretical_critical_load"]
        if driver.final_state is not None and mat.is_antiplane:
            extra["crack_direction_deg"] = shared_utils.crack_direction_angle(
                mesh, driver.final_state.d
            )

        trace_path = os.path.join(output_dir, "trace.csv")
        summary_path = os.path.join(output_dir, "summary.json")
        output.write_trace_csv(trace, trace_path)
        output.write_summary(trace, summary_path, config.to_dict(), extra)
        log.info(_("Wrote {} and {}").format(trace_path, summary_path))

        self.write(_("driver: {}").format(trace.driver))
        self.write(_("steps: {}").format(len(trace.records)))
        for label, value in (
            (_("vigilance load"), trace.vigilance_load),
            (_("critical load"), trace.critical_load),
            (_("nucleation load"), trace.nucleation_load),
        ):
            self.write("{}: {}".format(label, "-" if value is None else "{:.6g}".format(value)))
        self.write(_("wall time: {:.2f} s").format(trace.wall_s or 0.0))
        self.write(_("output: {}").format(output_dir))

        if failure is not None:
            raise CommandError(_("Solver failed: {}").format(failure), returncode=2)
