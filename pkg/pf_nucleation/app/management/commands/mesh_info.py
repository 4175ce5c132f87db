import json
from gettext import gettext as _

from pf_nucleation.app.config import load_config
from pf_nucleation.app.exceptions import ConfigError, MeshError
from pf_nucleation.app.management import BaseCommand, CommandError
from pf_nucleation.app.mesh import mesh_quality, write_mesh


class Command(BaseCommand):
    """
    Build the mesh of a configuration and print its quality report as JSON.

    With ``--write`` the mesh is also saved in the text format accepted by
    ``geometry.kind = mesh_file``.
    """

    help = _("Print mesh statistics for a configuration")

    def add_arguments(self, parser):
        """Set up arguments."""
        parser.add_argument("config", help=_("Path to the run configuration file"))
        parser.add_argument(
            "--write",
            metavar="PATH",
            default=None,
            help=_("Also write the mesh to PATH"),
        )

    def handle(self, *args, **options):
        """Implement the command."""
        try:
            mesh = load_config(options["config"]).build_mesh()
        except (ConfigError, MeshError) as exc:
            raise CommandError(str(exc), returncode=1)
        self.write(json.dumps(mesh_quality(mesh), indent=2, sort_keys=True))
        if options["write"]:
            write_mesh(mesh, options["write"])
