from gettext import gettext as _

from pf_nucleation.app.management import BaseCommand
from pf_nucleation.app.presets import PRESETS


class Command(BaseCommand):
    """List the built-in benchmark presets."""

    help = _("List the built-in benchmark presets")

    def handle(self, *args, **options):
        """Implement the command."""
        for name in sorted(PRESETS):
            preset = PRESETS[name]
            self.write(
                "{:<6} {:<18} {}".format(name, preset["geometry"]["kind"], preset["description"])
            )
