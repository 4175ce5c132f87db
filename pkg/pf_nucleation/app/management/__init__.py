import argparse
import importlib
import logging
import sys
from gettext import gettext as _

from pf_nucleation import __version__
from pf_nucleation.app.conf import get_setting

log = logging.getLogger(__name__)

COMMANDS = ["run", "list-presets", "mesh-info"]

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class CommandError(Exception):
    """
    Raised by a command to stop with a message and a non-zero exit code.

    Args:
        msg (str): message printed on stderr
        returncode (int): process exit code

    """

    def __init__(self, msg, returncode=1):
        super().__init__(msg)
        self.returncode = returncode


class BaseCommand:
    """Base class of the ``pf-nucleation`` sub-commands."""

    help = ""

    def __init__(self, stdout=None, stderr=None):
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr

    def add_arguments(self, parser):
        """Set up arguments."""

    def handle(self, *args, **options):
        """Implement the command."""
        raise NotImplementedError

    def write(self, text=""):
        self.stdout.write(text + "\n")


def load_command(name, **kwargs):
    module = importlib.import_module(
        "pf_nucleation.app.management.commands.{}".format(name.replace("-", "_"))
    )
    return module.Command(**kwargs)


def main(argv=None, stdout=None, stderr=None):
    """
    Entry point of the ``pf-nucleation`` console script.

    Args:
        argv (list): command line without the program name, ``sys.argv[1:]`` by default
        stdout: stream for regular output
        stderr: stream for error messages

    Returns:
        int: 0 on success, 1 on configuration or mesh errors, 2 on solver failures

    """
    stderr = stderr or sys.stderr
    parser = argparse.ArgumentParser(
        prog="pf-nucleation", description=_("Phase-field crack nucleation runs")
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--verbosity",
        default=str(get_setting("LOG_LEVEL")),
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
        help=_("Logging level (default from PF_NUCLEATION_LOG_LEVEL)"),
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    commands = {}
    for name in COMMANDS:
        command = load_command(name, stdout=stdout, stderr=stderr)
        subparser = subparsers.add_parser(name, help=command.help, description=command.help)
        command.add_arguments(subparser)
        commands[name] = command

    options = vars(parser.parse_args(argv))
    logging.basicConfig(level=options.pop("verbosity"), format=LOG_FORMAT)
    command = commands[options.pop("command")]
    try:
        command.handle(**options)
    except CommandError as exc:
        stderr.write(_("Error: {}").format(exc) + "\n")
        return exc.returncode
    return 0
