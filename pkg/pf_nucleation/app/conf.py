from dynaconf import Dynaconf

from pf_nucleation.app import settings as defaults

settings = Dynaconf(envvar_prefix="PF_NUCLEATION")


def get_setting(name):
    """
    Look up a setting, preferring the environment over the packaged default.

    Args:
        name (str): Setting name as declared in ``pf_nucleation.app.settings``.

    Returns:
        The overridden value if ``PF_NUCLEATION_<name>`` is set, else the default.

    """
    return settings.get(name, getattr(defaults, name))
