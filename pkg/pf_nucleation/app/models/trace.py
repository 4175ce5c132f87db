import math
from dataclasses import dataclass, field

from pf_nucleation.app.constants import UNIVERSE_LABELS


def _total(elastic, surface):
    if elastic is None or surface is None:
        return None
    return elastic + surface


@dataclass
class StepRecord:
    """
    What happened at one load step.

    The cracked energies are ``None`` until a cracked candidate exists; once the crackless
    universe is discarded the crackless energies are ``None``.
    """

    step: int
    u_b: float
    sigma_max: float = 0.0
    vigilance: bool = False
    pi_nc_elastic: float = None
    pi_nc_surface: float = None
    pi_c_elastic: float = None
    pi_c_surface: float = None
    accepted: str = UNIVERSE_LABELS.CRACKLESS
    wall_s: float = 0.0
    max_d: float = 0.0
    stagger_iterations: int = 0
    crack_sets: tuple = ()

    @property
    def pi_nc_total(self):
        return _total(self.pi_nc_elastic, self.pi_nc_surface)

    @property
    def pi_c_total(self):
        return _total(self.pi_c_elastic, self.pi_c_surface)

    @property
    def accepted_elastic(self):
        if self.accepted == UNIVERSE_LABELS.CRACKED and self.pi_c_elastic is not None:
            return self.pi_c_elastic
        return self.pi_nc_elastic

    @property
    def accepted_surface(self):
        if self.accepted == UNIVERSE_LABELS.CRACKED and self.pi_c_surface is not None:
            return self.pi_c_surface
        return self.pi_nc_surface

    @property
    def accepted_total(self):
        return _total(self.accepted_elastic, self.accepted_surface)


@dataclass
class RetraceEvent:
    """A backtracking restart from step ``from_step`` back to step ``to_step``."""

    from_step: int
    from_load: float
    to_step: int
    to_load: float


@dataclass
class RunTrace:
    """
    Per-step history of one driver run plus the milestones derived from it.

    Attributes:
        driver (str): one of ``DRIVERS``
        records (list): :class:`StepRecord` in load order
        vigilance_load (float): first load at which the vigilance test fired
        critical_load (float): first load at which a cracked solution was accepted
        nucleation_load (float): first load whose accepted state has max d >= 0.9
        boundary_arrivals (dict): boundary set name -> first load the crack band touched it
        retraces (list): :class:`RetraceEvent` (backtracking only)
        aborted (bool): whether a solver failure ended the run
        abort_reason (str): message of that failure
        stopped_on_fracture (bool): whether the complete-fracture test ended the run
        wall_s (float): total wall time
        guess_gc_stages (int): Gc reductions the cracked-guess search needed
        guess_failure (str): why the cracked candidate was lost, if it was
        monotonicity_violations (int): staggered alternations that raised the energy

    """

    driver: str
    records: list = field(default_factory=list)
    vigilance_load: float = None
    critical_load: float = None
    nucleation_load: float = None
    boundary_arrivals: dict = field(default_factory=dict)
    retraces: list = field(default_factory=list)
    aborted: bool = False
    abort_reason: str = None
    stopped_on_fracture: bool = False
    wall_s: float = 0.0
    guess_gc_stages: int = None
    guess_failure: str = None
    monotonicity_violations: int = 0

    def append(self, record):
        """Add a step record and update the milestones it reveals."""
        self.records.append(record)
        if record.vigilance and self.vigilance_load is None:
            self.vigilance_load = record.u_b
        if record.accepted == UNIVERSE_LABELS.CRACKED:
            if self.critical_load is None:
                self.critical_load = record.u_b
            if self.nucleation_load is None:
                self.nucleation_load = record.u_b
        for name in record.crack_sets:
            self.boundary_arrivals.setdefault(name, record.u_b)

    def truncate(self, n_steps):
        """
        Keep only the first ``n_steps`` records and recompute the milestones.

        Args:
            n_steps (int): number of records to keep

        """
        records = self.records[:n_steps]
        self.records = []
        self.vigilance_load = self.critical_load = self.nucleation_load = None
        self.boundary_arrivals = {}
        for record in records:
            self.append(record)

    @property
    def last(self):
        return self.records[-1] if self.records else None

    def accepted_energies(self):
        """Return ``[(u_b, accepted total energy), ...]`` for every step."""
        return [(r.u_b, r.accepted_total) for r in self.records if r.accepted_total is not None]

    def normalized_energies(self):
        """
        Both candidates' total energies divided by the last accepted total energy.

        Returns:
            list: ``(u_b, pi_nc / pi_final, pi_c / pi_final)`` with ``None`` for absent values

        """
        if not self.records:
            return []
        final = self.records[-1].accepted_total
        if not final or not math.isfinite(final):
            return []
        scale = 1.0 / final
        return [
            (
                r.u_b,
                None if r.pi_nc_total is None else r.pi_nc_total * scale,
                None if r.pi_c_total is None else r.pi_c_total * scale,
            )
            for r in self.records
        ]


@dataclass
class BacktrackRecord:
    """
    Stored optimum of one completed backtracking step.

    Attributes:
        step (int): step index
        load (float): load level
        pi_elastic (float): elastic energy of the stored state
        pi_surface (float): surface energy of the stored state
        checkpoint: a ``FieldState`` or the path of an ``.npz`` state dump

    """

    step: int
    load: float
    pi_elastic: float
    pi_surface: float
    checkpoint: object = None

    @property
    def pi_total(self):
        return self.pi_elastic + self.pi_surface

    def scaled_energy(self, load, pi_elastic, pi_surface):
        """
        Energy of a state found at ``load`` once rescaled to this record's load.

        Args:
            load (float): load level the state was found at
            pi_elastic (float): its elastic energy
            pi_surface (float): its surface energy

        """
        return (self.load / load) ** 2 * pi_elastic + pi_surface
