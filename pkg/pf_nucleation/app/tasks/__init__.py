from .nucleation import (  # noqa
    ParallelUniverseRun,
    RunObserver,
    check_applicability,
    find_cracked_guess,
    parallel_universe_run,
    vigilance_triggered,
)
from .baselines import BacktrackingRun, backtracking_run, standard_newton_run  # noqa
