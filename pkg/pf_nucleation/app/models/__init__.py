from .loading import DirichletBC, DirichletCondition, LoadSchedule  # noqa
from .material import MaterialParams  # noqa
from .mesh import Mesh  # noqa
from .state import FieldState, Universe  # noqa
from .trace import BacktrackRecord, RetraceEvent, RunTrace, StepRecord  # noqa
