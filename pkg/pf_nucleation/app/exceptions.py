class PhaseFieldException(Exception):
    """
    Base class for all pf_nucleation errors.

    Every subclass carries a stable ``error_code`` so that failures can be told apart in logs
    and run summaries.
    """

    def __init__(self, error_code):
        """
        Set the exception identifier.

        Args:
            error_code(str): unique identifier of the failure kind
        """
        super().__init__()
        self.error_code = error_code


class MeshError(PhaseFieldException):
    """
    Raised when a mesh cannot be generated, read or used.
    """

    def __init__(self, msg):
        """
        Set the exception identifier.

        Args:
            msg(str): Detailed message about the invalid geometry or mesh file
        """
        super().__init__("PFN0001")
        self.msg = msg

    def __str__(self):
        """
        Return a message for the exception.
        """
        return self.msg


class ConfigError(PhaseFieldException):
    """
    Raised when a run configuration cannot be parsed or fails validation.
    """

    def __init__(self, msg, line=None):
        """
        Set the exception identifier.

        Args:
            msg(str): Detailed message about the invalid configuration
            line(int): 1-based line number of the offending entry, if known
        """
        super().__init__("PFN0002")
        self.msg = msg
        self.line = line

    def __str__(self):
        """
        Return a message for the exception.
        """
        if self.line is not None:
            return "line {}: {}".format(self.line, self.msg)
        return self.msg


class LinearSolverError(PhaseFieldException):
    """
    Raised when a sparse linear solve breaks down or misses its residual contract.
    """

    def __init__(self, msg, residual=None):
        """
        Set the exception identifier.

        Args:
            msg(str): Detailed message about the failed solve
            residual(float): final relative residual, if one was computed
        """
        super().__init__("PFN0003")
        self.msg = msg
        self.residual = residual

    def __str__(self):
        """
        Return a message for the exception.
        """
        if self.residual is not None:
            return "{} (relative residual {:.3e})".format(self.msg, self.residual)
        return self.msg


class NonConvergenceError(PhaseFieldException):
    """
    Raised when a Newton or staggered iteration exhausts its iteration cap.

    The last iterate and the monitored history are kept so that callers can decide to accept
    the state anyway or to abort.
    """

    def __init__(self, msg, state=None, history=None):
        """
        Set the exception identifier.

        Args:
            msg(str): Detailed message about the failed iteration
            state(FieldState): last iterate
            history(list): residual norms (Newton) or total energies (staggered)
        """
        super().__init__("PFN0004")
        self.msg = msg
        self.state = state
        self.history = list(history or [])

    def __str__(self):
        """
        Return a message for the exception.
        """
        return self.msg


class CrackedGuessError(PhaseFieldException):
    """
    Raised when no cracked candidate can be built at the current load.

    Either reducing Gc never produced a cracked field within the stage cap, or the cracked
    field healed once Gc was restored (``healed`` is then True).
    """

    def __init__(self, msg, healed=False):
        """
        Set the exception identifier.

        Args:
            msg(str): Detailed message about the failed search
            healed(bool): whether the guess was found but did not survive the restored Gc
        """
        super().__init__("PFN0005")
        self.msg = msg
        self.healed = healed

    def __str__(self):
        """
        Return a message for the exception.
        """
        return self.msg


class BacktrackingError(PhaseFieldException):
    """
    Raised when the backtracking driver exceeds its retrace budget.
    """

    def __init__(self, msg):
        """
        Set the exception identifier.

        Args:
            msg(str): Detailed message about the retrace loop
        """
        super().__init__("PFN0006")
        self.msg = msg

    def __str__(self):
        """
        Return a message for the exception.
        """
        return self.msg
