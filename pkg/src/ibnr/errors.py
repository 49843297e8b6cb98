"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its documented status codes without a lookup table.
"""


class IbnrError(Exception):
    exit_code = 1
    kind = "error"


class ConfigError(IbnrError, ValueError):
    """Invalid configuration document.  ``pointer`` is a JSON pointer."""

    exit_code = 2
    kind = "config"

    def __init__(self, message, pointer=""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")


class StateSpaceTooLarge(ConfigError):
    kind = "state_space_too_large"

    def __init__(self, size, cap):
        self.size = size
        self.cap = cap
        IbnrError.__init__(self, f"state space has (K+1)^k = {size} states, cap is {cap}")
        self.pointer = ""


class StochasticityError(ConfigError):
    kind = "stochasticity"

    def __init__(self, message, row=None, pointer=""):
        self.row = row
        super().__init__(message, pointer)


class IrreducibilityError(ConfigError):
    kind = "reducible_chain"

    def __init__(self, classes):
        self.classes = classes
        IbnrError.__init__(
            self, f"transition matrix is reducible; communicating classes: {classes}"
        )
        self.pointer = ""


class DimensionError(IbnrError, IndexError):
    exit_code = 4
    kind = "dimension"


class DomainError(IbnrError, ValueError):
    """Argument outside the domain of a functional (negative time, u < 0, ...)."""

    exit_code = 4
    kind = "domain"


class EvaluationDomainError(IbnrError, ArithmeticError):
    """Real-mode transform overflowed."""

    exit_code = 3
    kind = "evaluation_domain"


class PreconditionError(IbnrError):
    """Method and model do not fit together (lattice limits, non-exponential closed forms, ...)."""

    exit_code = 4
    kind = "precondition"


class ConvergenceError(IbnrError, ArithmeticError):
    exit_code = 3
    kind = "non_convergence"


class CoverageError(IbnrError, ValueError):
    """A trajectory was asked for a time outside its grid."""

    exit_code = 4
    kind = "coverage"


class PropagationError(IbnrError, ArithmeticError):
    exit_code = 3
    kind = "propagation"
