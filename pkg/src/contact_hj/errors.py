"""Exception hierarchy shared by all modules."""


class ContactHJError(Exception):
    """Base class for library errors."""


class ConfigurationError(ContactHJError, ValueError):
    pass


class ModelError(ContactHJError):
    pass


class StepError(ContactHJError, ValueError):
    pass


class HorizonError(ContactHJError, ValueError):
    pass


class DomainError(ContactHJError, ValueError):
    pass


class FamilyError(ContactHJError, ValueError):
    pass


class DivergenceError(ContactHJError):
    """Raised when a semigroup orbit blows up.

    ``iterations`` is the number of single steps taken before the sup-norm
    crossed the blowup threshold.
    """

    def __init__(self, iterations, norm, t=None):
        self.iterations = int(iterations)
        self.norm = float(norm)
        self.t = t
        super().__init__(
            f"orbit diverged after {self.iterations} steps (|f|_inf = {self.norm:.3e})"
        )


class IntegrationError(ContactHJError):
    def __init__(self, t, message="non-finite state"):
        self.t = float(t)
        super().__init__(f"{message} at t = {self.t:.6g}")


class NonHyperbolicError(ContactHJError):
    pass


class TraceError(ContactHJError):
    pass


class AssemblyError(ContactHJError):
    pass
