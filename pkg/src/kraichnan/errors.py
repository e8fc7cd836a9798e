"""Exception hierarchy shared by all modules."""


class KraichnanError(Exception):
    """Base class for package errors."""


class ConfigError(KraichnanError, ValueError):
    """Invalid parameter or configuration value."""


class PreconditionError(KraichnanError, ValueError):
    """An operator was applied to a field outside its domain."""


class NumericalError(KraichnanError, RuntimeError):
    """A numerical method failed."""


class StabilityError(NumericalError):
    """Time step violates the stability bound."""


class NegativeSpectrum(NumericalError):
    """Master-equation iterate went negative beyond round-off."""


class BlowUp(NumericalError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"non-finite values at step {step}")


class EnsembleBlowUp(NumericalError):
    """Some ensemble members blew up; partial statistics are attached."""

    def __init__(self, failed, partial=None):
        self.failed = dict(failed)
        self.partial = partial
        super().__init__(f"{len(self.failed)} member(s) blew up: {sorted(self.failed)[:10]}")


class SingularPairing(NumericalError):
    """Cameron-Martin pairing is undefined because q vanishes where h does not."""


class DomainError(KraichnanError, ValueError):
    """Self-similar profile does not fit in the periodic cell."""


class ComparisonFailure(KraichnanError):
    """Monte Carlo and oracle disagree beyond tolerance."""
