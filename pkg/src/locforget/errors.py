"""Exception hierarchy shared across the package."""


class LocForgetError(Exception):
    """Base class for all package errors."""


class LexiconLoadError(LocForgetError):
    pass


class ParseError(LocForgetError):
    """Input text could not be turned into a usable chunk set."""


class NoChunkFound(ParseError):
    pass


class EmptyPrompt(ParseError):
    pass


class RootMismatch(LocForgetError):
    pass


class DimensionMismatch(LocForgetError, ValueError):
    pass


class TimestepMismatch(LocForgetError, ValueError):
    pass


class InvalidScheduleParams(LocForgetError, ValueError):
    pass


class TimestepOrder(LocForgetError, ValueError):
    pass


class ConceptResolutionError(LocForgetError):
    """A concept phrase could not be bound to exactly one model component."""

    def __init__(self, message, phrases=()):
        super().__init__(message)
        self.phrases = list(phrases)


class ConceptUnknown(ConceptResolutionError):
    pass


class ConceptAmbiguous(ConceptResolutionError):
    pass


class NotAProbability(LocForgetError, ValueError):
    pass


class ZeroNorm(LocForgetError, ValueError):
    pass


class DivisionByNearZero(LocForgetError, ZeroDivisionError):
    pass
