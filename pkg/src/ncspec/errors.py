"""Exception hierarchy shared by every module."""


class NCSpecError(Exception):
    """Base class for all package errors."""


class ParseError(NCSpecError, ValueError):
    pass


class ShapeMismatch(NCSpecError, ValueError):
    pass


class NotAProjection(NCSpecError, ValueError):
    pass


class ZeroProjection(NCSpecError, ValueError):
    pass


class NonCommutingGenerators(NCSpecError, ValueError):
    pass


class InvalidMorphism(NCSpecError, ValueError):
    pass


class NoDominatingAtom(NCSpecError, ValueError):
    pass


class NotWellDefined(NCSpecError, ValueError):
    pass


class NotMeetPreserving(NCSpecError, ValueError):
    pass


class ContextMissing(NCSpecError, KeyError):
    pass


class IsoFailure(NCSpecError):
    def __init__(self, message, generator=None):
        super().__init__(message)
        self.generator = generator


class NaturalityFailure(NCSpecError):
    def __init__(self, message, generator=None):
        super().__init__(message)
        self.generator = generator


class UnresolvableContext(NCSpecError, LookupError):
    pass


class AlreadyCentral(NCSpecError, ValueError):
    pass


class SaturationCapExceeded(NCSpecError, RuntimeError):
    def __init__(self, message, rounds=None, survivors=None):
        super().__init__(message)
        self.rounds = rounds
        self.survivors = survivors


class NotOrthonormal(NCSpecError, ValueError):
    pass


class AlgebraMismatch(NCSpecError, ValueError):
    pass
