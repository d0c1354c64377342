"""Exception hierarchy shared by all apstlab modules."""


class ApstError(Exception):
    """Base class for library errors."""


class LengthMismatch(ApstError, ValueError):
    pass


class NonPositiveCoupling(ApstError, ValueError):
    pass


class InvalidEntry(ApstError, ValueError):
    """An entry string or object could not be interpreted as a real number."""


class PrecisionUnreachable(ApstError):
    """Requested more certified digits than the chain's input data carries."""


class WeightMismatch(ApstError):
    """The two independent weight computations disagree."""


class PrecisionExhausted(ApstError):
    """Not a single continued-fraction quotient could be certified."""


class PrecisionInsufficient(ApstError):
    """Numeric relation detection needs more digits than are available."""


class UnsupportedRecipe(ApstError):
    def __init__(self, message, classification=None):
        super().__init__(message)
        self.classification = classification


class DegenerateSpectrum(ApstError, ValueError):
    pass


class InadmissiblePlan(ApstError, ValueError):
    pass


class InvalidParams(ApstError, ValueError):
    pass
