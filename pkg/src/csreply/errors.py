"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all errors raised by csreply."""


class EmptyInput(EngineError):
    """An operation received an empty text or token sequence."""


class ParseError(EngineError):
    """A line of an input file could not be parsed."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DegenerateVector(EngineError):
    """A vector collapsed to (near-)zero norm and cannot be normalized."""


class NumericalError(EngineError):
    """A numerically impossible state was reached (e.g. non-positive denominator)."""


class MissingTranslations(EngineError):
    """The translation loss was requested on a batch without translation ids."""


class EmptyCorpus(EngineError):
    """No usable message-reply pairs remain after filtering."""


class EmptyResponseSet(EngineError):
    """No reply survived response-set filtering."""


class TooFewPoints(EngineError):
    """Fewer vectors than requested clusters."""


class IntegrityError(EngineError):
    """A persisted artifact violates one of its invariants."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class TruthNotInSet(EngineError):
    """The reference reply of an evaluation query is not in the response set."""


class EmptyRanks(EngineError):
    """MRR was requested over an empty rank list."""


class ConfigError(EngineError):
    """An engine config file contains unknown keys or invalid values."""
