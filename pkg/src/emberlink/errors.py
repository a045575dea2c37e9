"""Exception hierarchy shared by all emberlink modules."""


class EmberlinkError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(EmberlinkError):
    """A file does not conform to its expected format (CSV, embedding text)."""


class IntegrityError(EmberlinkError):
    """Data is well-formed but violates a referential constraint
    (duplicate ids, unknown ids, mismatched caches)."""


class ContractError(EmberlinkError):
    """An operation was called with arguments violating its contract
    (layout/length mismatch, misaligned schemas)."""


class PreconditionError(EmberlinkError):
    """An operation's stated precondition does not hold for the input."""


class ConfigError(EmberlinkError):
    """A configuration value is missing, unparsable, or inconsistent."""


class TrainingError(EmberlinkError):
    """Training cannot proceed (single-class input, degenerate data)."""


class DivergenceError(TrainingError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
