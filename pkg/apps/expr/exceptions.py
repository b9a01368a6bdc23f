class ExprError(Exception):
    """Base class for expression parsing and evaluation failures."""

    def __init__(self, message, offset=None):
        self.reason = message
        self.offset = offset
        if offset is not None:
            message = f"{message} at offset {offset}"
        super().__init__(message)


class ExprSyntaxError(ExprError):
    pass


class UnknownIdentifierError(ExprError):
    pass


class ArityError(ExprError):
    pass


class ExprDomainError(ExprError):
    """
    Raised when an argument leaves the domain of an operation
    (log/sqrt of a negative number, division by zero, ...).
    `entry` is filled in by CoeffField with the failing entry index.
    """

    def __init__(self, message, entry=None):
        self.entry = entry
        super().__init__(message)
        if entry is not None:
            self.args = (f"entry {entry}: {message}",)

    def at_entry(self, entry):
        return ExprDomainError(self.reason, entry=entry)
