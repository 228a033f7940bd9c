"""Exception hierarchy shared by all modules."""


class RvkError(Exception):
    """Base class for all errors raised by this package."""


class VocabularyError(RvkError):
    """Unknown or malformed proposition or agent."""


class ParseError(RvkError):
    """Malformed formula, event literal or file.

    ``position`` is a 0-based column for formulas, ``line`` a 1-based line
    number for files.
    """

    def __init__(self, message, position=None, line=None):
        where = ""
        if line is not None:
            where = f"line {line}: "
        elif position is not None:
            where = f"position {position}: "
        super().__init__(where + message)
        self.position = position
        self.line = line


class InputError(RvkError):
    """A letter outside a machine's declared alphabet."""


class PreconditionError(RvkError):
    """An analysis was called outside its domain."""


class ResourceError(RvkError):
    """A construction exceeded the state budget or a size guard."""
