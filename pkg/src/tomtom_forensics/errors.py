"""Exception types shared across the toolkit."""


class TomTomError(Exception):
    """Base class for all decoding errors raised by this package."""


class RangeError(TomTomError, ValueError):
    pass


class ParseError(TomTomError, ValueError):
    def __init__(self, offset, expected, actual):
        self.offset = offset
        self.expected = expected
        self.actual = actual
        super().__init__(f"offset {offset}: expected {expected}, got {actual}")


class EmptyInput(TomTomError, ValueError):
    pass


class ValidationError(TomTomError, ValueError):
    def __init__(self, index, field, message):
        self.index = index
        self.field = field
        super().__init__(f"record {index}, field {field!r}: {message}")


class FormatError(TomTomError, ValueError):
    def __init__(self, text, message="unrecognised format"):
        self.text = text
        super().__init__(f"{message}: {text!r}")


class MalformedStore(TomTomError, ValueError):
    """Raised by strict store parsing on the first bad element."""


class NotPresent(TomTomError, LookupError):
    pass


class ManualReviewRequired(TomTomError):
    pass
