class FwauditError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(FwauditError):
    """A document could not be parsed.  Carries a source location."""

    def __init__(self, message, line=None, column=None, source=None):
        self.message = message
        self.line = line
        self.column = column
        self.source = source
        super().__init__(self.location() + message)

    def location(self):
        parts = []
        if self.source:
            parts.append(str(self.source))
        if self.line is not None:
            parts.append(str(self.line))
            if self.column is not None:
                parts.append(str(self.column))
        return ":".join(parts) + ": " if parts else ""


class ResolutionError(ParseError):
    """A rule or group refers to a name that does not exist, or cycles."""


class UnsupportedDirective(ParseError):
    """Strict PIX parsing met commands outside the supported subset."""

    def __init__(self, problems, source=None):
        # problems: list of (line, text)
        self.problems = list(problems)
        first = self.problems[0][0] if self.problems else None
        listing = "; ".join(f"line {n}: {t}" for n, t in self.problems)
        super().__init__(f"unsupported directive(s): {listing}", line=first, source=source)


class ZoneError(FwauditError):
    """Zones are missing or ambiguous."""


class NotApplicable(FwauditError):
    """A measure was requested for a vendor it is not defined for."""
