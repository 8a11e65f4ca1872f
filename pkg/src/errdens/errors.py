"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class ErrdensError(Exception):
    code = "ErrdensError"


class EmptyNeighborhood(ErrdensError):
    """No observation falls inside the kernel support around the query point."""

    code = "EmptyNeighborhood"


class AllTrimmed(ErrdensError):
    """Every residual was trimmed out."""

    code = "AllTrimmed"


class NoTrimmedObservations(ErrdensError):
    code = "NoTrimmedObservations"


class ZeroCurvature(ErrdensError):
    """The plug-in bandwidth is undefined for a density with zero curvature."""

    code = "ZeroCurvature"


class MalformedCsv(ErrdensError):
    code = "MalformedCsv"

    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        where = ""
        if row is not None:
            where = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class EmptyFile(ErrdensError):
    code = "EmptyFile"


class ConfigError(ErrdensError):
    code = "ConfigError"
