"""Exception types raised across the package.

Every error carries an ``exit_code`` so the command line front end can map
failures onto its fixed taxonomy without a lookup table.
"""

EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
EXIT_DATA = 5


class CdsppError(Exception):
    exit_code = EXIT_NUMERIC


# -- numeric ---------------------------------------------------------------


class DimensionMismatchError(CdsppError, ValueError):
    pass


class NotSymmetricError(CdsppError, ValueError):
    pass


class ZeroColumnError(CdsppError, ValueError):
    def __init__(self, index, norm=0.0):
        self.index = int(index)
        self.norm = float(norm)
        super().__init__(f"column {self.index} has norm {self.norm:.3g}, cannot normalise")


class NotPositiveDefiniteError(CdsppError, ValueError):
    def __init__(self, pivot):
        self.pivot = int(pivot)
        super().__init__(f"matrix is not positive definite (pivot {self.pivot})")


class NoConvergenceError(CdsppError, RuntimeError):
    def __init__(self, max_sweeps):
        self.max_sweeps = int(max_sweeps)
        super().__init__(f"eigensolver did not converge within {self.max_sweeps} sweeps")


class NotNormalizedError(CdsppError, ValueError):
    def __init__(self, index, norm):
        self.index = int(index)
        self.norm = float(norm)
        super().__init__(f"column {self.index} has norm {self.norm!r}, expected unit norm")


class DegenerateRatioError(CdsppError, ValueError):
    pass


# -- insufficient data -----------------------------------------------------


class EmptyDomainError(CdsppError, ValueError):
    exit_code = EXIT_DATA


class EmptyClassError(CdsppError, ValueError):
    exit_code = EXIT_DATA

    def __init__(self, label):
        self.label = int(label)
        super().__init__(f"class {self.label} has no samples")


class NoClassesError(CdsppError, ValueError):
    exit_code = EXIT_DATA


class InsufficientSamplesError(CdsppError, ValueError):
    exit_code = EXIT_DATA

    def __init__(self, label, needed, available):
        self.label = int(label)
        self.needed = int(needed)
        self.available = int(available)
        super().__init__(
            f"class {self.label} needs {self.needed} samples, only {self.available} available"
        )


class LabelCoverageError(CdsppError, ValueError):
    """Some class in ``range(C)`` has no labelled sample in either domain."""

    exit_code = EXIT_DATA


# -- file formats ----------------------------------------------------------


class DataFormatError(CdsppError):
    exit_code = EXIT_IO


class ParseError(DataFormatError, ValueError):
    def __init__(self, line, column, detail=""):
        self.line = int(line)
        self.column = int(column)
        msg = f"cannot parse value at line {self.line}, column {self.column}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class RaggedRowsError(DataFormatError, ValueError):
    def __init__(self, line, expected, found):
        self.line = int(line)
        super().__init__(f"line {self.line} has {found} values, expected {expected}")


class NonFiniteError(DataFormatError, ValueError):
    def __init__(self, line, column):
        self.line = int(line)
        self.column = int(column)
        super().__init__(f"non-finite value at line {self.line}, column {self.column}")


class NegativeLabelError(DataFormatError, ValueError):
    def __init__(self, line):
        self.line = int(line)
        super().__init__(f"negative label at line {self.line}")


class VersionMismatchError(DataFormatError, ValueError):
    def __init__(self, found, expected):
        self.found = found
        self.expected = expected
        super().__init__(f"report version {found!r} is not supported (expected {expected!r})")


class ManifestError(DataFormatError, ValueError):
    pass
