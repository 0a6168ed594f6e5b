# utils/errors.py
# Exception hierarchy shared by every module of the toolkit
# Library code raises these; only cli.py turns them into exit codes


class RobusError(Exception):
    """Base class for all toolkit errors"""


class DomainError(RobusError, ValueError):
    """Input outside the mathematical domain of an operation (e.g. polar latitude)"""


class ConfigurationError(RobusError, ValueError):
    """Invalid configuration value or non-invertible georeference"""


class ParseError(RobusError, ValueError):
    """Malformed input document; offset is the byte position of the fault"""

    def __init__(self, message, offset=0):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class FormatError(RobusError, ValueError):
    """Malformed artifact container; field names the offending part"""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class UndefinedInputError(RobusError, ValueError):
    """A metric is undefined on the given input (empty graph, no qualifying pairs)"""


class DimensionMismatchError(RobusError, ValueError):
    """Two rasters/masks that must share a shape do not"""


class MissingInputError(RobusError, FileNotFoundError):
    """A required input file or predecessor artifact does not exist"""


class StageError(RobusError):
    """A pipeline stage failed after it started writing outputs"""

    def __init__(self, stage, message):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage
