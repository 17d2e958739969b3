"""Exception hierarchy shared by every stage of the labeling toolchain."""


class LabelingError(Exception):
    """Base class for every error the toolchain raises on purpose."""


# ----------------------
# Class files
# ----------------------
class ClassFileError(LabelingError):
    pass


class MalformedClassFile(ClassFileError):
    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (at byte {offset})"
        super().__init__(message)


class UnsupportedVersion(ClassFileError):
    def __init__(self, major):
        self.major = major
        super().__init__(f"unsupported class-file major version {major}")


class DescriptorSyntax(LabelingError, ValueError):
    def __init__(self, raw, index, reason="unexpected character"):
        self.raw = raw
        self.index = index
        super().__init__(f"{reason} at index {index} of descriptor {raw!r}")


class ArchiveUnreadable(LabelingError):
    pass


# ----------------------
# Flow analysis
# ----------------------
class FlowAnalysisError(LabelingError):
    def __init__(self, message, offset):
        self.offset = offset
        super().__init__(f"{message} at offset {offset}")


class StackUnderflow(FlowAnalysisError):
    pass


class InconsistentStackDepth(FlowAnalysisError):
    pass


# ----------------------
# Features
# ----------------------
class LexiconError(LabelingError):
    pass


class EmptyLexicon(LexiconError):
    pass


class CatalogMismatch(LabelingError):
    def __init__(self, expected, actual):
        self.expected = expected
        self.actual = actual
        super().__init__(f"feature vector from catalog {actual[:12]} used with catalog {expected[:12]}")


# ----------------------
# Ground truth
# ----------------------
class DatasetError(LabelingError):
    pass


class SchemaViolation(DatasetError):
    def __init__(self, line, field, message="invalid value"):
        self.line = line
        self.field = field
        super().__init__(f"line {line}: field {field!r}: {message}")


class DuplicateRecord(DatasetError):
    def __init__(self, line, key):
        self.line = line
        self.key = key
        super().__init__(f"line {line}: duplicate record {key[0]}({', '.join(key[1])})")


class BscConflict(DatasetError):
    def __init__(self, line, labels):
        self.line = line
        self.labels = labels
        super().__init__(f"line {line}: more than one strength class {sorted(labels)}")


class EmptyDataset(DatasetError):
    pass


class TooFewRecords(DatasetError):
    pass


# ----------------------
# Models and results
# ----------------------
class ModelBundleError(LabelingError):
    pass


class MalformedResults(LabelingError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")
