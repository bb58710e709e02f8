"""Exception types raised by the analysis pipeline."""


class EchomapError(Exception):
    """Base class for all package-specific errors."""


class EdgeFormatError(EchomapError):
    """An edge record line could not be parsed."""

    def __init__(self, line_number: int, line: str, reason: str = "expected two tab-separated integer ids"):
        self.line_number = line_number
        self.line = line
        super().__init__(f"malformed edge record at line {line_number}: {line!r} ({reason})")


class DocumentFormatError(EchomapError):
    """A document record line could not be parsed."""

    def __init__(self, line_number: int, reason: str):
        self.line_number = line_number
        super().__init__(f"malformed document record at line {line_number}: {reason}")


class ModularityUndefinedError(EchomapError):
    """Modularity requested on a graph with zero total edge weight."""


class EmptyVocabularyError(EchomapError):
    """No terms survived stopword and frequency filtering."""


class OverParameterizedError(EchomapError):
    """Topic count exceeds the number of tokens in the corpus."""


class EmptyDocumentError(EchomapError):
    """An operation received a document with no tokens."""


class PipelineStageError(EchomapError):
    """A pipeline stage failed; partial artifacts are retained on disk."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"pipeline aborted at stage {stage!r}: {cause}")
