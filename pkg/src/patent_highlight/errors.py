"""Exception hierarchy shared by every stage of the pipeline."""


class PatentHighlightError(Exception):
    """Base class; the CLI maps these to exit code 1."""


# ingest
class NotAnArchive(PatentHighlightError):
    pass


class MalformedConcatenation(PatentHighlightError):
    pass


class MalformedXml(PatentHighlightError):
    def __init__(self, message, offset=None, source=None):
        self.offset = offset
        self.source = source
        where = []
        if source:
            where.append(str(source))
        if offset is not None:
            where.append(f"offset {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class MissingDocNumber(PatentHighlightError):
    pass


# corpus
class EmptyClass(PatentHighlightError):
    pass


class IoFailure(PatentHighlightError):
    pass


class SchemaMismatch(PatentHighlightError):
    pass


class BadLabel(PatentHighlightError):
    pass


# text / features
class EmptyCorpus(PatentHighlightError):
    pass


# models
class NonPositiveAlpha(PatentHighlightError):
    pass


class DimensionMismatch(PatentHighlightError):
    pass


class VersionMismatch(PatentHighlightError):
    pass


class CorruptFile(PatentHighlightError):
    pass


class DidNotConverge(UserWarning):
    """Issued as a warning; training still returns the final model."""


# eval
class BadFraction(PatentHighlightError):
    pass


class BadK(PatentHighlightError):
    pass


class LengthMismatch(PatentHighlightError):
    pass


class UnknownLabel(PatentHighlightError):
    pass


# explain / cli
class DegenerateText(PatentHighlightError):
    pass


class EmptyInput(PatentHighlightError):
    pass
