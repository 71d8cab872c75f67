"""Exception and warning types shared across the package."""


class EditSynthError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EditSynthError):
    """Bad configuration, unusable input location, or missing credentials."""


class DatasetFormatError(ConfigError):
    """A dataset file does not parse as the expected record format."""


# corpus

class ZeroEligibleFiles(ConfigError):
    """No file in the corpus is long enough to sample from."""


class FileTooShort(EditSynthError):
    """A file is shorter than the minimum snippet length."""


class InsufficientFiles(ConfigError):
    """Fewer than two eligible files; a snippet pair needs distinct files."""


# prompts

class EmptyShotPool(ConfigError):
    """The one-shot example pool contains no entries."""


class MalformedTask(EditSynthError):
    """An edit task is missing a required field."""


# generation backends

class TransportError(EditSynthError):
    """The backend could not be reached or returned a non-retryable failure."""


class RateLimited(TransportError):
    """The backend rejected the request for rate reasons; retryable."""


class ContextOverflow(EditSynthError):
    """The request exceeds the backend's context window; never retried."""


# response parsing

class MalformedRound1(EditSynthError):
    """Round-1 response is missing a section or has an empty code block."""


class MalformedRound2(EditSynthError):
    """Round-2 response has neither the ill-posed token nor a code block."""


# topic modeling

class AllDocumentsEmpty(EditSynthError):
    """Every document tokenized to nothing; there is nothing to model."""


class EmptyDocument(EditSynthError):
    """The document has no token assignments."""


class PlanMismatch(EditSynthError):
    """A quota plan does not match the document grouping it is applied to."""


class EmptyOutcomes(EditSynthError):
    """pass@1 is undefined on an empty outcome list."""


# pipeline

class SourceExhausted(EditSynthError):
    """A source has too few triplets of some style to satisfy the mix."""


class StyleExhausted(Warning):
    """A style ended up under its target after filtering; not an error."""
