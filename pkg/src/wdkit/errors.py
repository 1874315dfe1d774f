"""Exception types shared across the harness."""


class WdkitError(Exception):
    """Base class for all harness errors."""


class MalformedCorpus(WdkitError):
    """A corpus file is missing a required field or has the wrong shape.

    The message carries the path to the offending record, e.g.
    ``train[3].turns[5]: missing 'speaker'``.
    """


class UnknownSplit(WdkitError):
    pass


class UnknownDomainTag(WdkitError):
    pass


class UnknownStep(WdkitError):
    pass


class EmptyDialogue(WdkitError):
    pass


class NotAnActionTurn(WdkitError):
    pass


class MissingGoldFields(WdkitError):
    pass


class ProviderUnavailable(WdkitError):
    """A similarity provider was required but could not be reached."""


class MalformedResponse(WdkitError):
    """A backend or provider answered with an unusable payload."""


class BackendTimeout(WdkitError):
    """A generation batch failed after exhausting its retries."""


class UnknownId(WdkitError):
    pass


class MissingPrediction(WdkitError):
    pass


class IdMismatch(WdkitError):
    """Predictions and gold records do not line up one-to-one."""
