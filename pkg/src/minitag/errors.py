"""Exception types shared across the toolkit."""


class DataError(Exception):
    """Malformed or inconsistent input data (files, labels, vocabularies)."""


class NumericalAbort(Exception):
    """Training aborted on a non-finite loss; carries diagnostic context."""

    def __init__(self, message, batch_ids=None):
        super().__init__(message)
        self.batch_ids = batch_ids
