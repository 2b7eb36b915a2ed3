"""Exception types shared across the toolkit."""


class CswitchError(Exception):
    """Base class for all toolkit errors."""


class DataError(CswitchError):
    """Malformed or inconsistent input data (bad files, duplicate ids, closure violations)."""


class OOVWordError(CswitchError):
    """A word cannot be scored: it is outside the model vocabulary and no unk symbol exists."""

    def __init__(self, word: str):
        super().__init__(f"out-of-vocabulary word with no unk symbol: {word!r}")
        self.word = word
