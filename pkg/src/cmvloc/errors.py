"""Error type shared by all modules.

Every failure carries a short machine-readable ``code`` (``invalid-argument``,
``out-of-strip``, ``singular-resolvent`` ...) so that callers and the CLI can
branch on it without parsing messages.
"""


class CmvError(ValueError):
    def __init__(self, code, message="", **details):
        self.code = code
        self.details = details
        super().__init__(f"{code}: {message}" if message else code)
