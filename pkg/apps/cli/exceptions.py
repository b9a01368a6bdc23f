class ConfigError(Exception):
    """
    A run configuration failed to load or validate. `errors` maps JSON
    pointers (``/system/sigma2``) to lists of messages.
    """

    def __init__(self, message, errors=None):
        self.errors = dict(errors or {})
        super().__init__(message)

    @property
    def pointer(self):
        return next(iter(self.errors), '')

    @classmethod
    def from_errors(cls, errors):
        pointer, messages = next(iter(errors.items()))
        return cls(f"{pointer or '/'}: {messages[0]}", errors)


class ManifestMismatchError(ConfigError):
    def __init__(self, recorded, computed):
        self.recorded = recorded
        self.computed = computed
        super().__init__(f"manifest config hash {recorded} does not match its config ({computed})")
