class ConfigError(ValueError):
    """A configuration rules out any valid result (e.g. empty vocabulary)."""
