class ConfigError(ValueError):
    """Scenario configuration is malformed or inconsistent."""


class InfeasibleConstraintsError(ValueError):
    """Activation or power constraints cannot be met."""
