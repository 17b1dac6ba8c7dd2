class DataError(ValueError):
    """Malformed or inconsistent market data (bad CSV row, OHLC violation, duplicate timestamp)."""


class ConfigError(ValueError):
    """Invalid parameter or configuration value."""


class GradCheckError(RuntimeError):
    """Non-finite value encountered while checking gradients; message names the parameter."""
