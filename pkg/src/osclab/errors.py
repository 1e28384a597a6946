"""Exception types shared across the package."""


class ConfigError(Exception):
    """Malformed or inconsistent experiment/disorder configuration."""


class NumericError(Exception):
    """A numerical routine failed to meet its accuracy contract."""


class BudgetError(NumericError):
    """A truncated-space construction would exceed its size budget."""
