"""Exception hierarchy shared by all finlap modules."""


class FinlapError(Exception):
    """Base class for all errors raised by finlap."""


class DomainError(FinlapError):
    """Input outside the mathematical domain (zero vector, pole, zero norm)."""


class InvalidMetricError(FinlapError):
    """Metric parameters violate the positivity/convexity requirements."""


class DegenerateContactError(FinlapError):
    """The contact volume density vanishes; the Reeb field is not defined."""


class ConstructionError(FinlapError):
    """A metric construction (e.g. inverse design) cannot be carried out."""


class ConfigError(FinlapError):
    """Invalid resolution/basis/CLI configuration."""


class NumericError(FinlapError):
    """A numerical routine failed (non-SPD mass, solver breakdown)."""
