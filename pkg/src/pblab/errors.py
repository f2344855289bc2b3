"""Exception taxonomy shared across the package.

Plain precondition violations (bad shapes, out-of-range arguments) raise
``ValueError``; the classes below mark failure modes that callers, in
particular the CLI, need to tell apart.
"""


class PblabError(Exception):
    """Base class for package-specific failures."""


class ConfigError(PblabError):
    """A run configuration does not parse or validate."""


class CapacityError(PblabError):
    """A request exceeds an exhaustive-enumeration or memory cap."""


class InadmissibleSystemError(PblabError):
    """An operation requiring an admissible system got kappa_star <= 0."""


class NumericError(PblabError):
    """A numerical procedure failed (singularity, iteration cap, ...)."""


class SingularSystemError(NumericError):
    """A principal minor needed for a linear solve is numerically zero."""


class DegenerateMarginError(NumericError):
    """A certified margin came out below resolution; the system is too
    close to inadmissible for the certificate to mean anything."""
