"""Exception types shared across the package.

Every error carries a short machine-readable ``code`` so the CLI can emit
structured error JSON on stderr.
"""


class NearbySenseError(Exception):
    code = "error"


class InvalidInputError(NearbySenseError, ValueError):
    """An argument violates an operation's precondition."""

    code = "invalid-input"


class ConfigError(NearbySenseError):
    """A config file, city definition, or generation spec is unusable."""

    code = "invalid-config"


class InconsistentObservationsError(NearbySenseError):
    """No location is compatible with every (origin, band) observation."""

    code = "inconsistent-observations"


class DegenerateDataError(NearbySenseError):
    """Input data is structurally empty where the metric needs mass."""

    code = "degenerate-data"


class UndefinedFitError(NearbySenseError):
    """Regression is undefined (too few points or zero x variance)."""

    code = "undefined-fit"


class TransportError(NearbySenseError):
    """A probe transport failed to deliver pages."""

    code = "transport-failure"


class PlacesClientError(NearbySenseError):
    """A places client failed while fetching a result page."""

    code = "places-client-failure"
