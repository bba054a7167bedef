"""Exception types shared across the package."""


class GeotomoError(Exception):
    """Base class for package-specific failures."""


class TrappedGeodesic(GeotomoError):
    """A ray exhausted its step budget without leaving the domain.

    Carries the partial path (when available) and the influx node or interior
    start that produced it, so callers can report the offending ray.
    """

    def __init__(self, message, path=None, where=None):
        super().__init__(message)
        self.path = path
        self.where = where


class GeometryInconsistency(GeotomoError):
    """An exit state violated a geometric sanity bound (e.g. an influx
    incidence angle materially past +-pi/2), indicating a broken trace."""


class NotApplicable(GeotomoError):
    """A diagnostic could not be evaluated on this configuration (e.g. a
    conjugate-point scan hit a trapped ray)."""
