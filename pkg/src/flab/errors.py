"""Exception types shared across the library."""


class FlabError(Exception):
    """Base class for all library errors."""


class DegenerateTriangle(FlabError):
    """Three points are collinear within tolerance; no circumcircle exists."""


class HypothesisViolated(FlabError):
    """Geometric hypothesis (separation / width bounds) not satisfied."""


class EmptyInput(FlabError):
    """An operation received an empty point set."""


class ConfigInvalid(FlabError):
    """A generator configuration violates its invariants."""


class InsufficientContent(FlabError):
    """The arc scan exhausted the circle before three arcs were found."""


class OriginInput(FlabError):
    """The complex reciprocal is undefined at the origin."""


class OutOfAnnulus(FlabError):
    """A point lies outside the annulus B(0,4) \\ B(0,1)."""


class DegenerateFit(FlabError):
    """A regression was requested on degenerate abscissae."""
