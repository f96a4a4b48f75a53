"""Exception hierarchy shared across the package."""


class FormationError(Exception):
    """Base class for all domain errors raised by this package."""


class ZeroPointError(FormationError):
    """A point sits at the retraction's singular center (e.g. the origin)."""


class CutLocusError(FormationError):
    """A pair of points is mutually antipodal; the geodesic between them
    is not unique and direction-dependent quantities are undefined."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class NearCutLocusError(FormationError):
    """A rotation (or attitude error) is too close to a half turn for the
    logarithm to be well conditioned."""

    def __init__(self, message, agent=None):
        super().__init__(message)
        self.agent = agent


class ChartSingularityError(FormationError):
    """A sphere point sits at a coordinate singularity of the azimuth/polar
    chart (the poles, where the azimuth is undefined)."""


class CoincidentPointsError(FormationError):
    """Two points retract to the same location, so no geodesic direction
    between them exists."""


class DiagonalConfigurationError(FormationError):
    """A connected pair of agents coincides after retraction; the potential
    diverges there."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class ZeroAngleError(FormationError):
    """An angle vector contains a zero entry, so its reciprocal is undefined."""


class AmbiguousHalfwayError(FormationError):
    """Two curve parameters are exactly half the period apart; both shorter-way
    rules apply.  (Informational: callers resolve this with the positive branch.)"""


class StepFailureError(FormationError):
    """The right-hand side failed during time integration."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class ScenarioParseError(FormationError):
    """A scenario file is not valid JSON."""

    def __init__(self, message, line=None, column=None):
        super().__init__(message)
        self.line = line
        self.column = column


class ScenarioValidationError(FormationError):
    """A scenario file parsed but failed schema validation."""

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)
