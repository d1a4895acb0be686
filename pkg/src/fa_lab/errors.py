"""Exception types shared across the package."""


class FaLabError(Exception):
    """Base class for all library errors."""


class InvalidShape(FaLabError):
    pass


class NonFinite(FaLabError):
    """A matrix contains NaN or Inf entries (construction or diverged step)."""


class RankDeficient(FaLabError):
    """A matrix required to have full column rank does not."""


class NotSymmetric(FaLabError):
    pass


class NotPositiveDefinite(FaLabError):
    pass


class NotIsotropic(FaLabError):
    """Input matrix X does not satisfy X^T X = I within tolerance."""


class ConvergenceFailure(FaLabError):
    """The underlying decomposition routine failed to converge."""


class ZeroFeedbackImage(FaLabError):
    """Y C^T vanished, so the stationary-point prediction is undefined."""


class UnknownScenario(FaLabError):
    pass
