"""Exception and warning types shared across the toolkit.

Every error carries an ``exit_code`` used by the command line front end:
2 for configuration/model problems, 3 for an inadmissible control operator,
4 when no valid shift is found and 5 for verification failures.
"""


class FeqError(Exception):
    exit_code = 1


class ConfigError(FeqError, ValueError):
    exit_code = 2


class UnknownModel(ConfigError):
    pass


class MissingParam(ConfigError):
    pass


class OperatorError(ConfigError):
    """Raised when a spectral operator fails an ordering, sector or shift check."""

    def __init__(self, message, mode=None):
        super().__init__(message)
        # 1-based mode number of the first offending eigenvalue
        self.mode = mode


class EmptySpectrum(OperatorError):
    pass


class NonMonotoneRealPart(OperatorError):
    pass


class SectorViolation(OperatorError):
    pass


class DeltaResonance(OperatorError):
    pass


class LengthMismatch(ConfigError):
    pass


class DimensionMismatch(FeqError, ValueError):
    exit_code = 2


class InadmissibleControl(FeqError):
    exit_code = 3


class NoAdmissibleMatching(InadmissibleControl):
    def __init__(self, message, cluster=None):
        super().__init__(message)
        self.cluster = cluster


class ChannelLeakage(InadmissibleControl):
    pass


class ZeroControlCoefficient(InadmissibleControl):
    pass


class ResonantMu(FeqError):
    exit_code = 4


class MuBelowFloor(FeqError, ValueError):
    exit_code = 2


class NoValidMuFound(FeqError):
    exit_code = 4

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log or []


class SingularCauchySystem(FeqError):
    exit_code = 4


class DegenerateDenominator(FeqError):
    exit_code = 5


class InconsistentMu(FeqError, ValueError):
    exit_code = 5


class PartitionMismatch(FeqError, ValueError):
    exit_code = 5


class VerificationFailure(FeqError):
    exit_code = 5


class UnstableBlowup(FeqError):
    exit_code = 5


class SymmetryViolation(FeqError, ValueError):
    exit_code = 2


class WrongBasis(FeqError, ValueError):
    exit_code = 2


class TooFewSamples(FeqError, ValueError):
    exit_code = 2


class ZeroNorm(FeqError, ValueError):
    exit_code = 2


class TruncationExhausted(UserWarning):
    """Every retained mode is low frequency; the truncation holds no tail."""


class StepSizeWarning(UserWarning):
    pass
