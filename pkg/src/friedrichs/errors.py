"""Exception hierarchy shared by all modules."""


class FriedrichsError(Exception):
    """Base class for every error raised by this package."""


class DegenerateMinimum(FriedrichsError):
    """The Hessian of ``u_p`` at its minimizer has an eigenvalue below the floor."""


class NonUniqueMinimum(FriedrichsError):
    """Two distinct minimizers tie in value and in distance to the origin."""


class AboveThreshold(FriedrichsError, ValueError):
    """A spectral parameter lies above the bottom of the essential spectrum."""


class StructureViolation(FriedrichsError):
    """The second-derivative blocks of ``u`` at the origin are not proportional."""


class InfiniteLambda(FriedrichsError):
    """The threshold integral does not stabilize under grid refinement."""


class SymmetryViolation(FriedrichsError, ValueError):
    """A declared parity or evenness property fails on the test grid."""


class ConfigError(FriedrichsError, ValueError):
    """Malformed or semantically invalid run configuration."""

    def __init__(self, message, line=None, key=None):
        self.line = line
        self.key = key
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
