"""Exception types shared across the package.

The CLI maps these onto exit codes: CertificationFailed -> 1,
ConfigError (and UnknownScenario) -> 2, BuildError -> 3.
"""


class CclError(Exception):
    pass


class ConfigError(CclError):
    pass


class UnknownScenario(ConfigError):
    pass


class BuildError(CclError):
    pass


class CertificationFailed(CclError):
    pass


class DisconnectedPair(CclError):
    pass


class ParameterOutOfRange(CclError):
    pass


class ElementOutsideBall(CclError):
    pass


class BallTooSmall(CclError):
    pass


class UnsupportedGroup(BuildError):
    pass


class InvalidConeSpec(BuildError):
    pass


class NotGeodesicInput(CclError):
    pass


class BasepointNotFixed(BuildError):
    pass


class SameOrbitBasepoints(BuildError):
    pass


class RadiusTooSmall(BuildError):
    pass


class CombingDomainMismatch(CclError):
    pass


class SubspaceNotConvex(CclError):
    pass


class TriplesTooShort(CclError):
    pass


class PremiseNotCertified(CclError):
    pass


class NotGeodesic(CclError):
    pass


class NotQuasiGeodesic(CclError):
    pass
