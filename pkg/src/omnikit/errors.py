"""Exception hierarchy.

Everything a solver can refuse to do raises a subclass of ``DomainError``;
malformed inputs (files, flags, scenario schemas) raise ``ConfigError``.
The CLI maps the two families to exit codes 3 and 2.
"""


class OmnikitError(Exception):
    pass


class ConfigError(OmnikitError):
    pass


class SchemaError(ConfigError):
    pass


class DomainError(OmnikitError):
    pass


# geometry
class BehindCamera(DomainError):
    pass


class NoConvergence(DomainError):
    pass


# calibration
class Degenerate(DomainError):
    pass


class NoSolution(DomainError):
    pass


class Disconnected(DomainError):
    def __init__(self, unreachable):
        self.unreachable = sorted(unreachable, key=str)
        super().__init__(f"pose graph disconnected; unreachable nodes: {self.unreachable}")


class Diverged(DomainError):
    pass


class RankDeficient(DomainError):
    pass


class NoDetections(DomainError):
    pass


class DegenerateMotion(DomainError):
    pass


class TooFewPoses(DomainError):
    pass


# tracking
class NoConsensus(DomainError):
    pass


# safety
class NoValidJoints(DomainError):
    pass


class BadRecording(DomainError):
    pass


# handover
class EmptyCandidateSet(DomainError):
    pass


class NoFeasibleCandidate(DomainError):
    pass


# contact control
class InsufficientNormalForce(DomainError):
    pass


# placement
class UnknownObject(DomainError):
    pass
