"""Error types shared across the stack.

Every error carries a stable string ``code``; the codes named here are part
of the teleoperation wire contract and must not be renamed.
"""

from __future__ import annotations


class LimbsimError(Exception):
    """Base class; ``code`` is machine-readable, ``args[0]`` human-readable."""

    code = "ERROR"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.details = details


# --- actuator -----------------------------------------------------------

class OverloadError(LimbsimError):
    code = "OVERLOAD"


class DomainError(LimbsimError):
    code = "DOMAIN"


class DegenerateFitError(LimbsimError):
    code = "DEGENERATE_FIT"


class StateCorruptionError(LimbsimError):
    code = "STATE_CORRUPTION"


# --- kinematics ---------------------------------------------------------

class ChainError(LimbsimError):
    code = "CHAIN"


class JointLimitError(LimbsimError):
    code = "OUT_OF_LIMITS"


class IkError(LimbsimError):
    code = "IK_FAILURE"


class NoConvergenceError(IkError):
    """IK iteration budget exhausted; carries the best residual seen."""

    def __init__(self, message="", *, best_residual=None, iterations=None, **details):
        super().__init__(message, **details)
        self.best_residual = best_residual
        self.iterations = iterations


class UnreachableError(IkError):
    def __init__(self, message="", **details):
        super().__init__(message, **details)
        self.details.setdefault("reason", "unreachable")


class NearSingularError(IkError):
    def __init__(self, message="", **details):
        super().__init__(message, **details)
        self.details.setdefault("reason", "near_singular")


# --- connection graph ---------------------------------------------------

class GraphError(LimbsimError):
    code = "GRAPH"


class MonogamyViolation(GraphError):
    code = "MONOGAMY_VIOLATION"


class IncompatiblePorts(GraphError):
    code = "INCOMPATIBLE_PORTS"


class SelfAttachError(GraphError):
    code = "SELF_ATTACH"


class EdgeNotFound(GraphError):
    code = "EDGE_NOT_FOUND"


class GripperLinkedError(GraphError):
    """Opening a gripper that still holds a link must go through detach."""

    code = "GRIPPER_LINKED"


class NoPathError(GraphError):
    code = "NO_PATH"


class AmbiguousPathError(GraphError):
    code = "AMBIGUOUS_PATH"


class UnknownTemplateError(GraphError):
    code = "UNKNOWN_TEMPLATE"


# --- sequences ----------------------------------------------------------

class SequenceError(LimbsimError):
    code = "SEQUENCE"


class PreconditionFailed(SequenceError):
    code = "PRECONDITION_FAILED"


class PostconditionFailed(SequenceError):
    code = "POSTCONDITION_FAILED"


class StepFailed(SequenceError):
    code = "STEP_FAILED"


class NotAVehicleError(SequenceError):
    code = "NOT_A_VEHICLE"


class OccupiedFixtureError(SequenceError):
    code = "OCCUPIED_FIXTURE"


# --- runtime / service --------------------------------------------------

class UnknownTargetError(LimbsimError):
    code = "UNKNOWN_TARGET"


class InvariantBreach(LimbsimError):
    """World invariant violated; carries a diagnostic snapshot."""

    code = "INVARIANT_BREACH"

    def __init__(self, message="", *, snapshot=None, **details):
        super().__init__(message, **details)
        self.snapshot = snapshot


class BusyError(LimbsimError):
    code = "BUSY"


class ConfigError(LimbsimError):
    code = "CONFIG"


class RateOutOfRange(LimbsimError):
    code = "RATE_OUT_OF_RANGE"


class AuthFailed(LimbsimError):
    code = "AUTH_FAILED"


class ProtocolError(LimbsimError):
    code = "PROTOCOL"
