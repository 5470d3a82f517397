"""Exception hierarchy for cfexplain."""


class CfExplainError(ValueError):
    """Base class for all domain errors."""


class InvalidMdpError(CfExplainError):
    pass


class InvalidTrajectoryError(CfExplainError):
    pass


class NoiseSupportError(CfExplainError):
    """Raised when a noise posterior or argmax has no support."""


class DimensionMismatchError(CfExplainError):
    pass


class BudgetExceededError(CfExplainError):
    """Raised when a counterfactual realization changes more than k actions."""


class OracleTooLargeError(CfExplainError):
    pass
