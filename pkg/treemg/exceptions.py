class TreeMGException(Exception):
    """
    Generic treemg Exceptions
    """


class DimensionError(TreeMGException):
    """
    Raised for a spatial dimension ``p`` that is not supported
    """


class CapacityError(TreeMGException):
    """
    Raised when a grid or a dense oracle system would exceed its configured size cap
    """


class SingularDiagonalError(TreeMGException):
    """
    Raised for a vanishing diagonal or pivot, usually a resonance of the discrete operator
    """


class ConfigurationError(TreeMGException):
    """
    Raised for inconsistent problem or solver setups
    """


class ContractError(TreeMGException):
    """
    Raised when an operation is called outside of its preconditions
    """


class UsageError(ConfigurationError):
    """
    Raised for command line or config file conflicts
    """
