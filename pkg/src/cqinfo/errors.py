"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Row/column or tensor-factor counts do not match."""


class ConstructionError(ValueError):
    """Requested object cannot be built from the given parameters."""


class LabelError(KeyError):
    """Unknown or duplicate system label."""


class ContractError(ValueError):
    """Input violates an operation's stated precondition."""


class CapabilityError(ValueError):
    """Problem size exceeds the configured exact-computation cap."""


class SolverError(RuntimeError):
    """Root/optimum search failed (no bracket, no sign change)."""
