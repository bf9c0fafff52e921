"""Exception types shared across the package."""


class StepshapError(Exception):
    """Base class for all errors raised by this package."""


class InputShapeError(StepshapError, ValueError):
    """A window batch does not match the model's expected shape, or holds
    non-finite cells that should have been imputed first."""


class ModelFaultError(StepshapError, RuntimeError):
    """A predictor returned a non-finite or out-of-range score."""


class DegenerateLabelsError(StepshapError, ValueError):
    """A labelled collection holds only one class where both are required."""


class ContractViolationError(StepshapError, ValueError):
    """A caller passed arguments outside an operation's stated contract,
    e.g. a subset containing features not observed at the final step."""


class BudgetExceededError(StepshapError, ValueError):
    """The exact Shapley oracle was asked for more subset evaluations than
    its hard cap allows. The message states the required budget."""


class ConfigurationError(StepshapError, ValueError):
    """A run configuration is inconsistent or incomplete."""


class UndefinedMetricError(StepshapError, ValueError):
    """A ranking metric was requested on labels that leave it undefined."""


class DataFormatError(StepshapError, ValueError):
    """An input file violates the documented schema. Messages carry line
    numbers where available."""
