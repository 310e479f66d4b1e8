"""Exception types raised across the package."""


class ValidationError(ValueError):
    """An input violates a documented invariant."""


class UndefinedVisibilityError(ValueError):
    """Visibility requested for an output combination forbidden classically (C = 0)."""

    def __init__(self, input_pair, output_pair, classical=0.0):
        self.input_pair = input_pair
        self.output_pair = output_pair
        self.classical = classical
        super().__init__(
            f"visibility undefined for input {tuple(input_pair)} -> output "
            f"{tuple(output_pair)}: classical coincidence is {classical:.3g}"
        )


class FitError(RuntimeError):
    """A fit failed. ``best`` holds the best parameters found, when any."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class UnderdeterminedFitError(FitError):
    """The data do not constrain the requested parameters."""


class SchemaError(ValueError):
    """A serialized payload does not match the expected schema."""
