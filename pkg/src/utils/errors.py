from typing import Optional

# Process exit codes used by main.py
EXIT_OK = 0
EXIT_CHECK_FAILURE = 1
EXIT_USAGE = 2
EXIT_DIVERGED = 3


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


class SchemeDivergedError(RuntimeError):
    """Raised when an iterate becomes non-finite or leaves the divergence bound.

    Args:
        message: Human readable description
        slice_index: Index of the offending time slice
        time: s (transformed scheme) or t (original scheme) of the slice
        norm: Norm that triggered the abort (nan for non-finite samples)
        advice: Hint printed by the CLI
    """

    def __init__(self, message: str, slice_index: int, time: float,
                 norm: float, advice: Optional[str] = None):
        super().__init__(message)
        self.slice_index = slice_index
        self.time = time
        self.norm = norm
        self.advice = advice or "reduce ds or the s-range, or increase nu"

    def __str__(self) -> str:
        return (f"{self.args[0]} (slice {self.slice_index}, time {self.time:.6g}, "
                f"norm {self.norm:.6g}); {self.advice}")
