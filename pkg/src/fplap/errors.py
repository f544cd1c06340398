"""Exception types shared across the package."""

from __future__ import annotations


class ConfigError(ValueError):
    """Invalid run configuration.

    Carries the full list of violations so a user can fix everything in
    one pass instead of replaying the parser error by error.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class NonConvergence(RuntimeError):
    """An iterative solve stopped before reaching its residual tolerance.

    This signals a solver failure, not a model failure: the continuous
    problems solved here are uniquely solvable.
    """

    def __init__(self, iterations: int, residual: float, message: str = ""):
        self.iterations = iterations
        self.residual = residual
        detail = message or "solver did not converge"
        super().__init__(
            f"{detail} (iterations={iterations}, residual={residual:.3e})"
        )
