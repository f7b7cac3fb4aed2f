"""Exception hierarchy.

Validation problems (bad documents, bad overrides) raise ScenarioError and map
to CLI exit code 2; numerical failures (Newton divergence, bad CCT brackets,
singular reductions, censored runs where a verdict is required) map to exit
code 3.
"""


class ScenarioError(ValueError):
    """Scenario document or override failed validation."""


class ReductionError(RuntimeError):
    """Network reduction failed (singular eliminated block)."""

    def __init__(self, message: str, bus=None):
        super().__init__(message)
        self.bus = bus


class SolverError(RuntimeError):
    """Iterative solver failed to converge."""

    def __init__(self, message: str, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


class ClassificationError(SolverError):
    """Solver converged, but to a point of the wrong stability type."""


class BracketError(SolverError):
    """CCT bracket endpoints do not have the required verdicts."""

    def __init__(self, message: str, probes=None):
        super().__init__(message)
        self.probes = list(probes or [])


class CensoredError(RuntimeError):
    """A verdict or event was required but the run ended without one."""


class MarginError(ValueError):
    """Energy margin is undefined (non-positive kinetic normalization)."""
