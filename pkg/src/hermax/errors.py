"""Solver failure types.

Aborts carry enough state to report which step and cell went bad; they are
raised out of the time loop and serialized by the CLI rather than masked.
"""

from __future__ import annotations


class SolverAbort(RuntimeError):
    """Base class for conditions that stop a run."""


class SolvabilityError(SolverAbort):
    """The constitutive assembly matrix lost positive definiteness."""

    def __init__(self, message: str, e0=None, q0=None, m_value=None, cell=None):
        super().__init__(message)
        self.e0 = e0
        self.q0 = q0
        self.m_value = m_value
        self.cell = cell


class NonfiniteError(SolverAbort):
    """Nonfinite field values detected after a half-step."""

    def __init__(self, message: str, step=None, time=None, variable=None):
        super().__init__(message)
        self.step = step
        self.time = time
        self.variable = variable


class ConfigError(ValueError):
    """Invalid run configuration; message lists every violated invariant."""
