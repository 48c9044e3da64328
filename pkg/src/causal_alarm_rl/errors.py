"""
Exception hierarchy for causal-alarm-rl.

Library code raises these; the CLI turns them into a red error line and a
non-zero exit code.
"""

from typing import List, Optional


class CausalRLError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(CausalRLError, ValueError):
    """An argument violates the operation's preconditions (shape, range, symmetry)."""


class CyclicGraphError(CausalRLError):
    """A graph that must be acyclic contains a directed cycle."""

    def __init__(self, cycle: List[int], type_names: Optional[List[str]] = None):
        self.cycle = list(cycle)
        if type_names:
            path = " -> ".join(type_names[i] for i in self.cycle + self.cycle[:1])
        else:
            path = " -> ".join(str(i) for i in self.cycle + self.cycle[:1])
        super().__init__(f"Graph contains a cycle: {path}")


class EpisodeFinishedError(CausalRLError):
    """step() was called on an environment whose episode is already done."""


class DegenerateConfigError(CausalRLError):
    """The environment configuration cannot produce a usable episode."""


class ContractViolationError(CausalRLError):
    """An internal contract was broken (e.g. a mask that allows no action)."""


class ConfigError(CausalRLError):
    """An experiment configuration failed validation."""
