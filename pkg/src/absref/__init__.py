"""Abstraction-refinement controller synthesis for discrete-time systems.

The package synthesizes discrete controllers for specifications of the form
"stay safe, eventually settle in a region, and recur through goal regions".
Finite abstractions of the continuous dynamics are represented either as
explicit transition lists or as binary decision diagrams under two state
encodings (log and split), and a benchmark harness compares the two.
"""

class UsageError(ValueError):
    """An operation was called with arguments that violate its contract."""


class ConfigError(ValueError):
    """A system configuration is malformed or physically inconsistent."""


__all__ = ["UsageError", "ConfigError"]
__version__ = "0.1.0"
