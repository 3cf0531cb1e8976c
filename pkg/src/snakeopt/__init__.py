"""Scope-tunable frequency optimization for tunable-qubit processors, with a simulated test bed."""

__version__ = "0.1.0"
