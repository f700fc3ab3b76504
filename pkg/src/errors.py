# src/errors.py
from __future__ import annotations


class RatchetValueError(ValueError):
    """Invalid parameters or a value outside an operation's domain."""


class NumericalError(RuntimeError):
    """A numerical procedure failed (instability, non-convergence, window cap)."""


class InsufficientDataError(NumericalError):
    """Too few samples, clicks or points to produce an estimate."""
